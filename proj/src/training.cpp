#include "pmcast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "pmcast/errors.hpp"
#include "pmcast/evaluation.hpp"
#include "pmcast/frame.hpp"
#include "pmcast/rng.hpp"

namespace pmcast::training {

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  if (!(guard > 0.0)) throw ParameterError("guard must be > 0");
}

AdamState::AdamState(const ad::ParameterSet& params) {
  for (const auto& p : params) {
    m.emplace_back(p->value.size(), 0.0);
    v.emplace_back(p->value.size(), 0.0);
  }
}

void adam_step(ad::ParameterSet& params, AdamState& state, double learning_rate, const AdamConfig& config) {
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    auto values = p.value.values();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (p.grad.size() != values.size() || m.size() != values.size()) throw ShapeError("adam_step: size mismatch for " + p.name);
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = p.grad[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      values[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

MapeLoss mape_loss(ad::Var prediction, std::span<const double> y, double guard) {
  if (prediction.value().size() != y.size() || y.empty()) {
    throw ShapeError("mape_loss: " + std::to_string(prediction.value().size()) + " predictions for " +
                     std::to_string(y.size()) + " targets");
  }
  MapeLoss out;
  ad::Tensor inverse(prediction.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double denom = y[i];
    if (std::fabs(denom) <= guard) {
      denom = denom < 0.0 ? -guard : guard;
      ++out.clamped;
    }
    inverse[i] = 1.0 / denom;
  }
  auto& g = prediction.graph();
  const auto ratio = ad::mul(prediction, g.input(std::move(inverse)));
  out.loss = ad::mean(ad::abs(ad::add_scalar(ratio, -1.0)));
  return out;
}

TrainResult train_model(models::Forecaster& model, const models::TargetScale& scale, const SupervisedDataset& train,
                        const SupervisedDataset& validation, const TrainConfig& config) {
  config.validate();
  if (train.size() == 0 || validation.size() == 0) throw ContractError("train_model: empty training or validation split");
  auto& params = model.parameters();
  AdamState adam(params);
  TrainResult result;
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
      std::mt19937_64 rng(child_seed(config.seed, epoch));
      std::shuffle(order.begin(), order.end(), rng);
    }
    double weighted = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const auto batch = models::make_batch(train, std::span(order).subspan(begin, end - begin));
      params.zero_grad();
      ad::Graph g;
      const auto loss = mape_loss(models::predict(model, g, batch, scale), batch.y, config.guard);
      result.guard_warnings += loss.clamped;
      const double value = loss.loss.value().item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch_index),
                              epoch, batch_index);
      }
      g.backward(loss.loss);
      adam_step(params, adam, config.learning_rate);
      weighted += value * static_cast<double>(end - begin);
    }
    const auto predicted = models::predict_all(model, validation, scale);
    const double val = evaluation::mape(validation.y, predicted, config.guard);
    result.history.push_back({epoch, weighted / static_cast<double>(order.size()), val});
  }
  params.zero_grad();
  return result;
}

void write_history(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_mape,val_mape\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.train_mape) << ',' << format_double(r.val_mape) << '\n';
  }
}

}  // namespace pmcast::training
