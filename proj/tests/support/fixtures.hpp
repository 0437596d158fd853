#pragma once

#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "pmcast/models.hpp"

namespace fixtures {

using pmcast::ad::Tensor;
using pmcast::models::Batch;
using pmcast::models::FeatureLayout;
using pmcast::models::ModelConfig;

/// Two numeric channels, one categorical channel with 5 codes.
inline FeatureLayout small_layout(std::size_t history) {
  FeatureLayout l;
  l.num_channels = 2;
  l.history = history;
  l.cat_names = {"hour"};
  l.cat_cardinality = {5};
  return l;
}

inline ModelConfig small_config() {
  ModelConfig c;
  c.channels = {4, 4, 3, 3};
  c.embedding_sizes = {{"hour", 2}};
  c.bpnn_hidden = 5;
  c.rnn_hidden = 4;
  return c;
}

inline Batch random_batch(const FeatureLayout& layout, std::size_t size, std::mt19937_64& rng) {
  Batch b;
  b.size = size;
  b.steps = layout.history;
  b.x_num = gradcheck::random_tensor({size, layout.num_channels, layout.history}, rng);
  for (std::size_t c = 0; c < layout.cat_names.size(); ++c) {
    std::vector<int> codes(size * layout.history);
    for (auto& v : codes) v = static_cast<int>(rng() % layout.cat_cardinality[c]);
    b.x_cat.push_back(std::move(codes));
  }
  b.y.assign(size, 1.0);
  return b;
}

/// Redraws every parameter from N(0, scale) so checks do not depend on the
/// initialiser.
inline void randomise(pmcast::ad::ParameterSet& params, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& p : params) {
    for (auto& v : p->value.values()) v = n(rng);
  }
}

/// Finite-difference check of all parameters of a model of `kind` on a small
/// random instance.
inline gradcheck::Result model_gradcheck(pmcast::models::ModelKind kind, std::size_t history, std::mt19937_64& rng) {
  const auto layout = small_layout(history);
  auto model = pmcast::models::make_forecaster(kind, layout, small_config(), rng());
  randomise(model->parameters(), rng);
  const Batch batch = random_batch(layout, 2, rng);
  return gradcheck::check_parameters(
      model->parameters(), [&](pmcast::ad::Graph& g) { return model->forward(g, batch); }, rng);
}

}  // namespace fixtures
