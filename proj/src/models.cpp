#include "pmcast/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "pmcast/errors.hpp"

namespace pmcast::models {

using ad::Graph;
using ad::Parameter;
using ad::Var;
using ad::shape_string;

Batch make_batch(const SupervisedDataset& data, std::span<const std::size_t> samples) {
  if (samples.empty()) throw ContractError("make_batch: no samples");
  Batch b;
  b.size = samples.size();
  b.steps = data.history;
  const std::size_t c_num = data.num_channels();
  const std::size_t c_cat = data.cat_channels();
  const std::size_t steps = data.history;
  b.x_num = Tensor({b.size, c_num, steps});
  b.x_cat.assign(c_cat, std::vector<int>(b.size * steps));
  for (std::size_t i = 0; i < b.size; ++i) {
    const std::size_t s = samples[i];
    if (s >= data.size()) throw IndexError("make_batch: sample " + std::to_string(s) + " out of range");
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t c = 0; c < c_num; ++c) b.x_num[(i * c_num + c) * steps + t] = data.num(s, t, c);
      for (std::size_t c = 0; c < c_cat; ++c) b.x_cat[c][i * steps + t] = data.cat(s, t, c);
    }
    b.y.push_back(data.y[s]);
  }
  return b;
}

Batch make_batch(const SupervisedDataset& data, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return make_batch(data, idx);
}

FeatureLayout layout_of(const SupervisedDataset& data) {
  return {data.num_channels(), data.history, data.cat_names, data.cat_cardinality};
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::LR: return "LR";
    case ModelKind::BPNN: return "BPNN";
    case ModelKind::LSTM: return "LSTM";
    case ModelKind::GRU: return "GRU";
    case ModelKind::DeepTCN: return "DeepTCN";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::LR, ModelKind::BPNN, ModelKind::LSTM, ModelKind::GRU, ModelKind::DeepTCN}) {
    if (model_kind_name(k) == name) return k;
  }
  throw ParameterError("unknown model '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (dilations.empty() || dilations.size() != channels.size()) {
    throw ParameterError("model: dilations and channels must be non-empty and of equal length");
  }
  for (auto d : dilations) {
    if (d == 0) throw ParameterError("model: dilations must be positive");
  }
  for (auto c : channels) {
    if (c == 0) throw ParameterError("model: channel counts must be positive");
  }
  if (kernel_size == 0 || bpnn_hidden == 0 || rnn_hidden == 0) throw ParameterError("model: sizes must be positive");
  for (const auto& [name, size] : embedding_sizes) {
    if (size == 0) throw ParameterError("model: embedding size of '" + name + "' must be positive");
  }
}

std::size_t ModelConfig::embedding_size(std::string_view column) const {
  const auto it = embedding_sizes.find(column);
  return it == embedding_sizes.end() ? 2 : it->second;
}

namespace {

class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(Shape shape, double bound) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : t.values()) v = u(rng_);
    return t;
  }
  Tensor fan_in(Shape shape, std::size_t fan) { return uniform(std::move(shape), std::sqrt(1.0 / static_cast<double>(fan))); }

 private:
  std::mt19937_64 rng_;
};

Tensor row_norms(const Tensor& v) {
  const std::size_t units = v.dim(0);
  const std::size_t per = v.size() / units;
  Tensor g({units});
  for (std::size_t u = 0; u < units; ++u) {
    double ss = 0.0;
    for (std::size_t j = 0; j < per; ++j) ss += v[u * per + j] * v[u * per + j];
    g[u] = std::sqrt(ss);
  }
  return g;
}

std::vector<Parameter*> add_embeddings(ad::ParameterSet& params, const FeatureLayout& layout, const ModelConfig& config,
                                       Init& init, std::size_t& width) {
  std::vector<Parameter*> tables;
  width = layout.num_channels;
  for (std::size_t c = 0; c < layout.cat_names.size(); ++c) {
    const auto e = config.embedding_size(layout.cat_names[c]);
    tables.push_back(&params.add("embed." + layout.cat_names[c], init.uniform({layout.cat_cardinality[c], e}, 0.05)));
    width += e;
  }
  return tables;
}

Var head(Var x, Graph& g, Parameter* w, Parameter* b, bool sigmoid) {
  Var y = ad::affine(x, g.parameter(*w), g.parameter(*b));
  if (sigmoid) y = ad::sigmoid(y);
  return ad::reshape(y, {y.shape()[0]});
}

}  // namespace

Var embed_inputs(Graph& g, const Batch& batch, std::span<Parameter* const> tables) {
  if (tables.size() != batch.x_cat.size()) {
    throw ShapeError("embed_inputs: " + std::to_string(tables.size()) + " tables for " +
                     std::to_string(batch.x_cat.size()) + " categorical channels");
  }
  std::vector<Var> parts{g.input(batch.x_num)};
  for (std::size_t c = 0; c < tables.size(); ++c) {
    parts.push_back(ad::embed_sequence(g.parameter(*tables[c]), batch.x_cat[c], batch.size, batch.steps));
  }
  return parts.size() == 1 ? parts[0] : ad::concat(std::span<const Var>(parts), 1);
}

Var predict(Forecaster& model, Graph& g, const Batch& batch, const TargetScale& scale) {
  return ad::add_scalar(ad::scale(model.forward(g, batch), scale.std), scale.mean);
}

std::vector<double> predict_all(Forecaster& model, const SupervisedDataset& data, const TargetScale& scale,
                                std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    Graph g(false);
    const auto y = predict(model, g, make_batch(data, begin, end), scale);
    const auto v = y.value().values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

Var tcn_block_forward(Graph& g, Var x, const TcnBlock& block, std::size_t dilation) {
  const Var w1 = ad::weight_norm(g.parameter(*block.v1), g.parameter(*block.g1));
  const Var w2 = ad::weight_norm(g.parameter(*block.v2), g.parameter(*block.g2));
  Var f = ad::conv1d_causal(x, w1, dilation);
  f = ad::relu(f);
  f = ad::conv1d_causal(f, w2, dilation);
  const Var skip = block.projection != nullptr ? ad::conv1d_causal(x, g.parameter(*block.projection), 1) : x;
  if (skip.shape() != f.shape()) {
    throw ShapeError("tcn block: residual " + shape_string(skip.shape()) + " does not match " +
                     shape_string(f.shape()));
  }
  return ad::relu(ad::add(skip, f));
}

DeepTcn::DeepTcn(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed)
    : dilations_(config.dilations), kernel_size_(config.kernel_size) {
  config.validate();
  Init init(seed);
  embeddings_ = add_embeddings(params_, layout, config, init, input_channels_);
  std::size_t in = input_channels_;
  const std::size_t k = kernel_size_;
  for (std::size_t b = 0; b < config.channels.size(); ++b) {
    const std::size_t out = config.channels[b];
    const std::string p = "tcn" + std::to_string(b) + ".";
    TcnBlock block;
    block.v1 = &params_.add(p + "conv1.v", init.fan_in({out, in, k}, in * k));
    block.g1 = &params_.add(p + "conv1.g", row_norms(block.v1->value));
    block.v2 = &params_.add(p + "conv2.v", init.fan_in({out, out, k}, out * k));
    block.g2 = &params_.add(p + "conv2.g", row_norms(block.v2->value));
    if (in != out) block.projection = &params_.add(p + "proj", init.fan_in({out, in, 1}, in));
    blocks_.push_back(block);
    in = out;
  }
  head_w_ = &params_.add("head.w", init.fan_in({1, in}, in));
  head_b_ = &params_.add("head.b", init.fan_in({1}, in));
}

std::size_t DeepTcn::receptive_field() const noexcept {
  std::size_t total = 0;
  for (auto d : dilations_) total += d;
  return 1 + 2 * (kernel_size_ - 1) * total;
}

Var DeepTcn::forward(Graph& g, const Batch& batch) {
  Var x = embed_inputs(g, batch, embeddings_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) x = tcn_block_forward(g, x, blocks_[b], dilations_[b]);
  const Var last = ad::select(x, 2, batch.steps - 1);
  return head(last, g, head_w_, head_b_, false);
}

// ---------------------------------------------------------------------------

Bpnn::Bpnn(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Init init(seed);
  std::size_t width = 0;
  embeddings_ = add_embeddings(params_, layout, config, init, width);
  const std::size_t in = width * layout.history;
  const std::size_t h = config.bpnn_hidden;
  w1_ = &params_.add("bpnn.w1", init.fan_in({h, in}, in));
  b1_ = &params_.add("bpnn.b1", init.fan_in({h}, in));
  w0_ = &params_.add("bpnn.w0", init.fan_in({1, h}, h));
  b0_ = &params_.add("bpnn.b0", init.fan_in({1}, h));
}

Var Bpnn::forward(Graph& g, const Batch& batch) {
  const Var x = embed_inputs(g, batch, embeddings_);
  const Var flat = ad::reshape(x, {batch.size, x.value().size() / batch.size});
  const Var hidden = ad::sigmoid(ad::affine(flat, g.parameter(*w1_), g.parameter(*b1_)));
  return head(hidden, g, w0_, b0_, false);
}

// ---------------------------------------------------------------------------

Lstm::Lstm(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed)
    : hidden_(config.rnn_hidden), sigmoid_head_(config.literal_sigmoid_head) {
  config.validate();
  Init init(seed);
  std::size_t width = 0;
  embeddings_ = add_embeddings(params_, layout, config, init, width);
  const std::size_t in = hidden_ + width;
  auto gate = [&](const std::string& n, Parameter*& w, Parameter*& b) {
    w = &params_.add("lstm.w" + n, init.fan_in({hidden_, in}, in));
    b = &params_.add("lstm.b" + n, init.fan_in({hidden_}, in));
  };
  gate("f", wf_, bf_);
  gate("i", wi_, bi_);
  gate("c", wc_, bc_);
  gate("o", wo_, bo_);
  wfc_ = &params_.add("lstm.wfc", init.fan_in({1, hidden_}, hidden_));
  bfc_ = &params_.add("lstm.bfc", init.fan_in({1}, hidden_));
}

LstmState Lstm::step(Graph& g, Var x, LstmState state) {
  const Var hx = ad::concat({state.h, x}, 1);
  const Var f = ad::sigmoid(ad::affine(hx, g.parameter(*wf_), g.parameter(*bf_)));
  const Var i = ad::sigmoid(ad::affine(hx, g.parameter(*wi_), g.parameter(*bi_)));
  const Var candidate = ad::tanh(ad::affine(hx, g.parameter(*wc_), g.parameter(*bc_)));
  const Var c = ad::add(ad::mul(f, state.c), ad::mul(i, candidate));
  const Var o = ad::sigmoid(ad::affine(hx, g.parameter(*wo_), g.parameter(*bo_)));
  return {ad::mul(o, ad::tanh(c)), c};
}

Var Lstm::forward(Graph& g, const Batch& batch) {
  const Var x = embed_inputs(g, batch, embeddings_);
  LstmState s{g.input(Tensor::filled({batch.size, hidden_}, 0.0)), g.input(Tensor::filled({batch.size, hidden_}, 0.0))};
  for (std::size_t t = 0; t < batch.steps; ++t) s = step(g, ad::select(x, 2, t), s);
  return head(s.h, g, wfc_, bfc_, sigmoid_head_);
}

// ---------------------------------------------------------------------------

Gru::Gru(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed)
    : hidden_(config.rnn_hidden), sigmoid_head_(config.literal_sigmoid_head) {
  config.validate();
  Init init(seed);
  std::size_t width = 0;
  embeddings_ = add_embeddings(params_, layout, config, init, width);
  const std::size_t in = hidden_ + width;
  wr_ = &params_.add("gru.wr", init.fan_in({hidden_, in}, in));
  wz_ = &params_.add("gru.wz", init.fan_in({hidden_, in}, in));
  wh_ = &params_.add("gru.wh", init.fan_in({hidden_, in}, in));
  wfc_ = &params_.add("gru.wfc", init.fan_in({1, hidden_}, hidden_));
  bfc_ = &params_.add("gru.bfc", init.fan_in({1}, hidden_));
}

Var Gru::step(Graph& g, Var x, Var h) {
  const Var hx = ad::concat({h, x}, 1);
  const Var r = ad::sigmoid(ad::linear(hx, g.parameter(*wr_)));
  const Var z = ad::sigmoid(ad::linear(hx, g.parameter(*wz_)));
  const Var candidate = ad::tanh(ad::linear(ad::concat({ad::mul(r, h), x}, 1), g.parameter(*wh_)));
  // (1 - z) h + z h~
  return ad::add(ad::sub(h, ad::mul(z, h)), ad::mul(z, candidate));
}

Var Gru::forward(Graph& g, const Batch& batch) {
  const Var x = embed_inputs(g, batch, embeddings_);
  Var h = g.input(Tensor::filled({batch.size, hidden_}, 0.0));
  for (std::size_t t = 0; t < batch.steps; ++t) h = step(g, ad::select(x, 2, t), h);
  return head(h, g, wfc_, bfc_, sigmoid_head_);
}

std::unique_ptr<Forecaster> make_forecaster(ModelKind kind, const FeatureLayout& layout, const ModelConfig& config,
                                            std::uint64_t seed) {
  switch (kind) {
    case ModelKind::BPNN: return std::make_unique<Bpnn>(layout, config, seed);
    case ModelKind::LSTM: return std::make_unique<Lstm>(layout, config, seed);
    case ModelKind::GRU: return std::make_unique<Gru>(layout, config, seed);
    case ModelKind::DeepTCN: return std::make_unique<DeepTcn>(layout, config, seed);
    case ModelKind::LR: break;
  }
  throw ContractError("LR is fitted in closed form, not built as a graph model");
}

// ---------------------------------------------------------------------------

double LRParams::predict(std::span<const double> features) const {
  if (features.size() != coef.size()) {
    throw ShapeError("lr: " + std::to_string(features.size()) + " features for " + std::to_string(coef.size()) +
                     " coefficients");
  }
  double y = intercept;
  for (std::size_t j = 0; j < coef.size(); ++j) y += coef[j] * features[j];
  return y;
}

LRParams lr_fit(std::span<const double> rows, std::size_t features, std::span<const double> y, double ridge) {
  const std::size_t n = y.size();
  if (n == 0 || rows.size() != n * features) throw ShapeError("lr_fit: design matrix does not match targets");
  if (ridge < 0.0) throw ParameterError("lr_fit: ridge must be >= 0");
  Eigen::MatrixXd a(n, features + 1);
  a.col(0).setOnes();
  a.rightCols(features) =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(rows.data(), n, features);
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), n);
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += ridge;
  const Eigen::VectorXd beta = normal.ldlt().solve(a.transpose() * target);
  LRParams p;
  p.intercept = beta[0];
  p.coef.assign(beta.data() + 1, beta.data() + beta.size());
  return p;
}

std::size_t lr_feature_count(const SupervisedDataset& data) {
  std::size_t k = data.history * data.num_channels();
  for (auto v : data.cat_vocabulary) k += v;
  return k;
}

std::vector<double> lr_features(const SupervisedDataset& data, std::size_t sample) {
  std::vector<double> f;
  f.reserve(lr_feature_count(data));
  for (std::size_t t = 0; t < data.history; ++t) {
    for (std::size_t c = 0; c < data.num_channels(); ++c) f.push_back(data.num(sample, t, c));
  }
  for (std::size_t c = 0; c < data.cat_channels(); ++c) {
    const auto code = static_cast<std::size_t>(data.cat(sample, data.history - 1, c));
    for (std::size_t v = 0; v < data.cat_vocabulary[c]; ++v) f.push_back(v == code ? 1.0 : 0.0);
  }
  return f;
}

void LinearRegression::fit(const SupervisedDataset& train, double ridge) {
  const std::size_t k = lr_feature_count(train);
  std::vector<double> rows;
  rows.reserve(train.size() * k);
  for (std::size_t s = 0; s < train.size(); ++s) {
    const auto f = lr_features(train, s);
    rows.insert(rows.end(), f.begin(), f.end());
  }
  params_ = lr_fit(rows, k, train.y, ridge);
}

std::vector<double> LinearRegression::predict(const SupervisedDataset& data) const {
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) out.push_back(params_.predict(lr_features(data, s)));
  return out;
}

ad::ParameterSet LinearRegression::to_parameters() const {
  ad::ParameterSet set;
  set.add("lr.intercept", Tensor::scalar(params_.intercept));
  set.add("lr.coef", Tensor({params_.coef.size()}, params_.coef));
  return set;
}

}  // namespace pmcast::models
