#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmcast/autodiff.hpp"
#include "pmcast/datapipe.hpp"
#include "pmcast/params.hpp"

namespace pmcast::models {

using ad::Shape;
using ad::Tensor;

/// Mini-batch in model layout.
struct Batch {
  std::size_t size = 0;
  std::size_t steps = 0;
  Tensor x_num;                        // [B, C_num, T]
  std::vector<std::vector<int>> x_cat;  // per categorical channel, row-major [B, T]
  std::vector<double> y;               // raw-scale targets
};

Batch make_batch(const SupervisedDataset& data, std::span<const std::size_t> samples);
Batch make_batch(const SupervisedDataset& data, std::size_t begin, std::size_t end);

/// Shape information a model is built against.
struct FeatureLayout {
  std::size_t num_channels = 0;
  std::size_t history = 24;
  std::vector<std::string> cat_names;
  std::vector<std::size_t> cat_cardinality;
};

FeatureLayout layout_of(const SupervisedDataset& data);

/// Raw-scale target = mean + std * standardised output.
struct TargetScale {
  double mean = 0.0;
  double std = 1.0;
};

enum class ModelKind { LR, BPNN, LSTM, GRU, DeepTCN };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  std::vector<std::size_t> dilations{1, 2, 4, 8};
  std::vector<std::size_t> channels{32, 32, 16, 16};
  std::size_t kernel_size = 2;
  std::map<std::string, std::size_t, std::less<>> embedding_sizes{
      {"month", 2}, {"day_of_week", 2}, {"hour", 4}, {"weather", 2}};
  std::size_t bpnn_hidden = 32;
  std::size_t rnn_hidden = 64;
  /// Applies a sigmoid to the LSTM/GRU output head.
  bool literal_sigmoid_head = false;
  double lr_ridge = 1e-8;

  void validate() const;
  std::size_t embedding_size(std::string_view column) const;
};

// ---------------------------------------------------------------------------
// Graph models

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string_view name() const = 0;
  /// Standardised prediction of shape [B].
  virtual ad::Var forward(ad::Graph& g, const Batch& batch) = 0;

  ad::ParameterSet& parameters() noexcept { return params_; }
  const ad::ParameterSet& parameters() const noexcept { return params_; }

 protected:
  ad::ParameterSet params_;
};

/// Raw-scale prediction of shape [B].
ad::Var predict(Forecaster& model, ad::Graph& g, const Batch& batch, const TargetScale& scale);
/// Raw-scale predictions for every sample, evaluated without gradients.
std::vector<double> predict_all(Forecaster& model, const SupervisedDataset& data, const TargetScale& scale,
                                std::size_t batch_size = 256);

/// Builds a graph model with seeded initialisation. LR is not a graph model.
std::unique_ptr<Forecaster> make_forecaster(ModelKind kind, const FeatureLayout& layout, const ModelConfig& config,
                                            std::uint64_t seed);

/// Embeds every categorical channel per time step and appends the results to
/// the numeric channels: [B, C_num + sum E, T].
ad::Var embed_inputs(ad::Graph& g, const Batch& batch, std::span<ad::Parameter* const> tables);

/// Parameters of one residual block.
struct TcnBlock {
  ad::Parameter* v1 = nullptr;
  ad::Parameter* g1 = nullptr;
  ad::Parameter* v2 = nullptr;
  ad::Parameter* g2 = nullptr;
  ad::Parameter* projection = nullptr;  // [C_out, C_in, 1] when channel counts differ
};

/// ReLU(proj(x) + conv2(ReLU(conv1(x)))) with weight-normalised causal convs.
ad::Var tcn_block_forward(ad::Graph& g, ad::Var x, const TcnBlock& block, std::size_t dilation);

class DeepTcn final : public Forecaster {
 public:
  DeepTcn(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed);
  std::string_view name() const override { return "DeepTCN"; }
  ad::Var forward(ad::Graph& g, const Batch& batch) override;

  std::size_t input_channels() const noexcept { return input_channels_; }
  /// Trailing time steps that can influence the output.
  std::size_t receptive_field() const noexcept;
  const std::vector<TcnBlock>& blocks() const noexcept { return blocks_; }

 private:
  std::vector<ad::Parameter*> embeddings_;
  std::vector<TcnBlock> blocks_;
  std::vector<std::size_t> dilations_;
  std::size_t kernel_size_;
  std::size_t input_channels_;
  ad::Parameter* head_w_;
  ad::Parameter* head_b_;
};

class Bpnn final : public Forecaster {
 public:
  Bpnn(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed);
  std::string_view name() const override { return "BPNN"; }
  ad::Var forward(ad::Graph& g, const Batch& batch) override;

 private:
  std::vector<ad::Parameter*> embeddings_;
  ad::Parameter* w1_;
  ad::Parameter* b1_;
  ad::Parameter* w0_;
  ad::Parameter* b0_;
};

struct LstmState {
  ad::Var h;
  ad::Var c;
};

class Lstm final : public Forecaster {
 public:
  Lstm(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed);
  std::string_view name() const override { return "LSTM"; }
  ad::Var forward(ad::Graph& g, const Batch& batch) override;
  /// One cell update; x is [B, C_in], states [B, H].
  LstmState step(ad::Graph& g, ad::Var x, LstmState state);
  std::size_t hidden() const noexcept { return hidden_; }

 private:
  std::vector<ad::Parameter*> embeddings_;
  std::size_t hidden_;
  bool sigmoid_head_;
  ad::Parameter *wf_, *bf_, *wi_, *bi_, *wc_, *bc_, *wo_, *bo_, *wfc_, *bfc_;
};

class Gru final : public Forecaster {
 public:
  Gru(const FeatureLayout& layout, const ModelConfig& config, std::uint64_t seed);
  std::string_view name() const override { return "GRU"; }
  ad::Var forward(ad::Graph& g, const Batch& batch) override;
  ad::Var step(ad::Graph& g, ad::Var x, ad::Var h);
  std::size_t hidden() const noexcept { return hidden_; }

 private:
  std::vector<ad::Parameter*> embeddings_;
  std::size_t hidden_;
  bool sigmoid_head_;
  ad::Parameter *wr_, *wz_, *wh_, *wfc_, *bfc_;
};

// ---------------------------------------------------------------------------
// Linear regression

struct LRParams {
  double intercept = 0.0;
  std::vector<double> coef;

  double predict(std::span<const double> features) const;
};

/// Least squares through the normal equations with `ridge` added to the
/// diagonal (intercept included). rows is [n, k] row-major.
LRParams lr_fit(std::span<const double> rows, std::size_t features, std::span<const double> y, double ridge = 1e-8);

/// Flattened numeric window followed by one-hot categoricals of the last
/// input step (unseen labels give an all-zero block).
std::vector<double> lr_features(const SupervisedDataset& data, std::size_t sample);
std::size_t lr_feature_count(const SupervisedDataset& data);

class LinearRegression {
 public:
  void fit(const SupervisedDataset& train, double ridge = 1e-8);
  std::vector<double> predict(const SupervisedDataset& data) const;
  const LRParams& params() const noexcept { return params_; }
  /// Checkpoint as a parameter set: "lr.intercept" [1] and "lr.coef" [k].
  ad::ParameterSet to_parameters() const;

 private:
  LRParams params_;
};

}  // namespace pmcast::models
