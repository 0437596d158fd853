#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pmcast/autodiff.hpp"
#include "pmcast/datapipe.hpp"
#include "pmcast/models.hpp"

namespace pmcast::training {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  /// Reshuffles the training split every epoch.
  bool shuffle = true;
  /// Targets with |y| <= guard use a clamped MAPE denominator.
  double guard = 1e-3;

  void validate() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for one parameter set, same layout as the parameters.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;

  explicit AdamState(const ad::ParameterSet& params);
};

/// One bias-corrected Adam update from the gradients stored in `params`.
void adam_step(ad::ParameterSet& params, AdamState& state, double learning_rate, const AdamConfig& config = {});

struct MapeLoss {
  ad::Var loss;
  /// Targets whose denominator was clamped to +-guard.
  std::size_t clamped = 0;
};

/// mean |1 - prediction / y| as a graph node; prediction is [B] raw scale.
MapeLoss mape_loss(ad::Var prediction, std::span<const double> y, double guard = 1e-3);

struct EpochRecord {
  std::size_t epoch = 0;
  /// Sample-weighted mean of the mini-batch losses seen during the epoch.
  double train_mape = 0.0;
  /// Validation MAPE after the epoch, evaluated without gradients.
  double val_mape = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t guard_warnings = 0;
};

/// Fixed-epoch mini-batch training. Leaves the final-epoch parameters in
/// the model. Throws DivergenceError on a non-finite loss.
TrainResult train_model(models::Forecaster& model, const models::TargetScale& scale, const SupervisedDataset& train,
                        const SupervisedDataset& validation, const TrainConfig& config);

/// Header `epoch,train_mape,val_mape`, one row per epoch.
void write_history(std::ostream& out, std::span<const EpochRecord> history);

}  // namespace pmcast::training
