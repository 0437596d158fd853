#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmcast/datapipe.hpp"
#include "pmcast/decomposition.hpp"
#include "pmcast/models.hpp"
#include "pmcast/training.hpp"

namespace pmcast {

struct DataConfig {
  /// Input file in the ingestion schema; empty selects the synthetic generator.
  std::string path;
  std::size_t synthetic_hours = 2000;
  std::uint64_t synthetic_seed = 2015;
  std::size_t history = 24;
  std::vector<std::size_t> horizons{1, 2, 3};
  SplitFractions split;
  /// When both are set, samples are split by target timestamp instead of fractions.
  std::optional<Timestamp> validation_start;
  std::optional<Timestamp> test_start;
};

struct DecompositionConfig {
  double noise_ratio = 0.2;
  int trials = 100;
  std::uint64_t seed = 0;
  AttachMode mode = AttachMode::FullSeries;
  /// Rows per refit decomposition in train_only_refit mode; 0 = whole history.
  std::size_t lookback = 0;
  SiftConfig sift;
};

struct ExperimentConfig {
  DataConfig data;
  DecompositionConfig decomposition;
  /// Evaluation order; a "CEEMDAN-" prefix adds the decomposition channels.
  std::vector<std::string> models{"LR", "BPNN", "LSTM", "GRU", "DeepTCN", "CEEMDAN-DeepTCN"};
  std::string proposed = "CEEMDAN-DeepTCN";
  /// Replicates per (model, horizon) cell, each with its own seed.
  std::size_t robustness_runs = 1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  training::TrainConfig train;
  models::ModelConfig model;
  std::string output_dir = "pmcast-out";
  bool write_predictions = true;

  /// Throws ParameterError on an unusable combination.
  void validate() const;
  /// Whether any model needs decomposition channels.
  bool needs_decomposition() const;
};

/// Base model of a configured name, e.g. "CEEMDAN-GRU" -> GRU.
models::ModelKind base_model(const std::string& name);
bool uses_decomposition(const std::string& name);

/// INI-style text: [section] headers and key = value lines. Unknown
/// sections or keys are errors; absent keys keep their defaults.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
/// Writes every key with its current value, in the format parse_config reads.
/// Without `runtime` the worker count and output directory are left out.
void write_config(std::ostream& out, const ExperimentConfig& config, bool runtime = true);

}  // namespace pmcast
