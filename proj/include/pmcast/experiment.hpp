#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmcast/config.hpp"
#include "pmcast/datapipe.hpp"
#include "pmcast/decomposition.hpp"
#include "pmcast/report.hpp"
#include "pmcast/training.hpp"

namespace pmcast {

/// Reads the configured source (file or synthetic) and fills missing cells.
TimeSeriesFrame load_frame(const DataConfig& data);

DecompositionResult decompose_series(std::span<const double> series, const DecompositionConfig& config,
                                     std::size_t jobs = 1);

/// Windowed, standardised splits of one horizon.
struct HorizonData {
  std::size_t horizon = 1;
  SplitRanges ranges;
  /// Rows the scaler and encoders were fit on.
  RowRange fit_rows;
  DatasetSplit plain;
  std::optional<DatasetSplit> decomposed;
  models::TargetScale scale;
  models::TargetScale decomposed_scale;
};

struct PreparedData {
  TimeSeriesFrame frame;
  std::optional<DecompositionResult> decomposition;
  std::optional<TimeSeriesFrame> decomposed_frame;
  double reconstruction_error = 0.0;
  std::vector<HorizonData> horizons;

  const HorizonData& at(std::size_t horizon) const;
};

/// Sample split for `horizon`: by target timestamp when dates are
/// configured, otherwise by fractions of the sample count.
SplitRanges sample_split(const TimeSeriesFrame& frame, const DataConfig& data, std::size_t horizon);

PreparedData prepare_data(const ExperimentConfig& config);

/// Seed of one (model, horizon, replicate) cell; independent of run order.
std::uint64_t cell_seed(std::uint64_t base, const std::string& model, std::size_t horizon, std::size_t replicate);

struct CellResult {
  std::string model;
  std::size_t horizon = 1;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  report::Trace trace;
  std::vector<training::EpochRecord> history;
  std::size_t guard_warnings = 0;
};

CellResult run_cell(const PreparedData& data, const ExperimentConfig& config, const std::string& model,
                    std::size_t horizon, std::size_t replicate);

struct RunOutcome {
  std::vector<CellResult> cells;
  report::Report report;
  std::string metadata_json;
  bool ok() const noexcept { return report.failures.empty(); }
};

/// Runs every cell (concurrently with config.jobs > 1) and assembles the report.
/// Progress lines go to `log` when given.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Writes tables, histories, traces and the effective configuration.
void write_run(const RunOutcome& outcome, const ExperimentConfig& config, const std::filesystem::path& dir);

struct DecomposeOutcome {
  DecompositionResult result;
  double reconstruction_error = 0.0;
};

/// Decomposes the target series and writes decomposition.csv (imf_1..imf_n,
/// residue), decomposition.json and the augmented dataset data_with_imfs.csv.
DecomposeOutcome run_decompose(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Rebuilds every table of a finished run from its prediction traces.
report::Report regenerate_report(const std::filesystem::path& dir);

}  // namespace pmcast
