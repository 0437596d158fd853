#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmcast/decomposition.hpp"
#include "pmcast/frame.hpp"

namespace pmcast {

// ---------------------------------------------------------------------------
// Cleaning

/// Linear fill of interior gaps, flat extension at the ends; categorical gaps
/// take the previous observed label (the first observed label at the head).
/// Throws ContractError for a column with no observed value.
TimeSeriesFrame interpolate_missing(const TimeSeriesFrame& frame);

/// Meteorological "direction from" convention: the returned vector points
/// where the air moves. speed in km/h, direction in degrees [0, 360).
std::pair<double, double> wind_to_components(double speed, double direction_deg);
/// Inverse of wind_to_components; direction in [0, 360).
std::pair<double, double> components_to_wind(double wind_x, double wind_y);

// ---------------------------------------------------------------------------
// Standardisation

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end <= begin; }
};

struct ScalerParams {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::uint8_t> degenerate;

  std::size_t index(std::string_view name) const;
  double apply(std::size_t column, double x) const;
  double invert(std::size_t column, double z) const;
};

/// Per-column mean and population standard deviation over `train` rows.
ScalerParams fit_scaler(const TimeSeriesFrame& frame, RowRange train);
/// z = (x - mean) / std; degenerate (std == 0) columns become zeros.
TimeSeriesFrame apply_scaler(const TimeSeriesFrame& frame, const ScalerParams& params);
TimeSeriesFrame invert_scaler(const TimeSeriesFrame& frame, const ScalerParams& params);

// ---------------------------------------------------------------------------
// Categorical encoding

/// Label encoder with an optional reserved code for unseen labels.
class LabelEncoder {
 public:
  LabelEncoder() = default;

  /// Vocabulary = canonical labels, then unseen training labels in order of
  /// first appearance. An open encoder reserves code vocabulary_size() for
  /// labels never seen at fit time.
  static LabelEncoder fit(std::span<const std::string> training_labels,
                          std::span<const std::string_view> canonical = {}, bool open = true);

  int encode(std::string_view label) const;
  std::vector<int> encode(std::span<const std::string> labels) const;
  /// Label for a code; the reserved code decodes to "<unknown>".
  std::string decode(int code) const;
  /// Indicator vector of length vocabulary_size(); all zeros for unseen labels.
  std::vector<double> onehot(std::string_view label) const;

  std::size_t vocabulary_size() const noexcept { return vocabulary_.size(); }
  /// Number of distinct codes encode() can return.
  std::size_t cardinality() const noexcept { return vocabulary_.size() + (open_ ? 1 : 0); }
  bool open() const noexcept { return open_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
  bool open_ = true;
};

inline constexpr std::string_view kUnknownLabel = "<unknown>";

/// One encoder per categorical frame column, fit on `train` rows. weather is
/// open with the canonical 20-label ordering; calendar columns are closed.
std::vector<LabelEncoder> fit_encoders(const TimeSeriesFrame& frame, RowRange train);

// ---------------------------------------------------------------------------
// Decomposition features

enum class AttachMode { FullSeries, TrainOnlyRefit };

std::string_view attach_mode_name(AttachMode mode);
AttachMode parse_attach_mode(std::string_view name);

struct RefitOptions {
  /// Decomposes the history ending at the row being filled.
  std::function<DecompositionResult(std::span<const double>)> decompose;
  /// Most recent rows given to each refit; 0 means the whole history.
  std::size_t lookback = 0;
};

/// Appends imf_1..imf_n and residue as continuous columns.
///
/// FullSeries: `result` covers every row. TrainOnlyRefit: `result` covers the
/// leading training rows; every later row t is filled from a fresh
/// decomposition of the source series up to and including t, folded to the
/// same column count, so no value depends on rows after its own.
TimeSeriesFrame attach_decomposition(const TimeSeriesFrame& frame, const DecompositionResult& result,
                                     AttachMode mode, const RefitOptions* refit = nullptr,
                                     std::string_view source_column = schema::kTarget);

// ---------------------------------------------------------------------------
// Windowing and splitting

/// Windowed supervised samples. Sample i reads rows [i, i + history) and
/// targets row i + history + horizon - 1.
struct SupervisedDataset {
  std::size_t history = 24;
  std::size_t horizon = 1;
  std::vector<std::string> num_names;
  std::vector<std::string> cat_names;
  /// Distinct codes per categorical channel (embedding table rows).
  std::vector<std::size_t> cat_cardinality;
  /// One-hot width per categorical channel.
  std::vector<std::size_t> cat_vocabulary;
  std::vector<double> x_num;  // [samples, history, num channels]
  std::vector<int> x_cat;     // [samples, history, cat channels]
  std::vector<double> y;      // raw-scale target
  std::vector<Timestamp> target_time;
  std::vector<std::size_t> first_row;
  std::vector<std::size_t> target_row;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t num_channels() const noexcept { return num_names.size(); }
  std::size_t cat_channels() const noexcept { return cat_names.size(); }
  double num(std::size_t sample, std::size_t step, std::size_t channel) const {
    return x_num[(sample * history + step) * num_channels() + channel];
  }
  int cat(std::size_t sample, std::size_t step, std::size_t channel) const {
    return x_cat[(sample * history + step) * cat_channels() + channel];
  }
  SupervisedDataset subset(std::size_t begin, std::size_t end) const;
};

/// Builds windows from a (standardised) feature frame. `target` holds the
/// raw-scale series being forecast, one value per frame row.
SupervisedDataset make_windows(const TimeSeriesFrame& features, std::span<const LabelEncoder> encoders,
                               std::span<const double> target, std::size_t history, std::size_t horizon);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct SplitRanges {
  RowRange train;
  RowRange validation;
  RowRange test;
};

/// Contiguous chronological split of n items; validation and test take the
/// floor of their share, train takes the remainder.
SplitRanges split_chronological(std::size_t n, SplitFractions fractions = {});

/// Split by timestamps: train < validation_start <= validation < test_start <= test.
SplitRanges split_at_dates(std::span<const Timestamp> timestamps, Timestamp validation_start, Timestamp test_start);

struct DatasetSplit {
  SupervisedDataset train;
  SupervisedDataset validation;
  SupervisedDataset test;
};

DatasetSplit split_dataset(const SupervisedDataset& data, const SplitRanges& ranges);

}  // namespace pmcast
