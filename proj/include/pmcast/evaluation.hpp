#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmcast::evaluation {

/// mean |1 - yhat / y|; denominators with |y| <= guard are clamped to +-guard.
double mape(std::span<const double> y, std::span<const double> yhat, double guard = 1e-3);

struct Metrics {
  double mape = 0.0;  // fraction, not percent
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
};

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat, double guard = 1e-3);

enum class DmStatus {
  Ok,
  /// The two forecasts are identical; the statistic is undefined.
  Degenerate,
  /// The truncated long-run variance estimate is not positive.
  NonPositiveVariance,
};

std::string_view dm_status_name(DmStatus status);

struct DmOptions {
  /// Small-sample correction with Student-t p-values (N - 1 degrees of freedom).
  bool harvey = false;
  double guard = 1e-3;
};

/// Test of equal accuracy under absolute-percentage loss. D_t = loss(A) - loss(B),
/// so a negative statistic favours A. statistic and p_value are NaN unless
/// status == Ok.
struct DmResult {
  DmStatus status = DmStatus::Ok;
  double statistic = 0.0;
  double p_value = 1.0;
  double mean_difference = 0.0;
  double variance = 0.0;  // long-run variance estimate of D_t
  std::size_t horizon = 1;
  std::size_t n = 0;
};

DmResult dm_test(std::span<const double> y, std::span<const double> forecast_a, std::span<const double> forecast_b,
                 std::size_t horizon, const DmOptions& options = {});

/// Sample mean and n-1 standard deviation.
struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

Summary summarize(std::span<const double> values);

struct RobustnessSummary {
  Summary mape;
  Summary mae;
  Summary rmse;
  std::size_t runs = 0;
};

/// Needs at least two runs.
RobustnessSummary robustness_summary(std::span<const Metrics> runs);

/// "mean (std)" with fixed decimals.
std::string mean_std_cell(const Summary& s, int decimals = 4);

struct MetricsEntry {
  std::string model;
  std::size_t horizon = 1;
  Metrics metrics;
};

using MetricsTable = std::vector<MetricsEntry>;

const Metrics* find_metrics(const MetricsTable& table, std::string_view model, std::size_t horizon);

struct ImprovementRow {
  std::string benchmark;
  /// 1 - mean_h(proposed) / mean_h(benchmark), as fractions.
  double mape = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

/// Reduction of the proposed model's horizon-averaged criteria against each
/// benchmark. Every model must cover the same horizons.
std::vector<ImprovementRow> improvement_table(const MetricsTable& table, std::string_view proposed,
                                              std::span<const std::string> benchmarks);

}  // namespace pmcast::evaluation
