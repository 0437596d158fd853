#include "pmcast/evaluation.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "pmcast/errors.hpp"

namespace pmcast::evaluation {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat, const char* who) {
  if (y.empty()) throw ContractError(std::string(who) + ": empty input");
  if (y.size() != yhat.size()) {
    throw ShapeError(std::string(who) + ": " + std::to_string(y.size()) + " targets, " + std::to_string(yhat.size()) +
                     " forecasts");
  }
}

double ape(double y, double yhat, double guard) {
  double denom = y;
  if (std::fabs(denom) <= guard) denom = denom < 0.0 ? -guard : guard;
  return std::fabs(1.0 - yhat / denom);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double mape(std::span<const double> y, std::span<const double> yhat, double guard) {
  check_pair(y, yhat, "mape");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += ape(y[i], yhat[i], guard);
  return total / static_cast<double>(y.size());
}

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat, double guard) {
  check_pair(y, yhat, "compute_metrics");
  Metrics m;
  m.n = y.size();
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - yhat[i];
    abs_sum += std::fabs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(m.n);
  m.mape = mape(y, yhat, guard);
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  return m;
}

std::string_view dm_status_name(DmStatus status) {
  switch (status) {
    case DmStatus::Ok: return "ok";
    case DmStatus::Degenerate: return "degenerate";
    case DmStatus::NonPositiveVariance: return "non_positive_variance";
  }
  return "unknown";
}

DmResult dm_test(std::span<const double> y, std::span<const double> forecast_a, std::span<const double> forecast_b,
                 std::size_t horizon, const DmOptions& options) {
  check_pair(y, forecast_a, "dm_test");
  check_pair(y, forecast_b, "dm_test");
  const std::size_t n = y.size();
  if (horizon < 1 || horizon > n) throw ParameterError("dm_test: need 1 <= horizon <= N");

  DmResult r;
  r.horizon = horizon;
  r.n = n;
  std::vector<double> d(n);
  bool identical = true;
  for (std::size_t t = 0; t < n; ++t) {
    identical = identical && forecast_a[t] == forecast_b[t];
    d[t] = ape(y[t], forecast_a[t], options.guard) - ape(y[t], forecast_b[t], options.guard);
  }
  const auto nd = static_cast<double>(n);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= nd;
  r.mean_difference = mean;
  if (identical) {
    r.status = DmStatus::Degenerate;
    r.statistic = r.p_value = kNaN;
    return r;
  }
  auto gamma = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t) acc += (d[t] - mean) * (d[t - k] - mean);
    return acc / nd;
  };
  double variance = gamma(0);
  for (std::size_t k = 1; k < horizon; ++k) variance += 2.0 * gamma(k);
  r.variance = variance;
  if (!(variance > 0.0)) {
    r.status = DmStatus::NonPositiveVariance;
    r.statistic = r.p_value = kNaN;
    return r;
  }
  r.statistic = mean / std::sqrt(variance / nd);
  if (options.harvey) {
    const auto h = static_cast<double>(horizon);
    r.statistic *= std::sqrt((nd + 1.0 - 2.0 * h + h * (h - 1.0) / nd) / nd);
    if (n < 2) throw ParameterError("dm_test: Harvey correction needs N >= 2");
    const boost::math::students_t_distribution<double> t_dist(nd - 1.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::fabs(r.statistic)));
  } else {
    r.p_value = std::erfc(std::fabs(r.statistic) / std::sqrt(2.0));
  }
  return r;
}

Summary summarize(std::span<const double> values) {
  if (values.size() < 2) throw ContractError("summary needs at least two values");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

RobustnessSummary robustness_summary(std::span<const Metrics> runs) {
  if (runs.size() < 2) throw ContractError("robustness_summary needs at least two runs");
  std::vector<double> a, b, c;
  for (const auto& m : runs) {
    a.push_back(m.mape);
    b.push_back(m.mae);
    c.push_back(m.rmse);
  }
  return {summarize(a), summarize(b), summarize(c), runs.size()};
}

std::string mean_std_cell(const Summary& s, int decimals) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f (%.*f)", decimals, s.mean, decimals, s.std);
  return buf;
}

const Metrics* find_metrics(const MetricsTable& table, std::string_view model, std::size_t horizon) {
  for (const auto& e : table) {
    if (e.model == model && e.horizon == horizon) return &e.metrics;
  }
  return nullptr;
}

std::vector<ImprovementRow> improvement_table(const MetricsTable& table, std::string_view proposed,
                                              std::span<const std::string> benchmarks) {
  std::set<std::size_t> horizons;
  for (const auto& e : table) {
    if (e.model == proposed) horizons.insert(e.horizon);
  }
  if (horizons.empty()) throw ContractError("improvement_table: no rows for '" + std::string(proposed) + "'");

  struct Means {
    double mape = 0.0, mae = 0.0, rmse = 0.0;
  };
  auto means = [&](std::string_view model) {
    Means m;
    for (auto h : horizons) {
      const auto* row = find_metrics(table, model, h);
      if (row == nullptr) {
        throw ContractError("improvement_table: '" + std::string(model) + "' lacks horizon " + std::to_string(h));
      }
      m.mape += row->mape;
      m.mae += row->mae;
      m.rmse += row->rmse;
    }
    const auto k = static_cast<double>(horizons.size());
    return Means{m.mape / k, m.mae / k, m.rmse / k};
  };
  const Means p = means(proposed);
  std::vector<ImprovementRow> rows;
  for (const auto& b : benchmarks) {
    const Means q = means(b);
    rows.push_back({b, 1.0 - p.mape / q.mape, 1.0 - p.mae / q.mae, 1.0 - p.rmse / q.rmse});
  }
  return rows;
}

}  // namespace pmcast::evaluation
