#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pmcast/evaluation.hpp"
#include "pmcast/frame.hpp"

namespace pmcast::report {

/// Test-set forecasts of one (model, horizon, replicate) cell.
struct Trace {
  std::string model;
  std::size_t horizon = 1;
  std::size_t replicate = 0;
  std::vector<Timestamp> time;
  std::vector<double> actual;
  std::vector<double> predicted;
};

struct Failure {
  std::string model;
  std::size_t horizon = 1;
  std::size_t replicate = 0;
  std::string error;
};

struct DmCell {
  std::string row;     // model B
  std::string column;  // model A; negative statistics favour it
  evaluation::DmResult result;
};

/// Lower-triangular matrix. Models are listed in reverse evaluation order;
/// cell (i, j), j < i, compares A = models[j] against B = models[i].
struct DmMatrix {
  std::string label;  // "h1", "h2", ..., "pooled"
  std::size_t horizon = 1;
  std::vector<std::string> models;
  std::vector<DmCell> cells;
};

struct RobustnessEntry {
  std::string model;
  std::size_t horizon = 1;
  evaluation::RobustnessSummary summary;
};

struct CeemdanPair {
  std::string base;
  std::string variant;
  std::size_t horizon = 1;
  evaluation::Metrics plain;
  evaluation::Metrics ceemdan;
};

struct ReplicateMetrics {
  std::string model;
  std::size_t horizon = 1;
  std::size_t replicate = 0;
  evaluation::Metrics metrics;
};

struct Report {
  std::vector<std::string> models;
  std::vector<std::size_t> horizons;
  std::string proposed;
  /// First replicate of every successful cell, in model then horizon order.
  evaluation::MetricsTable metrics;
  std::vector<ReplicateMetrics> replicates;
  std::vector<DmMatrix> dm;
  std::vector<RobustnessEntry> robustness;
  std::vector<evaluation::ImprovementRow> improvement;
  std::string improvement_note;
  std::vector<CeemdanPair> ceemdan;
  std::vector<Failure> failures;
};

/// DM matrix over the first replicate of each model. With several horizons
/// the series are concatenated in horizon order and the variance is
/// truncated at the largest horizon.
DmMatrix dm_matrix(std::span<const Trace> traces, std::span<const std::string> models,
                   std::span<const std::size_t> horizons, const std::string& label, double guard = 1e-3);

Report build_report(std::span<const Trace> traces, std::span<const std::string> models,
                    std::span<const std::size_t> horizons, const std::string& proposed, std::span<const Failure> failures,
                    double guard = 1e-3);

/// "statistic (p)" with two decimals, or the failure status.
std::string dm_cell_text(const evaluation::DmResult& r);

void write_metrics_csv(std::ostream& out, const Report& r);
void write_replicates_csv(std::ostream& out, const Report& r);
void write_comparison_csv(std::ostream& out, const Report& r);
void write_dm_csv(std::ostream& out, const DmMatrix& m);
void write_robustness_csv(std::ostream& out, const Report& r);
void write_improvement_csv(std::ostream& out, const Report& r);
void write_ceemdan_csv(std::ostream& out, const Report& r);
void write_failures_csv(std::ostream& out, std::span<const Failure> failures);
/// Hierarchical document with every table at full precision.
std::string report_json(const Report& r, const std::string& metadata_json = "{}");

/// Writes every table of `r` into `dir`.
void write_report_files(const std::filesystem::path& dir, const Report& r, const std::string& metadata_json = "{}");

std::string trace_filename(const std::string& model, std::size_t horizon, std::size_t replicate);
/// Header `timestamp,actual,predicted`.
void write_trace(std::ostream& out, const Trace& t);
Trace read_trace(std::istream& in, const std::string& model, std::size_t horizon, std::size_t replicate);
/// Reads every trace file of a `predictions` directory.
std::vector<Trace> read_traces(const std::filesystem::path& dir);
std::vector<Failure> read_failures(const std::filesystem::path& file);

}  // namespace pmcast::report
