#include "pmcast/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pmcast/errors.hpp"

namespace pmcast::report {

using evaluation::Metrics;
using nlohmann::ordered_json;

namespace {

const Trace* find_trace(std::span<const Trace> traces, const std::string& model, std::size_t horizon,
                        std::size_t replicate) {
  for (const auto& t : traces) {
    if (t.model == model && t.horizon == horizon && t.replicate == replicate) return &t;
  }
  return nullptr;
}

std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json metrics_json(const Metrics& m) {
  return {{"mape", m.mape}, {"mae", m.mae}, {"rmse", m.rmse}, {"n", m.n}};
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

DmMatrix dm_matrix(std::span<const Trace> traces, std::span<const std::string> models,
                   std::span<const std::size_t> horizons, const std::string& label, double guard) {
  DmMatrix m;
  m.label = label;
  m.horizon = horizons.empty() ? 1 : *std::max_element(horizons.begin(), horizons.end());
  std::vector<std::vector<double>> forecasts;
  std::vector<double> actual;
  for (auto it = models.rbegin(); it != models.rend(); ++it) {
    std::vector<double> series;
    std::vector<double> y;
    bool complete = true;
    for (auto h : horizons) {
      const auto* t = find_trace(traces, *it, h, 0);
      if (t == nullptr) {
        complete = false;
        break;
      }
      series.insert(series.end(), t->predicted.begin(), t->predicted.end());
      y.insert(y.end(), t->actual.begin(), t->actual.end());
    }
    if (!complete) continue;
    if (actual.empty()) {
      actual = y;
    } else if (actual != y) {
      throw ContractError("dm_matrix: models were evaluated on different targets");
    }
    m.models.push_back(*it);
    forecasts.push_back(std::move(series));
  }
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      m.cells.push_back({m.models[i], m.models[j],
                         evaluation::dm_test(actual, forecasts[j], forecasts[i], m.horizon, {false, guard})});
    }
  }
  return m;
}

Report build_report(std::span<const Trace> traces, std::span<const std::string> models,
                    std::span<const std::size_t> horizons, const std::string& proposed, std::span<const Failure> failures,
                    double guard) {
  Report r;
  r.models.assign(models.begin(), models.end());
  r.horizons.assign(horizons.begin(), horizons.end());
  r.proposed = proposed;
  r.failures.assign(failures.begin(), failures.end());

  for (const auto& model : r.models) {
    for (auto h : r.horizons) {
      std::vector<Metrics> runs;
      for (std::size_t rep = 0;; ++rep) {
        const auto* t = find_trace(traces, model, h, rep);
        if (t == nullptr) break;
        const auto m = evaluation::compute_metrics(t->actual, t->predicted, guard);
        r.replicates.push_back({model, h, rep, m});
        runs.push_back(m);
      }
      if (runs.empty()) continue;
      r.metrics.push_back({model, h, runs.front()});
      if (runs.size() >= 2) r.robustness.push_back({model, h, evaluation::robustness_summary(runs)});
    }
  }

  for (auto h : r.horizons) {
    const std::size_t one[] = {h};
    r.dm.push_back(dm_matrix(traces, r.models, one, "h" + std::to_string(h), guard));
  }
  if (r.horizons.size() > 1) r.dm.push_back(dm_matrix(traces, r.models, r.horizons, "pooled", guard));

  std::vector<std::string> benchmarks;
  for (const auto& m : r.models) {
    if (m != proposed) benchmarks.push_back(m);
  }
  try {
    r.improvement = evaluation::improvement_table(r.metrics, proposed, benchmarks);
  } catch (const ContractError& e) {
    r.improvement_note = e.what();
  }

  for (const auto& variant : r.models) {
    if (!variant.starts_with("CEEMDAN-")) continue;
    const auto base = variant.substr(8);
    if (std::find(r.models.begin(), r.models.end(), base) == r.models.end()) continue;
    for (auto h : r.horizons) {
      const auto* a = evaluation::find_metrics(r.metrics, base, h);
      const auto* b = evaluation::find_metrics(r.metrics, variant, h);
      if (a && b) r.ceemdan.push_back({base, variant, h, *a, *b});
    }
  }
  return r;
}

std::string dm_cell_text(const evaluation::DmResult& r) {
  if (r.status != evaluation::DmStatus::Ok) return std::string(evaluation::dm_status_name(r.status));
  return fixed(r.statistic, 2) + " (" + fixed(r.p_value, 2) + ")";
}

void write_metrics_csv(std::ostream& out, const Report& r) {
  out << "model,horizon,criterion,value\n";
  for (const auto& e : r.metrics) {
    out << e.model << ',' << e.horizon << ",mape," << format_double(e.metrics.mape) << '\n';
    out << e.model << ',' << e.horizon << ",mae," << format_double(e.metrics.mae) << '\n';
    out << e.model << ',' << e.horizon << ",rmse," << format_double(e.metrics.rmse) << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const Report& r) {
  out << "model,horizon,replicate,mape,mae,rmse,n\n";
  for (const auto& e : r.replicates) {
    out << e.model << ',' << e.horizon << ',' << e.replicate << ',' << format_double(e.metrics.mape) << ','
        << format_double(e.metrics.mae) << ',' << format_double(e.metrics.rmse) << ',' << e.metrics.n << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const Report& r) {
  out << "horizon,criterion";
  for (const auto& m : r.models) out << ',' << m;
  out << '\n';
  for (auto h : r.horizons) {
    for (const char* criterion : {"MAPE", "MAE", "RMSE"}) {
      out << h << ',' << criterion;
      for (const auto& model : r.models) {
        out << ',';
        const auto* m = evaluation::find_metrics(r.metrics, model, h);
        if (m == nullptr) continue;
        const std::string_view c = criterion;
        out << fixed(c == "MAPE" ? m->mape : c == "MAE" ? m->mae : m->rmse, 4);
      }
      out << '\n';
    }
  }
}

void write_dm_csv(std::ostream& out, const DmMatrix& m) {
  out << m.label;
  for (std::size_t j = 0; j + 1 < m.models.size(); ++j) out << ',' << m.models[j];
  out << '\n';
  std::size_t k = 0;
  for (std::size_t i = 1; i < m.models.size(); ++i) {
    out << m.models[i];
    for (std::size_t j = 0; j + 1 < m.models.size(); ++j) {
      out << ',';
      if (j < i) out << dm_cell_text(m.cells[k++].result);
    }
    out << '\n';
  }
}

void write_robustness_csv(std::ostream& out, const Report& r) {
  out << "model,horizon,criterion,mean,std,runs,cell\n";
  for (const auto& e : r.robustness) {
    const std::pair<const char*, const evaluation::Summary*> rows[] = {
        {"mape", &e.summary.mape}, {"mae", &e.summary.mae}, {"rmse", &e.summary.rmse}};
    for (const auto& [name, s] : rows) {
      out << e.model << ',' << e.horizon << ',' << name << ',' << format_double(s->mean) << ','
          << format_double(s->std) << ',' << e.summary.runs << ',' << evaluation::mean_std_cell(*s, 3) << '\n';
    }
  }
}

void write_improvement_csv(std::ostream& out, const Report& r) {
  out << "proposed,benchmark,mape_reduction_pct,mae_reduction_pct,rmse_reduction_pct\n";
  for (const auto& row : r.improvement) {
    out << r.proposed << ',' << row.benchmark << ',' << fixed(100.0 * row.mape, 2) << ',' << fixed(100.0 * row.mae, 2)
        << ',' << fixed(100.0 * row.rmse, 2) << '\n';
  }
}

void write_ceemdan_csv(std::ostream& out, const Report& r) {
  out << "base,variant,horizon,criterion,plain,ceemdan,reduction_pct\n";
  for (const auto& p : r.ceemdan) {
    const std::tuple<const char*, double, double> rows[] = {{"mape", p.plain.mape, p.ceemdan.mape},
                                                            {"mae", p.plain.mae, p.ceemdan.mae},
                                                            {"rmse", p.plain.rmse, p.ceemdan.rmse}};
    for (const auto& [name, a, b] : rows) {
      out << p.base << ',' << p.variant << ',' << p.horizon << ',' << name << ',' << format_double(a) << ','
          << format_double(b) << ',' << fixed(100.0 * (1.0 - b / a), 2) << '\n';
    }
  }
}

void write_failures_csv(std::ostream& out, std::span<const Failure> failures) {
  out << "model,horizon,replicate,error\n";
  for (const auto& f : failures) {
    out << f.model << ',' << f.horizon << ',' << f.replicate << ',' << sanitize(f.error) << '\n';
  }
}

std::string report_json(const Report& r, const std::string& metadata_json) {
  ordered_json doc;
  doc["metadata"] = ordered_json::parse(metadata_json);
  doc["models"] = r.models;
  doc["horizons"] = r.horizons;
  doc["proposed"] = r.proposed;
  auto& metrics = doc["metrics"] = ordered_json::array();
  for (const auto& e : r.metrics) {
    metrics.push_back({{"model", e.model}, {"horizon", e.horizon}, {"metrics", metrics_json(e.metrics)}});
  }
  auto& reps = doc["replicates"] = ordered_json::array();
  for (const auto& e : r.replicates) {
    reps.push_back({{"model", e.model},
                    {"horizon", e.horizon},
                    {"replicate", e.replicate},
                    {"metrics", metrics_json(e.metrics)}});
  }
  auto& dm = doc["dm"] = ordered_json::array();
  for (const auto& m : r.dm) {
    ordered_json cells = ordered_json::array();
    for (const auto& c : m.cells) {
      cells.push_back({{"a", c.column},
                       {"b", c.row},
                       {"status", evaluation::dm_status_name(c.result.status)},
                       {"statistic", number(c.result.statistic)},
                       {"p_value", number(c.result.p_value)},
                       {"mean_difference", c.result.mean_difference},
                       {"variance", c.result.variance},
                       {"n", c.result.n}});
    }
    dm.push_back({{"label", m.label}, {"horizon", m.horizon}, {"models", m.models}, {"cells", cells}});
  }
  auto& rob = doc["robustness"] = ordered_json::array();
  for (const auto& e : r.robustness) {
    auto s = [](const evaluation::Summary& x) { return ordered_json{{"mean", x.mean}, {"std", x.std}}; };
    rob.push_back({{"model", e.model},
                   {"horizon", e.horizon},
                   {"runs", e.summary.runs},
                   {"mape", s(e.summary.mape)},
                   {"mae", s(e.summary.mae)},
                   {"rmse", s(e.summary.rmse)}});
  }
  auto& imp = doc["improvement"] = ordered_json::array();
  for (const auto& row : r.improvement) {
    imp.push_back({{"benchmark", row.benchmark}, {"mape", row.mape}, {"mae", row.mae}, {"rmse", row.rmse}});
  }
  if (!r.improvement_note.empty()) doc["improvement_note"] = r.improvement_note;
  auto& cmp = doc["ceemdan_comparison"] = ordered_json::array();
  for (const auto& p : r.ceemdan) {
    cmp.push_back({{"base", p.base},
                   {"variant", p.variant},
                   {"horizon", p.horizon},
                   {"plain", metrics_json(p.plain)},
                   {"ceemdan", metrics_json(p.ceemdan)}});
  }
  auto& fail = doc["failures"] = ordered_json::array();
  for (const auto& f : r.failures) {
    fail.push_back({{"model", f.model}, {"horizon", f.horizon}, {"replicate", f.replicate}, {"error", f.error}});
  }
  return doc.dump(2) + "\n";
}

void write_report_files(const std::filesystem::path& dir, const Report& r, const std::string& metadata_json) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, r);
  }
  {
    auto out = open_out(dir / "replicates.csv");
    write_replicates_csv(out, r);
  }
  {
    auto out = open_out(dir / "comparison.csv");
    write_comparison_csv(out, r);
  }
  for (const auto& m : r.dm) {
    auto out = open_out(dir / ("dm_" + m.label + ".csv"));
    write_dm_csv(out, m);
  }
  {
    auto out = open_out(dir / "robustness.csv");
    write_robustness_csv(out, r);
  }
  {
    auto out = open_out(dir / "improvement.csv");
    write_improvement_csv(out, r);
  }
  {
    auto out = open_out(dir / "ceemdan_comparison.csv");
    write_ceemdan_csv(out, r);
  }
  {
    auto out = open_out(dir / "failures.csv");
    write_failures_csv(out, r.failures);
  }
  {
    auto out = open_out(dir / "report.json");
    out << report_json(r, metadata_json);
  }
}

std::string trace_filename(const std::string& model, std::size_t horizon, std::size_t replicate) {
  return model + "_h" + std::to_string(horizon) + "_r" + std::to_string(replicate) + ".csv";
}

void write_trace(std::ostream& out, const Trace& t) {
  out << "timestamp,actual,predicted\n";
  for (std::size_t i = 0; i < t.actual.size(); ++i) {
    out << format_timestamp(t.time[i]) << ',' << format_double(t.actual[i]) << ',' << format_double(t.predicted[i])
        << '\n';
  }
}

Trace read_trace(std::istream& in, const std::string& model, std::size_t horizon, std::size_t replicate) {
  Trace t{model, horizon, replicate, {}, {}, {}};
  std::string line;
  if (!std::getline(in, line) || line != "timestamp,actual,predicted") {
    throw SchemaError("trace for " + model + ": unexpected header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw SchemaError("trace for " + model + ":" + std::to_string(lineno) + ": expected 3 fields");
    t.time.push_back(parse_timestamp(f[0]));
    t.actual.push_back(std::stod(f[1]));
    t.predicted.push_back(std::stod(f[2]));
  }
  return t;
}

std::vector<Trace> read_traces(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Trace> traces;
  for (const auto& p : files) {
    const auto stem = p.stem().string();
    const auto r = stem.rfind("_r");
    const auto h = stem.rfind("_h", r);
    if (r == std::string::npos || h == std::string::npos) continue;
    std::ifstream in(p);
    traces.push_back(read_trace(in, stem.substr(0, h), std::stoul(stem.substr(h + 2, r - h - 2)),
                                std::stoul(stem.substr(r + 2))));
  }
  return traces;
}

std::vector<Failure> read_failures(const std::filesystem::path& file) {
  std::vector<Failure> out;
  std::ifstream in(file);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 4) throw SchemaError(file.string() + ": malformed failure row");
    out.push_back({f[0], std::stoul(f[1]), std::stoul(f[2]), f[3]});
  }
  return out;
}

}  // namespace pmcast::report
