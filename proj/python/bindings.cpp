#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pmcast/config.hpp"
#include "pmcast/datapipe.hpp"
#include "pmcast/decomposition.hpp"
#include "pmcast/errors.hpp"
#include "pmcast/evaluation.hpp"
#include "pmcast/experiment.hpp"
#include "pmcast/frame.hpp"
#include "pmcast/synth.hpp"

namespace py = pybind11;
using namespace pmcast;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

py::dict decomposition_dict(const DecompositionResult& r) {
  const auto n = static_cast<py::ssize_t>(r.length());
  Array imfs({static_cast<py::ssize_t>(r.imf_count()), n});
  auto out = imfs.mutable_unchecked<2>();
  for (std::size_t k = 0; k < r.imf_count(); ++k) {
    for (py::ssize_t t = 0; t < n; ++t) out(static_cast<py::ssize_t>(k), t) = r.imfs[k][static_cast<std::size_t>(t)];
  }
  py::dict d;
  d["imfs"] = imfs;
  d["residue"] = to_array(r.residue);
  d["method"] = r.meta.method;
  d["trials"] = r.meta.trials;
  d["noise_ratio"] = r.meta.noise_ratio;
  d["seed"] = r.meta.seed;
  return d;
}

SiftConfig sift_config(std::size_t max_sift_iterations, double sd_threshold, std::optional<std::size_t> max_imfs) {
  SiftConfig c;
  c.max_sift_iterations = max_sift_iterations;
  c.sd_threshold = sd_threshold;
  c.max_imfs = max_imfs;
  return c;
}

py::dict frame_dict(const TimeSeriesFrame& f) {
  py::dict columns;
  for (const auto& c : f.continuous) columns[py::str(c.name)] = to_array(c.values);
  for (const auto& c : f.categorical) columns[py::str(c.name)] = c.labels;
  std::vector<std::string> stamps;
  stamps.reserve(f.rows());
  for (auto ts : f.timestamps) stamps.push_back(format_timestamp(ts));
  py::dict d;
  d["timestamp"] = stamps;
  d["columns"] = columns;
  return d;
}

py::dict metrics_dict(const evaluation::Metrics& m) {
  py::dict d;
  d["mape"] = m.mape;
  d["mae"] = m.mae;
  d["rmse"] = m.rmse;
  d["n"] = m.n;
  return d;
}

py::tuple split_tuple(const SplitRanges& s) {
  auto pair = [](RowRange r) { return py::make_tuple(r.begin, r.end); };
  return py::make_tuple(pair(s.train), pair(s.validation), pair(s.test));
}

ExperimentConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "<python>");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Decomposition, forecasting and evaluation core";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<OrderingError>(m, "OrderingError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "emd",
      [](const Array& signal, std::size_t max_sift_iterations, double sd_threshold,
         std::optional<std::size_t> max_imfs) {
        const auto x = to_vector(signal);
        DecompositionResult r;
        {
          py::gil_scoped_release release;
          r = emd(x, sift_config(max_sift_iterations, sd_threshold, max_imfs));
        }
        return decomposition_dict(r);
      },
      py::arg("signal"), py::arg("max_sift_iterations") = 100, py::arg("sd_threshold") = 0.2,
      py::arg("max_imfs") = py::none(), "Plain EMD. Returns imfs (k x n), residue and metadata.");

  m.def(
      "ceemdan",
      [](const Array& signal, double noise_ratio, int trials, std::uint64_t seed, std::size_t jobs,
         std::size_t max_sift_iterations, double sd_threshold, std::optional<std::size_t> max_imfs) {
        const auto x = to_vector(signal);
        CeemdanOptions o;
        o.noise_ratio = noise_ratio;
        o.trials = trials;
        o.seed = seed;
        o.jobs = jobs;
        o.sift = sift_config(max_sift_iterations, sd_threshold, max_imfs);
        DecompositionResult r;
        {
          py::gil_scoped_release release;
          r = ceemdan(x, o);
        }
        return decomposition_dict(r);
      },
      py::arg("signal"), py::arg("noise_ratio") = 0.2, py::arg("trials") = 100, py::arg("seed") = 0,
      py::arg("jobs") = 1, py::arg("max_sift_iterations") = 100, py::arg("sd_threshold") = 0.2,
      py::arg("max_imfs") = py::none(), "CEEMDAN. Results do not depend on jobs.");

  m.def(
      "find_extrema",
      [](const Array& signal) {
        const auto e = find_extrema(to_vector(signal));
        return py::make_tuple(e.maxima, e.minima);
      },
      py::arg("signal"), "Indices of interior maxima and minima.");
  m.def(
      "count_zero_crossings", [](const Array& signal) { return count_zero_crossings(to_vector(signal)); },
      py::arg("signal"));

  m.def(
      "compute_metrics",
      [](const Array& y, const Array& yhat, double guard) {
        return metrics_dict(evaluation::compute_metrics(to_vector(y), to_vector(yhat), guard));
      },
      py::arg("y"), py::arg("yhat"), py::arg("guard") = 1e-3, "MAPE (fraction), MAE and RMSE.");

  m.def(
      "dm_test",
      [](const Array& y, const Array& a, const Array& b, std::size_t horizon, bool harvey) {
        evaluation::DmOptions o;
        o.harvey = harvey;
        const auto r = evaluation::dm_test(to_vector(y), to_vector(a), to_vector(b), horizon, o);
        py::dict d;
        d["status"] = std::string(evaluation::dm_status_name(r.status));
        d["statistic"] = r.statistic;
        d["p_value"] = r.p_value;
        d["mean_difference"] = r.mean_difference;
        d["variance"] = r.variance;
        d["horizon"] = r.horizon;
        d["n"] = r.n;
        return d;
      },
      py::arg("y"), py::arg("forecast_a"), py::arg("forecast_b"), py::arg("horizon") = 1, py::arg("harvey") = false,
      "Equal-accuracy test under absolute-percentage loss; negative favours forecast_a.");

  m.def(
      "improvement_table",
      [](const std::vector<std::tuple<std::string, std::size_t, double, double, double>>& rows,
         const std::string& proposed, const std::vector<std::string>& benchmarks) {
        evaluation::MetricsTable table;
        for (const auto& [model, h, mape, mae, rmse] : rows) table.push_back({model, h, {mape, mae, rmse, 0}});
        py::list out;
        for (const auto& r : evaluation::improvement_table(table, proposed, benchmarks)) {
          py::dict d;
          d["benchmark"] = r.benchmark;
          d["mape"] = r.mape;
          d["mae"] = r.mae;
          d["rmse"] = r.rmse;
          out.append(d);
        }
        return out;
      },
      py::arg("rows"), py::arg("proposed"), py::arg("benchmarks"),
      "rows: (model, horizon, mape, mae, rmse). Returns fractional reductions per benchmark.");

  m.def(
      "synth_generate", [](std::size_t n_hours, std::uint64_t seed) { return frame_dict(synth_generate(n_hours, seed)); },
      py::arg("n_hours"), py::arg("seed"), "Synthetic hourly frame as timestamps plus named columns.");
  m.def(
      "load_frame", [](const std::string& path) { return frame_dict(ingest_file(path)); }, py::arg("path"),
      "Reads a data file in the ingestion schema.");

  m.def(
      "split_chronological",
      [](std::size_t n, double train, double validation, double test) {
        return split_tuple(split_chronological(n, {train, validation, test}));
      },
      py::arg("n"), py::arg("train") = 0.6, py::arg("validation") = 0.2, py::arg("test") = 0.2,
      "((begin, end) train, validation, test) row ranges.");
  m.def(
      "split_at_dates",
      [](const std::vector<std::string>& timestamps, const std::string& validation_start,
         const std::string& test_start) {
        std::vector<Timestamp> ts;
        ts.reserve(timestamps.size());
        for (const auto& s : timestamps) ts.push_back(parse_timestamp(s));
        return split_tuple(split_at_dates(ts, parse_timestamp(validation_start), parse_timestamp(test_start)));
      },
      py::arg("timestamps"), py::arg("validation_start"), py::arg("test_start"));

  m.def(
      "default_config",
      [] {
        std::ostringstream out;
        write_config(out, ExperimentConfig{});
        return out.str();
      },
      "Every configuration key with its default, as INI text.");

  m.def(
      "run",
      [](const std::string& config_text, const std::optional<std::filesystem::path>& out_dir,
         std::optional<std::size_t> jobs) {
        auto config = config_from_text(config_text);
        if (jobs) config.jobs = *jobs;
        RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_experiment(config);
          if (out_dir) write_run(outcome, config, *out_dir);
        }
        py::list metrics;
        for (const auto& e : outcome.report.metrics) {
          auto d = metrics_dict(e.metrics);
          d["model"] = e.model;
          d["horizon"] = e.horizon;
          metrics.append(d);
        }
        py::list failures;
        for (const auto& f : outcome.report.failures) {
          py::dict d;
          d["model"] = f.model;
          d["horizon"] = f.horizon;
          d["error"] = f.error;
          failures.append(d);
        }
        py::dict d;
        d["metrics"] = metrics;
        d["failures"] = failures;
        return d;
      },
      py::arg("config_text"), py::arg("out_dir") = py::none(), py::arg("jobs") = py::none(),
      "Runs an experiment from INI text; writes the run directory when out_dir is given.");
}
