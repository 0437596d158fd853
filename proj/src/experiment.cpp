#include "pmcast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "pmcast/errors.hpp"
#include "pmcast/rng.hpp"
#include "pmcast/synth.hpp"

namespace pmcast {

using nlohmann::ordered_json;

TimeSeriesFrame load_frame(const DataConfig& data) {
  TimeSeriesFrame raw = data.path.empty() ? synth_generate(data.synthetic_hours, data.synthetic_seed)
                                          : ingest_file(data.path);
  return interpolate_missing(raw);
}

DecompositionResult decompose_series(std::span<const double> series, const DecompositionConfig& config,
                                     std::size_t jobs) {
  CeemdanOptions o;
  o.noise_ratio = config.noise_ratio;
  o.trials = config.trials;
  o.seed = config.seed;
  o.jobs = jobs;
  o.sift = config.sift;
  return ceemdan(series, o);
}

const HorizonData& PreparedData::at(std::size_t horizon) const {
  for (const auto& h : horizons) {
    if (h.horizon == horizon) return h;
  }
  throw ContractError("no prepared data for horizon " + std::to_string(horizon));
}

SplitRanges sample_split(const TimeSeriesFrame& frame, const DataConfig& data, std::size_t horizon) {
  const std::size_t lead = data.history + horizon - 1;
  if (frame.rows() <= lead) throw ContractError("series too short for history and horizon");
  const std::size_t samples = frame.rows() - lead;
  if (data.validation_start && data.test_start) {
    std::span<const Timestamp> targets(frame.timestamps.data() + lead, samples);
    return split_at_dates(targets, *data.validation_start, *data.test_start);
  }
  return split_chronological(samples, data.split);
}

namespace {

models::TargetScale target_scale(const ScalerParams& p) {
  const auto k = p.index(schema::kTarget);
  return {p.mean[k], p.degenerate[k] ? 1.0 : p.std[k]};
}

DatasetSplit windows_for(const TimeSeriesFrame& frame, const SplitRanges& ranges, RowRange fit_rows,
                         std::size_t history, std::size_t horizon, models::TargetScale& scale) {
  const auto scaler = fit_scaler(frame, fit_rows);
  const auto encoders = fit_encoders(frame, fit_rows);
  scale = target_scale(scaler);
  const auto standardized = apply_scaler(frame, scaler);
  const auto data = make_windows(standardized, encoders, frame.column(schema::kTarget).values, history, horizon);
  return split_dataset(data, ranges);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData out;
  out.frame = load_frame(config.data);
  const std::size_t history = config.data.history;

  if (config.needs_decomposition()) {
    const auto& pm = out.frame.column(schema::kTarget).values;
    if (config.decomposition.mode == AttachMode::FullSeries) {
      out.decomposition = decompose_series(pm, config.decomposition, config.jobs);
      out.decomposed_frame = attach_decomposition(out.frame, *out.decomposition, AttachMode::FullSeries);
    } else {
      // Leading rows up to the last training target of the shortest horizon.
      const auto h_min = *std::min_element(config.data.horizons.begin(), config.data.horizons.end());
      const auto ranges = sample_split(out.frame, config.data, h_min);
      const std::size_t covered = ranges.train.end + history + h_min - 1;
      out.decomposition = decompose_series(std::span(pm).first(covered), config.decomposition, config.jobs);
      RefitOptions refit;
      refit.lookback = config.decomposition.lookback;
      refit.decompose = [&config](std::span<const double> s) { return decompose_series(s, config.decomposition, 1); };
      out.decomposed_frame =
          attach_decomposition(out.frame, *out.decomposition, AttachMode::TrainOnlyRefit, &refit);
    }
    out.reconstruction_error = reconstruction_error(*out.decomposition,
                                                    std::span(pm).first(out.decomposition->length()));
  }

  for (auto h : config.data.horizons) {
    HorizonData hd;
    hd.horizon = h;
    hd.ranges = sample_split(out.frame, config.data, h);
    hd.fit_rows = {0, hd.ranges.train.end + history + h - 1};
    hd.plain = windows_for(out.frame, hd.ranges, hd.fit_rows, history, h, hd.scale);
    if (out.decomposed_frame) {
      hd.decomposed = windows_for(*out.decomposed_frame, hd.ranges, hd.fit_rows, history, h, hd.decomposed_scale);
    }
    out.horizons.push_back(std::move(hd));
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t base, const std::string& model, std::size_t horizon, std::size_t replicate) {
  const auto key = model + "/h" + std::to_string(horizon) + "/r" + std::to_string(replicate);
  return child_seed(base, hash_name(key));
}

CellResult run_cell(const PreparedData& data, const ExperimentConfig& config, const std::string& model,
                    std::size_t horizon, std::size_t replicate) {
  CellResult cell;
  cell.model = model;
  cell.horizon = horizon;
  cell.replicate = replicate;
  cell.seed = cell_seed(config.seed, model, horizon, replicate);
  try {
    const auto& hd = data.at(horizon);
    const bool decomposed = uses_decomposition(model);
    if (decomposed && !hd.decomposed) throw ContractError("decomposition channels were not prepared");
    const auto& split = decomposed ? *hd.decomposed : hd.plain;
    const auto& scale = decomposed ? hd.decomposed_scale : hd.scale;
    const auto kind = base_model(model);

    std::vector<double> predicted;
    if (kind == models::ModelKind::LR) {
      models::LinearRegression lr;
      lr.fit(split.train, config.model.lr_ridge);
      predicted = lr.predict(split.test);
    } else {
      auto net = models::make_forecaster(kind, models::layout_of(split.train), config.model, child_seed(cell.seed, 1));
      auto train = config.train;
      train.seed = child_seed(cell.seed, 2);
      const auto result = training::train_model(*net, scale, split.train, split.validation, train);
      cell.history = result.history;
      cell.guard_warnings = result.guard_warnings;
      predicted = models::predict_all(*net, split.test, scale);
    }
    for (double v : predicted) {
      if (!std::isfinite(v)) throw DivergenceError("non-finite test prediction", 0, 0);
    }
    cell.trace = {model, horizon, replicate, split.test.target_time, split.test.y, std::move(predicted)};
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream* log) {
  const auto data = prepare_data(config);
  if (log) {
    *log << "data: " << data.frame.rows() << " rows";
    if (data.decomposition) {
      *log << ", " << data.decomposition->imf_count() << " IMFs (" << attach_mode_name(config.decomposition.mode)
           << ")";
    }
    *log << '\n';
  }

  struct Key {
    std::string model;
    std::size_t horizon;
    std::size_t replicate;
  };
  std::vector<Key> keys;
  for (const auto& m : config.models) {
    for (auto h : config.data.horizons) {
      for (std::size_t r = 0; r < config.robustness_runs; ++r) keys.push_back({m, h, r});
    }
  }

  RunOutcome out;
  out.cells.resize(keys.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      out.cells[i] = run_cell(data, config, keys[i].model, keys[i].horizon, keys[i].replicate);
      if (log) {
        std::lock_guard lock(log_mutex);
        const auto& c = out.cells[i];
        *log << c.model << " h=" << c.horizon << " r=" << c.replicate << ": "
             << (c.error ? "FAILED: " + *c.error : "ok") << '\n';
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, keys.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<report::Trace> traces;
  std::vector<report::Failure> failures;
  std::size_t guard_warnings = 0;
  for (const auto& c : out.cells) {
    guard_warnings += c.guard_warnings;
    if (c.error) {
      failures.push_back({c.model, c.horizon, c.replicate, *c.error});
    } else {
      traces.push_back(c.trace);
    }
  }
  out.report = report::build_report(traces, config.models, config.data.horizons, config.proposed, failures,
                                    config.train.guard);

  ordered_json meta;
  std::ostringstream ini;
  write_config(ini, config, false);
  meta["config"] = ini.str();
  meta["data"] = {{"source", config.data.path.empty() ? "synthetic" : config.data.path},
                  {"rows", data.frame.rows()},
                  {"first_timestamp", format_timestamp(data.frame.timestamps.front())},
                  {"warnings", data.frame.warnings.size()}};
  if (data.decomposition) {
    meta["decomposition"] = {{"method", data.decomposition->meta.method},
                             {"mode", attach_mode_name(config.decomposition.mode)},
                             {"trials", data.decomposition->meta.trials},
                             {"noise_ratio", data.decomposition->meta.noise_ratio},
                             {"noise_schedule", "constant across stages"},
                             {"seed", data.decomposition->meta.seed},
                             {"imf_count", data.decomposition->imf_count()},
                             {"rows_covered", data.decomposition->length()},
                             {"reconstruction_error", data.reconstruction_error}};
  }
  auto& splits = meta["splits"] = ordered_json::array();
  for (const auto& h : data.horizons) {
    splits.push_back({{"horizon", h.horizon},
                      {"train", h.plain.train.size()},
                      {"validation", h.plain.validation.size()},
                      {"test", h.plain.test.size()},
                      {"scaler_rows", h.fit_rows.size()}});
  }
  meta["guard_warnings"] = guard_warnings;
  meta["notes"] = {
      "validation split is recorded in the histories only; parameters come from the final epoch",
      std::string("LSTM/GRU output head: ") + (config.model.literal_sigmoid_head ? "sigmoid" : "identity"),
      "BPNN activations: sigmoid hidden layer, identity output",
      "multi-horizon strategy: one model per horizon",
      "pooled DM matrix concatenates horizons and truncates the variance at the largest horizon",
  };
  out.metadata_json = meta.dump();
  return out;
}

namespace {

std::ofstream open_file(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void write_run(const RunOutcome& outcome, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  report::write_report_files(dir, outcome.report, outcome.metadata_json);
  {
    auto out = open_file(dir / "run_config.ini");
    write_config(out, config);
  }
  std::filesystem::create_directories(dir / "histories");
  if (config.write_predictions) std::filesystem::create_directories(dir / "predictions");
  for (const auto& c : outcome.cells) {
    if (c.error) continue;
    const auto name = report::trace_filename(c.model, c.horizon, c.replicate);
    if (!c.history.empty()) {
      auto out = open_file(dir / "histories" / name);
      training::write_history(out, c.history);
    }
    if (config.write_predictions) {
      auto out = open_file(dir / "predictions" / name);
      report::write_trace(out, c.trace);
    }
  }
}

DecomposeOutcome run_decompose(const ExperimentConfig& config, const std::filesystem::path& dir) {
  config.validate();
  const auto frame = load_frame(config.data);
  const auto& pm = frame.column(schema::kTarget).values;
  DecomposeOutcome out;
  out.result = decompose_series(pm, config.decomposition, config.jobs);
  out.reconstruction_error = reconstruction_error(out.result, pm);

  std::filesystem::create_directories(dir);
  {
    auto f = open_file(dir / "decomposition.csv");
    for (std::size_t j = 0; j < out.result.imf_count(); ++j) f << "imf_" << j + 1 << ',';
    f << "residue\n";
    for (std::size_t t = 0; t < out.result.length(); ++t) {
      for (const auto& imf : out.result.imfs) f << format_double(imf[t]) << ',';
      f << format_double(out.result.residue[t]) << '\n';
    }
  }
  {
    ordered_json meta{{"method", out.result.meta.method},
                      {"mode", "full_series"},
                      {"trials", out.result.meta.trials},
                      {"noise_ratio", out.result.meta.noise_ratio},
                      {"noise_schedule", "constant across stages"},
                      {"seed", out.result.meta.seed},
                      {"length", out.result.length()},
                      {"imf_count", out.result.imf_count()},
                      {"reconstruction_error", out.reconstruction_error}};
    auto f = open_file(dir / "decomposition.json");
    f << meta.dump(2) << '\n';
  }
  write_frame_file((dir / "data_with_imfs.csv").string(),
                   attach_decomposition(frame, out.result, AttachMode::FullSeries));
  return out;
}

report::Report regenerate_report(const std::filesystem::path& dir) {
  const auto config = load_config((dir / "run_config.ini").string());
  if (!std::filesystem::is_directory(dir / "predictions")) {
    throw ContractError(dir.string() + " has no predictions directory; rerun with predictions enabled");
  }
  const auto traces = report::read_traces(dir / "predictions");
  const auto failures = report::read_failures(dir / "failures.csv");
  auto r = report::build_report(traces, config.models, config.data.horizons, config.proposed, failures,
                                config.train.guard);
  std::string metadata = "{}";
  std::ifstream previous(dir / "report.json");
  if (previous) {
    const auto doc = ordered_json::parse(previous, nullptr, false);
    if (!doc.is_discarded() && doc.contains("metadata")) metadata = doc["metadata"].dump();
  }
  report::write_report_files(dir, r, metadata);
  return r;
}

}  // namespace pmcast
