#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "pmcast/config.hpp"
#include "pmcast/experiment.hpp"
#include "pmcast/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  std::size_t hours = 2000;
};

pmcast::ExperimentConfig load(const Options& o) {
  auto c = o.config.empty() ? pmcast::ExperimentConfig{} : pmcast::load_config(o.config);
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

int cmd_synth(const Options& o) {
  const auto seed = o.seed.value_or(pmcast::DataConfig{}.synthetic_seed);
  fs::path target = o.out.empty() ? fs::path("synthetic.csv") : fs::path(o.out);
  if (target.extension() != ".csv") {
    fs::create_directories(target);
    target /= "synthetic.csv";
  } else if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  pmcast::write_frame_file(target.string(), pmcast::synth_generate(o.hours, seed));
  std::cout << "wrote " << o.hours << " rows to " << target.string() << '\n';
  return 0;
}

int cmd_decompose(const Options& o) {
  auto c = load(o);
  if (o.seed) c.decomposition.seed = *o.seed;
  const auto r = pmcast::run_decompose(c, c.output_dir);
  std::cout << r.result.imf_count() << " IMFs + residue over " << r.result.length()
            << " points, reconstruction error " << r.reconstruction_error << ", written to " << c.output_dir << '\n';
  return 0;
}

int cmd_run(const Options& o) {
  auto c = load(o);
  if (o.seed) c.seed = *o.seed;
  const auto outcome = pmcast::run_experiment(c, &std::cerr);
  pmcast::write_run(outcome, c, c.output_dir);
  std::ifstream table(fs::path(c.output_dir) / "comparison.csv");
  std::cout << table.rdbuf();
  if (!outcome.ok()) {
    std::cerr << outcome.report.failures.size() << " cell(s) failed; see failures.csv\n";
    return 1;
  }
  return 0;
}

int cmd_report(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path(pmcast::ExperimentConfig{}.output_dir) : fs::path(o.out);
  const auto r = pmcast::regenerate_report(dir);
  std::ifstream table(dir / "comparison.csv");
  std::cout << table.rdbuf();
  for (const auto& m : r.dm) {
    std::cout << '\n';
    pmcast::report::write_dm_csv(std::cout, m);
  }
  return r.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposition-augmented hourly PM2.5 forecasting experiments"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub, bool config) {
    if (config) sub->add_option("--config", o.config, "INI experiment configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "base seed override");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--jobs", o.jobs, "worker threads (1 = deterministic single-threaded mode)")
        ->check(CLI::PositiveNumber);
  };
  auto* synth = app.add_subcommand("synth", "write a synthetic hourly data file");
  common(synth, false);
  synth->add_option("--hours", o.hours, "number of hourly rows")->check(CLI::Range(48, 10000000));
  auto* decompose = app.add_subcommand("decompose", "CEEMDAN decomposition of the PM2.5 series");
  common(decompose, true);
  auto* run = app.add_subcommand("run", "train and evaluate every configured model");
  common(run, true);
  auto* rep = app.add_subcommand("report", "rebuild the tables of a finished run from its traces");
  rep->add_option("--out", o.out, "run directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) return cmd_synth(o);
    if (decompose->parsed()) return cmd_decompose(o);
    if (run->parsed()) return cmd_run(o);
    if (rep->parsed()) return cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
