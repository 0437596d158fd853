#include "pmcast/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "pmcast/errors.hpp"

namespace pmcast {

namespace pt = boost::property_tree;

namespace {

constexpr std::string_view kCeemdanPrefix = "CEEMDAN-";

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const auto s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParameterError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& key) {
  const auto s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParameterError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<std::size_t>(item, key));
  return out;
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
  return out.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto sz = [](auto field) {
      return Setter([field](ExperimentConfig& c, const std::string& v, const std::string& k) {
        field(c) = parse_number<std::size_t>(v, k);
      });
    };
    auto u64 = [](auto field) {
      return Setter([field](ExperimentConfig& c, const std::string& v, const std::string& k) {
        field(c) = parse_number<std::uint64_t>(v, k);
      });
    };
    auto real = [](auto field) {
      return Setter([field](ExperimentConfig& c, const std::string& v, const std::string& k) {
        field(c) = parse_number<double>(v, k);
      });
    };
    auto flag = [](auto field) {
      return Setter(
          [field](ExperimentConfig& c, const std::string& v, const std::string& k) { field(c) = parse_bool(v, k); });
    };

    t["data.source"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      const auto s = trim(v);
      c.data.path = s == "synthetic" ? std::string() : s;
    };
    t["data.synthetic_hours"] = sz([](ExperimentConfig& c) -> auto& { return c.data.synthetic_hours; });
    t["data.synthetic_seed"] = u64([](ExperimentConfig& c) -> auto& { return c.data.synthetic_seed; });
    t["data.history"] = sz([](ExperimentConfig& c) -> auto& { return c.data.history; });
    t["data.horizons"] = [](ExperimentConfig& c, const std::string& v, const std::string& k) {
      c.data.horizons = parse_sizes(v, k);
    };
    t["data.train_fraction"] = real([](ExperimentConfig& c) -> auto& { return c.data.split.train; });
    t["data.validation_fraction"] = real([](ExperimentConfig& c) -> auto& { return c.data.split.validation; });
    t["data.test_fraction"] = real([](ExperimentConfig& c) -> auto& { return c.data.split.test; });
    t["data.validation_start"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.data.validation_start = parse_timestamp(trim(v));
    };
    t["data.test_start"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.data.test_start = parse_timestamp(trim(v));
    };

    t["decomposition.noise_ratio"] = real([](ExperimentConfig& c) -> auto& { return c.decomposition.noise_ratio; });
    t["decomposition.trials"] = [](ExperimentConfig& c, const std::string& v, const std::string& k) {
      c.decomposition.trials = parse_number<int>(v, k);
    };
    t["decomposition.seed"] = u64([](ExperimentConfig& c) -> auto& { return c.decomposition.seed; });
    t["decomposition.mode"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.decomposition.mode = parse_attach_mode(trim(v));
    };
    t["decomposition.lookback"] = sz([](ExperimentConfig& c) -> auto& { return c.decomposition.lookback; });
    t["decomposition.max_sift_iterations"] =
        sz([](ExperimentConfig& c) -> auto& { return c.decomposition.sift.max_sift_iterations; });
    t["decomposition.sd_threshold"] = real([](ExperimentConfig& c) -> auto& { return c.decomposition.sift.sd_threshold; });
    t["decomposition.max_imfs"] = [](ExperimentConfig& c, const std::string& v, const std::string& k) {
      const auto s = trim(v);
      if (s.empty() || s == "none") {
        c.decomposition.sift.max_imfs.reset();
      } else {
        c.decomposition.sift.max_imfs = parse_number<std::size_t>(s, k);
      }
    };

    t["experiment.models"] = [](ExperimentConfig& c, const std::string& v, const std::string&) {
      c.models = split_list(v);
    };
    t["experiment.proposed"] = [](ExperimentConfig& c, const std::string& v, const std::string&) { c.proposed = trim(v); };
    t["experiment.robustness_runs"] = sz([](ExperimentConfig& c) -> auto& { return c.robustness_runs; });
    t["experiment.seed"] = u64([](ExperimentConfig& c) -> auto& { return c.seed; });
    t["experiment.jobs"] = sz([](ExperimentConfig& c) -> auto& { return c.jobs; });

    t["train.epochs"] = sz([](ExperimentConfig& c) -> auto& { return c.train.epochs; });
    t["train.batch_size"] = sz([](ExperimentConfig& c) -> auto& { return c.train.batch_size; });
    t["train.learning_rate"] = real([](ExperimentConfig& c) -> auto& { return c.train.learning_rate; });
    t["train.shuffle"] = flag([](ExperimentConfig& c) -> auto& { return c.train.shuffle; });
    t["train.guard"] = real([](ExperimentConfig& c) -> auto& { return c.train.guard; });
    t["train.optimizer"] = [](ExperimentConfig&, const std::string& v, const std::string&) {
      if (trim(v) != "adam") throw ParameterError("only the adam optimizer is available");
    };
    t["train.loss"] = [](ExperimentConfig&, const std::string& v, const std::string&) {
      if (trim(v) != "mape") throw ParameterError("only the mape loss is available");
    };

    t["model.dilations"] = [](ExperimentConfig& c, const std::string& v, const std::string& k) {
      c.model.dilations = parse_sizes(v, k);
    };
    t["model.channels"] = [](ExperimentConfig& c, const std::string& v, const std::string& k) {
      c.model.channels = parse_sizes(v, k);
    };
    t["model.kernel_size"] = sz([](ExperimentConfig& c) -> auto& { return c.model.kernel_size; });
    for (const char* column : {"month", "day_of_week", "hour", "weather"}) {
      const std::string name = column;
      t["model.embedding_" + name] = [name](ExperimentConfig& c, const std::string& v, const std::string& k) {
        c.model.embedding_sizes[name] = parse_number<std::size_t>(v, k);
      };
    }
    t["model.bpnn_hidden"] = sz([](ExperimentConfig& c) -> auto& { return c.model.bpnn_hidden; });
    t["model.rnn_hidden"] = sz([](ExperimentConfig& c) -> auto& { return c.model.rnn_hidden; });
    t["model.literal_sigmoid_head"] = flag([](ExperimentConfig& c) -> auto& { return c.model.literal_sigmoid_head; });
    t["model.lr_ridge"] = real([](ExperimentConfig& c) -> auto& { return c.model.lr_ridge; });

    t["output.dir"] = [](ExperimentConfig& c, const std::string& v, const std::string&) { c.output_dir = trim(v); };
    t["output.predictions"] = flag([](ExperimentConfig& c) -> auto& { return c.write_predictions; });
    return t;
  }();
  return table;
}

}  // namespace

bool uses_decomposition(const std::string& name) { return name.starts_with(kCeemdanPrefix); }

models::ModelKind base_model(const std::string& name) {
  return models::parse_model_kind(uses_decomposition(name) ? std::string_view(name).substr(kCeemdanPrefix.size())
                                                           : std::string_view(name));
}

bool ExperimentConfig::needs_decomposition() const {
  for (const auto& m : models) {
    if (uses_decomposition(m)) return true;
  }
  return false;
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ParameterError("config: at least one model is required");
  std::set<std::string> seen;
  for (const auto& m : models) {
    base_model(m);
    if (!seen.insert(m).second) throw ParameterError("config: model '" + m + "' listed twice");
  }
  if (data.horizons.empty()) throw ParameterError("config: at least one horizon is required");
  std::set<std::size_t> hs;
  for (auto h : data.horizons) {
    if (h < 1) throw ParameterError("config: horizons must be >= 1");
    if (!hs.insert(h).second) throw ParameterError("config: horizon " + std::to_string(h) + " listed twice");
  }
  if (data.history < 1) throw ParameterError("config: history must be >= 1");
  if (data.validation_start.has_value() != data.test_start.has_value()) {
    throw ParameterError("config: validation_start and test_start must be given together");
  }
  if (robustness_runs < 1) throw ParameterError("config: robustness_runs must be >= 1");
  if (jobs < 1) throw ParameterError("config: jobs must be >= 1");
  if (decomposition.trials < 1) throw ParameterError("config: decomposition trials must be >= 1");
  if (decomposition.noise_ratio < 0.0) throw ParameterError("config: noise_ratio must be >= 0");
  decomposition.sift.validate();
  train.validate();
  model.validate();
  if (!data.path.empty() && !std::ifstream(data.path)) throw ParameterError("config: cannot open data file " + data.path);
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig config;
  const auto& table = setters();
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ParameterError(source + ": key '" + section + "' outside a section");
    }
    static const std::set<std::string, std::less<>> sections{"data", "decomposition", "experiment", "train", "model",
                                                             "output"};
    if (!sections.contains(section)) throw ParameterError(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : entries) {
      const auto full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) throw ParameterError(source + ": unknown key [" + section + "] " + key);
      try {
        it->second(config, value.data(), full);
      } catch (const std::exception& e) {
        throw ParameterError(source + ": " + e.what());
      }
    }
  }
  try {
    config.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(source + ": " + e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file " + path);
  return parse_config(in, path);
}

void write_config(std::ostream& out, const ExperimentConfig& c, bool runtime) {
  out << "[data]\n"
      << "source = " << (c.data.path.empty() ? "synthetic" : c.data.path) << '\n'
      << "synthetic_hours = " << c.data.synthetic_hours << '\n'
      << "synthetic_seed = " << c.data.synthetic_seed << '\n'
      << "history = " << c.data.history << '\n'
      << "horizons = " << join(c.data.horizons) << '\n'
      << "train_fraction = " << format_double(c.data.split.train) << '\n'
      << "validation_fraction = " << format_double(c.data.split.validation) << '\n'
      << "test_fraction = " << format_double(c.data.split.test) << '\n';
  if (c.data.validation_start) out << "validation_start = " << format_timestamp(*c.data.validation_start) << '\n';
  if (c.data.test_start) out << "test_start = " << format_timestamp(*c.data.test_start) << '\n';
  out << "\n[decomposition]\n"
      << "noise_ratio = " << format_double(c.decomposition.noise_ratio) << '\n'
      << "trials = " << c.decomposition.trials << '\n'
      << "seed = " << c.decomposition.seed << '\n'
      << "mode = " << attach_mode_name(c.decomposition.mode) << '\n'
      << "lookback = " << c.decomposition.lookback << '\n'
      << "max_sift_iterations = " << c.decomposition.sift.max_sift_iterations << '\n'
      << "sd_threshold = " << format_double(c.decomposition.sift.sd_threshold) << '\n'
      << "max_imfs = "
      << (c.decomposition.sift.max_imfs ? std::to_string(*c.decomposition.sift.max_imfs) : std::string("none")) << '\n'
      << "\n[experiment]\n"
      << "models = " << join(c.models) << '\n'
      << "proposed = " << c.proposed << '\n'
      << "robustness_runs = " << c.robustness_runs << '\n'
      << "seed = " << c.seed << '\n';
  if (runtime) out << "jobs = " << c.jobs << '\n';
  out << "\n[train]\n"
      << "epochs = " << c.train.epochs << '\n'
      << "batch_size = " << c.train.batch_size << '\n'
      << "learning_rate = " << format_double(c.train.learning_rate) << '\n'
      << "optimizer = adam\n"
      << "loss = mape\n"
      << "shuffle = " << (c.train.shuffle ? "true" : "false") << '\n'
      << "guard = " << format_double(c.train.guard) << '\n'
      << "\n[model]\n"
      << "dilations = " << join(c.model.dilations) << '\n'
      << "channels = " << join(c.model.channels) << '\n'
      << "kernel_size = " << c.model.kernel_size << '\n';
  for (const auto& [name, size] : c.model.embedding_sizes) out << "embedding_" << name << " = " << size << '\n';
  out << "bpnn_hidden = " << c.model.bpnn_hidden << '\n'
      << "rnn_hidden = " << c.model.rnn_hidden << '\n'
      << "literal_sigmoid_head = " << (c.model.literal_sigmoid_head ? "true" : "false") << '\n'
      << "lr_ridge = " << format_double(c.model.lr_ridge) << '\n'
      << "\n[output]\n";
  if (runtime) out << "dir = " << c.output_dir << '\n';
  out << "predictions = " << (c.write_predictions ? "true" : "false") << '\n';
}

}  // namespace pmcast
