#include "pmcast/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pmcast/errors.hpp"

namespace pmcast {

TimeSeriesFrame interpolate_missing(const TimeSeriesFrame& frame) {
  TimeSeriesFrame out = frame;
  for (auto& col : out.continuous) {
    const std::size_t n = col.values.size();
    std::vector<std::size_t> observed;
    for (std::size_t i = 0; i < n; ++i) {
      if (!col.missing[i]) observed.push_back(i);
    }
    if (observed.empty()) throw ContractError("interpolate_missing: column '" + col.name + "' has no observed value");
    for (std::size_t i = 0; i < observed.front(); ++i) col.values[i] = col.values[observed.front()];
    for (std::size_t i = observed.back() + 1; i < n; ++i) col.values[i] = col.values[observed.back()];
    for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
      const std::size_t a = observed[k];
      const std::size_t b = observed[k + 1];
      const double va = col.values[a];
      const double vb = col.values[b];
      for (std::size_t i = a + 1; i < b; ++i) {
        const double w = static_cast<double>(i - a) / static_cast<double>(b - a);
        col.values[i] = va + w * (vb - va);
      }
    }
    std::fill(col.missing.begin(), col.missing.end(), 0);
  }
  for (auto& col : out.categorical) {
    const std::size_t n = col.labels.size();
    std::size_t first = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!col.missing[i]) {
        first = i;
        break;
      }
    }
    if (first == n) throw ContractError("interpolate_missing: column '" + col.name + "' has no observed value");
    for (std::size_t i = 0; i < first; ++i) col.labels[i] = col.labels[first];
    for (std::size_t i = first + 1; i < n; ++i) {
      if (col.missing[i]) col.labels[i] = col.labels[i - 1];
    }
    std::fill(col.missing.begin(), col.missing.end(), 0);
  }
  return out;
}

std::pair<double, double> wind_to_components(double speed, double direction_deg) {
  if (speed < 0.0) throw ParameterError("wind_to_components: negative speed");
  if (!(direction_deg >= 0.0 && direction_deg < 360.0)) {
    throw ParameterError("wind_to_components: direction must be in [0, 360)");
  }
  const double rad = direction_deg * std::numbers::pi / 180.0;
  return {-speed * std::sin(rad), -speed * std::cos(rad)};
}

std::pair<double, double> components_to_wind(double wind_x, double wind_y) {
  const double speed = std::hypot(wind_x, wind_y);
  if (speed == 0.0) return {0.0, 0.0};
  double dir = std::atan2(-wind_x, -wind_y) * 180.0 / std::numbers::pi;
  if (dir < 0.0) dir += 360.0;
  if (dir >= 360.0) dir -= 360.0;
  return {speed, dir};
}

std::size_t ScalerParams::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw SchemaError("scaler has no column '" + std::string(name) + "'");
}

double ScalerParams::apply(std::size_t column, double x) const {
  if (degenerate[column]) return 0.0;
  return (x - mean[column]) / std[column];
}

double ScalerParams::invert(std::size_t column, double z) const { return mean[column] + std[column] * z; }

ScalerParams fit_scaler(const TimeSeriesFrame& frame, RowRange train) {
  if (train.empty() || train.end > frame.rows()) throw ContractError("fit_scaler: empty or out-of-range training rows");
  ScalerParams p;
  const double n = static_cast<double>(train.size());
  for (const auto& col : frame.continuous) {
    double mean = 0.0;
    for (std::size_t i = train.begin; i < train.end; ++i) mean += col.values[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = train.begin; i < train.end; ++i) ss += (col.values[i] - mean) * (col.values[i] - mean);
    const double sd = std::sqrt(ss / n);
    p.names.push_back(col.name);
    p.mean.push_back(mean);
    p.std.push_back(sd);
    p.degenerate.push_back(sd == 0.0 ? 1 : 0);
  }
  return p;
}

TimeSeriesFrame apply_scaler(const TimeSeriesFrame& frame, const ScalerParams& params) {
  TimeSeriesFrame out = frame;
  for (auto& col : out.continuous) {
    const auto k = params.index(col.name);
    for (auto& v : col.values) v = params.apply(k, v);
  }
  return out;
}

TimeSeriesFrame invert_scaler(const TimeSeriesFrame& frame, const ScalerParams& params) {
  TimeSeriesFrame out = frame;
  for (auto& col : out.continuous) {
    const auto k = params.index(col.name);
    for (auto& v : col.values) v = params.invert(k, v);
  }
  return out;
}

LabelEncoder LabelEncoder::fit(std::span<const std::string> training_labels,
                               std::span<const std::string_view> canonical, bool open) {
  LabelEncoder enc;
  enc.open_ = open;
  for (auto c : canonical) enc.vocabulary_.emplace_back(c);
  for (const auto& label : training_labels) {
    if (label.empty()) continue;
    if (std::find(enc.vocabulary_.begin(), enc.vocabulary_.end(), label) == enc.vocabulary_.end()) {
      enc.vocabulary_.push_back(label);
    }
  }
  return enc;
}

int LabelEncoder::encode(std::string_view label) const {
  const auto it = std::find(vocabulary_.begin(), vocabulary_.end(), label);
  return static_cast<int>(it - vocabulary_.begin());
}

std::vector<int> LabelEncoder::encode(std::span<const std::string> labels) const {
  std::vector<int> codes;
  codes.reserve(labels.size());
  for (const auto& l : labels) codes.push_back(encode(l));
  return codes;
}

std::string LabelEncoder::decode(int code) const {
  if (code >= 0 && static_cast<std::size_t>(code) < vocabulary_.size()) return vocabulary_[static_cast<std::size_t>(code)];
  if (open_ && static_cast<std::size_t>(code) == vocabulary_.size()) return std::string(kUnknownLabel);
  throw IndexError("decode: code " + std::to_string(code) + " outside vocabulary");
}

std::vector<double> LabelEncoder::onehot(std::string_view label) const {
  std::vector<double> v(vocabulary_.size(), 0.0);
  const auto code = static_cast<std::size_t>(encode(label));
  if (code < v.size()) v[code] = 1.0;
  return v;
}

std::vector<LabelEncoder> fit_encoders(const TimeSeriesFrame& frame, RowRange train) {
  if (train.empty() || train.end > frame.rows()) throw ContractError("fit_encoders: empty or out-of-range training rows");
  std::vector<LabelEncoder> encoders;
  for (const auto& col : frame.categorical) {
    std::span<const std::string> rows(col.labels.data() + train.begin, train.size());
    if (col.name == "weather") {
      encoders.push_back(LabelEncoder::fit(rows, schema::kWeather, true));
    } else if (col.name == "month") {
      encoders.push_back(LabelEncoder::fit({}, schema::kMonths, false));
    } else if (col.name == "day_of_week") {
      encoders.push_back(LabelEncoder::fit({}, schema::kDays, false));
    } else if (col.name == "hour") {
      std::vector<std::string> hours;
      for (unsigned h = 0; h < 24; ++h) hours.push_back(schema::hour_label(h));
      std::vector<std::string_view> views(hours.begin(), hours.end());
      encoders.push_back(LabelEncoder::fit({}, views, false));
    } else {
      encoders.push_back(LabelEncoder::fit(rows, {}, true));
    }
  }
  return encoders;
}

std::string_view attach_mode_name(AttachMode mode) {
  return mode == AttachMode::FullSeries ? "full_series" : "train_only_refit";
}

AttachMode parse_attach_mode(std::string_view name) {
  if (name == "full_series") return AttachMode::FullSeries;
  if (name == "train_only_refit") return AttachMode::TrainOnlyRefit;
  throw ParameterError("unknown decomposition mode '" + std::string(name) + "'");
}

namespace {

// Last sample of each component, folded to `imfs` IMFs: surplus
// low-frequency IMFs join the residue, absent ones are zero.
std::vector<double> folded_tail(const DecompositionResult& r, std::size_t imfs) {
  std::vector<double> out(imfs + 1, 0.0);
  const std::size_t last = r.length() - 1;
  for (std::size_t j = 0; j < r.imf_count(); ++j) {
    if (j < imfs) {
      out[j] = r.imfs[j][last];
    } else {
      out[imfs] += r.imfs[j][last];
    }
  }
  out[imfs] += r.residue[last];
  return out;
}

}  // namespace

TimeSeriesFrame attach_decomposition(const TimeSeriesFrame& frame, const DecompositionResult& result,
                                     AttachMode mode, const RefitOptions* refit, std::string_view source_column) {
  const std::size_t rows = frame.rows();
  const std::size_t covered = result.length();
  const std::size_t imfs = result.imf_count();
  if (mode == AttachMode::FullSeries && covered != rows) {
    throw ShapeError("attach_decomposition: decomposition covers " + std::to_string(covered) + " rows, frame has " +
                     std::to_string(rows));
  }
  if (mode == AttachMode::TrainOnlyRefit) {
    if (covered == 0 || covered > rows) {
      throw ShapeError("attach_decomposition: training decomposition of " + std::to_string(covered) +
                       " rows does not fit a frame of " + std::to_string(rows));
    }
    if (covered < rows && (refit == nullptr || !refit->decompose)) {
      throw ContractError("attach_decomposition: train_only_refit needs a refit decomposer");
    }
  }

  TimeSeriesFrame out = frame;
  std::erase_if(out.continuous, [](const auto& c) { return schema::is_decomposition_column(c.name); });
  std::vector<NumericColumn> cols(imfs + 1);
  for (std::size_t j = 0; j <= imfs; ++j) {
    cols[j].name = j < imfs ? "imf_" + std::to_string(j + 1) : "residue";
    cols[j].values.assign(rows, 0.0);
    cols[j].missing.assign(rows, 0);
    const auto& src = j < imfs ? result.imfs[j] : result.residue;
    std::copy(src.begin(), src.end(), cols[j].values.begin());
  }

  if (mode == AttachMode::TrainOnlyRefit && covered < rows) {
    const auto& source = frame.column(source_column).values;
    for (std::size_t t = covered; t < rows; ++t) {
      const std::size_t begin = refit->lookback == 0 || t + 1 <= refit->lookback ? 0 : t + 1 - refit->lookback;
      const auto partial = refit->decompose(std::span<const double>(source.data() + begin, t + 1 - begin));
      const auto tail = folded_tail(partial, imfs);
      for (std::size_t j = 0; j <= imfs; ++j) cols[j].values[t] = tail[j];
    }
  }
  for (auto& c : cols) out.continuous.push_back(std::move(c));
  return out;
}

SupervisedDataset SupervisedDataset::subset(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ContractError("subset out of range");
  SupervisedDataset s;
  s.history = history;
  s.horizon = horizon;
  s.num_names = num_names;
  s.cat_names = cat_names;
  s.cat_cardinality = cat_cardinality;
  s.cat_vocabulary = cat_vocabulary;
  const std::size_t num_stride = history * num_channels();
  const std::size_t cat_stride = history * cat_channels();
  s.x_num.assign(x_num.begin() + static_cast<std::ptrdiff_t>(begin * num_stride),
                 x_num.begin() + static_cast<std::ptrdiff_t>(end * num_stride));
  s.x_cat.assign(x_cat.begin() + static_cast<std::ptrdiff_t>(begin * cat_stride),
                 x_cat.begin() + static_cast<std::ptrdiff_t>(end * cat_stride));
  s.y.assign(y.begin() + begin, y.begin() + end);
  s.target_time.assign(target_time.begin() + begin, target_time.begin() + end);
  s.first_row.assign(first_row.begin() + begin, first_row.begin() + end);
  s.target_row.assign(target_row.begin() + begin, target_row.begin() + end);
  return s;
}

SupervisedDataset make_windows(const TimeSeriesFrame& features, std::span<const LabelEncoder> encoders,
                               std::span<const double> target, std::size_t history, std::size_t horizon) {
  const std::size_t n = features.rows();
  if (history == 0 || horizon == 0) throw ParameterError("make_windows: history and horizon must be >= 1");
  if (target.size() != n) throw ShapeError("make_windows: target length differs from frame");
  if (encoders.size() != features.categorical.size()) {
    throw ShapeError("make_windows: one encoder per categorical column required");
  }
  if (n < history + horizon) {
    throw ContractError("make_windows: " + std::to_string(n) + " rows are too few for history " +
                        std::to_string(history) + " and horizon " + std::to_string(horizon));
  }
  SupervisedDataset d;
  d.history = history;
  d.horizon = horizon;
  for (const auto& c : features.continuous) d.num_names.push_back(c.name);
  for (std::size_t k = 0; k < features.categorical.size(); ++k) {
    d.cat_names.push_back(features.categorical[k].name);
    d.cat_cardinality.push_back(encoders[k].cardinality());
    d.cat_vocabulary.push_back(encoders[k].vocabulary_size());
  }
  std::vector<std::vector<int>> codes;
  for (std::size_t k = 0; k < features.categorical.size(); ++k) {
    codes.push_back(encoders[k].encode(features.categorical[k].labels));
  }

  const std::size_t samples = n - history - horizon + 1;
  const std::size_t cn = d.num_channels();
  const std::size_t cc = d.cat_channels();
  d.x_num.resize(samples * history * cn);
  d.x_cat.resize(samples * history * cc);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t s = 0; s < history; ++s) {
      const std::size_t row = i + s;
      for (std::size_t c = 0; c < cn; ++c) d.x_num[(i * history + s) * cn + c] = features.continuous[c].values[row];
      for (std::size_t c = 0; c < cc; ++c) d.x_cat[(i * history + s) * cc + c] = codes[c][row];
    }
    const std::size_t target_row = i + history + horizon - 1;
    d.y.push_back(target[target_row]);
    d.target_time.push_back(features.timestamps[target_row]);
    d.first_row.push_back(i);
    d.target_row.push_back(target_row);
  }
  return d;
}

SplitRanges split_chronological(std::size_t n, SplitFractions f) {
  if (f.train < 0.0 || f.validation < 0.0 || f.test < 0.0 ||
      std::fabs(f.train + f.validation + f.test - 1.0) > 1e-9) {
    throw ParameterError("split fractions must be non-negative and sum to 1");
  }
  const auto nd = static_cast<double>(n);
  const auto val = static_cast<std::size_t>(std::floor(nd * f.validation + 1e-9));
  const auto test = static_cast<std::size_t>(std::floor(nd * f.test + 1e-9));
  const std::size_t train = n - val - test;
  SplitRanges r{{0, train}, {train, train + val}, {train + val, n}};
  if (r.train.empty() || r.validation.empty() || r.test.empty()) {
    throw ContractError("split of " + std::to_string(n) + " items leaves an empty partition");
  }
  return r;
}

SplitRanges split_at_dates(std::span<const Timestamp> ts, Timestamp validation_start, Timestamp test_start) {
  if (!(validation_start < test_start)) throw ParameterError("validation must start before test");
  const auto v = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), validation_start) - ts.begin());
  const auto t = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), test_start) - ts.begin());
  SplitRanges r{{0, v}, {v, t}, {t, ts.size()}};
  if (r.train.empty() || r.validation.empty() || r.test.empty()) {
    throw ContractError("date boundaries leave an empty partition");
  }
  return r;
}

DatasetSplit split_dataset(const SupervisedDataset& data, const SplitRanges& r) {
  if (r.test.end != data.size() || r.train.begin != 0 || r.train.end != r.validation.begin ||
      r.validation.end != r.test.begin) {
    throw ContractError("split ranges must partition the dataset");
  }
  return {data.subset(r.train.begin, r.train.end), data.subset(r.validation.begin, r.validation.end),
          data.subset(r.test.begin, r.test.end)};
}

}  // namespace pmcast
