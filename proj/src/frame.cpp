#include "pmcast/frame.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "pmcast/datapipe.hpp"
#include "pmcast/errors.hpp"

namespace pmcast {

namespace chr = std::chrono;

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok() || hour > 23) throw SchemaError("invalid calendar date");
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + static_cast<Timestamp>(hour) * kSecondsPerHour;
}

Timestamp parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  auto fail = [&]() -> SchemaError { return SchemaError("bad ISO-8601 timestamp '" + std::string(text) + "'"); };
  auto number = [&](std::size_t pos, std::size_t len) {
    if (pos + len > text.size()) throw fail();
    int v = 0;
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || p != text.data() + pos + len) throw fail();
    return v;
  };
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    try {
      return make_timestamp(number(0, 4), static_cast<unsigned>(number(5, 2)), static_cast<unsigned>(number(8, 2)));
    } catch (const SchemaError&) {
      throw fail();
    }
  }
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    throw fail();
  }
  const int year = number(0, 4);
  const int month = number(5, 2);
  const int day = number(8, 2);
  const int hour = number(11, 2);
  const int minute = number(14, 2);
  int second = 0;
  if (text.size() > 16) {
    if (text.size() != 19 || text[16] != ':') throw fail();
    second = number(17, 2);
  }
  if (minute > 59 || second > 59 || month < 1 || day < 1) throw fail();
  Timestamp ts = 0;
  try {
    ts = make_timestamp(year, static_cast<unsigned>(month), static_cast<unsigned>(day), static_cast<unsigned>(hour));
  } catch (const SchemaError&) {
    throw fail();
  }
  return ts + minute * 60 + second;
}

CalendarFields calendar(Timestamp ts) {
  const auto days = static_cast<int>(std::floor(static_cast<double>(ts) / 86400.0));
  const chr::sys_days sd{chr::days{days}};
  const chr::year_month_day ymd{sd};
  const chr::weekday wd{sd};
  const chr::sys_days jan1{chr::year_month_day{ymd.year(), chr::January, chr::day{1}}};
  CalendarFields f{};
  f.year = static_cast<int>(ymd.year());
  f.month = static_cast<unsigned>(ymd.month());
  f.day = static_cast<unsigned>(ymd.day());
  f.weekday = wd.c_encoding();
  f.hour = static_cast<unsigned>((ts - static_cast<Timestamp>(days) * 86400) / kSecondsPerHour);
  f.day_of_year = static_cast<unsigned>((sd - jan1).count());
  return f;
}

std::string format_timestamp(Timestamp ts) {
  const auto f = calendar(ts);
  const auto rem = ts - make_timestamp(f.year, f.month, f.day, f.hour);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02d:%02d", f.year, f.month, f.day, f.hour,
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

std::size_t TimeSeriesFrame::continuous_index(std::string_view name) const {
  for (std::size_t i = 0; i < continuous.size(); ++i) {
    if (continuous[i].name == name) return i;
  }
  throw SchemaError("frame has no continuous column '" + std::string(name) + "'");
}

std::size_t TimeSeriesFrame::categorical_index(std::string_view name) const {
  for (std::size_t i = 0; i < categorical.size(); ++i) {
    if (categorical[i].name == name) return i;
  }
  throw SchemaError("frame has no categorical column '" + std::string(name) + "'");
}

bool TimeSeriesFrame::has_continuous(std::string_view name) const {
  return std::any_of(continuous.begin(), continuous.end(), [&](const auto& c) { return c.name == name; });
}

const NumericColumn& TimeSeriesFrame::column(std::string_view name) const {
  return continuous[continuous_index(name)];
}

NumericColumn& TimeSeriesFrame::column(std::string_view name) { return continuous[continuous_index(name)]; }

std::size_t TimeSeriesFrame::missing_count() const {
  std::size_t n = 0;
  for (const auto& c : continuous) n += static_cast<std::size_t>(std::count(c.missing.begin(), c.missing.end(), 1));
  for (const auto& c : categorical) n += static_cast<std::size_t>(std::count(c.missing.begin(), c.missing.end(), 1));
  return n;
}

TimeSeriesFrame TimeSeriesFrame::rows_range(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw ContractError("rows_range out of bounds");
  TimeSeriesFrame out;
  out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
  for (const auto& c : continuous) {
    out.continuous.push_back({c.name, {c.values.begin() + begin, c.values.begin() + end},
                              {c.missing.begin() + begin, c.missing.begin() + end}});
  }
  for (const auto& c : categorical) {
    out.categorical.push_back({c.name, {c.labels.begin() + begin, c.labels.begin() + end},
                               {c.missing.begin() + begin, c.missing.begin() + end}});
  }
  return out;
}

namespace schema {

std::string hour_label(unsigned hour) { return std::to_string(hour); }

bool is_decomposition_column(std::string_view name) {
  if (name == "residue") return true;
  if (name.size() < 5 || name.substr(0, 4) != "imf_") return false;
  return std::all_of(name.begin() + 4, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace schema

void derive_calendar_columns(TimeSeriesFrame& frame) {
  CategoricalColumn month{"month", {}, {}};
  CategoricalColumn day{"day_of_week", {}, {}};
  CategoricalColumn hour{"hour", {}, {}};
  for (auto ts : frame.timestamps) {
    const auto f = calendar(ts);
    month.labels.emplace_back(schema::kMonths[f.month - 1]);
    day.labels.emplace_back(schema::kDays[f.weekday]);
    hour.labels.push_back(schema::hour_label(f.hour));
  }
  const std::size_t n = frame.rows();
  month.missing.assign(n, 0);
  day.missing.assign(n, 0);
  hour.missing.assign(n, 0);
  std::erase_if(frame.categorical, [](const auto& c) {
    return c.name == "month" || c.name == "day_of_week" || c.name == "hour";
  });
  frame.categorical.push_back(std::move(month));
  frame.categorical.push_back(std::move(day));
  frame.categorical.push_back(std::move(hour));
}

void check_plausibility(TimeSeriesFrame& frame) {
  for (const auto& range : schema::kPlausible) {
    if (!frame.has_continuous(range.column)) continue;
    const auto& col = frame.column(range.column);
    std::size_t outside = 0;
    for (std::size_t i = 0; i < col.values.size(); ++i) {
      if (col.missing[i]) continue;
      if (col.values[i] < range.low || col.values[i] > range.high) ++outside;
    }
    if (outside > 0) {
      frame.warnings.push_back("column " + std::string(range.column) + ": " + std::to_string(outside) +
                               " value(s) outside plausible range [" + format_double(range.low) + ", " +
                               format_double(range.high) + "]");
    }
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct RawRow {
  Timestamp ts;
  std::vector<double> numbers;          // per numeric field in header order
  std::vector<std::uint8_t> missing;
  std::string weather;
  bool weather_missing;
};

}  // namespace

TimeSeriesFrame ingest(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };

  // Header.
  do {
    if (!std::getline(in, line)) throw SchemaError(source + ": empty input, expected a header row");
    ++line_no;
  } while (trim(line).empty());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(trim(f));
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& name = header[i];
    const bool known = std::find(schema::kInputColumns.begin(), schema::kInputColumns.end(), name) !=
                           schema::kInputColumns.end() ||
                       schema::is_decomposition_column(name);
    if (!known) throw SchemaError(where() + "unknown column '" + name + "'");
    if (!position.emplace(name, i).second) throw SchemaError(where() + "duplicate column '" + name + "'");
  }
  for (auto required : schema::kInputColumns) {
    if (!position.count(std::string(required))) {
      throw SchemaError(where() + "missing required column '" + std::string(required) + "'");
    }
  }

  // Numeric fields: everything except timestamp and weather.
  std::vector<std::string> numeric_names;
  std::vector<std::size_t> numeric_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "timestamp" || header[i] == "weather") continue;
    numeric_names.push_back(header[i]);
    numeric_pos.push_back(i);
  }
  const std::size_t ts_pos = position.at("timestamp");
  const std::size_t weather_pos = position.at("weather");

  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw SchemaError(where() + "expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    RawRow row;
    try {
      row.ts = parse_timestamp(trim(fields[ts_pos]));
    } catch (const SchemaError& e) {
      throw SchemaError(where() + e.what());
    }
    if (row.ts % kSecondsPerHour != 0) throw OrderingError(where() + "timestamp is not on the hour");
    if (!rows.empty() && row.ts <= rows.back().ts) {
      throw OrderingError(where() + (row.ts == rows.back().ts ? "duplicate timestamp " : "timestamp out of order ") +
                          std::string(trim(fields[ts_pos])));
    }
    row.numbers.resize(numeric_pos.size());
    row.missing.resize(numeric_pos.size());
    for (std::size_t k = 0; k < numeric_pos.size(); ++k) {
      const auto text = trim(fields[numeric_pos[k]]);
      if (text.empty()) {
        row.missing[k] = 1;
        continue;
      }
      double v = 0.0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v)) {
        throw SchemaError(where() + "column '" + numeric_names[k] + "': not a number '" + std::string(text) + "'");
      }
      row.numbers[k] = v;
    }
    const auto weather = trim(fields[weather_pos]);
    row.weather = std::string(weather);
    row.weather_missing = weather.empty();
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError(source + ": no data rows");

  // Repair the hourly axis: gaps become all-missing rows.
  TimeSeriesFrame frame;
  const Timestamp first = rows.front().ts;
  const Timestamp last = rows.back().ts;
  const auto total = static_cast<std::size_t>((last - first) / kSecondsPerHour) + 1;
  frame.timestamps.resize(total);
  for (std::size_t i = 0; i < total; ++i) frame.timestamps[i] = first + static_cast<Timestamp>(i) * kSecondsPerHour;

  std::vector<NumericColumn> raw(numeric_names.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    raw[k].name = numeric_names[k];
    raw[k].values.assign(total, 0.0);
    raw[k].missing.assign(total, 1);
  }
  CategoricalColumn weather{"weather", std::vector<std::string>(total), std::vector<std::uint8_t>(total, 1)};
  line_no = 0;
  for (const auto& row : rows) {
    const auto i = static_cast<std::size_t>((row.ts - first) / kSecondsPerHour);
    for (std::size_t k = 0; k < raw.size(); ++k) {
      raw[k].values[i] = row.numbers[k];
      raw[k].missing[i] = row.missing[k];
    }
    weather.labels[i] = row.weather;
    weather.missing[i] = row.weather_missing ? 1 : 0;
  }
  if (total > rows.size()) {
    frame.warnings.push_back(source + ": " + std::to_string(total - rows.size()) +
                             " hour(s) absent from the file were inserted as missing rows");
  }

  auto take = [&](std::string_view name) -> NumericColumn& {
    for (auto& c : raw) {
      if (c.name == name) return c;
    }
    throw SchemaError("internal: column " + std::string(name) + " not parsed");
  };

  NumericColumn wind_x{"wind_x", std::vector<double>(total), std::vector<std::uint8_t>(total, 0)};
  NumericColumn wind_y{"wind_y", std::vector<double>(total), std::vector<std::uint8_t>(total, 0)};
  {
    const auto& speed = take("wind_speed");
    const auto& dir = take("wind_dir");
    for (std::size_t i = 0; i < total; ++i) {
      if (speed.missing[i] || dir.missing[i]) {
        wind_x.missing[i] = wind_y.missing[i] = 1;
        continue;
      }
      if (speed.values[i] < 0.0) {
        throw SchemaError(source + ": negative wind speed at " + format_timestamp(frame.timestamps[i]));
      }
      double d = std::fmod(dir.values[i], 360.0);
      if (d < 0.0) d += 360.0;
      const auto [x, y] = wind_to_components(speed.values[i], d);
      wind_x.values[i] = x;
      wind_y.values[i] = y;
    }
  }

  for (auto name : schema::kContinuous) {
    if (name == "wind_x") {
      frame.continuous.push_back(std::move(wind_x));
    } else if (name == "wind_y") {
      frame.continuous.push_back(std::move(wind_y));
    } else {
      frame.continuous.push_back(std::move(take(name)));
    }
  }
  for (auto& c : raw) {
    if (schema::is_decomposition_column(c.name)) frame.continuous.push_back(std::move(c));
  }
  frame.categorical.push_back(std::move(weather));
  derive_calendar_columns(frame);
  check_plausibility(frame);
  return frame;
}

TimeSeriesFrame ingest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return ingest(in, path);
}

void write_frame(std::ostream& out, const TimeSeriesFrame& frame) {
  std::vector<const NumericColumn*> extra;
  for (const auto& c : frame.continuous) {
    if (schema::is_decomposition_column(c.name)) extra.push_back(&c);
  }
  for (std::size_t i = 0; i < schema::kInputColumns.size(); ++i) {
    if (i) out << ',';
    out << schema::kInputColumns[i];
  }
  for (const auto* c : extra) out << ',' << c->name;
  out << '\n';

  const auto& wx = frame.column("wind_x");
  const auto& wy = frame.column("wind_y");
  const auto& weather = frame.categorical[frame.categorical_index("weather")];
  auto cell = [&](const NumericColumn& c, std::size_t i) {
    if (!c.missing[i]) out << format_double(c.values[i]);
  };
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    out << format_timestamp(frame.timestamps[i]);
    for (auto name : std::span(schema::kInputColumns).subspan(1, 12)) {
      out << ',';
      if (name == "wind_speed" || name == "wind_dir") {
        if (wx.missing[i] || wy.missing[i]) continue;
        const auto [speed, dir] = components_to_wind(wx.values[i], wy.values[i]);
        out << format_double(name == "wind_speed" ? speed : dir);
      } else {
        cell(frame.column(name), i);
      }
    }
    out << ',';
    if (!weather.missing[i]) out << weather.labels[i];
    for (const auto* c : extra) {
      out << ',';
      cell(*c, i);
    }
    out << '\n';
  }
}

void write_frame_file(const std::string& path, const TimeSeriesFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_frame(out, frame);
}

}  // namespace pmcast
