#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmcast {

/// Seconds since 1970-01-01T00:00:00 UTC.
using Timestamp = std::int64_t;
constexpr Timestamp kSecondsPerHour = 3600;

/// Parses "YYYY-MM-DD[T| ]HH:MM[:SS][Z]" or a bare date (midnight). Throws
/// SchemaError on bad input.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour = 0);

struct CalendarFields {
  int year;
  unsigned month;        // 1..12
  unsigned day;          // 1..31
  unsigned weekday;      // 0 = Sunday .. 6 = Saturday
  unsigned hour;         // 0..23
  unsigned day_of_year;  // 0-based
};
CalendarFields calendar(Timestamp ts);

struct NumericColumn {
  std::string name;
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
};

struct CategoricalColumn {
  std::string name;
  std::vector<std::string> labels;
  std::vector<std::uint8_t> missing;
};

/// Hourly multivariate table: continuous and categorical columns sharing
/// one strictly increasing timestamp axis.
struct TimeSeriesFrame {
  std::vector<Timestamp> timestamps;
  std::vector<NumericColumn> continuous;
  std::vector<CategoricalColumn> categorical;
  std::vector<std::string> warnings;

  std::size_t rows() const noexcept { return timestamps.size(); }
  std::size_t continuous_index(std::string_view name) const;
  std::size_t categorical_index(std::string_view name) const;
  bool has_continuous(std::string_view name) const;
  const NumericColumn& column(std::string_view name) const;
  NumericColumn& column(std::string_view name);
  std::size_t missing_count() const;
  /// Rows [begin, end) of every column.
  TimeSeriesFrame rows_range(std::size_t begin, std::size_t end) const;
};

namespace schema {

/// Header of the delimited input format, in file order.
inline constexpr std::array<std::string_view, 14> kInputColumns = {
    "timestamp", "pm25", "pm10", "no2", "so2", "o3", "co", "wind_speed", "wind_dir",
    "temperature", "precipitation", "pressure", "humidity", "weather"};

/// Continuous frame columns after wind vectorisation.
inline constexpr std::array<std::string_view, 12> kContinuous = {
    "pm25", "pm10", "no2", "so2", "o3", "co", "wind_x", "wind_y",
    "temperature", "precipitation", "pressure", "humidity"};

inline constexpr std::array<std::string_view, 4> kCategorical = {"weather", "month", "day_of_week", "hour"};

inline constexpr std::string_view kTarget = "pm25";

struct Range {
  std::string_view column;
  double low;
  double high;
};

/// Plausible ranges for hourly urban records; values outside only warn.
inline constexpr std::array<Range, 12> kPlausible = {{
    {"pm25", 2, 692},
    {"pm10", 1, 1000},
    {"no2", 2, 192},
    {"so2", 1, 248},
    {"o3", 1, 339},
    {"co", 0.13, 9.63},
    {"wind_x", -44, 48.86},
    {"wind_y", -54.16, 44.43},
    {"temperature", -17, 46},
    {"precipitation", 0, 251.7},
    {"pressure", 992, 1047},
    {"humidity", 5, 97},
}};

inline constexpr std::array<std::string_view, 20> kWeather = {
    "Sunny", "Fine with occasional clouds", "Cloudy", "Overcast", "Light snow",
    "Moderate snow", "Snow shower", "Sleet", "Light rain", "Drizzle",
    "Shower", "Strong shower", "Thunder shower", "Moderate rain", "Heavy rain",
    "Mist", "Haze", "Fog", "Floating dust", "Sand blowing"};

inline constexpr std::array<std::string_view, 12> kMonths = {
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December"};

inline constexpr std::array<std::string_view, 7> kDays = {
    "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};

std::string hour_label(unsigned hour);

/// True for decomposition columns written next to the data: imf_<k>, residue.
bool is_decomposition_column(std::string_view name);

}  // namespace schema

/// Reads the delimited input format. Gaps in the hourly axis are filled with
/// all-missing rows; blank fields become missing cells.
TimeSeriesFrame ingest(std::istream& in, const std::string& source = "<stream>");
TimeSeriesFrame ingest_file(const std::string& path);

/// Writes the input format (wind back as speed/direction) plus any
/// decomposition columns. Missing cells are written blank.
void write_frame(std::ostream& out, const TimeSeriesFrame& frame);
void write_frame_file(const std::string& path, const TimeSeriesFrame& frame);

/// Adds the month / day_of_week / hour label columns from the timestamps.
void derive_calendar_columns(TimeSeriesFrame& frame);

/// Appends plausibility warnings for values outside the observed ranges.
void check_plausibility(TimeSeriesFrame& frame);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace pmcast
