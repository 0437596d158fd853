#include "pmcast/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "pmcast/datapipe.hpp"
#include "pmcast/errors.hpp"

namespace pmcast {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct WeatherState {
  std::string_view label;
  double pm_offset;    // log-space effect on PM2.5
  double humidity;     // additive
  double rain_mm;      // mean hourly precipitation, 0 for dry states
  double winter_bias;  // > 0 favoured in winter, < 0 in summer
};

constexpr std::array<WeatherState, 12> kStates = {{
    {"Sunny", -0.10, -8.0, 0.0, 0.0},
    {"Fine with occasional clouds", -0.05, -4.0, 0.0, 0.0},
    {"Cloudy", 0.05, 4.0, 0.0, 0.0},
    {"Overcast", 0.15, 8.0, 0.0, 0.0},
    {"Haze", 0.70, 12.0, 0.0, 0.6},
    {"Mist", 0.35, 18.0, 0.0, 0.2},
    {"Fog", 0.50, 25.0, 0.0, 0.4},
    {"Light rain", -0.45, 25.0, 0.8, -0.8},
    {"Moderate rain", -0.70, 30.0, 3.0, -1.0},
    {"Shower", -0.40, 22.0, 2.0, -1.0},
    {"Light snow", -0.30, 15.0, 0.4, 1.5},
    {"Floating dust", 0.30, -12.0, 0.0, 0.3},
}};

double clip(double v, std::string_view column) {
  for (const auto& r : schema::kPlausible) {
    if (r.column == column) return std::clamp(v, r.low, r.high);
  }
  return v;
}

// Next weather state: stay with high probability, otherwise draw from a
// season-weighted distribution. `winter` is +1 mid-winter, -1 mid-summer.
std::size_t next_weather(std::size_t current, double winter, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < 0.96) return current;
  std::array<double, kStates.size()> w{};
  double total = 0.0;
  for (std::size_t k = 0; k < kStates.size(); ++k) {
    const double base = k < 4 ? 3.0 : 1.0;
    w[k] = base * std::exp(kStates[k].winter_bias * winter);
    total += w[k];
  }
  double pick = u(rng) * total;
  for (std::size_t k = 0; k < kStates.size(); ++k) {
    pick -= w[k];
    if (pick <= 0.0) return k;
  }
  return kStates.size() - 1;
}

}  // namespace

TimeSeriesFrame synth_generate(std::size_t n_hours, std::uint64_t seed) {
  if (n_hours < 48) throw ParameterError("synth_generate: need at least 48 hours");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  TimeSeriesFrame frame;
  const Timestamp start = make_timestamp(2015, 1, 2, 0);
  for (auto name : schema::kContinuous) {
    frame.continuous.push_back({std::string(name), std::vector<double>(n_hours), std::vector<std::uint8_t>(n_hours, 0)});
  }
  CategoricalColumn weather{"weather", std::vector<std::string>(n_hours), std::vector<std::uint8_t>(n_hours, 0)};
  auto col = [&](std::string_view name) -> std::vector<double>& { return frame.column(name).values; };
  auto& pm25 = col("pm25");
  auto& pm10 = col("pm10");
  auto& no2 = col("no2");
  auto& so2 = col("so2");
  auto& o3 = col("o3");
  auto& co = col("co");
  auto& wind_x = col("wind_x");
  auto& wind_y = col("wind_y");
  auto& temperature = col("temperature");
  auto& precipitation = col("precipitation");
  auto& pressure = col("pressure");
  auto& humidity = col("humidity");

  std::size_t state = 0;
  double temp_ar = 0.0;
  double hum_ar = 0.0;
  double pres_ar = 0.0;
  double wind_ar = 0.0;
  double wind_dir = 315.0;
  double pm_ar = 0.0;
  double wash = 0.0;  // smoothed weather effect, lags the state change

  for (std::size_t t = 0; t < n_hours; ++t) {
    const Timestamp ts = start + static_cast<Timestamp>(t) * kSecondsPerHour;
    frame.timestamps.push_back(ts);
    const auto cal = calendar(ts);
    const double season = std::cos(kTwoPi * (static_cast<double>(cal.day_of_year) - 15.0) / 365.25);
    const double daily = std::sin(kTwoPi * (static_cast<double>(cal.hour) - 9.0) / 24.0);

    state = next_weather(state, season, rng);
    const auto& ws = kStates[state];
    weather.labels[t] = std::string(ws.label);

    temp_ar = 0.95 * temp_ar + 0.6 * gauss(rng);
    temperature[t] = clip(13.0 - 15.0 * season + 5.0 * daily + temp_ar, "temperature");

    hum_ar = 0.9 * hum_ar + 2.0 * gauss(rng);
    humidity[t] = clip(50.0 - 10.0 * season - 8.0 * daily + ws.humidity + hum_ar, "humidity");

    pres_ar = 0.995 * pres_ar + 0.4 * gauss(rng);
    pressure[t] = clip(1016.0 + 11.0 * season + pres_ar, "pressure");

    wind_ar = 0.95 * wind_ar + 0.18 * gauss(rng);
    const double speed = std::min(40.0, std::exp(1.9 + 0.2 * daily + wind_ar));
    wind_dir = std::fmod(wind_dir + 12.0 * gauss(rng) + 360.0, 360.0);
    const auto [wx, wy] = wind_to_components(speed, wind_dir);
    wind_x[t] = clip(wx, "wind_x");
    wind_y[t] = clip(wy, "wind_y");

    precipitation[t] = ws.rain_mm > 0.0 ? clip(ws.rain_mm * expo(rng), "precipitation") : 0.0;

    wash = 0.7 * wash + 0.3 * ws.pm_offset;
    pm_ar = 0.97 * pm_ar + 0.06 * gauss(rng);
    const double weekly = std::sin(kTwoPi * (static_cast<double>(cal.weekday) + cal.hour / 24.0) / 7.0);
    const double daily_pm = std::cos(kTwoPi * (static_cast<double>(cal.hour) - 21.0) / 24.0);
    const double log_pm = 3.75 + 0.25 * season + 0.45 * daily_pm + 0.15 * weekly + 1.4 * pm_ar + wash -
                          0.05 * (speed - 7.0);
    pm25[t] = clip(std::exp(log_pm), "pm25");

    pm10[t] = clip(pm25[t] * std::exp(0.35 + 0.1 * gauss(rng)) + (state == 11 ? 120.0 : 0.0), "pm10");
    no2[t] = clip(12.0 + 4.0 * std::pow(pm25[t], 0.6) * std::exp(0.1 * gauss(rng)), "no2");
    so2[t] = clip(2.0 + (6.0 + 10.0 * std::max(season, 0.0)) * std::pow(pm25[t] / 70.0, 0.7) * std::exp(0.2 * gauss(rng)),
                  "so2");
    o3[t] = clip(std::exp(3.6 + 0.04 * (temperature[t] - 13.0) + 0.5 * daily - 0.003 * pm25[t] + 0.15 * gauss(rng)), "o3");
    co[t] = clip(0.3 + 0.012 * pm25[t] * std::exp(0.1 * gauss(rng)), "co");
  }
  frame.categorical.push_back(std::move(weather));
  derive_calendar_columns(frame);
  return frame;
}

}  // namespace pmcast
