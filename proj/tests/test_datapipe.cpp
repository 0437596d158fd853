#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "pmcast/datapipe.hpp"
#include "pmcast/errors.hpp"
#include "pmcast/synth.hpp"

using namespace pmcast;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TimeSeriesFrame frame_with(std::vector<double> values, std::vector<std::uint8_t> missing) {
  TimeSeriesFrame f;
  for (std::size_t i = 0; i < values.size(); ++i) f.timestamps.push_back(make_timestamp(2015, 1, 2) + static_cast<Timestamp>(i) * kSecondsPerHour);
  f.continuous.push_back({"pm25", std::move(values), std::move(missing)});
  return f;
}

const std::string kHeader =
    "timestamp,pm25,pm10,no2,so2,o3,co,wind_speed,wind_dir,temperature,precipitation,pressure,humidity,weather\n";

std::vector<double> pm(const TimeSeriesFrame& f) { return f.column(schema::kTarget).values; }

}  // namespace

TEST_CASE("linear interpolation of gaps") {
  auto out = interpolate_missing(frame_with({1, kNaN, 3}, {0, 1, 0}));
  CHECK(pm(out) == std::vector<double>{1, 2, 3});
  CHECK(out.missing_count() == 0);

  out = interpolate_missing(frame_with({kNaN, 2, 4}, {1, 0, 0}));
  CHECK(pm(out) == std::vector<double>{2, 2, 4});

  out = interpolate_missing(frame_with({1, kNaN, kNaN, 4}, {0, 1, 1, 0}));
  const auto v = pm(out);
  CHECK(v[1] == doctest::Approx(2.0));
  CHECK(v[2] == doctest::Approx(3.0));

  out = interpolate_missing(frame_with({5, 6, kNaN}, {0, 0, 1}));
  CHECK(pm(out)[2] == 6.0);

  CHECK_THROWS_AS(interpolate_missing(frame_with({kNaN, kNaN}, {1, 1})), ContractError);
}

TEST_CASE("categorical gaps take the previous label") {
  auto f = frame_with({1, 2, 3, 4}, {0, 0, 0, 0});
  f.categorical.push_back({"weather", {"", "Haze", "", "Fog"}, {1, 0, 1, 0}});
  const auto out = interpolate_missing(f);
  CHECK(out.categorical[0].labels == std::vector<std::string>{"Haze", "Haze", "Haze", "Fog"});
}

TEST_CASE("wind vectorisation") {
  auto [x0, y0] = wind_to_components(0, 123);
  CHECK(x0 == doctest::Approx(0.0));
  CHECK(y0 == doctest::Approx(0.0));
  auto [xs, ys] = wind_to_components(10, 180);
  CHECK(xs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ys == doctest::Approx(10.0));
  auto [xe, ye] = wind_to_components(10, 90);
  CHECK(xe == doctest::Approx(-10.0));
  CHECK(std::fabs(ye) < 1e-12);
  CHECK_THROWS_AS(wind_to_components(-1, 0), ParameterError);
  CHECK_THROWS_AS(wind_to_components(1, 360), ParameterError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sp(0.5, 40), dir(0, 359.999);
  for (int i = 0; i < 200; ++i) {
    const double s = sp(rng), d = dir(rng);
    auto [x, y] = wind_to_components(s, d);
    auto [s2, d2] = components_to_wind(x, y);
    CHECK(s2 == doctest::Approx(s).epsilon(1e-12));
    CHECK(std::fabs(std::remainder(d2 - d, 360.0)) < 1e-9);
  }
}

TEST_CASE("scaler standardises with training statistics") {
  auto f = frame_with({2, 4, 100}, {0, 0, 0});
  f.continuous.push_back({"co", {7, 7, 7}, {0, 0, 0}});
  const auto p = fit_scaler(f, {0, 2});
  CHECK(p.mean[0] == 3.0);
  CHECK(p.std[0] == 1.0);
  CHECK(p.degenerate[1] == 1);
  const auto z = apply_scaler(f, p);
  CHECK(z.continuous[0].values[0] == -1.0);
  CHECK(z.continuous[0].values[1] == 1.0);
  CHECK(z.continuous[1].values == std::vector<double>{0, 0, 0});
  CHECK_THROWS_AS(fit_scaler(f, {1, 1}), ContractError);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(50, 20);
  std::vector<double> x(300);
  for (auto& v : x) v = g(rng);
  const auto big = frame_with(x, std::vector<std::uint8_t>(x.size(), 0));
  const auto q = fit_scaler(big, {0, 200});
  const auto back = invert_scaler(apply_scaler(big, q), q);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(back.continuous[0].values[i] - x[i]) < 1e-12);
}

TEST_CASE("scaler and encoders ignore rows outside training") {
  auto a = synth_generate(200, 1);
  auto b = a;
  for (std::size_t i = 150; i < 200; ++i) {
    b.column("pm25").values[i] = 600;
    b.categorical[b.categorical_index("weather")].labels[i] = "Sand blowing";
  }
  const RowRange train{0, 150};
  const auto pa = fit_scaler(a, train), pb = fit_scaler(b, train);
  CHECK(pa.mean == pb.mean);
  CHECK(pa.std == pb.std);
  const auto ea = fit_encoders(a, train), eb = fit_encoders(b, train);
  REQUIRE(ea.size() == eb.size());
  for (std::size_t k = 0; k < ea.size(); ++k) CHECK(ea[k].vocabulary() == eb[k].vocabulary());
}

TEST_CASE("weather encoding follows the canonical order") {
  const std::vector<std::string> seen{"Haze", "Sunny", "Acid rain"};
  const auto enc = LabelEncoder::fit(seen, schema::kWeather, true);
  CHECK(enc.encode("Sunny") == 0);
  CHECK(enc.encode("Fine with occasional clouds") == 1);
  CHECK(enc.encode("Acid rain") == 20);
  CHECK(enc.vocabulary_size() == 21);
  CHECK(enc.encode("Tornado") == static_cast<int>(enc.vocabulary_size()));
  CHECK(enc.decode(enc.encode("Tornado")) == kUnknownLabel);
  CHECK_THROWS_AS(enc.decode(-1), IndexError);

  const auto canonical = LabelEncoder::fit({}, schema::kWeather, true);
  const auto one = canonical.onehot("Sunny");
  REQUIRE(one.size() == 20);
  CHECK(one[0] == 1.0);
  for (std::size_t i = 1; i < one.size(); ++i) CHECK(one[i] == 0.0);
  for (double v : canonical.onehot("Tornado")) CHECK(v == 0.0);
  for (auto label : schema::kWeather) CHECK(canonical.decode(canonical.encode(label)) == label);
  CHECK(canonical.cardinality() == 21);
}

TEST_CASE("calendar encoders are closed and within cardinality") {
  const auto f = synth_generate(24 * 40, 5);
  const auto enc = fit_encoders(f, {0, f.rows()});
  for (std::size_t k = 0; k < f.categorical.size(); ++k) {
    const auto& name = f.categorical[k].name;
    const auto codes = enc[k].encode(f.categorical[k].labels);
    for (int c : codes) {
      CHECK(c >= 0);
      CHECK(static_cast<std::size_t>(c) < enc[k].cardinality());
    }
    if (name == "month") CHECK(enc[k].cardinality() == 12);
    if (name == "day_of_week") CHECK(enc[k].cardinality() == 7);
    if (name == "hour") CHECK(enc[k].cardinality() == 24);
    if (name == "weather") CHECK(enc[k].vocabulary_size() <= 20);
  }
}

TEST_CASE("decomposition columns") {
  const auto f = interpolate_missing(synth_generate(600, 11));
  const auto x = pm(f);
  CeemdanOptions o;
  o.trials = 5;
  const auto d = ceemdan(x, o);
  const auto with = attach_decomposition(f, d, AttachMode::FullSeries);
  CHECK(with.continuous.size() == f.continuous.size() + d.imf_count() + 1);
  std::vector<double> sum(x.size(), 0.0);
  for (const auto& c : with.continuous) {
    if (!schema::is_decomposition_column(c.name)) continue;
    for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += c.values[t];
  }
  for (std::size_t t = 0; t < sum.size(); ++t) CHECK(std::fabs(sum[t] - x[t]) < 1e-8);

  DecompositionResult fifteen;
  fifteen.imfs.assign(15, std::vector<double>(x.size(), 0.0));
  fifteen.residue = x;
  CHECK(attach_decomposition(f, fifteen, AttachMode::FullSeries).continuous.size() == f.continuous.size() + 16);

  const auto again = attach_decomposition(with, d, AttachMode::FullSeries);
  CHECK(again.continuous.size() == with.continuous.size());

  DecompositionResult shorter = d;
  for (auto& imf : shorter.imfs) imf.pop_back();
  shorter.residue.pop_back();
  CHECK_THROWS(attach_decomposition(f, shorter, AttachMode::FullSeries));
}

TEST_CASE("refit decomposition never looks ahead") {
  auto f = interpolate_missing(synth_generate(300, 12));
  const std::size_t covered = 200;
  RefitOptions refit;
  refit.decompose = [](std::span<const double> s) { return emd(s); };
  refit.lookback = 120;
  const auto xf = pm(f);
  const std::vector<double> head(xf.begin(), xf.begin() + covered);
  const auto base = attach_decomposition(f, emd(head), AttachMode::TrainOnlyRefit, &refit);

  auto g = f;
  for (std::size_t t = 260; t < 300; ++t) g.column("pm25").values[t] *= 3.0;
  const auto xg = pm(g);
  const std::vector<double> head_g(xg.begin(), xg.begin() + covered);
  const auto pert = attach_decomposition(g, emd(head_g), AttachMode::TrainOnlyRefit, &refit);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < base.continuous.size(); ++k) {
    if (!schema::is_decomposition_column(base.continuous[k].name)) continue;
    for (std::size_t t = 0; t < 260; ++t) {
      CHECK(base.continuous[k].values[t] == pert.continuous[k].values[t]);
      ++checked;
    }
  }
  CHECK(checked > 0);
  for (std::size_t t = 0; t < 300; ++t) {
    double sum = 0;
    for (const auto& c : base.continuous) {
      if (schema::is_decomposition_column(c.name)) sum += c.values[t];
    }
    CHECK(std::fabs(sum - pm(f)[t]) < 1e-8);
  }
}

TEST_CASE("window counts and targets") {
  auto count = [](std::size_t n, std::size_t h) {
    const auto f = synth_generate(std::max<std::size_t>(n, 48), 2).rows_range(0, n);
    const auto enc = fit_encoders(f, {0, n});
    const auto y = pm(f);
    return make_windows(f, enc, y, 24, h);
  };
  CHECK(count(100, 1).size() == 76);
  CHECK(count(100, 3).size() == 74);
  const auto one = count(25, 1);
  REQUIRE(one.size() == 1);
  CHECK(one.target_row[0] == 24);
  CHECK_THROWS(count(26, 3));

  const auto d = count(100, 2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.first_row[i] + d.history <= d.target_row[i]);
    CHECK(d.target_row[i] == i + 24 + 1);
  }
}

TEST_CASE("windows carry the frame values") {
  const auto f = synth_generate(60, 4);
  const auto enc = fit_encoders(f, {0, 60});
  const auto d = make_windows(f, enc, pm(f), 24, 1);
  CHECK(d.num_channels() == f.continuous.size());
  CHECK(d.cat_channels() == f.categorical.size());
  const std::size_t pm_ch = f.continuous_index("pm25");
  for (std::size_t i = 0; i < d.size(); i += 7) {
    for (std::size_t s = 0; s < 24; ++s) CHECK(d.num(i, s, pm_ch) == f.column("pm25").values[i + s]);
    CHECK(d.y[i] == f.column("pm25").values[i + 24]);
    const auto hour = static_cast<std::size_t>(d.cat(i, 23, f.categorical_index("hour")));
    CHECK(hour == calendar(f.timestamps[i + 23]).hour);
  }
}

TEST_CASE("chronological splits") {
  const auto s = split_chronological(10);
  CHECK(s.train.size() == 6);
  CHECK(s.validation.size() == 2);
  CHECK(s.test.size() == 2);
  CHECK_THROWS_AS(split_chronological(2), ContractError);

  for (std::size_t n = 5; n < 400; n += 7) {
    const auto r = split_chronological(n);
    CHECK(r.train.begin == 0);
    CHECK(r.train.end == r.validation.begin);
    CHECK(r.validation.end == r.test.begin);
    CHECK(r.test.end == n);
    CHECK(r.validation.size() == static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(n) + 1e-9)));
  }
}

TEST_CASE("date boundaries give the reference split sizes") {
  std::vector<Timestamp> ts(26280);
  const Timestamp start = make_timestamp(2015, 1, 2);
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = start + static_cast<Timestamp>(i) * kSecondsPerHour;
  CHECK(format_timestamp(ts.back()).substr(0, 13) == "2017-12-31T23");
  const auto s = split_at_dates(ts, make_timestamp(2016, 11, 1), make_timestamp(2017, 6, 1));
  CHECK(s.train.size() == 16056);
  CHECK(s.validation.size() == 5088);
  CHECK(s.test.size() == 5136);
  CHECK(ts[s.train.end - 1] < ts[s.validation.begin]);
  CHECK(ts[s.validation.end - 1] < ts[s.test.begin]);
}

TEST_CASE("dataset split keeps chronology") {
  const auto f = synth_generate(300, 6);
  const auto enc = fit_encoders(f, {0, 300});
  const auto d = make_windows(f, enc, pm(f), 24, 1);
  const auto parts = split_dataset(d, split_chronological(d.size()));
  CHECK(parts.train.size() + parts.validation.size() + parts.test.size() == d.size());
  CHECK(parts.train.target_time.back() < parts.validation.target_time.front());
  CHECK(parts.validation.target_time.back() < parts.test.target_time.front());
  CHECK(parts.test.y.back() == d.y.back());
}

TEST_CASE("synthetic generator") {
  const auto a = synth_generate(24 * 60, 42);
  const auto b = synth_generate(24 * 60, 42);
  CHECK(a.column("pm25").values == b.column("pm25").values);
  CHECK(a.categorical[0].labels == b.categorical[0].labels);
  CHECK(synth_generate(24 * 60, 43).column("pm25").values != a.column("pm25").values);
  for (double v : a.column("pm25").values) {
    CHECK(v >= 2.0);
    CHECK(v <= 692.0);
  }
  const auto& hours = a.categorical[a.categorical_index("hour")].labels;
  for (std::size_t i = 0; i < hours.size(); ++i) CHECK(hours[i] == schema::hour_label(static_cast<unsigned>(i % 24)));
  CHECK(a.missing_count() == 0);
  CHECK_THROWS_AS(synth_generate(47, 1), ParameterError);
}

TEST_CASE("ingest parses, marks blanks and rejects bad order") {
  std::istringstream good(kHeader +
                          "2015-01-02T00:00,80,100,40,10,20,1.2,5,90,-3,0,1020,40,Sunny\n"
                          "2015-01-02T01:00,,100,40,10,20,1.2,5,90,-3,0,1020,40,\n"
                          "2015-01-02T02:00,2692,100,40,10,20,1.2,5,90,-3,0,1020,40,Haze\n");
  const auto f = ingest(good);
  CHECK(f.rows() == 3);
  CHECK(f.column("pm25").missing == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(f.column("pm25").values[2] == 2692.0);
  CHECK(!f.warnings.empty());
  CHECK(f.column("wind_x").values[0] == doctest::Approx(-5.0));

  std::istringstream dup(kHeader +
                         "2015-01-02T00:00,80,100,40,10,20,1.2,5,90,-3,0,1020,40,Sunny\n"
                         "2015-01-02T00:00,80,100,40,10,20,1.2,5,90,-3,0,1020,40,Sunny\n");
  CHECK_THROWS_AS(ingest(dup), OrderingError);

  std::istringstream unknown("timestamp,pm25,ozone\n2015-01-02T00:00,1,2\n");
  CHECK_THROWS_AS(ingest(unknown), SchemaError);

  std::istringstream gap(kHeader +
                         "2015-01-02T00:00,80,100,40,10,20,1.2,5,90,-3,0,1020,40,Sunny\n"
                         "2015-01-02T03:00,80,100,40,10,20,1.2,5,90,-3,0,1020,40,Sunny\n");
  const auto g = ingest(gap);
  CHECK(g.rows() == 4);
  CHECK(g.column("pm25").missing[1] == 1);
}

TEST_CASE("frame round trip through the text format") {
  const auto f = synth_generate(72, 8);
  std::stringstream io;
  write_frame(io, f);
  const auto g = ingest(io);
  CHECK(g.timestamps == f.timestamps);
  for (std::size_t k = 0; k < f.continuous.size(); ++k) {
    for (std::size_t t = 0; t < f.rows(); ++t) {
      CHECK(g.continuous[k].values[t] == doctest::Approx(f.continuous[k].values[t]).epsilon(1e-9));
    }
  }
}
