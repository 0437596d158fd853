#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pmcast/decomposition.hpp"
#include "pmcast/errors.hpp"
#include "pmcast/spline.hpp"

using namespace pmcast;

namespace {

double correlation(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> sine(std::size_t n, double cycles) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    x[i] = std::sin(2.0 * std::numbers::pi * cycles * t);
  }
  return x;
}

double energy(std::span<const double> x) {
  double e = 0;
  for (double v : x) e += v * v;
  return e;
}

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  const double f1 = 2 + 40 * u(rng);
  const double f2 = 0.5 + 3 * u(rng);
  const double slope = g(rng);
  double ar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    ar = 0.9 * ar + 0.3 * g(rng);
    x[i] = std::sin(2 * std::numbers::pi * f1 * t) + 2 * std::cos(2 * std::numbers::pi * f2 * t) + slope * t + ar;
  }
  return x;
}

}  // namespace

TEST_CASE("natural cubic spline through knots") {
  const std::vector<double> kx{0, 2, 5, 9};
  const std::vector<double> ky{1, -1, 3, 0};
  const auto s = cubic_spline_on_grid(kx, ky, 10);
  for (std::size_t k = 0; k < kx.size(); ++k) CHECK(s[static_cast<std::size_t>(kx[k])] == doctest::Approx(ky[k]));
  const auto line = cubic_spline_on_grid(std::vector<double>{0, 4}, std::vector<double>{0, 8}, 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(line[i] == doctest::Approx(2.0 * static_cast<double>(i)));
}

TEST_CASE("extrema of plateaus count once") {
  const std::vector<double> x{0, 1, 1, 1, 0, -1, -1, 0, 2};
  const auto e = find_extrema(x);
  CHECK(e.maxima == std::vector<std::size_t>{2});
  CHECK(e.minima == std::vector<std::size_t>{5});
  CHECK(count_zero_crossings(std::vector<double>{1, -1, 1, 0, -1}) == 3);
}

TEST_CASE("constant and monotone signals have no IMFs") {
  const std::vector<double> c(64, 5.0);
  auto r = emd(c);
  CHECK(r.imf_count() == 0);
  CHECK(r.residue == c);

  std::vector<double> ramp(64);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.1 * static_cast<double>(i);
  CHECK(emd(ramp).imf_count() == 0);

  const std::vector<double> tiny{1, -1, 1, -1, 1};
  r = emd(tiny);
  CHECK(r.imf_count() == 0);
  CHECK(r.residue == tiny);
}

TEST_CASE("a pure sinusoid is one IMF") {
  const auto x = sine(1024, 5.0);
  const auto r = emd(x);
  REQUIRE(r.imf_count() >= 1);
  CHECK(correlation(r.imfs[0], x) > 0.99);
  for (std::size_t j = 1; j < r.imf_count(); ++j) CHECK(energy(r.imfs[j]) < 0.01 * energy(r.imfs[0]));
  double worst = 0;
  for (double v : r.residue) worst = std::max(worst, std::fabs(v));
  CHECK(worst < 0.05);
}

TEST_CASE("sinusoid plus trend separates") {
  const std::size_t n = 1024;
  auto x = sine(n, 5.0);
  std::vector<double> trend(n);
  for (std::size_t i = 0; i < n; ++i) {
    trend[i] = 0.5 * static_cast<double>(i) / static_cast<double>(n - 1);
    x[i] += trend[i];
  }
  const auto r = emd(x);
  REQUIRE(r.imf_count() >= 1);
  CHECK(correlation(r.imfs[0], sine(n, 5.0)) > 0.99);
  CHECK(correlation(r.residue, trend) > 0.99);
}

TEST_CASE("reconstruction is complete for emd and ceemdan") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_signal(rng, 256 + 97 * static_cast<std::size_t>(trial));
    const auto e = emd(x);
    CHECK(reconstruction_error(e, x) < 1e-8);
    CeemdanOptions o;
    o.trials = 10;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto c = ceemdan(x, o);
    CHECK(reconstruction_error(c, x) < 1e-8);
    for (const auto& imf : c.imfs) CHECK(imf.size() == x.size());
  }
}

TEST_CASE("IMFs run from high to low frequency") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_signal(rng, 2048);
    CeemdanOptions o;
    o.trials = 20;
    o.seed = 99;
    for (const auto& r : {emd(x), ceemdan(x, o)}) {
      for (std::size_t j = 1; j < r.imf_count(); ++j) {
        CHECK(count_zero_crossings(r.imfs[j]) <= count_zero_crossings(r.imfs[j - 1]) + 1);
      }
    }
  }
}

TEST_CASE("ceemdan without noise and one trial equals emd") {
  std::mt19937_64 rng(8);
  const auto x = random_signal(rng, 1500);
  CeemdanOptions o;
  o.noise_ratio = 0.0;
  o.trials = 1;
  const auto a = ceemdan(x, o);
  const auto b = emd(x);
  REQUIRE(a.imf_count() == b.imf_count());
  for (std::size_t j = 0; j < a.imf_count(); ++j) CHECK(a.imfs[j] == b.imfs[j]);
  CHECK(a.residue == b.residue);
}

TEST_CASE("ceemdan is deterministic and independent of worker count") {
  std::mt19937_64 rng(12);
  const auto x = random_signal(rng, 1200);
  CeemdanOptions o;
  o.trials = 16;
  o.seed = 5;
  const auto a = ceemdan(x, o);
  o.jobs = 4;
  const auto b = ceemdan(x, o);
  REQUIRE(a.imf_count() == b.imf_count());
  for (std::size_t j = 0; j < a.imf_count(); ++j) CHECK(a.imfs[j] == b.imfs[j]);
  CHECK(a.residue == b.residue);
  CHECK(a.meta.trials == 16);
  CHECK(a.meta.noise_ratio == 0.2);
  CHECK(a.meta.seed == 5);
  o.seed = 6;
  CHECK(ceemdan(x, o).imfs[0] != a.imfs[0]);
}

TEST_CASE("max_imfs caps extraction and keeps completeness") {
  std::mt19937_64 rng(13);
  const auto x = random_signal(rng, 1024);
  SiftConfig cfg;
  cfg.max_imfs = 2;
  const auto r = emd(x, cfg);
  CHECK(r.imf_count() == 2);
  CHECK(reconstruction_error(r, x) < 1e-8);
}

TEST_CASE("parameter errors") {
  const auto x = sine(256, 3.0);
  CeemdanOptions o;
  o.trials = 0;
  CHECK_THROWS_AS(ceemdan(x, o), ParameterError);
  o.trials = 1;
  o.noise_ratio = -0.1;
  CHECK_THROWS_AS(ceemdan(x, o), ParameterError);
  SiftConfig bad;
  bad.sd_threshold = 0.0;
  CHECK_THROWS_AS(emd(x, bad), ParameterError);
  bad = {};
  bad.max_sift_iterations = 0;
  CHECK_THROWS_AS(emd(x, bad), ParameterError);
}

TEST_CASE("reconstruct sums components") {
  DecompositionResult r;
  CHECK_THROWS(reconstruct(r));
  r.imfs = {{1, 2, 3}};
  r.residue = {0, 0, 0};
  CHECK(reconstruct(r) == std::vector<double>{1, 2, 3});
}
