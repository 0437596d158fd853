#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pmcast/errors.hpp"
#include "pmcast/evaluation.hpp"
#include "support/oracles.hpp"

using namespace pmcast;
using namespace pmcast::evaluation;

using oracles::draw;
using oracles::kModels;
using oracles::reference_table;

TEST_CASE("metric examples") {
  const std::vector<double> y{100, 200}, p{110, 180};
  const auto m = compute_metrics(y, p);
  CHECK(std::fabs(m.mape - 0.10) < 1e-12);
  CHECK(std::fabs(m.mae - 15.0) < 1e-12);
  CHECK(std::fabs(m.rmse - std::sqrt(250.0)) < 1e-12);
  CHECK(m.n == 2);

  const auto same = compute_metrics(y, y);
  CHECK(same.mape == 0.0);
  CHECK(same.mae == 0.0);
  CHECK(same.rmse == 0.0);

  CHECK_THROWS(compute_metrics(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(compute_metrics(y, std::vector<double>{1.0}));
}

TEST_CASE("metrics match brute force on fixed vectors") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 12; ++k) {
    const std::size_t n = 3 + static_cast<std::size_t>(k) * 4;
    const auto y = draw(rng, n, 5, 300);
    const auto p = draw(rng, n, 5, 300);
    const auto o = oracles::metrics(y, p);
    const auto m = compute_metrics(y, p);
    CHECK(std::fabs(m.mape - o.mape) < 1e-12);
    CHECK(std::fabs(m.mae - o.mae) < 1e-12);
    CHECK(std::fabs(m.rmse - o.rmse) < 1e-12);
  }
}

TEST_CASE("metric properties") {
  std::mt19937_64 rng(32);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + rng() % 40;
    const auto y = draw(rng, n, 2, 500);
    const auto p = draw(rng, n, -50, 600);
    const auto m = compute_metrics(y, p);
    CHECK(m.rmse >= m.mae);
    CHECK(m.mae >= 0.0);
    CHECK(m.mape >= 0.0);

    if (k % 50 == 0) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<double> ys(n), ps(n), yc(n), pc(n);
      for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y[idx[i]];
        ps[i] = p[idx[i]];
        yc[i] = 3.5 * y[i];
        pc[i] = 3.5 * p[i];
      }
      const auto perm = compute_metrics(ys, ps);
      CHECK(perm.mape == doctest::Approx(m.mape).epsilon(1e-12));
      CHECK(perm.mae == doctest::Approx(m.mae).epsilon(1e-12));
      CHECK(perm.rmse == doctest::Approx(m.rmse).epsilon(1e-12));
      const auto scaled = compute_metrics(yc, pc);
      CHECK(scaled.mape == doctest::Approx(m.mape).epsilon(1e-12));
      CHECK(scaled.mae == doctest::Approx(3.5 * m.mae).epsilon(1e-12));
      CHECK(scaled.rmse == doctest::Approx(3.5 * m.rmse).epsilon(1e-12));
    }
  }
}

TEST_CASE("dm statistic matches the brute-force chain") {
  const std::vector<double> y10{52, 61, 75, 80, 66, 49, 38, 45, 58, 70};
  const std::vector<double> a10{50, 64, 70, 85, 60, 52, 40, 41, 60, 73};
  const std::vector<double> b10{55, 57, 80, 72, 71, 45, 33, 50, 52, 66};
  for (std::size_t h : {1, 2, 3}) {
    const auto r = dm_test(y10, a10, b10, h);
    const auto o = oracles::dm(y10, a10, b10, h);
    REQUIRE(r.status == DmStatus::Ok);
    CHECK(std::fabs(r.statistic - o.statistic) < 1e-10);
    CHECK(std::fabs(r.variance - o.variance) < 1e-10);
    CHECK(std::fabs(r.mean_difference - o.mean) < 1e-10);
    CHECK(std::fabs(r.p_value - std::erfc(std::fabs(o.statistic) / std::sqrt(2.0))) < 1e-10);
  }

  std::mt19937_64 rng(33);
  const auto y50 = draw(rng, 50, 20, 200);
  auto a50 = y50, b50 = y50;
  std::normal_distribution<double> e(0, 10);
  for (std::size_t t = 0; t < 50; ++t) {
    a50[t] += e(rng);
    b50[t] += 1.6 * e(rng);
  }
  for (std::size_t h : {1, 3}) {
    const auto r = dm_test(y50, a50, b50, h);
    const auto o = oracles::dm(y50, a50, b50, h);
    REQUIRE(r.status == DmStatus::Ok);
    CHECK(std::fabs(r.statistic - o.statistic) < 1e-10);
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
  }
  CHECK(dm_test(y50, a50, b50, 1).variance == doctest::Approx(oracles::dm(y50, a50, b50, 1).variance).epsilon(1e-14));
}

TEST_CASE("dm antisymmetry and degenerate cases") {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 50; ++k) {
    const auto y = draw(rng, 30, 10, 100);
    const auto a = draw(rng, 30, 10, 100);
    const auto b = draw(rng, 30, 10, 100);
    const auto ab = dm_test(y, a, b, 2);
    const auto ba = dm_test(y, b, a, 2);
    if (ab.status != DmStatus::Ok) continue;
    CHECK(ab.statistic == doctest::Approx(-ba.statistic).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
  }
  const std::vector<double> y{10, 20, 30, 40}, a{11, 19, 33, 41};
  const auto same = dm_test(y, a, a, 1);
  CHECK(same.status == DmStatus::Degenerate);
  CHECK(std::isnan(same.statistic));
  CHECK(std::isnan(same.p_value));
  CHECK_THROWS(dm_test(y, a, a, 5));
  CHECK_THROWS(dm_test(y, a, a, 0));

  // A strongly negative lag-1 autocovariance drives the truncated variance below zero.
  const std::vector<double> yy{100, 100, 100, 100, 100, 100};
  const std::vector<double> pa{110, 100, 110, 100, 110, 100};
  const std::vector<double> pb{100, 100, 100, 100, 100, 100};
  const auto neg = dm_test(yy, pa, pb, 2);
  CHECK(neg.status == DmStatus::NonPositiveVariance);
  CHECK(std::isnan(neg.p_value));

  DmOptions harvey;
  harvey.harvey = true;
  const std::vector<double> y10{52, 61, 75, 80, 66, 49, 38, 45, 58, 70};
  const std::vector<double> a10{50, 64, 70, 85, 60, 52, 40, 41, 60, 73};
  const std::vector<double> b10{55, 57, 80, 72, 71, 45, 33, 50, 52, 66};
  const auto plain = dm_test(y10, a10, b10, 1);
  const auto corrected = dm_test(y10, a10, b10, 1, harvey);
  CHECK(corrected.status == DmStatus::Ok);
  CHECK(corrected.p_value >= plain.p_value);
}

TEST_CASE("robustness summary") {
  std::vector<Metrics> runs{{0.02, 1.0, 2.0, 10}, {0.04, 3.0, 2.0, 10}};
  const auto r = robustness_summary(runs);
  CHECK(r.mape.mean == doctest::Approx(0.03));
  CHECK(r.mape.std == doctest::Approx(std::sqrt(0.0002)));
  CHECK(std::fabs(r.mape.std - 0.0141) < 1e-4);
  CHECK(r.rmse.std == 0.0);
  CHECK(r.runs == 2);
  CHECK(mean_std_cell(r.mape) == "0.0300 (0.0141)");
  runs.pop_back();
  CHECK_THROWS(robustness_summary(runs));
  const std::vector<Metrics> same(5, Metrics{0.1, 2, 3, 4});
  CHECK(robustness_summary(same).mae.std == 0.0);
}

TEST_CASE("improvement against the reference comparison") {
  const auto table = reference_table();
  const std::vector<std::string> bench(kModels.begin(), kModels.end() - 1);
  const auto rows = improvement_table(table, "CEEMDAN-DeepTCN", bench);
  REQUIRE(rows.size() == 5);
  const double mape[] = {83.01, 80.62, 72.93, 72.71, 70.37};
  const double mae[] = {81.02, 80.78, 77.38, 77.32, 76.38};
  const double rmse[] = {81.26, 81.36, 79.63, 79.74, 79.01};
  for (std::size_t i = 0; i < 5; ++i) {
    CAPTURE(rows[i].benchmark);
    CHECK(rows[i].benchmark == bench[i]);
    CHECK(std::fabs(100.0 * rows[i].mape - mape[i]) < 0.01);
    CHECK(std::fabs(100.0 * rows[i].mae - mae[i]) < 0.01);
    CHECK(std::fabs(100.0 * rows[i].rmse - rmse[i]) < 0.01);
  }

  const std::vector<std::string> self{"CEEMDAN-DeepTCN"};
  CHECK(improvement_table(table, "CEEMDAN-DeepTCN", self)[0].mape == 0.0);
  const std::vector<std::string> ghost{"ARIMA"};
  CHECK_THROWS(improvement_table(table, "CEEMDAN-DeepTCN", ghost));
  CHECK(find_metrics(table, "GRU", 2)->mape == 0.1728);
  CHECK(find_metrics(table, "GRU", 4) == nullptr);
}
