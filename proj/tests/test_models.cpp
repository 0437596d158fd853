#include <doctest.h>

#include <cmath>
#include <random>

#include "pmcast/errors.hpp"
#include "pmcast/models.hpp"
#include "pmcast/synth.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace pmcast;
using namespace pmcast::models;
using ad::Graph;
using ad::Var;

namespace {

void fill(ad::ParameterSet& params, double value) {
  for (auto& p : params) {
    for (auto& v : p->value.values()) v = value;
  }
}

double forward_one(Forecaster& model, const Batch& batch, std::size_t sample = 0) {
  Graph g(false);
  return model.forward(g, batch).value()[sample];
}

}  // namespace

TEST_CASE("tcn block with zero gains passes relu of the input") {
  ad::ParameterSet params;
  std::mt19937_64 rng(1);
  TcnBlock block;
  block.v1 = &params.add("v1", gradcheck::random_tensor({3, 3, 2}, rng));
  block.g1 = &params.add("g1", Tensor::filled({3}, 0.0));
  block.v2 = &params.add("v2", gradcheck::random_tensor({3, 3, 2}, rng));
  block.g2 = &params.add("g2", Tensor::filled({3}, 0.0));
  const Tensor x = gradcheck::random_tensor({3, 10}, rng);
  for (std::size_t d : {1, 2, 4, 8}) {
    Graph g;
    const auto out = tcn_block_forward(g, g.input(x), block, d);
    REQUIRE(out.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(out.value()[i] == std::max(0.0, x[i]));
  }
}

TEST_CASE("tcn block keeps length and is causal") {
  std::mt19937_64 rng(2);
  ad::ParameterSet params;
  TcnBlock block;
  block.v1 = &params.add("v1", gradcheck::random_tensor({4, 2, 2}, rng));
  block.g1 = &params.add("g1", gradcheck::random_tensor({4}, rng));
  block.v2 = &params.add("v2", gradcheck::random_tensor({4, 4, 2}, rng));
  block.g2 = &params.add("g2", gradcheck::random_tensor({4}, rng));
  block.projection = &params.add("proj", gradcheck::random_tensor({4, 2, 1}, rng));
  const Tensor x = gradcheck::random_tensor({2, 12}, rng);
  Graph g;
  const Tensor base = tcn_block_forward(g, g.input(x), block, 2).value();
  CHECK(base.shape() == Shape{4, 12});
  for (std::size_t p = 0; p < 12; ++p) {
    Tensor y = x;
    y.at({0, p}) += 3.0;
    y.at({1, p}) -= 2.0;
    Graph h;
    const Tensor out = tcn_block_forward(h, h.input(y), block, 2).value();
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t t = 0; t < p; ++t) CHECK(out.at({c, t}) == base.at({c, t}));
    }
  }

  TcnBlock missing = block;
  missing.projection = nullptr;
  Graph e;
  CHECK_THROWS_AS(tcn_block_forward(e, e.input(x), missing, 1), ShapeError);
}

TEST_CASE("deeptcn input width and projections") {
  FeatureLayout layout;
  layout.num_channels = 13;
  layout.cat_names = {"weather", "month", "day_of_week", "hour"};
  layout.cat_cardinality = {21, 12, 7, 24};
  DeepTcn model(layout, ModelConfig{}, 3);
  CHECK(model.input_channels() == 13 + 10);
  CHECK(model.receptive_field() == 31);
  const auto& blocks = model.blocks();
  REQUIRE(blocks.size() == 4);
  CHECK(blocks[0].projection != nullptr);
  CHECK(blocks[1].projection == nullptr);
  CHECK(blocks[2].projection != nullptr);
  CHECK(blocks[3].projection == nullptr);
  CHECK(model.parameters().find("embed.hour").value.shape() == Shape{24, 4});
  CHECK(model.parameters().find("embed.weather").value.shape() == Shape{21, 2});
}

TEST_CASE("deeptcn head constant when weights are zero") {
  std::mt19937_64 rng(4);
  const auto layout = fixtures::small_layout(24);
  DeepTcn model(layout, fixtures::small_config(), 5);
  // Zero everything but the conv directions, which must keep a nonzero norm.
  fill(model.parameters(), 0.0);
  for (auto& p : model.parameters()) {
    if (p->name.find(".v") != std::string::npos) p->value = gradcheck::random_tensor(p->value.shape(), rng);
  }
  model.parameters().find("head.b").value[0] = 1.75;
  for (int i = 0; i < 5; ++i) CHECK(forward_one(model, fixtures::random_batch(layout, 3, rng), 1) == 1.75);
}

TEST_CASE("deeptcn receptive field is 31 steps") {
  // Positive weights and inputs keep every ReLU active, so any position the
  // output can see strictly raises it when increased.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(0.1, 1.0);
  const std::size_t T = 40;
  auto layout = fixtures::small_layout(T);
  layout.cat_names.clear();
  layout.cat_cardinality.clear();
  DeepTcn model(layout, fixtures::small_config(), 7);
  for (auto& p : model.parameters()) {
    for (auto& v : p->value.values()) v = pos(rng);
  }
  Batch base = fixtures::random_batch(layout, 1, rng);
  for (auto& v : base.x_num.values()) v = pos(rng);
  const double y0 = forward_one(model, base);
  for (std::size_t p = 0; p < T; ++p) {
    Batch b = base;
    for (std::size_t c = 0; c < layout.num_channels; ++c) b.x_num.at({0, c, p}) += 5.0;
    CAPTURE(p);
    if (p + model.receptive_field() >= T) {
      CHECK(forward_one(model, b) > y0);
    } else {
      CHECK(forward_one(model, b) == y0);
    }
  }
  CHECK(T - model.receptive_field() == 9);
}

TEST_CASE("bpnn hand-computed outputs") {
  FeatureLayout layout;
  layout.num_channels = 3;
  layout.history = 2;
  ModelConfig cfg;
  Bpnn zero(layout, cfg, 1);
  fill(zero.parameters(), 0.0);
  std::mt19937_64 rng(8);
  const auto b = fixtures::random_batch(layout, 2, rng);
  CHECK(forward_one(zero, b, 0) == 0.0);

  layout.num_channels = 1;
  layout.history = 1;
  cfg.bpnn_hidden = 1;
  Bpnn one(layout, cfg, 1);
  one.parameters().find("bpnn.w1").value[0] = 1.0;
  one.parameters().find("bpnn.b1").value[0] = 0.0;
  one.parameters().find("bpnn.w0").value[0] = 2.5;
  one.parameters().find("bpnn.b0").value[0] = -0.25;
  Batch x;
  x.size = 1;
  x.steps = 1;
  x.x_num = Tensor::filled({1, 1, 1}, 0.0);
  CHECK(forward_one(one, x) == doctest::Approx(2.5 * 0.5 - 0.25).epsilon(1e-15));
}

TEST_CASE("lstm cell hand-computed states") {
  FeatureLayout layout;
  layout.num_channels = 3;
  ModelConfig cfg;
  cfg.rnn_hidden = 4;
  Lstm cell(layout, cfg, 1);
  fill(cell.parameters(), 0.0);
  Graph g;
  std::mt19937_64 rng(9);
  const Var x = g.input(gradcheck::random_tensor({2, 3}, rng));
  const auto s = cell.step(g, x, {g.input(Tensor::filled({2, 4}, 0.0)), g.input(Tensor::filled({2, 4}, 0.0))});
  for (double v : s.c.value().values()) CHECK(v == 0.0);
  for (double v : s.h.value().values()) CHECK(v == 0.0);

  // Saturated forget gate and closed input gate: the cell keeps its memory.
  fixtures::randomise(cell.parameters(), rng);
  for (auto& v : cell.parameters().find("lstm.wf").value.values()) v = 0.0;
  for (auto& v : cell.parameters().find("lstm.wi").value.values()) v = 0.0;
  for (auto& v : cell.parameters().find("lstm.bf").value.values()) v = 60.0;
  for (auto& v : cell.parameters().find("lstm.bi").value.values()) v = -60.0;
  Graph g2;
  const Tensor c0 = gradcheck::random_tensor({2, 4}, rng);
  const auto s2 = cell.step(g2, g2.input(gradcheck::random_tensor({2, 3}, rng)),
                            {g2.input(gradcheck::random_tensor({2, 4}, rng)), g2.input(c0)});
  for (std::size_t i = 0; i < c0.size(); ++i) CHECK(s2.c.value()[i] == doctest::Approx(c0[i]).epsilon(1e-14));

  Graph g3;
  const Var gates = g3.input(Tensor::scalar(0.0));
  CHECK(ad::sigmoid(gates).value().item() == 0.5);
}

TEST_CASE("gru cell hand-computed states") {
  FeatureLayout layout;
  layout.num_channels = 2;
  ModelConfig cfg;
  cfg.rnn_hidden = 3;
  Gru cell(layout, cfg, 1);
  fill(cell.parameters(), 0.0);
  std::mt19937_64 rng(10);
  Graph g;
  const Var h = cell.step(g, g.input(gradcheck::random_tensor({2, 2}, rng)), g.input(Tensor::filled({2, 3}, 0.0)));
  for (double v : h.value().values()) CHECK(v == 0.0);

  // A closed update gate (z -> 0) keeps the previous state.
  fixtures::randomise(cell.parameters(), rng);
  auto& wz = cell.parameters().find("gru.wz").value;
  for (std::size_t u = 0; u < 3; ++u) {
    for (std::size_t j = 0; j < 5; ++j) wz.at({u, j}) = j < 3 ? 0.0 : -80.0;
  }
  Graph g2;
  const Tensor h0 = gradcheck::random_tensor({2, 3}, rng);
  const Var h1 = cell.step(g2, g2.input(Tensor::filled({2, 2}, 1.0)), g2.input(h0));
  for (std::size_t i = 0; i < h0.size(); ++i) CHECK(h1.value()[i] == doctest::Approx(h0[i]).epsilon(1e-14));
}

TEST_CASE("sigmoid head bounds recurrent outputs") {
  auto layout = fixtures::small_layout(3);
  auto cfg = fixtures::small_config();
  cfg.literal_sigmoid_head = true;
  std::mt19937_64 rng(11);
  for (auto kind : {ModelKind::LSTM, ModelKind::GRU}) {
    auto m = make_forecaster(kind, layout, cfg, 3);
    fixtures::randomise(m->parameters(), rng, 3.0);
    Graph g(false);
    for (double v : m->forward(g, fixtures::random_batch(layout, 8, rng)).value().values()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("model gradients match finite differences") {
  const std::pair<ModelKind, std::size_t> cases[] = {
      {ModelKind::DeepTCN, 6}, {ModelKind::BPNN, 3}, {ModelKind::LSTM, 3}, {ModelKind::GRU, 3}};
  std::uint64_t seed = 40;
  for (auto [kind, steps] : cases) {
    CAPTURE(model_kind_name(kind));
    const auto s = gradcheck::repeat(
        100, [kind = kind, steps = steps](std::mt19937_64& rng) { return fixtures::model_gradcheck(kind, steps, rng); },
        seed++);
    CHECK(s.trials == 100);
    CHECK(s.max_rel_error < 1e-4);
  }
}

TEST_CASE("forward passes are deterministic") {
  const auto layout = fixtures::small_layout(6);
  for (auto kind : {ModelKind::DeepTCN, ModelKind::BPNN, ModelKind::LSTM, ModelKind::GRU}) {
    std::mt19937_64 r1(5), r2(5);
    auto a = make_forecaster(kind, layout, fixtures::small_config(), 9);
    auto b = make_forecaster(kind, layout, fixtures::small_config(), 9);
    const auto batch = fixtures::random_batch(layout, 4, r1);
    Graph ga(false), gb(false);
    const auto va = a->forward(ga, batch).value().values();
    const auto vb = b->forward(gb, batch).value().values();
    CHECK(std::vector<double>(va.begin(), va.end()) == std::vector<double>(vb.begin(), vb.end()));
  }
  CHECK_THROWS(make_forecaster(ModelKind::LR, layout, fixtures::small_config(), 1));
}

TEST_CASE("out-of-vocabulary code is an index error") {
  const auto layout = fixtures::small_layout(4);
  std::mt19937_64 rng(12);
  auto m = make_forecaster(ModelKind::DeepTCN, layout, fixtures::small_config(), 1);
  auto batch = fixtures::random_batch(layout, 1, rng);
  batch.x_cat[0][2] = 5;
  Graph g;
  CHECK_THROWS_AS(m->forward(g, batch), IndexError);
}

TEST_CASE("model config validation") {
  ModelConfig c;
  c.channels = {32, 32, 16};
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = {};
  c.kernel_size = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  CHECK(ModelConfig{}.embedding_size("hour") == 4);
  CHECK(parse_model_kind("GRU") == ModelKind::GRU);
  CHECK_THROWS(parse_model_kind("ARIMA"));
}

TEST_CASE("linear regression") {
  LRParams p;
  p.intercept = 1.0;
  p.coef = {2.0};
  CHECK(p.predict(std::vector<double>{3.0}) == 7.0);

  std::vector<double> rows, y;
  for (int i = 0; i < 20; ++i) {
    rows.push_back(i * 0.5);
    y.push_back(2.0 * i * 0.5);
  }
  const auto exact = lr_fit(rows, 1, y);
  CHECK(std::fabs(exact.coef[0] - 2.0) < 1e-8);
  CHECK(std::fabs(exact.intercept) < 1e-8);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::fabs(exact.predict(std::span(rows).subspan(i, 1)) - y[i]) < 1e-8);

  // Five points, two features: solve (X'X + rI) b = X'y by Gaussian elimination.
  const std::vector<double> X{1.0, 2.0, 2.0, -1.0, 3.0, 0.5, 4.0, 4.0, 5.0, -2.0};
  const std::vector<double> Y{3.1, 1.9, 4.4, 8.2, 4.8};
  const double ridge = 1e-8;
  double A[3][4] = {};
  for (int i = 0; i < 5; ++i) {
    const double r[3] = {1.0, X[2 * i], X[2 * i + 1]};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) A[a][b] += r[a] * r[b];
      A[a][3] += r[a] * Y[i];
    }
  }
  for (int a = 0; a < 3; ++a) A[a][a] += ridge;
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
    }
    for (int k = 0; k < 4; ++k) std::swap(A[col][k], A[piv][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      for (int k = 0; k < 4; ++k) A[r][k] -= f * A[col][k];
    }
  }
  const auto fit = lr_fit(X, 2, Y, ridge);
  CHECK(std::fabs(fit.intercept - A[0][3] / A[0][0]) < 1e-8);
  CHECK(std::fabs(fit.coef[0] - A[1][3] / A[1][1]) < 1e-8);
  CHECK(std::fabs(fit.coef[1] - A[2][3] / A[2][2]) < 1e-8);
}

TEST_CASE("linear regression on windows") {
  const auto f = synth_generate(200, 3);
  const auto enc = fit_encoders(f, {0, 200});
  const auto y = f.column("pm25").values;
  const auto data = make_windows(f, enc, y, 24, 1);
  const std::size_t k = lr_feature_count(data);
  CHECK(k == 24 * data.num_channels() + 20 + 12 + 7 + 24);
  CHECK(lr_features(data, 3).size() == k);

  // Target is an exact linear function of the features: zero training error.
  SupervisedDataset exact = data;
  for (std::size_t i = 0; i < exact.size(); ++i) exact.y[i] = 3.0 + 0.5 * exact.num(i, 23, 0) - 2.0 * exact.num(i, 10, 3);
  LinearRegression lr;
  lr.fit(exact);
  const auto pred = lr.predict(exact);
  double mae = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) mae += std::fabs(pred[i] - exact.y[i]);
  CHECK(mae / static_cast<double>(pred.size()) < 1e-8);
  const auto params = lr.to_parameters();
  CHECK(params.size() == 2);
}
