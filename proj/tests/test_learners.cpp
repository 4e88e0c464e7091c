#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hvsim/data_rate_model.hpp"
#include "hvsim/features.hpp"
#include "hvsim/forest.hpp"
#include "hvsim/gpr.hpp"
#include "support.hpp"

using namespace hvsim;

namespace {

Dataset separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::uniform_real_distribution<double> low(-5.0, 5.0), high(15.0, 25.0);
  Dataset d{3, {}, {}};
  for (std::size_t k = 0; k < n; ++k) {
    const bool positive = k % 2 == 0;
    const double sinr = positive ? high(rng) : low(rng);
    const std::array<double, 3> row{noise(rng), sinr, noise(rng)};
    d.add(row, positive ? 1.0 : 0.0);
  }
  return d;
}

/// log N(y | m, K) by Gaussian elimination with partial pivoting.
double gaussian_log_density(std::vector<std::vector<double>> k, std::vector<double> r) {
  const std::size_t n = r.size();
  std::vector<double> r0 = r;
  double log_det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t i = c + 1; i < n; ++i) {
      if (std::abs(k[i][c]) > std::abs(k[p][c])) p = i;
    }
    std::swap(k[c], k[p]);
    std::swap(r[c], r[p]);
    log_det += std::log(std::abs(k[c][c]));
    for (std::size_t i = c + 1; i < n; ++i) {
      const double f = k[i][c] / k[c][c];
      for (std::size_t j = c; j < n; ++j) k[i][j] -= f * k[c][j];
      r[i] -= f * r[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = r[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= k[i][j] * x[j];
    x[i] = s / k[i][i];
  }
  const double quad = std::inner_product(r0.begin(), r0.end(), x.begin(), 0.0);
  return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

double se(double a, double b, const GprHyperparams& hp) {
  return hp.signal_std * hp.signal_std * std::exp(-(a - b) * (a - b) / (2.0 * hp.length_scale * hp.length_scale));
}

double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Solves a 3x3 system by Cramer's rule.
std::array<double, 3> cramer(const std::array<std::array<double, 3>, 3>& m, const std::array<double, 3>& b) {
  const double d = det3(m);
  std::array<double, 3> x{};
  for (int c = 0; c < 3; ++c) {
    auto mc = m;
    for (int r = 0; r < 3; ++r) mc[r][c] = b[r];
    x[c] = det3(mc) / d;
  }
  return x;
}

}  // namespace

// ------------------------------------------------------------------ forest

TEST_CASE("depth zero trees predict the label mean") {
  // Each tree sees a bootstrap resample, so its single leaf holds that
  // resample's mean; the forest average converges to the global mean.
  const Dataset d = separable(400, 1);
  const auto model = train_forest(d, {400, 0, 1, 0}, 3);
  for (const auto& t : model.trees()) {
    REQUIRE(t.depth() == 0);
    CHECK(t.nodes()[0].count == 400);
  }
  CHECK(model.predict(d.row(0)) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(model.predict(d.row(0)) == model.predict(d.row(1)));

  Dataset constant{1, {}, {}};
  for (int k = 0; k < 10; ++k) constant.add(std::array<double, 1>{double(k)}, 4.0);
  CHECK(train_forest(constant, {3, 0, 1, 0}, 1).predict(std::array<double, 1>{2.0}) == 4.0);
}

TEST_CASE("separable fixture is learned exactly") {
  const Dataset d = separable(100, 5);
  const auto model = train_forest(d, {25, 3, 1, 3}, 9);
  int correct = 0;
  for (std::size_t k = 0; k < d.size(); ++k) correct += std::round(model.predict(d.row(k))) == d.y[k] ? 1 : 0;
  CHECK(correct == 100);
}

TEST_CASE("forest predictions stay within the label range and are deterministic") {
  const auto samples = test::small_campaign(10, 2);
  const auto ul = filter_direction(samples, Direction::uplink);
  const auto feats = model_features(ul, nullptr);
  const auto enc = FeatureEncoder::fit(feats);
  const Dataset d = encode_dataset(enc, feats, ul);
  const auto a = train_forest(d, {20, 8, 3, 0}, 77);
  const auto b = train_forest(d, {20, 8, 3, 0}, 77);
  const auto lo = *std::min_element(d.y.begin(), d.y.end());
  const auto hi = *std::max_element(d.y.begin(), d.y.end());
  std::mt19937_64 rng(1);
  for (int q = 0; q < 200; ++q) {
    const auto row = d.row(rng() % d.size());
    std::vector<double> x(row.begin(), row.end());
    x[2] += std::uniform_real_distribution<double>(-20, 20)(rng);
    const double p = a.predict(x);
    CHECK(p >= lo);
    CHECK(p <= hi);
    CHECK(p == b.predict(x));
  }
  const auto c = train_forest(d, {20, 8, 3, 0}, 78);
  bool any_diff = false;
  for (std::size_t k = 0; k < 50; ++k) any_diff |= a.predict(d.row(k)) != c.predict(d.row(k));
  CHECK(any_diff);
}

TEST_CASE("forest output is the average of its trees") {
  const RegressionTree t1({TreeNode{-1, 0, -1, -1, 3.0, 1}});
  const RegressionTree t2({TreeNode{0, 0.5, 1, 2, 3.0, 2}, TreeNode{-1, 0, -1, -1, 1.0, 1},
                           TreeNode{-1, 0, -1, -1, 5.0, 1}});
  const RegressionTree t3({TreeNode{-1, 0, -1, -1, 6.0, 1}});
  const ForestModel f(1, {t1, t2, t3});
  CHECK(f.predict(std::array<double, 1>{0.0}) == doctest::Approx(10.0 / 3.0));
  CHECK(f.predict(std::array<double, 1>{0.5}) == doctest::Approx(10.0 / 3.0));
  CHECK(f.predict(std::array<double, 1>{0.7}) == doctest::Approx(14.0 / 3.0));
  CHECK(f.tree_outputs(std::array<double, 1>{1.0}) == std::vector<double>{3.0, 5.0, 6.0});
  const ForestModel single(1, {RegressionTree({TreeNode{-1, 0, -1, -1, 5.0, 1}})});
  CHECK(single.predict(std::array<double, 1>{123.0}) == 5.0);
  CHECK_THROWS_AS(single.predict(std::array<double, 2>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("forest JSON round trip") {
  const Dataset d = separable(60, 3);
  const auto m = train_forest(d, {7, 4, 2, 0}, 5);
  const auto back = ForestModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(back.predict(d.row(k)) == m.predict(d.row(k)));
}

TEST_CASE("forest rejects bad training input") {
  Dataset empty{2, {}, {}};
  CHECK_THROWS_AS(train_forest(empty, {}, 0), std::invalid_argument);
  Dataset neg{1, {}, {}};
  neg.add(std::array<double, 1>{1.0}, -1.0);
  CHECK_THROWS_AS(train_forest(neg, {}, 0), std::invalid_argument);
  Dataset ok{1, {}, {}};
  ok.add(std::array<double, 1>{1.0}, 1.0);
  CHECK_THROWS_AS(train_forest(ok, {0, 3, 1, 0}, 0), std::invalid_argument);
}

// -------------------------------------------------------------------- GPR

TEST_CASE("log marginal likelihood equals a hand Gaussian log-density") {
  const std::vector<double> x{0.0, 1.0, 2.5, 4.0, 7.0};
  const std::vector<double> y{1.0, 2.0, 1.5, 3.5, 2.0};
  const GprHyperparams hp{1.7, 1.3, 0.4};
  const double m = 2.0;
  std::vector<std::vector<double>> k(5, std::vector<double>(5));
  std::vector<double> r(5);
  for (int i = 0; i < 5; ++i) {
    r[i] = y[i] - m;
    for (int j = 0; j < 5; ++j) k[i][j] = se(x[i], x[j], hp) + (i == j ? hp.noise_std * hp.noise_std : 0.0);
  }
  const double want = gaussian_log_density(k, r);
  CHECK(gp_log_marginal_likelihood(x, y, hp, m) == doctest::Approx(want).epsilon(1e-12));
  CHECK(GprModel(x, y, hp, m).log_marginal_likelihood() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("three point posterior equals the closed-form solve") {
  const std::vector<double> x{1.0, 2.0, 4.0};
  const std::vector<double> y{3.0, 5.0, 4.0};
  const GprHyperparams hp{1.5, 2.0, 0.3};
  const GprModel model(x, y, hp);
  const double m = 4.0;
  CHECK(model.prior_mean() == doctest::Approx(m));
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k[i][j] = se(x[i], x[j], hp) + (i == j ? 0.09 : 0.0);
  }
  for (double q : {0.0, 1.0, 2.7, 5.0}) {
    const std::array<double, 3> ks{se(q, x[0], hp), se(q, x[1], hp), se(q, x[2], hp)};
    const auto w = cramer(k, {y[0] - m, y[1] - m, y[2] - m});
    const auto v = cramer(k, ks);
    const double mean = m + ks[0] * w[0] + ks[1] * w[1] + ks[2] * w[2];
    const double var = 4.0 + 0.09 - (ks[0] * v[0] + ks[1] * v[1] + ks[2] * v[2]);
    const auto p = model.posterior(q);
    CHECK(p.mean == doctest::Approx(mean).epsilon(1e-10));
    CHECK(p.std == doctest::Approx(std::sqrt(var)).epsilon(1e-10));
  }
}

TEST_CASE("posterior limits") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  SUBCASE("far field reverts to the prior") {
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0, 5.0};
    const GprHyperparams hp{1.0, 2.0, 0.5};
    const GprModel model(x, y, hp);
    const auto p = model.posterior(1e3);
    CHECK(p.mean == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.std == doctest::Approx(std::sqrt(4.0 + 0.25)).epsilon(1e-12));
  }
  SUBCASE("interpolation with vanishing noise") {
    const std::vector<double> y{1.0, 3.0, 5.0, 7.0, 9.0};
    const GprModel model(x, y, {2.0, 5.0, 1e-5});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(model.posterior(x[i]).mean - y[i]) < 1e-6);
  }
  SUBCASE("constant targets") {
    const std::vector<double> y(5, 6.5);
    const auto model = train_gpr(x, y);
    for (double q : {0.5, 2.0, 3.7}) CHECK(model.posterior(q).mean == doctest::Approx(6.5).epsilon(1e-9));
  }
}

TEST_CASE("training picks finite hyperparameters and needs five pairs") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.5);
  std::vector<double> s, t;
  for (int k = 0; k < 300; ++k) {
    s.push_back(k * 0.05);
    t.push_back(std::max(0.0, 0.8 * s.back() + 1.0 + n(rng)));
  }
  const auto model = train_gpr(s, t, {std::nullopt, 500, 200, 3});
  CHECK(std::isfinite(model.log_marginal_likelihood()));
  CHECK(model.hyperparams().noise_std > 0.0);
  CHECK(model.posterior(7.5).mean == doctest::Approx(7.0).epsilon(0.1));
  const auto back = GprModel::from_json(nlohmann::json::parse(model.to_json().dump()));
  CHECK(back.posterior(3.3).mean == doctest::Approx(model.posterior(3.3).mean).epsilon(1e-12));
  const std::vector<double> four{1, 2, 3, 4};
  CHECK_THROWS_AS(train_gpr(four, four), std::invalid_argument);
}

TEST_CASE("clamped sampling") {
  Rng rng(1);
  const Rng before = rng;
  CHECK(sample_clamped_normal(2.5, 0.0, rng) == 2.5);
  CHECK(sample_clamped_normal(-2.5, 0.0, rng) == 0.0);
  CHECK(rng == before);
  for (int k = 0; k < 1000; ++k) CHECK(sample_clamped_normal(-3.0, 1.0, rng) >= 0.0);
  int zeros = 0;
  for (int k = 0; k < 1000; ++k) zeros += sample_clamped_normal(-10.0, 1.0, rng) == 0.0 ? 1 : 0;
  CHECK(zeros == 1000);
}

// ---------------------------------------------------------- features/model

TEST_CASE("feature encoder") {
  std::vector<FeatureVector> rows(3);
  rows[0].cell_id = 30;
  rows[1].cell_id = 10;
  rows[2].cell_id = 30;
  const auto enc = FeatureEncoder::fit(rows);
  CHECK(enc.vocabulary_size() == 2);
  CHECK(enc.code(10) == 0.0);
  CHECK(enc.code(30) == 1.0);
  CHECK(enc.code(99) == 2.0);
  FeatureVector f;
  f.rsrp = -80;
  f.payload = 1000;
  f.cell_id = 30;
  const auto e = enc.encode(f);
  CHECK(e[0] == -80.0);
  CHECK(e[6] == 1.0);
  CHECK(e[7] == 1000.0);
  CHECK(FeatureEncoder::from_json(enc.to_json()).vocabulary_size() == 2);
}

TEST_CASE("data rate model trains, predicts identically for identical inputs and round trips") {
  const auto samples = test::small_campaign(12, 4);
  const Rem rem = build_rem(samples, 25.0);
  TrainOptions opt;
  opt.forest.num_trees = 15;
  opt.seed = 5;
  const auto model = train_data_rate_model(samples, Direction::downlink, &rem, opt);
  CHECK(model.direction == Direction::downlink);
  CHECK(model.derivation.trained());
  const auto feats = model_features(filter_direction(samples, Direction::downlink), &rem);
  const auto back = DataRateModel::from_json(nlohmann::json::parse(model.to_json().dump()));
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(model.predict(feats[k]) == model.predict(feats[k]));
    CHECK(back.predict(feats[k]) == model.predict(feats[k]));
  }
  const auto again = train_data_rate_model(samples, Direction::downlink, &rem, opt);
  CHECK(again.to_json() == model.to_json());
  const std::vector<MeasurementSample> few(samples.begin(), samples.begin() + 6);
  CHECK_THROWS_AS(train_data_rate_model(few, Direction::uplink, nullptr, opt), std::invalid_argument);
}
