#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "selpred/loss.hpp"
#include "selpred/maximizers.hpp"
#include "selpred/regression.hpp"
#include "selpred/rng.hpp"
#include "selpred/shift.hpp"

using namespace selpred;

namespace {

FeaturePoint vec2(double a, double b) {
  FeaturePoint p(2);
  p << a, b;
  return p;
}

} // namespace

TEST_CASE("vs_radius: arithmetic, limit, monotonicity") {
  // n = 64, delta = 3/e^2 makes ln(3/delta) = 2.
  const double delta = 3.0 * std::exp(-2.0);
  CHECK(vs_radius(64, delta) == doctest::Approx(1.25).epsilon(1e-12));

  CHECK(vs_radius(100000000, 0.5) < 1e-3);

  CHECK(vs_radius(100, 0.1) > vs_radius(400, 0.1));
  CHECK(vs_radius(100, 0.01) > vs_radius(100, 0.1));
  CHECK_THROWS_AS(vs_radius(0, 0.1), InvalidInputError);
  CHECK_THROWS_AS(vs_radius(10, 0.0), InvalidInputError);
}

TEST_CASE("build_version_space: noiseless recovery keeps the target inside") {
  RngStream rng(3);
  Eigen::VectorXd wf(3);
  wf << 0.4, -0.2, 0.5;
  std::vector<FeaturePoint> xs;
  std::vector<Label> ys;
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x(j) = rng.next_gaussian();
    x *= 0.95 * rng.next_double() / std::max(x.norm(), 1e-9);
    xs.push_back(x);
    ys.push_back(wf.dot(x));
  }
  const auto [h, vs] = build_version_space(LabeledDataset(xs, ys), 0.1);
  CHECK((h.linear().w - wf).norm() <= 1e-7);
  CHECK(vs.contains(Hypothesis{LinearPredictor{wf}}));
  CHECK(vs.contains(h));
  CHECK(vs.radius == doctest::Approx(vs_radius(30, 0.1)));
}

TEST_CASE("lemma-rad style Monte Carlo at reduced scale") {
  // d=3, n=100, sigma=0.1: the target stays in the version space and a fresh
  // P-sample's worst-case version-space loss stays under 14 epsilon.
  const std::size_t n = 100;
  const double delta = 0.1;
  const int trials = 40;
  RngStream master(17);

  std::vector<FeaturePoint> support;
  std::vector<double> pmf;
  {
    RngStream sup(5);
    for (int i = 0; i < 12; ++i) {
      Eigen::VectorXd x(3);
      for (int j = 0; j < 3; ++j) x(j) = sup.next_gaussian();
      x *= 0.95 * sup.next_double() / std::max(x.norm(), 1e-9);
      support.push_back(x);
      pmf.push_back(1.0 / 12.0);
    }
  }
  const DiscreteDistribution P(support, pmf);

  int inside = 0, bounded = 0;
  const double eps = vs_radius(n, delta);
  for (int t = 0; t < trials; ++t) {
    RngStream rng = master.split(static_cast<std::uint64_t>(t));
    Eigen::VectorXd wf(3);
    for (int j = 0; j < 3; ++j) wf(j) = rng.next_gaussian();
    wf *= 0.85 * rng.next_double() / std::max(wf.norm(), 1e-9);

    auto xs = sample_iid(P, n, rng);
    std::vector<Label> ys;
    for (const auto& x : xs) ys.push_back(wf.dot(x) + (2.0 * rng.next_double() - 1.0) * 0.1);
    const auto [h, vs] = build_version_space(LabeledDataset(xs, ys), delta);

    if (vs.contains(Hypothesis{LinearPredictor{wf}})) inside += 1;

    const auto fresh = sample_iid(P, n, rng);
    const MmaResult worst =
        mma_regression(vs.train_features, h, fresh, AbstainCost(1.0), vs.radius);
    // At a = 0 the certified bound upper-bounds the worst fresh-sample loss;
    // use the witnessed loss at the zero vector from the oracle directly.
    const Hypothesis g = cdt_maximize_regression(vs.train_features, h, fresh,
                                                 AbstentionVector::zeros(n), vs.radius);
    const double fresh_worst = avg_loss(g, h, fresh, LossKind::Squared);
    if (fresh_worst <= 14.0 * eps) bounded += 1;
    (void)worst;
  }
  const double sigma3 = 3.0 * std::sqrt(delta * (1.0 - delta) / trials);
  CHECK(static_cast<double>(inside) / trials >= 1.0 - delta - sigma3);
  CHECK(static_cast<double>(bounded) / trials >= 1.0 - delta - sigma3);
}

TEST_CASE("regression_pipeline: soundness and the blind-spot construction") {
  SUBCASE("P = Q noiseless: realized loss under the certified bound") {
    RngStream rng(23);
    std::vector<FeaturePoint> support;
    std::vector<double> pmf;
    for (int i = 0; i < 8; ++i) {
      Eigen::VectorXd x(2);
      x << rng.next_gaussian(), rng.next_gaussian();
      x *= 0.9 * rng.next_double() / std::max(x.norm(), 1e-9);
      support.push_back(x);
      pmf.push_back(1.0 / 8.0);
    }
    const DiscreteDistribution P(support, pmf);
    Eigen::VectorXd wf(2);
    wf << 0.5, -0.3;
    const Hypothesis f{LinearPredictor{wf}};

    const std::size_t n = 24;
    auto xs = sample_iid(P, n, rng);
    std::vector<Label> ys;
    for (const auto& x : xs) ys.push_back(wf.dot(x));
    const LabeledDataset train(xs, ys);
    const auto test = sample_iid(P, n, rng);

    const RegressionPipelineResult pipe = regression_pipeline(train, test, AbstainCost(1.0), 1.0 / n);
    const double realized =
        abstention_loss(point_losses(f, pipe.h, test, LossKind::Squared), pipe.a, AbstainCost(1.0));
    CHECK(pipe.version_space.contains(f));
    CHECK(realized <= pipe.certified_bound + 1e-9);
  }

  SUBCASE("disjoint-support test direction forces abstention at c = 0.1") {
    // Train only along e1; test mass sits on +-e2 where the version space is
    // maximally ambiguous.
    std::vector<FeaturePoint> train_x{vec2(0.9, 0), vec2(-0.9, 0), vec2(0.45, 0), vec2(-0.45, 0),
                                      vec2(0.7, 0), vec2(-0.7, 0), vec2(0.2, 0), vec2(-0.2, 0)};
    std::vector<Label> train_y;
    Eigen::VectorXd wf(2);
    wf << 0.6, 0.0;
    for (const auto& x : train_x) train_y.push_back(wf.dot(x));
    const LabeledDataset train(train_x, train_y);

    std::vector<FeaturePoint> test{vec2(0, 0.9), vec2(0, -0.9), vec2(0, 0.9), vec2(0, -0.9),
                                   vec2(0, 0.9), vec2(0, -0.9), vec2(0, 0.9), vec2(0, -0.9)};
    const RegressionPipelineResult pipe =
        regression_pipeline(train, test, AbstainCost(0.1), 1.0 / 8.0);
    CHECK(pipe.a.mass() >= 0.9);
  }
}
