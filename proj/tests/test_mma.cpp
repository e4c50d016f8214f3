#include <doctest.h>

#include <Eigen/Dense>

#include "selpred/loss.hpp"
#include "selpred/maximizers.hpp"
#include "selpred/mma.hpp"
#include "selpred/rng.hpp"

using namespace selpred;

namespace {

std::shared_ptr<const FiniteClass> make_class(std::vector<double> domain,
                                              std::vector<std::vector<std::uint8_t>> table) {
  return std::make_shared<const FiniteClass>(std::move(domain), std::move(table));
}

std::shared_ptr<const FiniteClass> random_class(RngStream& rng, std::size_t domain, std::size_t rows) {
  std::vector<double> codes;
  for (std::size_t i = 0; i < domain; ++i) codes.push_back(static_cast<double>(i));
  std::vector<std::vector<std::uint8_t>> table;
  rows = std::min(rows, std::size_t{1} << domain); // distinct rows cap
  while (table.size() < rows) {
    std::vector<std::uint8_t> row(domain);
    for (auto& v : row) v = static_cast<std::uint8_t>(rng.next_below(2));
    bool dup = false;
    for (const auto& e : table) dup = dup || e == row;
    if (!dup) table.push_back(std::move(row));
  }
  return std::make_shared<const FiniteClass>(std::move(codes), std::move(table));
}

struct Instance {
  std::shared_ptr<const FiniteClass> cls;
  LabeledDataset train;
  std::vector<FeaturePoint> test;
  Hypothesis h;
  Hypothesis f;
};

Instance random_instance(RngStream& rng, std::size_t domain, std::size_t rows, std::size_t n_train,
                         std::size_t n_test) {
  auto cls = random_class(rng, domain, rows);
  const Hypothesis f{FiniteMember{cls, rng.next_below(cls->size())}};
  std::vector<FeaturePoint> xs, test;
  std::vector<Label> ys;
  for (std::size_t i = 0; i < n_train; ++i) {
    xs.push_back(scalar_point(static_cast<double>(rng.next_below(domain))));
    ys.push_back(f(xs.back()));
  }
  for (std::size_t i = 0; i < n_test; ++i)
    test.push_back(scalar_point(static_cast<double>(rng.next_below(domain))));
  LabeledDataset train(xs, ys);
  const Hypothesis h = erm_weighted(HypothesisClass{cls}, train, LossKind::ZeroOne);
  return Instance{cls, std::move(train), std::move(test), h, f};
}

double exact_worst_loss(const Instance& inst, const AbstentionVector& a, AbstainCost c) {
  return brute_force_maximize_classification(inst.cls, inst.train, inst.test, inst.h, a, c).value;
}

} // namespace

TEST_CASE("separation oracle: box violations come first") {
  Eigen::VectorXd a(2);
  a << 1.5, 0.2;
  const auto v = box_violation(a);
  REQUIRE(v.has_value());
  CHECK((*v)(0) == 1.0);
  CHECK((*v)(1) == 0.0);

  a << 0.2, -0.3;
  const auto w = box_violation(a);
  REQUIRE(w.has_value());
  CHECK((*w)(0) == 0.0);
  CHECK((*w)(1) == -1.0);

  a << 0.0, 1.0;
  CHECK_FALSE(box_violation(a).has_value());
}

TEST_CASE("separation oracle: separator from a g = h witness is the constant c vector") {
  const std::vector<double> zero_losses(4, 0.0);
  const Eigen::VectorXd v = loss_separator(zero_losses, 0.3);
  for (int i = 0; i < 4; ++i) CHECK(v(i) == doctest::Approx(0.3));
}

TEST_CASE("mma on a singleton version space abstains nowhere") {
  const auto cls = make_class({0, 1, 2}, {{0, 1, 1}});
  std::vector<FeaturePoint> xs{scalar_point(0), scalar_point(1)};
  const LabeledDataset train(xs, {0, 1});
  const Hypothesis h{FiniteMember{cls, 0}};
  std::vector<FeaturePoint> test{scalar_point(2), scalar_point(0)};

  const MmaResult res = mma_classification_exact(cls, train, test, h, AbstainCost(0.5));
  CHECK(res.witness_loss <= 1e-12);
  CHECK(res.certified_bound <= 0.5 + 1e-12);
  CHECK(res.a.mass() <= 0.51); // abstaining is harmless but pointless here
  CHECK(res.witness_loss + 1e-12 >= res.lower_bound);
}

TEST_CASE("mma n=1 with a fully ambiguous test point prefers abstention") {
  // Version space contains both labels for the test point; worst-case error 1.
  const auto cls = make_class({0, 1}, {{0, 0}, {0, 1}});
  std::vector<FeaturePoint> xs{scalar_point(0)};
  const LabeledDataset train(xs, {0});
  const Hypothesis h{FiniteMember{cls, 0}};
  std::vector<FeaturePoint> test{scalar_point(1)};
  const AbstainCost c(0.3);

  const MmaResult res = mma_classification_exact(cls, train, test, h, c);

  const auto exact = [&](const AbstentionVector& a) {
    return brute_force_maximize_classification(cls, train, test, h, a, c).value;
  };
  const GridSearchResult grid = grid_search_min(1, exact, 1e-3);
  CHECK(grid.value == doctest::Approx(0.3).epsilon(1e-12)); // abstain fully
  CHECK(res.certified_bound <= grid.value + 1.0 + 2e-3);    // 1/n = 1 here
  CHECK(res.certified_bound <= 0.35);                       // and in fact it gets close
  CHECK(res.a[0] >= 0.8);
}

TEST_CASE("mma certified bound is within 1/n + 2e-3 of the grid optimum (n <= 3)") {
  RngStream rng(29);
  const AbstainCost c(0.35);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng.next_below(3);
    const Instance inst = random_instance(rng, 3 + rng.next_below(2), 3 + rng.next_below(10), 4, n);
    const MmaResult res = mma_classification_exact(inst.cls, inst.train, inst.test, inst.h, c);
    const GridSearchResult grid = grid_search_min(
        static_cast<int>(n), [&](const AbstentionVector& a) { return exact_worst_loss(inst, a, c); },
        1e-3);
    CHECK(res.certified_bound <= grid.value + 1.0 / static_cast<double>(n) + 2e-3);
    // The certified bound really is an upper bound on the worst case at a-hat.
    CHECK(exact_worst_loss(inst, res.a, c) <= res.certified_bound + 1e-12);
  }
}

TEST_CASE("mma with FLIP: soundness of the certificate against the true target") {
  RngStream rng(43);
  const AbstainCost c(0.45);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rng.next_below(8);
    const Instance inst = random_instance(rng, 4, 10, n, n);
    const MmaResult res =
        mma_classification(HypothesisClass{inst.cls}, inst.train, inst.test, inst.h, c);
    const double realized = abstention_loss(
        point_losses(inst.f, inst.h, inst.test, LossKind::ZeroOne), res.a, c);
    CHECK(realized <= res.certified_bound + 1e-12);
    CHECK(res.lower_bound <= res.certified_bound + 1e-12);
  }
}

TEST_CASE("grid_search_min basics") {
  const auto quadratic = [](const AbstentionVector& a) {
    double s = 0.0;
    for (double v : a.probs) s += (v - 0.37) * (v - 0.37);
    return s;
  };
  const GridSearchResult r1 = grid_search_min(2, quadratic, 1e-2);
  CHECK(r1.a[0] == doctest::Approx(0.37).epsilon(0.02));
  CHECK(r1.a[1] == doctest::Approx(0.37).epsilon(0.02));

  const GridSearchResult r3 = grid_search_min(3, quadratic, 1e-3);
  for (int k = 0; k < 3; ++k) CHECK(r3.a[static_cast<std::size_t>(k)] == doctest::Approx(0.37).epsilon(0.005));

  CHECK_THROWS_AS(grid_search_min(4, quadratic, 1e-2), CapacityError);
}

TEST_CASE("joint selective prediction never loses to the fixed-h variant") {
  RngStream rng(53);
  const AbstainCost c(0.4);
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t n = 3 + rng.next_below(4);
    const Instance inst = random_instance(rng, 4, 12, n, n);
    const JointSelection joint =
        joint_selective_prediction(inst.cls, inst.train, inst.test, c);

    for (std::size_t r : consistent_rows(*inst.cls, inst.train)) {
      const Hypothesis h{FiniteMember{inst.cls, r}};
      const MmaResult fixed =
          mma_classification(HypothesisClass{inst.cls}, inst.train, inst.test, h, c);
      CHECK(joint.result.certified_bound <= fixed.certified_bound + 1e-12);
    }
  }

  // Strictness: with expensive abstention the middle row has worst-case
  // simultaneous disagreement 1 while the outer rows face 2, so the joint
  // choice beats the fixed h = row A strictly.
  {
    const auto cls = make_class({0, 1, 2}, {{0, 0, 0}, {0, 1, 1}, {0, 1, 0}});
    const LabeledDataset train({scalar_point(0), scalar_point(0)}, {0, 0});
    std::vector<FeaturePoint> test{scalar_point(1), scalar_point(2)};
    const AbstainCost expensive(0.9);
    const JointSelection joint = joint_selective_prediction(cls, train, test, expensive);
    const MmaResult fixed_a = mma_classification(HypothesisClass{cls}, train, test,
                                                 Hypothesis{FiniteMember{cls, 0}}, expensive);
    CHECK(joint.result.certified_bound < fixed_a.certified_bound - 0.1);
    CHECK(joint.h.finite_member()->index == 2);
  }

  const auto cls = make_class({0, 1}, {{0, 0}});
  const LabeledDataset impossible({scalar_point(0)}, {1});
  CHECK_THROWS_AS(joint_selective_prediction(cls, impossible, std::vector<FeaturePoint>{scalar_point(1)}, c),
                  InfeasibleError);
}

TEST_CASE("mma_regression returns raw-scale bounds and a sound certificate") {
  RngStream rng(61);
  const int d = 2;
  auto ball_point = [&]() {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian();
    return FeaturePoint(v * (0.9 * rng.next_double() / std::max(v.norm(), 1e-12)));
  };
  std::vector<FeaturePoint> train, test;
  for (int i = 0; i < 10; ++i) train.push_back(ball_point());
  for (int i = 0; i < 6; ++i) test.push_back(ball_point());
  Eigen::VectorXd wh(d);
  wh << 0.2, -0.1;
  const Hypothesis h{LinearPredictor{wh}};
  const double alpha = 0.3;

  const MmaResult res = mma_regression(train, h, test, AbstainCost(0.5), alpha);
  CHECK(res.witness_loss <= res.certified_bound);
  CHECK(res.certified_bound <= 4.0 + 1.0); // raw squared-loss scale

  // Any version-space member's abstention-weighted loss stays under the bound.
  const CdtProblem problem =
      regression_max_problem(train, h, test, res.a, alpha);
  const RegressionMax bf = brute_force_maximize_regression(problem, 77);
  double worst = 0.0;
  {
    const Hypothesis g{LinearPredictor{bf.w}};
    const auto losses = point_losses(g, h, test, LossKind::Squared);
    worst = abstention_loss(losses, res.a, AbstainCost(0.5));
  }
  CHECK(worst <= res.certified_bound + 1e-6);
}
