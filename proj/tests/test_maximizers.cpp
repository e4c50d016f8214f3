#include <doctest.h>

#include <Eigen/Dense>

#include "selpred/loss.hpp"
#include "selpred/maximizers.hpp"
#include "selpred/rng.hpp"

using namespace selpred;

namespace {

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
  AbstentionVector a;
};

Instance random_instance(RngStream& rng, std::size_t domain, std::size_t rows, std::size_t n) {
  auto cls = random_class(rng, domain, rows);
  const std::size_t target = rng.next_below(cls->size());
  const Hypothesis f{FiniteMember{cls, target}};
  std::vector<FeaturePoint> xs, test;
  std::vector<Label> ys;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(scalar_point(static_cast<double>(rng.next_below(domain))));
    ys.push_back(f(xs.back()));
    test.push_back(scalar_point(static_cast<double>(rng.next_below(domain))));
  }
  LabeledDataset train(xs, ys);
  const Hypothesis h = erm_weighted(HypothesisClass{cls}, train, LossKind::ZeroOne);
  std::vector<double> a(n);
  for (double& v : a) v = rng.next_double();
  return Instance{cls, std::move(train), std::move(test), h, AbstentionVector(a)};
}

} // namespace

TEST_CASE("flip_copies: exact integer floors after rounding") {
  CHECK(flip_copies(10, 1.0) == 0);
  CHECK(flip_copies(10, 0.0) == 30);
  // 3*10*(1-0.9) = 3.0000000000000004 in raw floating arithmetic.
  CHECK(flip_copies(10, 0.9) == 3);
  CHECK(flip_copies(7, 1.0 - 1.0 / 21.0) == 1);
  CHECK(flip_copies(7, 0.5) == 10); // floor(10.5)
  CHECK_THROWS_AS(flip_copies(10, 1.5), InvalidInputError);
}

TEST_CASE("flip_maximize: preconditions and degenerate abstentions") {
  RngStream rng(3);
  const Instance inst = random_instance(rng, 5, 12, 6);

  SUBCASE("inconsistent h is rejected") {
    std::vector<Label> wrong = inst.train.labels;
    wrong[0] = 1.0 - wrong[0];
    const LabeledDataset bad(inst.train.points, wrong);
    CHECK_THROWS_AS(flip_maximize(HypothesisClass{inst.cls}, bad, inst.test, inst.h,
                                  AbstentionVector::zeros(inst.test.size())),
                    InvalidInputError);
  }

  SUBCASE("all-ones abstention still yields a version-space member") {
    const Hypothesis g = flip_maximize(HypothesisClass{inst.cls}, inst.train, inst.test, inst.h,
                                       AbstentionVector::ones(inst.test.size()));
    CHECK(classification_version_space_contains(HypothesisClass{inst.cls}, inst.train, g));
  }
}

TEST_CASE("flip_maximize achieves the brute-force max within 1/(3n)") {
  RngStream rng(7);
  const AbstainCost c(0.4);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.next_below(11);
    const Instance inst = random_instance(rng, 3 + rng.next_below(3), 4 + rng.next_below(28), n);
    const Hypothesis g =
        flip_maximize(HypothesisClass{inst.cls}, inst.train, inst.test, inst.h, inst.a);
    CHECK(classification_version_space_contains(HypothesisClass{inst.cls}, inst.train, g));

    const double flip_value =
        abstention_loss(point_losses(g, inst.h, inst.test, LossKind::ZeroOne), inst.a, c);
    const ClassificationMax bf =
        brute_force_maximize_classification(inst.cls, inst.train, inst.test, inst.h, inst.a, c);
    CHECK(flip_value >= bf.value - 1.0 / (3.0 * static_cast<double>(n)) - 1e-12);
    CHECK(flip_value <= bf.value + 1e-12);
  }
}

TEST_CASE("weighted FLIP equals ERM on the literally duplicated dataset") {
  RngStream rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rng.next_below(7); // n <= 8 keeps duplication cheap
    const Instance inst = random_instance(rng, 4, 8, n);

    const Hypothesis weighted =
        flip_maximize(HypothesisClass{inst.cls}, inst.train, inst.test, inst.h, inst.a);

    std::vector<FeaturePoint> xs;
    std::vector<Label> ys;
    const long long train_copies = 4LL * static_cast<long long>(n) * static_cast<long long>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (long long k = 0; k < train_copies; ++k) {
        xs.push_back(inst.train.points[i]);
        ys.push_back(inst.train.labels[i]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const long long copies = flip_copies(n, inst.a[i]);
      for (long long k = 0; k < copies; ++k) {
        xs.push_back(inst.test[i]);
        ys.push_back(1.0 - inst.h(inst.test[i]));
      }
    }
    const Hypothesis duplicated =
        erm_weighted(HypothesisClass{inst.cls}, LabeledDataset(xs, ys), LossKind::ZeroOne);
    CHECK(weighted.finite_member()->index == duplicated.finite_member()->index);
  }
}

TEST_CASE("brute_force_maximize_classification: documented values") {
  // Domain {0,1,2,3}; training pins the first two coordinates; h picks row 0.
  const auto cls = std::make_shared<const FiniteClass>(
      std::vector<double>{0, 1, 2, 3},
      std::vector<std::vector<std::uint8_t>>{{0, 1, 0, 0}, {0, 1, 1, 1}, {1, 1, 1, 1}});
  std::vector<FeaturePoint> xs{scalar_point(0), scalar_point(1)};
  const LabeledDataset train(xs, {0, 1});
  const Hypothesis h{FiniteMember{cls, 0}};
  const AbstainCost c(0.4);

  SUBCASE("all-ones abstention gives exactly c") {
    std::vector<FeaturePoint> test{scalar_point(2), scalar_point(3)};
    const auto r = brute_force_maximize_classification(cls, train, test, h,
                                                       AbstentionVector::ones(2), c);
    CHECK(r.value == doctest::Approx(c.c).epsilon(1e-15));
  }

  SUBCASE("zero abstention maximizes raw disagreement") {
    std::vector<FeaturePoint> test{scalar_point(2), scalar_point(3)};
    const auto r = brute_force_maximize_classification(cls, train, test, h,
                                                       AbstentionVector::zeros(2), c);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-15)); // row 1 flips both test points
  }

  SUBCASE("empty version space is infeasible") {
    const LabeledDataset impossible(xs, {1, 0});
    std::vector<FeaturePoint> test{scalar_point(2)};
    CHECK_THROWS_AS(brute_force_maximize_classification(cls, impossible, test, h,
                                                        AbstentionVector::zeros(1), c),
                    InfeasibleError);
  }
}

TEST_CASE("cdt_maximize_regression: analytic instance and degenerate abstention") {
  Eigen::VectorXd w0(1);
  w0 << 0.0;
  const Hypothesis h{LinearPredictor{w0}};
  const std::vector<FeaturePoint> train{scalar_point(1.0)};
  const std::vector<FeaturePoint> test{scalar_point(1.0)};

  SUBCASE("d=1 KKT solution") {
    const Hypothesis g =
        cdt_maximize_regression(train, h, test, AbstentionVector::zeros(1), 0.25);
    CHECK(std::abs(g.linear().w(0)) == doctest::Approx(0.5).epsilon(1e-4));
    const double err = avg_loss(g, h, test, LossKind::Squared);
    CHECK(err == doctest::Approx(0.25).epsilon(1e-4));
  }

  SUBCASE("all-ones abstention: any feasible point is optimal") {
    const Hypothesis g = cdt_maximize_regression(train, h, test, AbstentionVector::ones(1), 0.25);
    CHECK(avg_loss(g, h, train, LossKind::Squared) <= 0.25 + 1e-9);
    CHECK(g.linear().w.norm() <= 1.0 + 1e-9);
  }

  SUBCASE("alpha validation") {
    CHECK_THROWS_AS(cdt_maximize_regression(train, h, test, AbstentionVector::zeros(1), 0.0),
                    InvalidInputError);
  }
}

TEST_CASE("cdt maximizer matches the sampling oracle on random instances") {
  RngStream rng(19);
  for (int rep = 0; rep < 15; ++rep) {
    const int d = 2 + static_cast<int>(rng.next_below(2));
    const std::size_t n = 3 + rng.next_below(5);
    auto ball_point = [&]() {
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian();
      return FeaturePoint(v * (rng.next_double() / std::max(v.norm(), 1e-12)));
    };
    std::vector<FeaturePoint> train, test;
    for (std::size_t i = 0; i < n; ++i) {
      train.push_back(ball_point());
      test.push_back(ball_point());
    }
    Eigen::VectorXd wh(d);
    for (int i = 0; i < d; ++i) wh(i) = rng.next_gaussian();
    wh *= 0.6 * rng.next_double() / std::max(wh.norm(), 1e-12);
    const Hypothesis h{LinearPredictor{wh}};
    std::vector<double> a(n);
    for (double& v : a) v = rng.next_double();
    const AbstentionVector av(a);
    const double alpha = 0.1 + 0.4 * rng.next_double();

    const CdtProblem problem = regression_max_problem(train, h, test, av, alpha);
    const Hypothesis g = cdt_maximize_regression(train, h, test, av, alpha);
    const double achieved = -problem.objective.value(g.linear().w);
    const RegressionMax bf = brute_force_maximize_regression(problem, 500 + rep);
    CHECK(achieved >= bf.value - 1e-4);
    CHECK(problem.c1.violation(g.linear().w) <= 1e-8);
    CHECK(problem.c2.violation(g.linear().w) <= 1e-8);
  }
}

TEST_CASE("brute_force_maximize_regression: analytic values and capacity") {
  SUBCASE("the d=1 instance") {
    CdtProblem p;
    p.objective.Q = -Eigen::MatrixXd::Identity(1, 1);
    p.objective.b = Eigen::VectorXd::Zero(1);
    p.c1 = EllipsoidConstraint{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), 0.25};
    p.c2 = BallConstraint{Eigen::VectorXd::Zero(1), 1.0};
    const RegressionMax r = brute_force_maximize_regression(p);
    CHECK(r.value == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(std::abs(r.w(0)) == doctest::Approx(0.5).epsilon(1e-4));
  }

  SUBCASE("zero objective gives value zero") {
    CdtProblem p;
    p.objective.Q = Eigen::MatrixXd::Zero(2, 2);
    p.objective.b = Eigen::VectorXd::Zero(2);
    p.c1 = EllipsoidConstraint{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 1.0};
    p.c2 = BallConstraint{Eigen::VectorXd::Zero(2), 1.0};
    CHECK(brute_force_maximize_regression(p).value == doctest::Approx(0.0));
  }

  SUBCASE("ball-only instance peaks opposite the center offset") {
    // Maximize 2||w - wh||^2 over the unit ball (first constraint inactive).
    Eigen::VectorXd wh(2);
    wh << 0.3, 0.4;
    CdtProblem p;
    p.objective.Q = -2.0 * Eigen::MatrixXd::Identity(2, 2);
    p.objective.b = 4.0 * wh;
    p.objective.c = -2.0 * wh.squaredNorm();
    p.c1 = EllipsoidConstraint{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 100.0};
    p.c2 = BallConstraint{Eigen::VectorXd::Zero(2), 1.0};
    const RegressionMax r = brute_force_maximize_regression(p);
    const double expected = 2.0 * (1.0 + wh.norm()) * (1.0 + wh.norm());
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-4));
    CHECK((r.w + wh / wh.norm()).norm() <= 1e-2);
  }

  SUBCASE("capacity error above d=3") {
    CdtProblem p;
    p.objective.Q = Eigen::MatrixXd::Zero(4, 4);
    p.objective.b = Eigen::VectorXd::Zero(4);
    p.c1 = EllipsoidConstraint{Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4), 1.0};
    p.c2 = BallConstraint{Eigen::VectorXd::Zero(4), 1.0};
    CHECK_THROWS_AS(brute_force_maximize_regression(p), CapacityError);
  }
}
