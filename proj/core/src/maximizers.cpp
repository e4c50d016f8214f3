#include "selpred/maximizers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "selpred/loss.hpp"
#include "selpred/rng.hpp"

namespace selpred {

long long flip_copies(std::size_t n, double a_i) {
  if (!(a_i >= 0.0 && a_i <= 1.0)) throw InvalidInputError("flip_copies: a_i must be in [0,1]");
  const double v = 3.0 * static_cast<double>(n) * (1.0 - a_i);
  const long long scaled = std::llround(v * 1e12);
  return scaled / 1'000'000'000'000LL;
}

Hypothesis flip_maximize(const HypothesisClass& cls, const LabeledDataset& train,
                         std::span<const FeaturePoint> test, const Hypothesis& h,
                         const AbstentionVector& a) {
  const std::size_t n = test.size();
  if (n == 0 || train.size() != n || a.size() != n)
    throw InvalidInputError("flip_maximize: need |train| = |test| = |a| = n >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    if (h(train.points[i]) != train.labels[i])
      throw InvalidInputError("flip_maximize: h must be consistent with the training labels");
  }

  const double train_weight = 4.0 * static_cast<double>(n) * static_cast<double>(n);
  std::vector<FeaturePoint> points;
  std::vector<Label> labels;
  std::vector<double> weights;
  points.reserve(2 * n);
  labels.reserve(2 * n);
  weights.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    points.push_back(train.points[i]);
    labels.push_back(train.labels[i]);
    weights.push_back(train_weight);
  }
  for (std::size_t i = 0; i < n; ++i) {
    points.push_back(test[i]);
    labels.push_back(1.0 - h(test[i]));
    weights.push_back(static_cast<double>(flip_copies(n, a[i])));
  }
  return erm_weighted(cls, LabeledDataset(std::move(points), std::move(labels), std::move(weights)),
                      LossKind::ZeroOne);
}

ClassificationMax brute_force_maximize_classification(const std::shared_ptr<const FiniteClass>& cls,
                                                      const LabeledDataset& train,
                                                      std::span<const FeaturePoint> test,
                                                      const Hypothesis& h, const AbstentionVector& a,
                                                      AbstainCost c) {
  if (!cls) throw InvalidInputError("brute_force_maximize_classification: null class");
  if (cls->size() > (std::size_t{1} << 20))
    throw CapacityError("brute_force_maximize_classification: |F| > 2^20");
  if (test.size() != a.size())
    throw InvalidInputError("brute_force_maximize_classification: |test| != |a|");

  const auto rows = consistent_rows(*cls, train);
  if (rows.empty()) throw InfeasibleError("brute_force_maximize_classification: empty version space");

  std::size_t best_row = rows.front();
  double best_value = -1.0;
  for (std::size_t r : rows) {
    const Hypothesis g{FiniteMember{cls, r}};
    const auto losses = point_losses(g, h, test, LossKind::ZeroOne);
    const double value = abstention_loss(losses, a, c);
    if (value > best_value) {
      best_value = value;
      best_row = r;
    }
  }
  return ClassificationMax{Hypothesis{FiniteMember{cls, best_row}}, best_value};
}

CdtProblem regression_max_problem(std::span<const FeaturePoint> train_x, const Hypothesis& h,
                                  std::span<const FeaturePoint> test_x, const AbstentionVector& a,
                                  double alpha) {
  if (!(alpha > 0.0)) throw InvalidInputError("regression_max_problem: alpha must be positive");
  if (train_x.empty() || test_x.empty()) throw InvalidInputError("regression_max_problem: empty data");
  if (test_x.size() != a.size()) throw InvalidInputError("regression_max_problem: |test| != |a|");
  const Eigen::VectorXd& wh = h.linear().w;
  const Eigen::Index d = wh.size();
  const double n = static_cast<double>(test_x.size());
  const double ntrain = static_cast<double>(train_x.size());

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    if (test_x[i].size() != d) throw InvalidInputError("regression_max_problem: ragged test features");
    if (test_x[i].norm() > 1.0 + 1e-9)
      throw InvalidInputError("regression_max_problem: test features must lie in the unit ball");
    S.noalias() += ((1.0 - a[i]) / n) * test_x[i] * test_x[i].transpose();
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : train_x) {
    if (x.size() != d) throw InvalidInputError("regression_max_problem: ragged train features");
    if (x.norm() > 1.0 + 1e-9)
      throw InvalidInputError("regression_max_problem: train features must lie in the unit ball");
    M.noalias() += (1.0 / ntrain) * x * x.transpose();
  }

  CdtProblem p;
  p.objective.Q = -S;
  p.objective.b = 2.0 * (S * wh);
  p.objective.c = -wh.dot(S * wh);
  p.c1 = EllipsoidConstraint{std::move(M), wh, alpha};
  p.c2 = BallConstraint{Eigen::VectorXd::Zero(d), 1.0};
  return p;
}

double cdt_tolerance(double alpha, std::size_t n) {
  const double nn = static_cast<double>(n);
  return std::min({1e-6, alpha / 100.0, 1.0 / (9.0 * nn * nn)});
}

Hypothesis cdt_maximize_regression(std::span<const FeaturePoint> train_x, const Hypothesis& h,
                                   std::span<const FeaturePoint> test_x, const AbstentionVector& a,
                                   double alpha) {
  const CdtProblem problem = regression_max_problem(train_x, h, test_x, a, alpha);
  const double eps = cdt_tolerance(alpha, test_x.size());
  Eigen::VectorXd w = cdt_solve_approx(problem, eps);
  const double nw = w.norm();
  if (nw > 1.0) w /= nw; // tightened ball keeps this a no-op up to rounding
  return Hypothesis(LinearPredictor{std::move(w)});
}

// ---------------------------------------------------------------------------
// Sampling + multistart oracle

namespace {

Eigen::VectorXd unit_sphere_draw(RngStream& rng, Eigen::Index d) {
  Eigen::VectorXd v(d);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.next_gaussian();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

bool feasible(const CdtProblem& p, const Eigen::VectorXd& w, double tol = 1e-12) {
  return p.c1.violation(w) <= tol && p.c2.violation(w) <= tol;
}

// Restore feasibility by scaling toward each constraint center in turn.
bool restore(const CdtProblem& p, Eigen::VectorXd& w) {
  for (int it = 0; it < 64; ++it) {
    bool ok = true;
    const double g2 = p.c2.evaluate(w);
    if (g2 > p.c2.rhs) {
      w = p.c2.center + (w - p.c2.center) * std::sqrt(p.c2.rhs / g2) * (1.0 - 1e-14);
      ok = false;
    }
    const double g1 = p.c1.evaluate(w);
    if (g1 > p.c1.rhs) {
      if (p.c1.rhs <= 0.0 || g1 <= 0.0) return false;
      w = p.c1.center + (w - p.c1.center) * std::sqrt(p.c1.rhs / g1) * (1.0 - 1e-14);
      ok = false;
    }
    if (ok) return true;
  }
  return feasible(p, w, 1e-9);
}

} // namespace

RegressionMax brute_force_maximize_regression(const CdtProblem& problem, std::uint64_t seed) {
  problem.validate();
  const Eigen::Index d = problem.dim();
  if (d > 3) throw CapacityError("brute_force_maximize_regression: d > 3");

  auto gain = [&](const Eigen::VectorXd& w) { return -problem.objective.value(w); };

  RngStream rng(seed);
  Eigen::VectorXd best = problem.c2.center;
  if (!feasible(problem, best)) restore(problem, best);
  double best_gain = feasible(problem, best, 1e-9) ? gain(best) : -std::numeric_limits<double>::infinity();
  auto track = [&](const Eigen::VectorXd& w) {
    const double g = gain(w);
    if (g > best_gain) {
      best_gain = g;
      best = w;
    }
  };

  // Boundary sampling: the ball sphere, and the c1 surface when M is PD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(problem.c1.M);
  const bool m_pd = eig.eigenvalues()(0) > 1e-12 * std::max(1.0, eig.eigenvalues()(d - 1));
  Eigen::MatrixXd c1_sqrt_inv;
  if (m_pd)
    c1_sqrt_inv = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();

  const int samples = 100000;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd u = unit_sphere_draw(rng, d);
    Eigen::VectorXd w = problem.c2.center + std::sqrt(problem.c2.rhs) * u;
    if (feasible(problem, w, 1e-12)) track(w);
    if (m_pd && problem.c1.rhs > 0.0) {
      Eigen::VectorXd v = problem.c1.center + std::sqrt(problem.c1.rhs) * (c1_sqrt_inv * u);
      if (feasible(problem, v, 1e-12)) track(v);
    } else if (!m_pd) {
      // Degenerate cylinder: fall back to interior draws of the ball.
      const double r = std::pow(rng.next_double(), 1.0 / static_cast<double>(d));
      Eigen::VectorXd v = problem.c2.center + std::sqrt(problem.c2.rhs) * r * unit_sphere_draw(rng, d);
      if (feasible(problem, v, 1e-12)) track(v);
    }
  }

  // Projected gradient ascent restarts.
  const double q_scale = problem.objective.Q.cwiseAbs().maxCoeff() + 1.0;
  for (int restart = 0; restart < 64; ++restart) {
    Eigen::VectorXd w =
        problem.c2.center + std::sqrt(problem.c2.rhs) * rng.next_double() * unit_sphere_draw(rng, d);
    if (!restore(problem, w)) continue;
    double step = 0.5 / q_scale;
    for (int it = 0; it < 400; ++it) {
      const Eigen::VectorXd grad = -problem.objective.gradient(w);
      Eigen::VectorXd cand = w + step * grad;
      if (!restore(problem, cand)) {
        step *= 0.5;
        continue;
      }
      if (gain(cand) > gain(w)) {
        w = cand;
        step *= 1.2;
      } else {
        step *= 0.5;
        if (step < 1e-14) break;
      }
    }
    if (feasible(problem, w, 1e-9)) track(w);
  }

  return RegressionMax{best, best_gain};
}

} // namespace selpred
