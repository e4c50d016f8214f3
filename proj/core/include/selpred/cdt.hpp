#pragma once

#include <Eigen/Core>

#include "selpred/errors.hpp"

namespace selpred {

/// w^T Q w + b . w + c (note: no 1/2 on the quadratic term).
struct QuadraticObjective {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  double c = 0.0;

  double value(const Eigen::VectorXd& w) const { return w.dot(Q * w) + b.dot(w) + c; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (Q * w) + b; }
};

/// (w - center)^T M (w - center) <= rhs. M symmetric PSD; a singular M is a
/// degenerate cylinder (null directions unconstrained).
struct EllipsoidConstraint {
  Eigen::MatrixXd M;
  Eigen::VectorXd center;
  double rhs;

  double evaluate(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd d = w - center;
    return d.dot(M * d);
  }
  double violation(const Eigen::VectorXd& w) const {
    const double v = evaluate(w) - rhs;
    return v > 0.0 ? v : 0.0;
  }
};

/// ||w - center||^2 <= rhs; the strictly convex second constraint.
struct BallConstraint {
  Eigen::VectorXd center;
  double rhs;

  double evaluate(const Eigen::VectorXd& w) const { return (w - center).squaredNorm(); }
  double violation(const Eigen::VectorXd& w) const {
    const double v = evaluate(w) - rhs;
    return v > 0.0 ? v : 0.0;
  }
  EllipsoidConstraint as_ellipsoid() const {
    return EllipsoidConstraint{Eigen::MatrixXd::Identity(center.size(), center.size()), center, rhs};
  }
};

/// The two-ellipsoid quadratic minimization instance (regression loss
/// maximization arrives here with a concave objective).
struct CdtProblem {
  QuadraticObjective objective;
  EllipsoidConstraint c1;
  BallConstraint c2;

  Eigen::Index dim() const { return objective.b.size(); }
  void validate() const;
};

struct KktReport {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double stationarity = 0.0; ///< ||2 Q0 w + b0 + 2 l1 M (w-m1) + 2 l2 (w-m2)||
  double violation1 = 0.0;
  double violation2 = 0.0;
  double comp_slack = 0.0; ///< max_j |lambda_j * (g_j(w) - rhs_j)|
};

struct CdtSolution {
  Eigen::VectorXd w;
  double value = 0.0;
  KktReport kkt;
  bool certified = false;   ///< dual bound within tol of the returned value
  double duality_gap = 0.0; ///< value - best dual lower bound seen
};

/// Global minimizer of a quadratic over a single positive definite ellipsoid
/// (trust-region subproblem): eigendecomposition plus safeguarded root
/// finding on the secular equation, with explicit hard-case handling.
Eigen::VectorXd trust_region_solve(const QuadraticObjective& objective, const EllipsoidConstraint& constraint);

/// Solve the CDT problem to feasibility violation <= tol and objective within
/// tol of the global minimum, by enumerating KKT activity patterns: both
/// constraints inactive, one active (trust-region relaxations), and both
/// active (outer multiplier scan over a log-spaced grid with exact inner
/// trust-region solves, refined by bisection and a damped-Newton fallback).
/// Throws InfeasibleError when the constraint sets are disjoint;
/// NumericError when no candidate certifies within tol.
CdtSolution cdt_solve(const CdtProblem& problem, double tol);

/// Tighten-and-solve wrapper: shrink both constraint right-hand sides by eps,
/// solve to tolerance eps, and return a point feasible for the ORIGINAL
/// constraints with objective within O(eps / c1.rhs) of the original optimum.
Eigen::VectorXd cdt_solve_approx(const CdtProblem& problem, double eps);

} // namespace selpred
