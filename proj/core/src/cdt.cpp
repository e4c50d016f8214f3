#include "selpred/cdt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace selpred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TrsResult {
  Eigen::VectorXd w;
  double lambda = 0.0;
  double value = 0.0;
  bool hard_case = false;
  std::optional<Eigen::VectorXd> alternate; // the mirrored hard-case optimum
};

// Minimize u^T Q u + b . u over ||u||^2 <= rad2 via the secular equation in
// the eigenbasis of Q. KKT: 2(Q + lambda I) u = -b, lambda >= 0, Q + lambda I >= 0.
TrsResult trs_unit(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, double rad2) {
  const Eigen::Index d = b.size();
  TrsResult res;
  if (rad2 <= 0.0) {
    if (rad2 < 0.0) throw InvalidInputError("trust region: negative squared radius");
    res.w = Eigen::VectorXd::Zero(d);
    res.value = 0.0;
    return res;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Q + Q.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("trust region: eigendecomposition failed");
  const Eigen::VectorXd lam = eig.eigenvalues(); // ascending
  const Eigen::MatrixXd V = eig.eigenvectors();
  const Eigen::VectorXd dcoef = V.transpose() * b;

  const double lam_scale = std::max({std::abs(lam(0)), std::abs(lam(d - 1)), 1.0});
  const double eps_zero = 1e-13 * lam_scale;

  auto norm2_at = [&](double mul) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double denom = 2.0 * (lam(i) + mul);
      if (denom == 0.0) return kInf;
      const double ui = -dcoef(i) / denom;
      s += ui * ui;
    }
    return s;
  };
  auto assemble = [&](double mul) {
    Eigen::VectorXd u(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double denom = 2.0 * (lam(i) + mul);
      u(i) = denom != 0.0 ? -dcoef(i) / denom : 0.0;
    }
    return u;
  };
  auto finish = [&](const Eigen::VectorXd& u_eig, double mul, bool hard,
                    std::optional<Eigen::VectorXd> alt_eig) {
    res.w = V * u_eig;
    res.lambda = mul;
    res.value = res.w.dot(Q * res.w) + b.dot(res.w);
    res.hard_case = hard;
    if (alt_eig) res.alternate = V * (*alt_eig);
    return res;
  };

  // Interior candidate: only when Q is PSD and the pseudo-solution exists.
  if (lam(0) >= -eps_zero) {
    bool stationary = true;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (lam(i) > eps_zero) {
        u(i) = -dcoef(i) / (2.0 * lam(i));
      } else if (std::abs(dcoef(i)) > 1e-11 * std::max(1.0, b.norm())) {
        stationary = false; // linear descent direction in the null space
        break;
      }
    }
    if (stationary && u.squaredNorm() <= rad2) return finish(u, 0.0, false, std::nullopt);
  }

  // Boundary solution: root of ||u(mul)||^2 = rad2 on (mul_lo, inf), with the
  // bottom eigen-cluster split off so the hard case is decided on the limit
  // norm of the REMAINING components only (the bottom terms blow up at any
  // finite offset whenever their d_i are nonzero).
  const double mul_lo = std::max(0.0, -lam(0));
  const double cluster_tol = 1e-12 * lam_scale;
  std::vector<bool> bottom(static_cast<std::size_t>(d), false);
  double norm2_rest = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (mul_lo > 0.0 && lam(i) <= lam(0) + cluster_tol) {
      bottom[static_cast<std::size_t>(i)] = true;
    } else {
      const double denom = 2.0 * (lam(i) + mul_lo);
      if (denom != 0.0) {
        const double ui = -dcoef(i) / denom;
        norm2_rest += ui * ui;
      } else if (std::abs(dcoef(i)) > 0.0) {
        norm2_rest = kInf;
      }
    }
  }

  auto hard_case_solution = [&]() {
    // lambda = mul_lo; the cluster carries the boundary-reaching mass,
    // aligned against the cluster gradient (any alignment is optimal to
    // within the cluster spread when the gradient there vanishes).
    const double t = std::sqrt(std::max(0.0, rad2 - norm2_rest));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd cluster_dir = Eigen::VectorXd::Zero(d);
    double cluster_d_norm = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (bottom[static_cast<std::size_t>(i)]) {
        cluster_dir(i) = dcoef(i);
        cluster_d_norm += dcoef(i) * dcoef(i);
      } else {
        const double denom = 2.0 * (lam(i) + mul_lo);
        u(i) = denom != 0.0 ? -dcoef(i) / denom : 0.0;
      }
    }
    cluster_d_norm = std::sqrt(cluster_d_norm);
    if (cluster_d_norm > 0.0) {
      cluster_dir *= -1.0 / cluster_d_norm;
    } else {
      for (Eigen::Index i = 0; i < d; ++i) {
        if (bottom[static_cast<std::size_t>(i)]) {
          cluster_dir(i) = 1.0;
          break;
        }
      }
    }
    Eigen::VectorXd alt = u - t * cluster_dir;
    u += t * cluster_dir;
    return finish(u, mul_lo, true, alt);
  };

  if (mul_lo > 0.0 && norm2_rest < rad2) {
    // Candidate hard case; a genuine secular root still exists when the
    // cluster coefficients are large enough to push the norm past the radius
    // at representable offsets.
    const double cluster_d2 = [&] {
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (bottom[static_cast<std::size_t>(i)]) s += dcoef(i) * dcoef(i);
      }
      return s;
    }();
    const double t2 = rad2 - norm2_rest;
    // Offset at which the cluster component alone reaches the missing mass.
    const double root_offset = std::sqrt(cluster_d2 / (4.0 * t2));
    if (root_offset <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, mul_lo)) {
      return hard_case_solution();
    }
    // Root finding survives: bracket tightly around the predicted offset.
    double lo = mul_lo + root_offset / 1024.0;
    double hi = std::max(mul_lo + root_offset * 1024.0, std::max(1.0, 2.0 * mul_lo + 1.0));
    if (!(norm2_at(lo) > rad2)) return hard_case_solution();
    for (int i = 0; i < 400 && norm2_at(hi) > rad2; ++i) hi *= 4.0;
    for (int i = 0; i < 300; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (norm2_at(mid) > rad2 ? lo : hi) = mid;
    }
    const double mul = hi;
    Eigen::VectorXd u = assemble(mul);
    const double nu = u.norm();
    if (nu > 0.0) u *= std::sqrt(rad2) / nu;
    return finish(u, mul, false, std::nullopt);
  }

  double lo = mul_lo + 1e-12 * std::max(1.0, mul_lo);
  double hi = std::max(1.0, 2.0 * mul_lo + 1.0);
  if (!(norm2_at(lo) > rad2)) {
    // Boundary regime collapsed onto mul_lo itself (norm2_rest == rad2 up to
    // rounding); the hard-case construction is exact there.
    if (mul_lo > 0.0) return hard_case_solution();
    return finish(assemble(lo), lo, false, std::nullopt);
  }
  for (int i = 0; i < 400 && norm2_at(hi) > rad2; ++i) hi *= 4.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (norm2_at(mid) > rad2 ? lo : hi) = mid;
  }
  const double mul = hi;
  Eigen::VectorXd u = assemble(mul);
  const double nu = u.norm();
  if (nu > 0.0) u *= std::sqrt(rad2) / nu; // land exactly on the boundary
  return finish(u, mul, false, std::nullopt);
}

// Scaled trust region: substitute u = S^{1/2} U^T (w - m) for constraint
// matrix B = U S U^T, reducing to the unit-ball problem.
TrsResult trs_general(const QuadraticObjective& obj, const EllipsoidConstraint& ell) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (ell.M + ell.M.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("trust region: constraint eigendecomposition failed");
  const Eigen::VectorXd S = eig.eigenvalues();
  if (S(0) <= 1e-12 * std::max(1.0, S(S.size() - 1)))
    throw InvalidInputError("trust_region_solve: constraint matrix must be positive definite");
  const Eigen::MatrixXd T = eig.eigenvectors() * S.cwiseSqrt().cwiseInverse().asDiagonal();

  const Eigen::MatrixXd Qt = T.transpose() * obj.Q * T;
  const Eigen::VectorXd bt = T.transpose() * (2.0 * (obj.Q * ell.center) + obj.b);
  TrsResult inner = trs_unit(Qt, bt, ell.rhs);

  TrsResult out;
  out.lambda = inner.lambda;
  out.hard_case = inner.hard_case;
  out.w = ell.center + T * inner.w;
  out.value = obj.value(out.w);
  if (inner.alternate) out.alternate = ell.center + T * (*inner.alternate);
  return out;
}

struct Candidate {
  Eigen::VectorXd w;
  double value = kInf;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

KktReport kkt_report(const CdtProblem& p, const Eigen::VectorXd& w, double lambda1, double lambda2) {
  KktReport r;
  r.lambda1 = lambda1;
  r.lambda2 = lambda2;
  const Eigen::VectorXd d1 = w - p.c1.center;
  const Eigen::VectorXd d2 = w - p.c2.center;
  r.stationarity =
      (p.objective.gradient(w) + 2.0 * lambda1 * (p.c1.M * d1) + 2.0 * lambda2 * d2).norm();
  r.violation1 = p.c1.violation(w);
  r.violation2 = p.c2.violation(w);
  const double s1 = p.c1.evaluate(w) - p.c1.rhs;
  const double s2 = p.c2.evaluate(w) - p.c2.rhs;
  r.comp_slack = std::max(std::abs(lambda1 * s1), std::abs(lambda2 * s2));
  return r;
}

// The multipliers carried by a candidate come from the search path (grid
// values, bracket midpoints) and may pair a large lambda with a slightly
// inactive constraint. Refit them from stationarity over the four activity
// patterns and keep the pattern with the best KKT score.
KktReport refit_multipliers(const CdtProblem& p, const Candidate& c) {
  const Eigen::VectorXd g0 = p.objective.gradient(c.w);
  const Eigen::VectorXd g1 = 2.0 * (p.c1.M * (c.w - p.c1.center));
  const Eigen::VectorXd g2 = 2.0 * (c.w - p.c2.center);

  std::vector<std::pair<double, double>> trials{{c.lambda1, c.lambda2}, {0.0, 0.0}};
  // lambda1 only / lambda2 only / both, by least squares on the gradient.
  const double n1 = g1.squaredNorm(), n2 = g2.squaredNorm();
  if (n1 > 0.0) trials.emplace_back(std::max(0.0, -g0.dot(g1) / n1), 0.0);
  if (n2 > 0.0) trials.emplace_back(0.0, std::max(0.0, -g0.dot(g2) / n2));
  if (n1 > 0.0 && n2 > 0.0) {
    Eigen::Matrix2d G;
    G << n1, g1.dot(g2), g1.dot(g2), n2;
    if (std::abs(G.determinant()) > 1e-14 * n1 * n2) {
      const Eigen::Vector2d l = G.inverse() * Eigen::Vector2d(-g0.dot(g1), -g0.dot(g2));
      if (l(0) >= 0.0 && l(1) >= 0.0) trials.emplace_back(l(0), l(1));
    }
  }

  KktReport best = kkt_report(p, c.w, trials.front().first, trials.front().second);
  double best_score = best.stationarity + 10.0 * best.comp_slack;
  for (std::size_t i = 1; i < trials.size(); ++i) {
    const KktReport r = kkt_report(p, c.w, trials[i].first, trials[i].second);
    const double score = r.stationarity + 10.0 * r.comp_slack;
    if (score < best_score) {
      best = r;
      best_score = score;
    }
  }
  return best;
}

} // namespace

void CdtProblem::validate() const {
  const Eigen::Index d = dim();
  if (d < 1) throw InvalidInputError("CdtProblem: empty problem");
  if (objective.Q.rows() != d || objective.Q.cols() != d || c1.M.rows() != d || c1.M.cols() != d ||
      c1.center.size() != d || c2.center.size() != d)
    throw InvalidInputError("CdtProblem: inconsistent dimensions");
  if (!(c2.rhs > 0.0)) throw InvalidInputError("CdtProblem: ball constraint needs positive rhs");
  if (!(c1.rhs >= 0.0)) throw InvalidInputError("CdtProblem: first constraint needs nonnegative rhs");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c1.M + c1.M.transpose()));
  const double top = std::max(1.0, std::abs(eig.eigenvalues()(d - 1)));
  if (eig.eigenvalues()(0) < -1e-9 * top)
    throw InvalidInputError("CdtProblem: first constraint matrix must be PSD");
}

Eigen::VectorXd trust_region_solve(const QuadraticObjective& objective, const EllipsoidConstraint& constraint) {
  if (objective.b.size() != constraint.center.size())
    throw InvalidInputError("trust_region_solve: dimension mismatch");
  return trs_general(objective, constraint).w;
}

CdtSolution cdt_solve(const CdtProblem& problem, double tol) {
  if (!(tol > 0.0)) throw InvalidInputError("cdt_solve: tolerance must be positive");
  problem.validate();
  const Eigen::Index d = problem.dim();
  const QuadraticObjective& q = problem.objective;
  const Eigen::MatrixXd M = 0.5 * (problem.c1.M + problem.c1.M.transpose());
  const Eigen::VectorXd& m1 = problem.c1.center;
  const Eigen::VectorXd& m2 = problem.c2.center;
  const double r1 = problem.c1.rhs;
  const double r2 = problem.c2.rhs;
  const EllipsoidConstraint ball = problem.c2.as_ellipsoid();

  // Feasibility: minimize g1 over the (compact) ball. The sets intersect iff
  // this minimum is within r1.
  const QuadraticObjective g1_obj{M, -2.0 * (M * m1), m1.dot(M * m1)};
  const TrsResult g1_min = trs_general(g1_obj, ball);
  if (g1_min.value > r1 + tol) {
    std::ostringstream msg;
    msg << "cdt_solve: infeasible (min g1 over ball = " << g1_min.value << " > rhs " << r1 << ")";
    throw InfeasibleError(msg.str());
  }

  std::vector<Candidate> feasible;
  double dual_lb = -kInf;
  const double feas_tol = tol;

  auto consider = [&](const Eigen::VectorXd& w, double lambda1, double lambda2) {
    if (problem.c1.violation(w) <= feas_tol && problem.c2.violation(w) <= feas_tol)
      feasible.push_back(Candidate{w, q.value(w), lambda1, lambda2});
  };

  // argmin of g1 over the ball is always feasible once the check above passed.
  consider(g1_min.w, 0.0, 0.0);
  if (g1_min.alternate) consider(*g1_min.alternate, 0.0, 0.0);

  // Pattern: both constraints inactive (needs a PSD objective with a feasible
  // stationary point).
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (q.Q + q.Q.transpose()));
    const double top = std::max(1.0, std::abs(eig.eigenvalues()(d - 1)));
    if (eig.eigenvalues()(0) >= -1e-12 * top) {
      const Eigen::VectorXd w0 = q.Q.completeOrthogonalDecomposition().solve(-0.5 * q.b);
      if ((2.0 * (q.Q * w0) + q.b).norm() <= 1e-9 * std::max(1.0, q.b.norm())) {
        dual_lb = std::max(dual_lb, q.value(w0)); // unconstrained relaxation
        consider(w0, 0.0, 0.0);
      }
    }
  }

  // Pattern: only c1 active (solvable directly when M is PD).
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    if (eig.eigenvalues()(0) > 1e-12 * std::max(1.0, eig.eigenvalues()(d - 1))) {
      TrsResult rel = trs_general(q, problem.c1);
      dual_lb = std::max(dual_lb, rel.value); // single-constraint relaxation
      consider(rel.w, rel.lambda, 0.0);
      if (rel.alternate) consider(*rel.alternate, rel.lambda, 0.0);
    }
  }

  // Outer scan over the c1 multiplier with exact inner trust-region solves
  // over the ball. For each lambda1 >= 0 the inner minimum value is a valid
  // dual lower bound, and g1 at the inner argmin is non-increasing in
  // lambda1, so a sign change brackets the complementary-slackness root.
  struct ScanPoint {
    double lambda1;
    double s1; // g1(w) - r1
    TrsResult inner;
  };
  auto scan_at = [&](double lambda1) {
    QuadraticObjective pen;
    pen.Q = q.Q + lambda1 * M;
    pen.b = q.b - 2.0 * lambda1 * (M * m1);
    pen.c = q.c + lambda1 * (m1.dot(M * m1) - r1);
    TrsResult inner = trs_general(pen, ball);
    dual_lb = std::max(dual_lb, pen.value(inner.w));
    consider(inner.w, lambda1, inner.lambda);
    if (inner.alternate) consider(*inner.alternate, lambda1, inner.lambda);
    return ScanPoint{lambda1, problem.c1.evaluate(inner.w) - r1, std::move(inner)};
  };

  std::vector<double> grid{0.0};
  for (int j = 0; j < 64; ++j) grid.push_back(1e-8 * std::pow(1e16, j / 63.0));

  std::optional<ScanPoint> below, above; // s1 > 0 / s1 <= 0 bracket
  for (double lambda1 : grid) {
    ScanPoint p = scan_at(lambda1);
    if (p.s1 > 0.0) {
      below = std::move(p);
    } else {
      above = std::move(p);
      break; // monotone: stays nonpositive afterwards
    }
  }

  if (below && above) {
    double lo = below->lambda1, hi = above->lambda1;
    for (int i = 0; i < 160; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      ScanPoint p = scan_at(mid);
      if (p.s1 > 0.0) {
        lo = mid;
        below = std::move(p);
      } else {
        hi = mid;
        above = std::move(p);
      }
    }
    // Duality-jump salvage: blend the infeasible endpoint toward the feasible
    // one as far as feasibility allows.
    const Eigen::VectorXd& wf = above->inner.w;
    const Eigen::VectorXd& wi = below->inner.w;
    double tlo = 0.0, thi = 1.0;
    for (int i = 0; i < 100; ++i) {
      const double t = 0.5 * (tlo + thi);
      const Eigen::VectorXd w = wf + t * (wi - wf);
      if (problem.c1.violation(w) <= feas_tol && problem.c2.violation(w) <= feas_tol) {
        tlo = t;
      } else {
        thi = t;
      }
    }
    consider(wf + tlo * (wi - wf), 0.5 * (below->lambda1 + above->lambda1), above->inner.lambda);
  }

  auto best_of = [&]() {
    const Candidate* best = nullptr;
    for (const Candidate& c : feasible) {
      if (!best || c.value < best->value ||
          (c.value == best->value &&
           (c.lambda1 < best->lambda1 || (c.lambda1 == best->lambda1 && c.lambda2 < best->lambda2))))
        best = &c;
    }
    return best;
  };

  const Candidate* best = best_of();
  if (!best) throw NumericError("cdt_solve: no feasible candidate produced");

  // Damped Newton on the two complementary-slackness residuals when the scan
  // did not certify optimality.
  if (best->value - dual_lb > tol) {
    Eigen::Vector2d l(best->lambda1 > 0 ? best->lambda1 : 1.0, best->lambda2 > 0 ? best->lambda2 : 1.0);
    for (int it = 0; it < 80; ++it) {
      const Eigen::MatrixXd K = 2.0 * (q.Q + l(0) * M + l(1) * Eigen::MatrixXd::Identity(d, d));
      Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
      if (!lu.isInvertible()) break;
      const Eigen::VectorXd rhs = -q.b + 2.0 * l(0) * (M * m1) + 2.0 * l(1) * m2;
      const Eigen::VectorXd w = lu.solve(rhs);
      const Eigen::VectorXd d1 = w - m1;
      const Eigen::VectorXd d2 = w - m2;
      const Eigen::Vector2d s(d1.dot(M * d1) - r1, d2.squaredNorm() - r2);
      consider(w, l(0), l(1));
      if (s.cwiseAbs().maxCoeff() <= 0.1 * tol) break;
      const Eigen::VectorXd dw1 = lu.solve(2.0 * (M * (m1 - w)));
      const Eigen::VectorXd dw2 = lu.solve(2.0 * (m2 - w));
      Eigen::Matrix2d J;
      J(0, 0) = 2.0 * d1.dot(M * dw1);
      J(0, 1) = 2.0 * d1.dot(M * dw2);
      J(1, 0) = 2.0 * d2.dot(dw1);
      J(1, 1) = 2.0 * d2.dot(dw2);
      if (std::abs(J.determinant()) < 1e-300) break;
      Eigen::Vector2d step = -J.inverse() * s;
      double damp = 1.0;
      for (int h = 0; h < 30; ++h) {
        Eigen::Vector2d lt = (l + damp * step).cwiseMax(0.0);
        const Eigen::MatrixXd Kt = 2.0 * (q.Q + lt(0) * M + lt(1) * Eigen::MatrixXd::Identity(d, d));
        Eigen::FullPivLU<Eigen::MatrixXd> lut(Kt);
        if (lut.isInvertible()) {
          const Eigen::VectorXd wt = lut.solve(-q.b + 2.0 * lt(0) * (M * m1) + 2.0 * lt(1) * m2);
          const Eigen::VectorXd e1 = wt - m1;
          const Eigen::VectorXd e2 = wt - m2;
          const Eigen::Vector2d st(e1.dot(M * e1) - r1, e2.squaredNorm() - r2);
          if (st.norm() < s.norm()) {
            l = lt;
            break;
          }
        }
        damp *= 0.5;
        if (h == 29) it = 80; // stalled
      }
    }
    best = best_of();
  }

  // Among near-ties in value, prefer the candidate with the cleanest KKT
  // residuals (the segment-blend salvage point can edge out a stationary
  // candidate by a sliver while not being a KKT point itself).
  const Candidate* chosen = best;
  KktReport chosen_report = refit_multipliers(problem, *chosen);
  double chosen_score = chosen_report.stationarity + 10.0 * chosen_report.comp_slack;
  for (const Candidate& c : feasible) {
    if (&c == best || c.value > best->value + 0.25 * tol) continue;
    const KktReport r = refit_multipliers(problem, c);
    const double score = r.stationarity + 10.0 * r.comp_slack;
    if (score < chosen_score) {
      chosen = &c;
      chosen_report = r;
      chosen_score = score;
    }
  }

  CdtSolution sol;
  sol.w = chosen->w;
  sol.value = chosen->value;
  sol.kkt = chosen_report;
  sol.duality_gap = sol.value - dual_lb;
  sol.certified = sol.duality_gap <= tol;
  if (!sol.certified) {
    std::ostringstream msg;
    msg << "cdt_solve: could not certify optimality within tol=" << tol
        << "; best incumbent value=" << sol.value << " dual bound=" << dual_lb
        << " gap=" << sol.duality_gap << " lambda=(" << sol.kkt.lambda1 << "," << sol.kkt.lambda2
        << ")";
    throw NumericError(msg.str());
  }
  return sol;
}

Eigen::VectorXd cdt_solve_approx(const CdtProblem& problem, double eps) {
  if (!(eps > 0.0)) throw InvalidInputError("cdt_solve_approx: eps must be positive");
  if (eps >= problem.c1.rhs || eps >= problem.c2.rhs)
    throw InvalidInputError("cdt_solve_approx: eps must be smaller than both constraint radii");
  CdtProblem tight = problem;
  tight.c1.rhs -= eps;
  tight.c2.rhs -= eps;
  CdtSolution sol = cdt_solve(tight, eps);
  // Feasible for the tightened constraints up to eps, hence for the originals.
  return sol.w;
}

} // namespace selpred
