#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include "selpred/cdt.hpp"
#include "selpred/hypothesis.hpp"

namespace selpred {

/// Number of flipped-test copies: floor(3n(1-a_i)), computed after rounding
/// 3n(1-a_i) to 12 decimal places in integer arithmetic so exact-integer
/// inputs floor identically on every platform.
long long flip_copies(std::size_t n, double a_i);

/// The FLIP reduction: approximately maximize the abstention-weighted
/// zero-one test loss over the version space using the loss-MINIMIZING ERM
/// oracle. Builds the weighted artificial dataset (4n^2 on each training
/// pair, flip_copies(n, a_i) on each label-flipped test pair) and returns the
/// ERM solution, which has zero training error and loss within 1/(3n) of the
/// version-space maximum. Requires h consistent with the training labels.
Hypothesis flip_maximize(const HypothesisClass& cls, const LabeledDataset& train,
                         std::span<const FeaturePoint> test, const Hypothesis& h,
                         const AbstentionVector& a);

struct ClassificationMax {
  Hypothesis g;
  double value; ///< l_x(g, h, a)
};

/// Exact loss maximization over the version space by enumeration (test
/// oracle). Throws InfeasibleError when no class member is consistent with
/// the training data.
ClassificationMax brute_force_maximize_classification(const std::shared_ptr<const FiniteClass>& cls,
                                                      const LabeledDataset& train,
                                                      std::span<const FeaturePoint> test,
                                                      const Hypothesis& h, const AbstentionVector& a,
                                                      AbstainCost c);

/// Assemble the CDT instance for regression loss maximization:
/// minimize -(1/n) sum_i (1-a_i) ((w - w_h) . x_i)^2 subject to
/// (1/ntrain) sum_i ((w - w_h) . xbar_i)^2 <= alpha and ||w||^2 <= 1.
CdtProblem regression_max_problem(std::span<const FeaturePoint> train_x, const Hypothesis& h,
                                  std::span<const FeaturePoint> test_x, const AbstentionVector& a,
                                  double alpha);

/// Internal CDT tolerance keeping the tighten-and-recombine suboptimality
/// below the 1/(3n) oracle budget of the reduction.
double cdt_tolerance(double alpha, std::size_t n);

/// Approximate regression loss maximizer over the alpha-version space around
/// a consistent linear h. The returned predictor is feasible for the ORIGINAL
/// constraints and its squared-error objective is within O(eps/alpha) of the
/// version-space maximum.
Hypothesis cdt_maximize_regression(std::span<const FeaturePoint> train_x, const Hypothesis& h,
                                   std::span<const FeaturePoint> test_x, const AbstentionVector& a,
                                   double alpha);

struct RegressionMax {
  Eigen::VectorXd w;
  double value; ///< maximum of the NEGATED CdtProblem objective
};

/// Sampling + multistart oracle for d <= 3 CDT instances: 1e5 draws on the
/// feasible boundary surfaces plus projected gradient ascent from 64
/// restarts. Deterministic given the seed; accuracy target 1e-5 relative on
/// the acceptance corpus.
RegressionMax brute_force_maximize_regression(const CdtProblem& problem, std::uint64_t seed = 2024);

} // namespace selpred
