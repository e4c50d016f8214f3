#pragma once

#include <functional>
#include <span>

#include "selpred/hypothesis.hpp"
#include "selpred/shift.hpp"
#include "selpred/types.hpp"

namespace selpred {

/// Expected worst-case transductive loss bounds for binary classification
/// (base-2 logs; the counting arguments behind them are base-2).
struct ExpectedBound {
  double raw;        ///< 2 d lg(2n) / n
  double with_slack; ///< 2 d lg(3n) / n, absorbing the reduction's +1/n
};
ExpectedBound classification_bound_expected(int d, int n);

/// High-probability variants.
struct HighProbBound {
  double pre_mma;  ///< (2 d lg(2n) + lg(1/(2 delta))) / n
  double post_mma; ///< (2 d lg(2n) + lg(1/delta)) / n
};
HighProbBound classification_bound_highprob(int d, int n, double delta);

struct PqMetrics {
  double eps1; ///< Pr_{x~Q}[h(x) != f(x) and not abstained]
  double eps2; ///< Pr_{x~P}[abstained] (false rejection rate)
};

/// Exact expectations over the pmfs; abstain_prob gives the per-point
/// abstention probability in [0,1].
PqMetrics pq_metrics(const DiscreteDistribution& Q, const DiscreteDistribution& P, const Hypothesis& h,
                     const Hypothesis& f, const std::function<double(const FeaturePoint&)>& abstain_prob);

/// Transduction-to-generalization abstainer: run MMA on the test set with its
/// first point replaced by x' and return that coordinate's abstain
/// probability. Callers shuffle the test inputs beforehand when symmetry
/// matters.
double generalize_abstainer(const HypothesisClass& cls, const LabeledDataset& train,
                            std::span<const FeaturePoint> test_rest, const Hypothesis& h, AbstainCost c,
                            const FeaturePoint& x_prime);

} // namespace selpred
