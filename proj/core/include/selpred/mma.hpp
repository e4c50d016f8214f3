#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selpred/hypothesis.hpp"
#include "selpred/types.hpp"

namespace selpred {

/// Output of an approximate loss-maximization oracle: the witness hypothesis,
/// its per-test-point base losses (in the caller's [0,1]-scaled units), and
/// whether the oracle's accuracy guarantee held (CDT non-convergence clears
/// the flag instead of aborting the run).
struct OracleWitness {
  Hypothesis g;
  std::vector<double> point_losses;
  bool guarantee_ok = true;
};

using LossMaximizer = std::function<OracleWitness(const AbstentionVector&)>;

/// Step 1 of SEP: for the first coordinate outside [0,1], the signed unit
/// direction separating a from the box.
std::optional<Eigen::VectorXd> box_violation(const Eigen::VectorXd& a);

/// Step 2 of SEP: v_i = c - l(g(x_i), h(x_i)) from the maximizer's witness.
/// For fixed g, v . (a - b) / n equals the loss difference l(g,h,a) - l(g,h,b).
Eigen::VectorXd loss_separator(std::span<const double> point_losses, double c);

struct MmaDiagnostics {
  long iterations = 0;
  long oracle_calls = 0;
  long probes = 0;
  bool certificate_fired = false;
  bool oracle_warning = false; ///< some oracle call reported a broken guarantee
  std::vector<double> incumbent_trajectory;

  std::string to_json() const;
};

struct MmaResult {
  AbstentionVector a;
  double witness_loss = 0.0;    ///< l_x(g, h, a) at the incumbent
  double certified_bound = 0.0; ///< witness_loss + oracle slack >= L_x(V, h, a)
  double lower_bound = 0.0;     ///< certified lower bound on OPT
  std::optional<Hypothesis> witness;
  MmaDiagnostics diag;
};

struct EllipsoidOptions {
  double oracle_slack = 0.0; ///< additive accuracy of the maximizer (1/(3n) for FLIP)
  double target_gap = 0.0;   ///< stop once certified_bound - lower_bound <= target (1/n)
  long max_iterations = -1;  ///< default: ceil(2n(n+1) ln(2 sqrt(n) * 3n)) central-cut budget
  bool enable_probes = true; ///< side evaluations that tighten the incumbent faster
};

/// Central-cut ellipsoid minimization of a -> max_{g in V} l_x(g, h, a) over
/// [0,1]^n, starting from the radius-sqrt(n) ball around the all-1/2 point.
/// Every in-box query is evaluated through the oracle and the best witness is
/// returned (best-iterate output). Runs until the iteration budget or until
/// the incumbent's certified bound meets the mixture lower bound to within
/// target_gap, which certifies L_x(V,h,a) <= OPT + target_gap.
MmaResult ellipsoid_minimize(int n, const LossMaximizer& oracle, double c, const EllipsoidOptions& options);

/// MMA for noiseless binary classification: FLIP is the separation oracle's
/// maximizer (slack 1/(3n)); h must be consistent with the training labels.
MmaResult mma_classification(const HypothesisClass& cls, const LabeledDataset& train,
                             std::span<const FeaturePoint> test, const Hypothesis& h, AbstainCost c);

/// MMA against the exact enumeration maximizer (slack 0); test-oracle path.
MmaResult mma_classification_exact(const std::shared_ptr<const FiniteClass>& cls,
                                   const LabeledDataset& train, std::span<const FeaturePoint> test,
                                   const Hypothesis& h, AbstainCost c);

/// MMA for linear regression over the alpha-version space with the CDT
/// maximizer. Squared losses on [-1,1] labels span [0,4], so the reduction
/// runs on losses and cost scaled by 1/4; the returned bounds are back in raw
/// squared-loss units.
MmaResult mma_regression(std::span<const FeaturePoint> train_x, const Hypothesis& h,
                         std::span<const FeaturePoint> test, AbstainCost c, double alpha);

struct GridSearchResult {
  AbstentionVector a;
  double value;
};

/// Independent minimization oracle for n <= 3: exhaustive grid for n <= 2;
/// for n = 3 a coarse exhaustive pass plus local zoom refinement down to the
/// requested step (sound for this convex piecewise-affine objective).
GridSearchResult grid_search_min(int n, const std::function<double(const AbstentionVector&)>& exact_max,
                                 double step);

struct JointSelection {
  Hypothesis h;
  MmaResult result;
};

/// Joint transductive selective prediction over a small finite class: run MMA
/// once per version-space member h and keep the pair with the smallest
/// certified bound.
JointSelection joint_selective_prediction(const std::shared_ptr<const FiniteClass>& cls,
                                          const LabeledDataset& train, std::span<const FeaturePoint> test,
                                          AbstainCost c);

} // namespace selpred
