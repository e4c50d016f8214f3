#pragma once

#include <span>

#include "selpred/hypothesis.hpp"
#include "selpred/mma.hpp"
#include "selpred/types.hpp"

namespace selpred {

/// Version-space radius from the Rademacher bound for the unit-ball linear
/// class: 8/sqrt(n) + sqrt(2 ln(3/delta) / n).
double vs_radius(std::size_t n, double delta);

struct RegressionVersionSpace {
  std::vector<FeaturePoint> train_features;
  Hypothesis h;
  double radius; ///< alpha > 0

  bool contains(const Hypothesis& g) const {
    return regression_version_space_contains(train_features, h, g, radius);
  }
};

/// Fit h by ball-constrained least squares and wrap the radius-vs_radius(n,
/// delta) version space around it. h itself is always a member.
std::pair<Hypothesis, RegressionVersionSpace> build_version_space(const LabeledDataset& train, double delta);

struct RegressionPipelineResult {
  Hypothesis h;
  AbstentionVector a;
  double certified_bound; ///< upper bound on L_x(VS, h, a), raw squared-loss units
  RegressionVersionSpace version_space;
  MmaResult mma;
};

/// End-to-end selective regression: build the version space, run MMA with the
/// CDT maximizer, return the abstention vector and its certified bound.
/// The paper's proof sets delta = 1/n; callers pass delta explicitly.
RegressionPipelineResult regression_pipeline(const LabeledDataset& train,
                                             std::span<const FeaturePoint> test, AbstainCost c,
                                             double delta);

} // namespace selpred
