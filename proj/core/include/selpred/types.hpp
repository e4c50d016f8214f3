#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "selpred/errors.hpp"

namespace selpred {

/// A feature point. Regression lives in the unit ball of R^d; classification
/// over an abstract finite domain uses a single integer code embedded as d=1.
using FeaturePoint = Eigen::VectorXd;

/// Labels: {0,1} for classification, [-1,1] for regression.
using Label = double;

inline FeaturePoint scalar_point(double code) {
  FeaturePoint p(1);
  p[0] = code;
  return p;
}

inline bool is_binary_label(Label y) { return y == 0.0 || y == 1.0; }

/// Cost of abstaining instead of predicting. Losses are bounded by 1, so
/// costs above 1 are never useful and are rejected.
struct AbstainCost {
  double c;

  explicit AbstainCost(double cost) : c(cost) {
    if (!(c > 0.0) || c > 1.0) throw InvalidInputError("AbstainCost: need 0 < c <= 1");
  }
};

/// Per-test-point abstention probabilities a in [0,1]^n.
struct AbstentionVector {
  std::vector<double> probs;

  AbstentionVector() = default;
  explicit AbstentionVector(std::vector<double> p) : probs(std::move(p)) {
    for (double a : probs) {
      if (!(a >= 0.0 && a <= 1.0)) throw InvalidInputError("AbstentionVector: entries must be in [0,1]");
    }
  }
  static AbstentionVector zeros(std::size_t n) { return AbstentionVector(std::vector<double>(n, 0.0)); }
  static AbstentionVector ones(std::size_t n) { return AbstentionVector(std::vector<double>(n, 1.0)); }

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  /// Total abstain probability mass divided by n.
  double mass() const {
    if (probs.empty()) return 0.0;
    double s = 0.0;
    for (double a : probs) s += a;
    return s / static_cast<double>(probs.size());
  }
};

/// Labeled examples with nonnegative weights (default all 1). Weights are the
/// currency of the FLIP reduction's artificial dataset.
struct LabeledDataset {
  std::vector<FeaturePoint> points;
  std::vector<Label> labels;
  std::vector<double> weights;

  LabeledDataset() = default;
  LabeledDataset(std::vector<FeaturePoint> x, std::vector<Label> y)
      : points(std::move(x)), labels(std::move(y)), weights(points.size(), 1.0) {
    validate();
  }
  LabeledDataset(std::vector<FeaturePoint> x, std::vector<Label> y, std::vector<double> w)
      : points(std::move(x)), labels(std::move(y)), weights(std::move(w)) {
    validate();
  }

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void validate() const {
    if (labels.size() != points.size() || weights.size() != points.size())
      throw InvalidInputError("LabeledDataset: points, labels, weights must have equal length");
    for (double w : weights) {
      if (!(w >= 0.0)) throw InvalidInputError("LabeledDataset: weights must be nonnegative");
    }
  }
};

} // namespace selpred
