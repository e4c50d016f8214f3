#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selpred/loss.hpp"
#include "selpred/types.hpp"

namespace selpred {

/// Explicit finite hypothesis class: a |F| x |domain| table of {0,1}
/// predictions over a finite feature domain of d=1 integer codes. Enables
/// exact brute-force oracles and exact VC computation on small instances.
class FiniteClass {
public:
  /// Rows must be distinct; entries must be 0/1; every row spans the domain.
  FiniteClass(std::vector<double> domain, std::vector<std::vector<std::uint8_t>> table);

  /// Parse {"domain": [...], "table": [[0,1,...], ...]} (see harness docs).
  static std::shared_ptr<const FiniteClass> from_json_text(const std::string& text);
  static std::shared_ptr<const FiniteClass> from_file(const std::string& path);

  std::size_t size() const { return table_.size(); }
  std::size_t domain_size() const { return domain_.size(); }
  double code(std::size_t column) const { return domain_[column]; }
  FeaturePoint point(std::size_t column) const { return scalar_point(domain_[column]); }

  /// Column for a feature point; throws InvalidInputError if off-domain.
  std::size_t column_of(const FeaturePoint& x) const;

  double predict(std::size_t row, std::size_t column) const { return table_[row][column]; }
  const std::vector<std::uint8_t>& row(std::size_t r) const { return table_[r]; }

private:
  std::vector<double> domain_;
  std::vector<std::vector<std::uint8_t>> table_;
};

enum class ThresholdOrientation {
  LeqZero, ///< x <= cut predicts 0, else 1
  LeqOne,  ///< x <= cut predicts 1, else 0
};

/// The one-dimensional threshold class with a fixed orientation (VC dim 1).
struct ThresholdFamily {
  ThresholdOrientation orientation = ThresholdOrientation::LeqZero;
};

struct FiniteMember {
  std::shared_ptr<const FiniteClass> cls;
  std::size_t index;
};

struct Threshold {
  double cut;
  ThresholdOrientation orientation;
};

struct LinearPredictor {
  Eigen::VectorXd w; // ||w|| <= 1 (+1e-9 numerical slack), checked on construction
};

/// A predictor: finite-class member by index, threshold rule on the line, or
/// linear functional with unit-ball-bounded weights.
class Hypothesis {
public:
  Hypothesis(FiniteMember m);
  Hypothesis(Threshold t);
  Hypothesis(LinearPredictor l);

  double predict(const FeaturePoint& x) const;
  double operator()(const FeaturePoint& x) const { return predict(x); }

  bool is_linear() const { return std::holds_alternative<LinearPredictor>(v_); }
  const LinearPredictor& linear() const;
  const FiniteMember* finite_member() const { return std::get_if<FiniteMember>(&v_); }
  const Threshold* threshold() const { return std::get_if<Threshold>(&v_); }

private:
  std::variant<FiniteMember, Threshold, LinearPredictor> v_;
};

/// A hypothesis class with an exact weighted ERM oracle: either an explicit
/// finite class or a threshold family.
class HypothesisClass {
public:
  HypothesisClass(std::shared_ptr<const FiniteClass> finite) : v_(std::move(finite)) {}
  HypothesisClass(ThresholdFamily thresholds) : v_(thresholds) {}

  const std::shared_ptr<const FiniteClass>* finite() const {
    return std::get_if<std::shared_ptr<const FiniteClass>>(&v_);
  }
  const ThresholdFamily* thresholds() const { return std::get_if<ThresholdFamily>(&v_); }

private:
  std::variant<std::shared_ptr<const FiniteClass>, ThresholdFamily> v_;
};

/// Average base loss between two predictors on a test sequence.
double avg_loss(const Hypothesis& f, const Hypothesis& h, std::span<const FeaturePoint> x, LossKind kind);

/// Per-point base losses between two predictors.
std::vector<double> point_losses(const Hypothesis& f, const Hypothesis& h,
                                 std::span<const FeaturePoint> x, LossKind kind);

/// Deterministic weighted ERM for the zero-one loss. Minimizes
/// sum_i weight_i * l(y_i, g(x_i)) over the class. Tie-breaks: smallest index
/// for finite classes; for thresholds, the leftmost optimal cut placed at the
/// midpoint of the optimal gap (sentinel cuts sit one unit beyond the data
/// range). Threshold ERM runs in O(n log n).
Hypothesis erm_weighted(const HypothesisClass& cls, const LabeledDataset& data, LossKind kind);

/// argmin over ||w|| <= 1 of sum_i (y_i - w . x_i)^2. Either the interior
/// least-squares solution or the boundary solution of the ball-constrained
/// trust-region subproblem. Constraint satisfied to 1e-9, stationarity 1e-8.
Hypothesis fit_ball_least_squares(const LabeledDataset& data);

/// Exact classification version-space test: g agrees with every training label.
bool classification_version_space_contains(const HypothesisClass& cls, const LabeledDataset& train,
                                           const Hypothesis& g);

/// Regression alpha-version-space test: mean squared discrepancy of g against
/// h on the training features is at most radius (+1e-12 slack).
bool regression_version_space_contains(std::span<const FeaturePoint> train_features, const Hypothesis& h,
                                       const Hypothesis& g, double radius);

/// Unified membership per the version-space definitions. Classification
/// requires radius == 0; regression interprets `train` as (features, h(x_i)).
bool version_space_membership(const HypothesisClass& cls, const LabeledDataset& train, const Hypothesis& g,
                              double radius, LossKind kind);

/// Exact VC dimension: shattering search for finite classes (domain <= 24),
/// constant 1 for threshold families. Throws CapacityError on larger domains.
int vc_dimension(const HypothesisClass& cls);

/// All row indices of a finite class consistent with the training data.
std::vector<std::size_t> consistent_rows(const FiniteClass& cls, const LabeledDataset& train);

} // namespace selpred
