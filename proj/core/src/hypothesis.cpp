#include "selpred/hypothesis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "selpred/cdt.hpp"

namespace selpred {

namespace {
constexpr double kBallSlack = 1e-9;
constexpr double kMembershipSlack = 1e-12;
} // namespace

// ---------------------------------------------------------------------------
// FiniteClass

FiniteClass::FiniteClass(std::vector<double> domain, std::vector<std::vector<std::uint8_t>> table)
    : domain_(std::move(domain)), table_(std::move(table)) {
  if (domain_.empty()) throw InvalidInputError("FiniteClass: empty domain");
  if (table_.empty()) throw InvalidInputError("FiniteClass: empty table");
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    for (std::size_t j = i + 1; j < domain_.size(); ++j) {
      if (domain_[i] == domain_[j]) throw InvalidInputError("FiniteClass: duplicate domain code");
    }
  }
  for (const auto& row : table_) {
    if (row.size() != domain_.size()) throw InvalidInputError("FiniteClass: row width != domain size");
    for (auto v : row) {
      if (v != 0 && v != 1) throw InvalidInputError("FiniteClass: table entries must be 0/1");
    }
  }
  auto sorted = table_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidInputError("FiniteClass: duplicate hypothesis rows");
}

std::shared_ptr<const FiniteClass> FiniteClass::from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.contains("domain") || !j.contains("table"))
    throw InvalidInputError("FiniteClass: JSON needs 'domain' and 'table'");
  std::vector<double> domain;
  for (const auto& v : j.at("domain")) {
    if (v.is_array()) {
      if (v.size() != 1) throw InvalidInputError("FiniteClass: domain points must be scalar codes");
      domain.push_back(v.at(0).get<double>());
    } else {
      domain.push_back(v.get<double>());
    }
  }
  std::vector<std::vector<std::uint8_t>> table;
  for (const auto& row : j.at("table")) {
    std::vector<std::uint8_t> r;
    for (const auto& v : row) r.push_back(static_cast<std::uint8_t>(v.get<int>()));
    table.push_back(std::move(r));
  }
  return std::make_shared<const FiniteClass>(std::move(domain), std::move(table));
}

std::shared_ptr<const FiniteClass> FiniteClass::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("FiniteClass: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::size_t FiniteClass::column_of(const FeaturePoint& x) const {
  if (x.size() != 1) throw InvalidInputError("FiniteClass: feature points must be d=1 codes");
  for (std::size_t i = 0; i < domain_.size(); ++i) {
    if (domain_[i] == x[0]) return i;
  }
  throw InvalidInputError("FiniteClass: feature point not in domain");
}

// ---------------------------------------------------------------------------
// Hypothesis

Hypothesis::Hypothesis(FiniteMember m) : v_(std::move(m)) {
  const auto& fm = std::get<FiniteMember>(v_);
  if (!fm.cls) throw InvalidInputError("Hypothesis: null finite class");
  if (fm.index >= fm.cls->size()) throw InvalidInputError("Hypothesis: finite member index out of range");
}

Hypothesis::Hypothesis(Threshold t) : v_(t) {}

Hypothesis::Hypothesis(LinearPredictor l) : v_(std::move(l)) {
  const auto& lin = std::get<LinearPredictor>(v_);
  if (lin.w.norm() > 1.0 + kBallSlack)
    throw InvalidInputError("Hypothesis: linear weights outside the unit ball");
}

double Hypothesis::predict(const FeaturePoint& x) const {
  return std::visit(
      [&x](const auto& h) -> double {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, FiniteMember>) {
          return h.cls->predict(h.index, h.cls->column_of(x));
        } else if constexpr (std::is_same_v<T, Threshold>) {
          if (x.size() != 1) throw InvalidInputError("Threshold: feature points must be 1-dimensional");
          const bool leq = x[0] <= h.cut;
          if (h.orientation == ThresholdOrientation::LeqZero) return leq ? 0.0 : 1.0;
          return leq ? 1.0 : 0.0;
        } else {
          if (x.size() != h.w.size()) throw InvalidInputError("LinearPredictor: dimension mismatch");
          return h.w.dot(x);
        }
      },
      v_);
}

const LinearPredictor& Hypothesis::linear() const {
  const auto* l = std::get_if<LinearPredictor>(&v_);
  if (!l) throw InvalidInputError("Hypothesis: not a linear predictor");
  return *l;
}

// ---------------------------------------------------------------------------
// Losses over hypotheses

std::vector<double> point_losses(const Hypothesis& f, const Hypothesis& h,
                                 std::span<const FeaturePoint> x, LossKind kind) {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& xi : x) out.push_back(point_loss(kind, f(xi), h(xi)));
  return out;
}

double avg_loss(const Hypothesis& f, const Hypothesis& h, std::span<const FeaturePoint> x, LossKind kind) {
  if (x.empty()) throw InvalidInputError("avg_loss: empty test sequence");
  const auto losses = point_losses(f, h, x, kind);
  return mean_loss(losses);
}

// ---------------------------------------------------------------------------
// ERM

namespace {

Hypothesis erm_finite(const std::shared_ptr<const FiniteClass>& cls, const LabeledDataset& data) {
  std::vector<std::size_t> cols(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) cols[i] = cls->column_of(data.points[i]);

  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < cls->size(); ++r) {
    double loss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      loss += data.weights[i] * std::abs(data.labels[i] - cls->predict(r, cols[i]));
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = r;
    }
  }
  return Hypothesis(FiniteMember{cls, best});
}

Hypothesis erm_thresholds(ThresholdFamily fam, const LabeledDataset& data) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.points[a][0] < data.points[b][0]; });

  // Collapse equal feature values into groups; accumulate label-weight per group.
  std::vector<double> values;
  std::vector<double> w_ones, w_zeros;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    const double v = data.points[i][0];
    if (values.empty() || v != values.back()) {
      values.push_back(v);
      w_ones.push_back(0.0);
      w_zeros.push_back(0.0);
    }
    if (data.labels[i] == 1.0)
      w_ones.back() += data.weights[i];
    else
      w_zeros.back() += data.weights[i];
  }
  const std::size_t m = values.size();
  const double total_ones = std::accumulate(w_ones.begin(), w_ones.end(), 0.0);
  const double total_zeros = std::accumulate(w_zeros.begin(), w_zeros.end(), 0.0);

  // Candidate cuts: sentinel below, midpoints between distinct values, sentinel
  // above. Cut index j means the first j value-groups satisfy x <= cut.
  auto cut_value = [&](std::size_t j) {
    if (j == 0) return values.front() - 1.0;
    if (j == m) return values.back() + 1.0;
    return 0.5 * (values[j - 1] + values[j]);
  };

  // Leftmost optimal cut (strict improvement scan keeps the smallest j).
  std::size_t best_j = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  double left_ones = 0.0, left_zeros = 0.0;
  for (std::size_t j = 0; j <= m; ++j) {
    if (j > 0) {
      left_ones += w_ones[j - 1];
      left_zeros += w_zeros[j - 1];
    }
    // LeqZero predicts 0 on the left and 1 on the right.
    const double loss = fam.orientation == ThresholdOrientation::LeqZero
                            ? left_ones + (total_zeros - left_zeros)
                            : left_zeros + (total_ones - left_ones);
    if (loss < best_loss) {
      best_loss = loss;
      best_j = j;
    }
  }
  return Hypothesis(Threshold{cut_value(best_j), fam.orientation});
}

} // namespace

Hypothesis erm_weighted(const HypothesisClass& cls, const LabeledDataset& data, LossKind kind) {
  if (data.empty()) throw InvalidInputError("erm_weighted: empty dataset");
  data.validate();
  if (kind != LossKind::ZeroOne)
    throw InvalidInputError("erm_weighted: only the zero-one loss is supported for these classes");
  for (double y : data.labels) {
    if (!is_binary_label(y)) throw InvalidInputError("erm_weighted: zero-one loss needs {0,1} labels");
  }
  if (const auto* f = cls.finite()) return erm_finite(*f, data);
  return erm_thresholds(*cls.thresholds(), data);
}

// ---------------------------------------------------------------------------
// Ball-constrained least squares

Hypothesis fit_ball_least_squares(const LabeledDataset& data) {
  if (data.empty()) throw InvalidInputError("fit_ball_least_squares: empty dataset");
  data.validate();
  const auto d = data.points.front().size();
  if (d < 1) throw InvalidInputError("fit_ball_least_squares: need d >= 1");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.points[i].size() != d) throw InvalidInputError("fit_ball_least_squares: ragged features");
    if (data.points[i].norm() > 1.0 + kBallSlack)
      throw InvalidInputError("fit_ball_least_squares: features must lie in the unit ball");
    if (!std::isfinite(data.labels[i]))
      throw InvalidInputError("fit_ball_least_squares: labels must be finite");
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    A.noalias() += data.weights[i] * data.points[i] * data.points[i].transpose();
    b.noalias() += data.weights[i] * data.labels[i] * data.points[i];
  }

  // Interior candidate: minimal-norm least-squares solution of A w = b.
  Eigen::VectorXd w = A.completeOrthogonalDecomposition().solve(b);
  if (w.norm() > 1.0) {
    // Boundary case: objective w^T A w - 2 b . w over the unit ball.
    QuadraticObjective obj{A, -2.0 * b, 0.0};
    EllipsoidConstraint ball{Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), 1.0};
    w = trust_region_solve(obj, ball);
    const double nw = w.norm();
    if (nw > 0.0) w *= std::min(1.0, 1.0 / nw); // constraint satisfied to 1e-9
  }
  return Hypothesis(LinearPredictor{std::move(w)});
}

// ---------------------------------------------------------------------------
// Version spaces

bool classification_version_space_contains(const HypothesisClass& cls, const LabeledDataset& train,
                                           const Hypothesis& g) {
  (void)cls;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (g(train.points[i]) != train.labels[i]) return false;
  }
  return true;
}

bool regression_version_space_contains(std::span<const FeaturePoint> train_features, const Hypothesis& h,
                                       const Hypothesis& g, double radius) {
  if (radius < 0.0) throw InvalidInputError("version space: negative radius");
  return avg_loss(g, h, train_features, LossKind::Squared) <= radius + kMembershipSlack;
}

bool version_space_membership(const HypothesisClass& cls, const LabeledDataset& train, const Hypothesis& g,
                              double radius, LossKind kind) {
  if (radius < 0.0) throw InvalidInputError("version_space_membership: negative radius");
  if (kind == LossKind::ZeroOne) {
    if (radius != 0.0)
      throw InvalidInputError("version_space_membership: classification requires radius 0");
    return classification_version_space_contains(cls, train, g);
  }
  // Regression: the dataset labels are h(x_i); compare mean squared discrepancy.
  double s = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double diff = g(train.points[i]) - train.labels[i];
    s += diff * diff;
  }
  return s / static_cast<double>(train.size()) <= radius + kMembershipSlack;
}

std::vector<std::size_t> consistent_rows(const FiniteClass& cls, const LabeledDataset& train) {
  std::vector<std::size_t> cols(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) cols[i] = cls.column_of(train.points[i]);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < cls.size(); ++r) {
    bool ok = true;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (cls.predict(r, cols[i]) != train.labels[i]) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// VC dimension

namespace {

bool is_shattered(const FiniteClass& cls, const std::vector<std::size_t>& subset) {
  const std::size_t k = subset.size();
  const std::size_t want = std::size_t{1} << k;
  std::vector<bool> seen(want, false);
  std::size_t found = 0;
  for (std::size_t r = 0; r < cls.size(); ++r) {
    std::size_t pattern = 0;
    for (std::size_t b = 0; b < k; ++b) {
      if (cls.predict(r, subset[b])) pattern |= std::size_t{1} << b;
    }
    if (!seen[pattern]) {
      seen[pattern] = true;
      if (++found == want) return true;
    }
  }
  return false;
}

} // namespace

int vc_dimension(const HypothesisClass& cls) {
  if (cls.thresholds()) return 1;
  const FiniteClass& fc = **cls.finite();
  if (fc.domain_size() > 24)
    throw CapacityError("vc_dimension: domain larger than 24; supply d explicitly");

  // Shattered sets are downward closed: grow them breadth-first, extending
  // each level-k set by elements beyond its maximum.
  std::vector<std::vector<std::size_t>> frontier{{}};
  int vc = 0;
  while (!frontier.empty()) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& s : frontier) {
      const std::size_t start = s.empty() ? 0 : s.back() + 1;
      for (std::size_t e = start; e < fc.domain_size(); ++e) {
        auto t = s;
        t.push_back(e);
        if (is_shattered(fc, t)) next.push_back(std::move(t));
      }
    }
    if (next.empty()) break;
    vc += 1;
    frontier = std::move(next);
  }
  return vc;
}

} // namespace selpred
