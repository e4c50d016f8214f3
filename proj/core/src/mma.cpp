#include "selpred/mma.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "selpred/loss.hpp"
#include "selpred/maximizers.hpp"

namespace selpred {

std::optional<Eigen::VectorXd> box_violation(const Eigen::VectorXd& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) > 1.0 || a(i) < 0.0) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(a.size());
      v(i) = a(i) > 1.0 ? 1.0 : -1.0;
      return v;
    }
  }
  return std::nullopt;
}

Eigen::VectorXd loss_separator(std::span<const double> point_losses, double c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(point_losses.size()));
  for (std::size_t i = 0; i < point_losses.size(); ++i) v(static_cast<Eigen::Index>(i)) = c - point_losses[i];
  return v;
}

std::string MmaDiagnostics::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["oracle_calls"] = oracle_calls;
  j["probes"] = probes;
  j["certificate_fired"] = certificate_fired;
  j["oracle_warning"] = oracle_warning;
  j["incumbent_trajectory"] = incumbent_trajectory;
  return j.dump();
}

namespace {

// Lower bounds on OPT = min_a max_{g in V} l_x(g,h,a) from mixtures over
// witnessed hypotheses: for any distribution mu over witnesses,
// (1/n) sum_i min(c, lbar_i(mu)) <= min_a E_mu[l(g,h,a)] <= OPT.
// Multiplicative-weights ascent tightens the mixture; the running maximum
// over all evaluated mixtures stays a valid bound.
class MixtureLowerBound {
public:
  MixtureLowerBound(std::size_t n, double c) : n_(n), c_(c) {}

  double value_of(const std::vector<double>& mixture_losses) const {
    double s = 0.0;
    for (double l : mixture_losses) s += std::min(c_, l);
    return s / static_cast<double>(n_);
  }

  bool add(const std::vector<double>& losses) {
    for (const auto& v : vecs_) {
      if (v == losses) return false;
    }
    if (vecs_.size() >= kCap) {
      std::size_t drop = 0;
      for (std::size_t t = 1; t < mu_.size(); ++t) {
        if (mu_[t] < mu_[drop]) drop = t;
      }
      vecs_.erase(vecs_.begin() + static_cast<std::ptrdiff_t>(drop));
      mu_.erase(mu_.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    vecs_.push_back(losses);
    mu_.assign(vecs_.size(), 1.0 / static_cast<double>(vecs_.size()));
    best_ = std::max(best_, value_of(losses));
    refresh_mixture();
    return true;
  }

  void refine(int steps) {
    if (vecs_.empty()) return;
    for (int s = 0; s < steps; ++s) {
      std::vector<double> grad(vecs_.size(), 0.0);
      for (std::size_t t = 0; t < vecs_.size(); ++t) {
        double g = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
          if (mixture_[i] < c_) g += vecs_[t][i];
        }
        grad[t] = g / static_cast<double>(n_);
      }
      const double gmax = *std::max_element(grad.begin(), grad.end());
      double z = 0.0;
      for (std::size_t t = 0; t < mu_.size(); ++t) {
        mu_[t] *= std::exp(2.0 * (grad[t] - gmax) / std::max(c_, 1e-12));
        z += mu_[t];
      }
      for (double& m : mu_) m /= z;
      refresh_mixture();
    }
  }

  double best() const { return best_; }
  const std::vector<double>& mixture() const { return mixture_; }
  bool empty() const { return vecs_.empty(); }

private:
  static constexpr std::size_t kCap = 256;

  void refresh_mixture() {
    mixture_.assign(n_, 0.0);
    for (std::size_t t = 0; t < vecs_.size(); ++t) {
      for (std::size_t i = 0; i < n_; ++i) mixture_[i] += mu_[t] * vecs_[t][i];
    }
    best_ = std::max(best_, value_of(mixture_));
  }

  std::size_t n_;
  double c_;
  std::vector<std::vector<double>> vecs_;
  std::vector<double> mu_;
  std::vector<double> mixture_;
  double best_ = 0.0;
};

} // namespace

MmaResult ellipsoid_minimize(int n, const LossMaximizer& oracle, double c, const EllipsoidOptions& options) {
  if (n < 1) throw InvalidInputError("ellipsoid_minimize: need n >= 1");
  if (!(c > 0.0)) throw InvalidInputError("ellipsoid_minimize: cost must be positive");
  const double nn = static_cast<double>(n);
  // Volume-argument budget: circumscribed radius sqrt(n), inscribed radius
  // eps/2 with eps = 1/(3n).
  const double circumscribed = std::sqrt(nn);
  const double inscribed = 1.0 / (6.0 * nn);
  const long budget =
      options.max_iterations > 0
          ? options.max_iterations
          : static_cast<long>(std::ceil(2.0 * nn * (nn + 1.0) * std::log(circumscribed / inscribed)));

  MmaResult result;
  MmaDiagnostics& diag = result.diag;
  MixtureLowerBound lb(static_cast<std::size_t>(n), c);
  std::set<std::vector<double>> probed;

  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_a;
  std::optional<Hypothesis> best_g;

  auto evaluate = [&](const std::vector<double>& a_vec, bool is_probe) {
    diag.oracle_calls += 1;
    if (is_probe) diag.probes += 1;
    const AbstentionVector a(a_vec);
    OracleWitness w = oracle(a);
    if (!w.guarantee_ok) diag.oracle_warning = true;
    if (w.point_losses.size() != static_cast<std::size_t>(n))
      throw InvalidInputError("ellipsoid_minimize: oracle returned wrong loss-vector length");
    double loss = 0.0;
    for (std::size_t i = 0; i < w.point_losses.size(); ++i)
      loss += a_vec[i] * c + (1.0 - a_vec[i]) * w.point_losses[i];
    loss /= static_cast<double>(n);
    if (loss < best_loss) {
      best_loss = loss;
      best_a = a_vec;
      best_g = w.g;
      diag.incumbent_trajectory.push_back(loss);
    }
    if (lb.add(w.point_losses)) lb.refine(40);
    return w;
  };

  auto probe = [&](std::vector<double> a_vec) {
    if (!probed.insert(a_vec).second) return;
    evaluate(a_vec, true);
  };

  auto certificate_met = [&]() {
    return options.target_gap > 0.0 &&
           best_loss + options.oracle_slack - lb.best() <= options.target_gap + 1e-15;
  };

  if (options.enable_probes) {
    probe(std::vector<double>(static_cast<std::size_t>(n), 0.0));
    probe(std::vector<double>(static_cast<std::size_t>(n), 1.0));
  }

  Eigen::VectorXd z = Eigen::VectorXd::Constant(n, 0.5);
  Eigen::MatrixXd P = nn * Eigen::MatrixXd::Identity(n, n);

  for (long t = 0; t < budget && !certificate_met(); ++t) {
    diag.iterations += 1;
    Eigen::VectorXd cut;
    if (auto box = box_violation(z)) {
      cut = *box;
    } else {
      std::vector<double> a_vec(z.data(), z.data() + n);
      OracleWitness w = evaluate(a_vec, false);
      if (options.enable_probes) {
        // Greedy candidates: abstain where the (mixture / latest) worst-case
        // per-point loss meets the abstain cost.
        std::vector<double> g1(static_cast<std::size_t>(n), 0.0);
        std::vector<double> g2(static_cast<std::size_t>(n), 0.0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
          g1[i] = (!lb.empty() && lb.mixture()[i] >= c) ? 1.0 : 0.0;
          g2[i] = w.point_losses[i] >= c ? 1.0 : 0.0;
        }
        probe(std::move(g1));
        probe(std::move(g2));
      }
      if (certificate_met()) {
        diag.certificate_fired = true;
        break;
      }
      cut = loss_separator(w.point_losses, c);
      if (cut.norm() == 0.0) break; // flat objective: every a is optimal
    }

    if ((t & 63) == 0) lb.refine(5);

    if (n == 1) {
      const double radius = std::sqrt(P(0, 0));
      z(0) -= 0.5 * radius * (cut(0) > 0 ? 1.0 : -1.0);
      P(0, 0) *= 0.25;
    } else {
      const Eigen::VectorXd Pg = P * cut;
      const double denom = cut.dot(Pg);
      if (!(denom > 0.0) || !std::isfinite(denom)) {
        std::ostringstream msg;
        msg << "ellipsoid_minimize: shape matrix lost positive definiteness at iteration " << t
            << " (g'Pg=" << denom << ", incumbent=" << best_loss << ")";
        throw NumericError(msg.str());
      }
      const Eigen::VectorXd gt = Pg / std::sqrt(denom);
      z -= gt / (nn + 1.0);
      P = (nn * nn / (nn * nn - 1.0)) * (P - (2.0 / (nn + 1.0)) * gt * gt.transpose());
      P = 0.5 * (P + P.transpose());
    }
  }
  if (certificate_met()) diag.certificate_fired = true;

  if (!best_g.has_value()) throw NumericError("ellipsoid_minimize: no in-box query was evaluated");
  result.a = AbstentionVector(best_a);
  result.witness_loss = best_loss;
  result.certified_bound = best_loss + options.oracle_slack;
  result.lower_bound = lb.best();
  result.witness = best_g;
  return result;
}

// ---------------------------------------------------------------------------
// Task-level wrappers

MmaResult mma_classification(const HypothesisClass& cls, const LabeledDataset& train,
                             std::span<const FeaturePoint> test, const Hypothesis& h, AbstainCost c) {
  const int n = static_cast<int>(test.size());
  LossMaximizer oracle = [&](const AbstentionVector& a) {
    Hypothesis g = flip_maximize(cls, train, test, h, a);
    return OracleWitness{g, point_losses(g, h, test, LossKind::ZeroOne), true};
  };
  EllipsoidOptions opt;
  opt.oracle_slack = 1.0 / (3.0 * n);
  opt.target_gap = 1.0 / n;
  return ellipsoid_minimize(n, oracle, c.c, opt);
}

MmaResult mma_classification_exact(const std::shared_ptr<const FiniteClass>& cls,
                                   const LabeledDataset& train, std::span<const FeaturePoint> test,
                                   const Hypothesis& h, AbstainCost c) {
  const int n = static_cast<int>(test.size());
  LossMaximizer oracle = [&](const AbstentionVector& a) {
    ClassificationMax m = brute_force_maximize_classification(cls, train, test, h, a, c);
    return OracleWitness{m.g, point_losses(m.g, h, test, LossKind::ZeroOne), true};
  };
  EllipsoidOptions opt;
  opt.oracle_slack = 0.0;
  opt.target_gap = 1.0 / n;
  return ellipsoid_minimize(n, oracle, c.c, opt);
}

MmaResult mma_regression(std::span<const FeaturePoint> train_x, const Hypothesis& h,
                         std::span<const FeaturePoint> test, AbstainCost c, double alpha) {
  const int n = static_cast<int>(test.size());
  constexpr double kScale = 4.0; // squared loss on [-1,1] labels spans [0,4]
  LossMaximizer oracle = [&](const AbstentionVector& a) {
    bool ok = true;
    std::optional<Hypothesis> g;
    try {
      g = cdt_maximize_regression(train_x, h, test, a, alpha);
    } catch (const NumericError&) {
      ok = false;
      g = h; // h always lies in its own version space
    }
    auto losses = point_losses(*g, h, test, LossKind::Squared);
    for (double& l : losses) l /= kScale;
    return OracleWitness{*g, std::move(losses), ok};
  };
  EllipsoidOptions opt;
  opt.oracle_slack = 1.0 / (3.0 * n);
  opt.target_gap = 1.0 / n;
  MmaResult r = ellipsoid_minimize(n, oracle, c.c / kScale, opt);
  r.witness_loss *= kScale;
  r.certified_bound *= kScale;
  r.lower_bound *= kScale;
  for (double& v : r.diag.incumbent_trajectory) v *= kScale;
  return r;
}

// ---------------------------------------------------------------------------
// Grid search

namespace {

void grid_scan(const std::function<double(const AbstentionVector&)>& f, int n,
               const std::vector<double>& lo, const std::vector<double>& hi, double step,
               std::vector<double>& best_a, double& best_v) {
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    for (double v = lo[static_cast<std::size_t>(k)]; v <= hi[static_cast<std::size_t>(k)] + 1e-12; v += step)
      axes[static_cast<std::size_t>(k)].push_back(std::min(1.0, std::max(0.0, v)));
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> a(static_cast<std::size_t>(n));
  for (;;) {
    for (int k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
    const double v = f(AbstentionVector(a));
    if (v < best_v) {
      best_v = v;
      best_a = a;
    }
    int k = 0;
    while (k < n) {
      if (++idx[static_cast<std::size_t>(k)] < axes[static_cast<std::size_t>(k)].size()) break;
      idx[static_cast<std::size_t>(k)] = 0;
      ++k;
    }
    if (k == n) break;
  }
}

} // namespace

GridSearchResult grid_search_min(int n, const std::function<double(const AbstentionVector&)>& exact_max,
                                 double step) {
  if (n > 3) throw CapacityError("grid_search_min: n > 3");
  if (n < 1 || !(step > 0.0)) throw InvalidInputError("grid_search_min: bad arguments");

  std::vector<double> lo(static_cast<std::size_t>(n), 0.0), hi(static_cast<std::size_t>(n), 1.0);
  std::vector<double> best_a(static_cast<std::size_t>(n), 0.0);
  double best_v = std::numeric_limits<double>::infinity();

  double cur = (n <= 2) ? step : 0.05;
  grid_scan(exact_max, n, lo, hi, cur, best_a, best_v);
  // Zoom refinement for n = 3: the objective is convex piecewise-affine, so
  // localized halving around the incumbent reaches the global grid optimum.
  while (cur > step) {
    const double next = std::max(step, cur / 5.0);
    for (int k = 0; k < n; ++k) {
      lo[static_cast<std::size_t>(k)] = std::max(0.0, best_a[static_cast<std::size_t>(k)] - 2.0 * cur);
      hi[static_cast<std::size_t>(k)] = std::min(1.0, best_a[static_cast<std::size_t>(k)] + 2.0 * cur);
    }
    grid_scan(exact_max, n, lo, hi, next, best_a, best_v);
    cur = next;
  }
  return GridSearchResult{AbstentionVector(best_a), best_v};
}

JointSelection joint_selective_prediction(const std::shared_ptr<const FiniteClass>& cls,
                                          const LabeledDataset& train, std::span<const FeaturePoint> test,
                                          AbstainCost c) {
  if (!cls) throw InvalidInputError("joint_selective_prediction: null class");
  if (cls->size() > 4096) throw CapacityError("joint_selective_prediction: |F| > 4096");
  const auto rows = consistent_rows(*cls, train);
  if (rows.empty()) throw InfeasibleError("joint_selective_prediction: empty version space");

  std::optional<JointSelection> best;
  for (std::size_t r : rows) {
    Hypothesis h{FiniteMember{cls, r}};
    MmaResult res = mma_classification(HypothesisClass{cls}, train, test, h, c);
    if (!best || res.certified_bound < best->result.certified_bound) {
      best = JointSelection{std::move(h), std::move(res)};
    }
  }
  return std::move(*best);
}

} // namespace selpred
