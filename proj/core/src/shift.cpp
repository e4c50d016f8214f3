#include "selpred/shift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace selpred {

namespace {

constexpr double kPmfTol = 1e-12;

std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    s += pmf[i];
    cdf[i] = s;
  }
  cdf.back() = 1.0;
  return cdf;
}

std::size_t draw_index(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.next_double();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                           static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

struct PointLess {
  bool operator()(const FeaturePoint& a, const FeaturePoint& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) != b(i)) return a(i) < b(i);
    }
    return false;
  }
};

} // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<FeaturePoint> support, std::vector<double> pmf)
    : support_(std::move(support)), pmf_(std::move(pmf)) {
  if (support_.empty() || support_.size() != pmf_.size())
    throw InvalidInputError("DiscreteDistribution: support and pmf must be nonempty and equal length");
  double total = 0.0;
  for (double p : pmf_) {
    if (!(p >= 0.0)) throw InvalidInputError("DiscreteDistribution: pmf entries must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > kPmfTol)
    throw InvalidInputError("DiscreteDistribution: pmf must sum to 1 (within 1e-12)");
  std::map<FeaturePoint, int, PointLess> seen;
  for (const auto& x : support_) {
    if (!seen.emplace(x, 1).second) throw InvalidInputError("DiscreteDistribution: duplicate support point");
  }
}

DiscreteDistribution DiscreteDistribution::from_json_text(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.contains("support") || !j.contains("pmf"))
    throw InvalidInputError("DiscreteDistribution: JSON needs 'support' and 'pmf'");
  std::vector<FeaturePoint> support;
  for (const auto& v : j.at("support")) {
    if (v.is_array()) {
      FeaturePoint p(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<Eigen::Index>(i)) = v.at(i).get<double>();
      support.push_back(std::move(p));
    } else {
      support.push_back(scalar_point(v.get<double>()));
    }
  }
  std::vector<double> pmf = j.at("pmf").get<std::vector<double>>();
  return DiscreteDistribution(std::move(support), std::move(pmf));
}

DiscreteDistribution DiscreteDistribution::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("DiscreteDistribution: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

AlignedPair align(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
  std::map<FeaturePoint, std::pair<double, double>, PointLess> merged;
  for (std::size_t i = 0; i < P.size(); ++i) merged[P.point(i)].first += P.mass(i);
  for (std::size_t i = 0; i < Q.size(); ++i) merged[Q.point(i)].second += Q.mass(i);
  AlignedPair out;
  out.support.reserve(merged.size());
  out.p.reserve(merged.size());
  out.q.reserve(merged.size());
  for (const auto& [x, pq] : merged) {
    out.support.push_back(x);
    out.p.push_back(pq.first);
    out.q.push_back(pq.second);
  }
  return out;
}

double tv_distance(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
  const AlignedPair a = align(P, Q);
  double s = 0.0;
  for (std::size_t i = 0; i < a.support.size(); ++i) s += std::abs(a.p[i] - a.q[i]);
  return 0.5 * s;
}

double dk_divergence(const DiscreteDistribution& P, const DiscreteDistribution& Q, double k) {
  if (!(k >= 1.0)) throw InvalidInputError("dk_divergence: need k >= 1");
  const AlignedPair a = align(P, Q);
  double s = 0.0;
  for (std::size_t i = 0; i < a.support.size(); ++i) s += std::max(a.q[i] - k * a.p[i], 0.0);
  return s;
}

KBound best_k_bound(const DiscreteDistribution& P, const DiscreteDistribution& Q, AbstainCost c,
                    double base_loss) {
  if (!(base_loss >= 0.0)) throw InvalidInputError("best_k_bound: base_loss must be nonnegative");
  const AlignedPair a = align(P, Q);
  std::vector<double> candidates{1.0};
  for (std::size_t i = 0; i < a.support.size(); ++i) {
    if (a.p[i] > 0.0) candidates.push_back(std::max(1.0, a.q[i] / a.p[i]));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  KBound best{1.0, std::numeric_limits<double>::infinity()};
  for (double k : candidates) {
    const double v = c.c * dk_divergence(P, Q, k) + k * base_loss;
    if (v < best.value) best = KBound{k, v};
  }
  return best;
}

std::vector<std::size_t> sample_iid_indices(const DiscreteDistribution& D, std::size_t n, RngStream& rng) {
  const auto cdf = cumulative(D.pmf());
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = draw_index(cdf, rng);
  return out;
}

std::vector<FeaturePoint> sample_iid(const DiscreteDistribution& D, std::size_t n, RngStream& rng) {
  std::vector<FeaturePoint> out;
  out.reserve(n);
  for (std::size_t idx : sample_iid_indices(D, n, rng)) out.push_back(D.point(idx));
  return out;
}

std::vector<FeaturePoint> CoupledSample::x_points() const {
  std::vector<FeaturePoint> out;
  out.reserve(x.size());
  for (std::size_t i : x) out.push_back(support[i]);
  return out;
}

std::vector<FeaturePoint> CoupledSample::z_points() const {
  std::vector<FeaturePoint> out;
  out.reserve(z.size());
  for (std::size_t i : z) out.push_back(support[i]);
  return out;
}

std::size_t CoupledSample::flagged_count() const {
  std::size_t s = 0;
  for (auto f : flags) s += f;
  return s;
}

CoupledSample tv_coupling(const DiscreteDistribution& P, const DiscreteDistribution& Q, std::size_t n,
                          RngStream& rng) {
  const AlignedPair al = align(P, Q);
  const std::size_t m = al.support.size();

  // Adjustment distribution rho ~ max(P - Q, 0); total mass is the TV distance.
  std::vector<double> rho(m, 0.0);
  double tv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    rho[i] = std::max(al.p[i] - al.q[i], 0.0);
    tv += rho[i];
  }
  std::vector<double> rho_cdf;
  if (tv > 0.0) {
    for (double& r : rho) r /= tv;
    rho_cdf = cumulative(rho);
  }
  const auto q_cdf = cumulative(al.q);

  CoupledSample out;
  out.support = al.support;
  out.x.resize(n);
  out.z.resize(n);
  out.flags.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t xi = draw_index(q_cdf, rng);
    out.x[i] = xi;
    const double copy_prob = al.q[xi] > 0.0 ? std::min(1.0, al.p[xi] / al.q[xi]) : 1.0;
    if (rng.next_double() < copy_prob) {
      out.z[i] = xi;
    } else {
      // The support of rho is disjoint from the reject region, so the drawn z
      // always differs from x here.
      out.z[i] = draw_index(rho_cdf, rng);
      out.flags[i] = 1;
    }
  }
  return out;
}

double dk_coupling_identity_error(const DiscreteDistribution& P, const DiscreteDistribution& Q, double k) {
  if (!(k >= 1.0)) throw InvalidInputError("dk_coupling_identity_error: need k >= 1");
  const AlignedPair al = align(P, Q);
  const double dk = dk_divergence(P, Q, k);
  const double beta = 1.0 - (1.0 - dk) / k;
  double worst = 0.0;
  for (std::size_t i = 0; i < al.support.size(); ++i) {
    const double mu = beta > 0.0 ? std::max(0.0, al.p[i] - al.q[i] / k) / beta : 0.0;
    const double lhs = std::min(al.p[i], al.q[i] / k) + beta * mu;
    worst = std::max(worst, std::abs(lhs - al.p[i]));
  }
  return worst;
}

CoupledSample dk_coupling(const DiscreteDistribution& P, const DiscreteDistribution& Q, double k,
                          std::size_t n, RngStream& rng) {
  if (!(k >= 1.0)) throw InvalidInputError("dk_coupling: need k >= 1");
  const AlignedPair al = align(P, Q);
  const std::size_t m = al.support.size();
  const double dk = dk_divergence(P, Q, k);
  const double beta = 1.0 - (1.0 - dk) / k;

  std::vector<double> mu(m, 0.0);
  std::vector<double> mu_cdf;
  if (beta > 0.0) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      mu[i] = std::max(0.0, al.p[i] - al.q[i] / k) / beta;
      if (mu[i] < 0.0 && mu[i] > -1e-15) mu[i] = 0.0;
      total += mu[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw NumericError("dk_coupling: mu normalization drifted beyond 1e-9");
    for (double& v : mu) v /= total;
    mu_cdf = cumulative(mu);
  }
  const auto q_cdf = cumulative(al.q);

  CoupledSample out;
  out.support = al.support;
  out.x.resize(n);
  out.z.resize(n);
  out.flags.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t xi = draw_index(q_cdf, rng);
    out.x[i] = xi;
    const double abstain_prob =
        al.q[xi] > 0.0 ? std::max(1.0 - k * al.p[xi] / al.q[xi], 0.0) : 0.0;
    const bool abstain = rng.next_double() < abstain_prob;
    out.flags[i] = abstain ? 1 : 0;
    if (!abstain && rng.next_double() < 1.0 / k) {
      out.z[i] = xi;
    } else {
      if (beta <= 0.0) {
        // beta = 0 only when k = 1 and P = Q, where the copy branch always fires.
        out.z[i] = xi;
      } else {
        out.z[i] = draw_index(mu_cdf, rng);
      }
    }
  }
  return out;
}

CorruptionResult corrupt(std::span<const FeaturePoint> z, double gamma, const CorruptionPolicy& policy,
                         RngStream& rng) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInputError("corrupt: gamma must be in [0,1]");
  const std::size_t n = z.size();
  const std::size_t count = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n)));

  CorruptionResult out;
  out.x.assign(z.begin(), z.end());
  if (count == 0) return out;

  auto targets = rng.sample_without_replacement(n, count);
  std::sort(targets.begin(), targets.end());

  if (const auto* t = std::get_if<TargetedPolicy>(&policy)) {
    if (t->replacements.size() < count)
      throw InvalidInputError("corrupt: targeted replacement list shorter than floor(gamma n)");
    for (std::size_t j = 0; j < count; ++j) out.x[targets[j]] = t->replacements[j];
  } else {
    const auto& r = std::get<ResamplePolicy>(policy).replacement;
    const auto cdf = cumulative(r.pmf());
    for (std::size_t j = 0; j < count; ++j) out.x[targets[j]] = r.point(draw_index(cdf, rng));
  }

  auto points_equal = [](const FeaturePoint& a, const FeaturePoint& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) != b(i)) return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!points_equal(out.x[i], z[i])) out.modified.push_back(i);
  }
  return out;
}

} // namespace selpred
