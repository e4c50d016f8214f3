#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "selpred/rng.hpp"
#include "selpred/types.hpp"

namespace selpred {

/// Exact probability mass function over a finite list of feature points.
/// Exactness is what turns the proof couplings into assertable identities:
/// every pointwise ratio P(x)/Q(x) is available.
class DiscreteDistribution {
public:
  DiscreteDistribution(std::vector<FeaturePoint> support, std::vector<double> pmf);

  /// Parse {"support": [[coords...], ...], "pmf": [...]} (scalars allowed in
  /// place of one-element coordinate arrays).
  static DiscreteDistribution from_json_text(const std::string& text);
  static DiscreteDistribution from_file(const std::string& path);

  std::size_t size() const { return support_.size(); }
  const std::vector<FeaturePoint>& support() const { return support_; }
  const std::vector<double>& pmf() const { return pmf_; }
  const FeaturePoint& point(std::size_t i) const { return support_[i]; }
  double mass(std::size_t i) const { return pmf_[i]; }

private:
  std::vector<FeaturePoint> support_;
  std::vector<double> pmf_;
};

/// Two pmfs re-expressed over the union support (zero-extended).
struct AlignedPair {
  std::vector<FeaturePoint> support;
  std::vector<double> p;
  std::vector<double> q;
};

AlignedPair align(const DiscreteDistribution& P, const DiscreteDistribution& Q);

/// Total variation distance (1/2) sum |P - Q| = D_1(P || Q).
double tv_distance(const DiscreteDistribution& P, const DiscreteDistribution& Q);

/// D_k(P || Q) = sum_x max(Q(x) - k P(x), 0), k >= 1. Nonincreasing in k and
/// zero exactly when Q <= k P pointwise.
double dk_divergence(const DiscreteDistribution& P, const DiscreteDistribution& Q, double k);

struct KBound {
  double k;
  double value;
};

/// Minimize k -> c * D_k(P||Q) + k * base_loss over k >= 1. D_k is piecewise
/// linear in k with kinks only at the ratios Q(x)/P(x), so scanning the kink
/// candidates (clipped to k >= 1) is exact. Never worse than c*TV + base_loss.
KBound best_k_bound(const DiscreteDistribution& P, const DiscreteDistribution& Q, AbstainCost c,
                    double base_loss);

/// n iid draws; CDF-inversion categorical sampling, deterministic given the seed.
std::vector<FeaturePoint> sample_iid(const DiscreteDistribution& D, std::size_t n, RngStream& rng);

/// Index-level variant over the distribution's own support order.
std::vector<std::size_t> sample_iid_indices(const DiscreteDistribution& D, std::size_t n, RngStream& rng);

/// A coupled (test, natural) draw over a shared support. `flags` marks
/// modified indices for the TV coupling and abstain indices for the D_k
/// coupling; x and z index into `support`.
struct CoupledSample {
  std::vector<FeaturePoint> support;
  std::vector<std::size_t> x; ///< marginal Q^n
  std::vector<std::size_t> z; ///< marginal P^n
  std::vector<std::uint8_t> flags;

  std::vector<FeaturePoint> x_points() const;
  std::vector<FeaturePoint> z_points() const;
  std::size_t flagged_count() const;
};

/// Maximal per-coordinate coupling: draw x ~ Q^n, copy z_i = x_i with
/// probability min(1, P(x_i)/Q(x_i)), otherwise draw z_i from the adjustment
/// distribution proportional to max(P - Q, 0). The modified-coordinate
/// indicator is Bernoulli(|P-Q|_TV) exactly, independently per coordinate.
CoupledSample tv_coupling(const DiscreteDistribution& P, const DiscreteDistribution& Q, std::size_t n,
                          RngStream& rng);

/// The D_k proof coupling: abstain on x_i ~ Q with probability
/// max(1 - k P(x_i)/Q(x_i), 0); for non-abstained indices copy z_i = x_i with
/// probability 1/k, otherwise (and on abstained indices) draw z_i from
/// mu(z) = max(0, P(z) - Q(z)/k) / beta with beta = 1 - (1 - D_k)/k. The
/// marginal of z is P^n and E[#abstained]/n = D_k(P||Q).
CoupledSample dk_coupling(const DiscreteDistribution& P, const DiscreteDistribution& Q, double k,
                          std::size_t n, RngStream& rng);

/// Verify the pmf-level identity min(P, Q/k) + beta * mu = P behind the D_k
/// coupling; returns the max absolute pointwise error.
double dk_coupling_identity_error(const DiscreteDistribution& P, const DiscreteDistribution& Q, double k);

struct ResamplePolicy {
  DiscreteDistribution replacement;
};
struct TargetedPolicy {
  std::vector<FeaturePoint> replacements; ///< consumed in order, needs >= floor(gamma n)
};
using CorruptionPolicy = std::variant<ResamplePolicy, TargetedPolicy>;

struct CorruptionResult {
  std::vector<FeaturePoint> x;
  std::vector<std::size_t> modified; ///< indices with x_i != z_i, ascending
};

/// Test-set adversary: replace exactly floor(gamma n) uniformly chosen
/// indices per the policy. `modified` records true changes only (a
/// replacement equal to the original does not count).
CorruptionResult corrupt(std::span<const FeaturePoint> z, double gamma, const CorruptionPolicy& policy,
                         RngStream& rng);

} // namespace selpred
