#include <doctest.h>

#include <cmath>

#include "selpred/shift.hpp"

using namespace selpred;

namespace {

DiscreteDistribution scalar_dist(std::vector<double> codes, std::vector<double> pmf) {
  std::vector<FeaturePoint> support;
  for (double v : codes) support.push_back(scalar_point(v));
  return DiscreteDistribution(std::move(support), std::move(pmf));
}

// The uniform-on-[0,1] vs uniform-on-[0,1/2] pair, discretized to four cells.
DiscreteDistribution wide_uniform() { return scalar_dist({1, 2, 3, 4}, {0.25, 0.25, 0.25, 0.25}); }
DiscreteDistribution narrow_uniform() { return scalar_dist({1, 2}, {0.5, 0.5}); }

// Upper 0.999 chi-square quantile via the Wilson-Hilferty approximation.
double chi2_crit_999(double df) {
  const double z = 3.0902323061678132; // Phi^{-1}(0.999)
  const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

double chi2_statistic(const std::vector<std::size_t>& draws, const std::vector<double>& pmf,
                      std::size_t n) {
  std::vector<double> counts(pmf.size(), 0.0);
  for (std::size_t i : draws) counts[i] += 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const double expected = pmf[i] * static_cast<double>(n);
    if (expected > 0.0) {
      stat += (counts[i] - expected) * (counts[i] - expected) / expected;
    } else if (counts[i] > 0.0) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return stat;
}

} // namespace

TEST_CASE("tv_distance: endpoints and the discretized uniform pair") {
  const auto P = wide_uniform();
  CHECK(tv_distance(P, P) == 0.0);
  const auto disjointA = scalar_dist({0, 1}, {0.5, 0.5});
  const auto disjointB = scalar_dist({2, 3}, {0.5, 0.5});
  CHECK(tv_distance(disjointA, disjointB) == 1.0);
  CHECK(tv_distance(wide_uniform(), narrow_uniform()) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("dk_divergence: paper example, k=1 equality, point masses") {
  CHECK(dk_divergence(wide_uniform(), narrow_uniform(), 2.0) == 0.0);
  CHECK(dk_divergence(wide_uniform(), narrow_uniform(), 1.0) ==
        doctest::Approx(tv_distance(wide_uniform(), narrow_uniform())).epsilon(1e-15));

  const auto s = scalar_dist({0}, {1.0});
  const auto t = scalar_dist({1}, {1.0});
  for (double k : {1.0, 3.0, 100.0}) CHECK(dk_divergence(s, t, k) == 1.0);

  CHECK_THROWS_AS(dk_divergence(s, t, 0.5), InvalidInputError);
}

TEST_CASE("best_k_bound kink search") {
  const AbstainCost c(0.4);

  SUBCASE("zero base loss pushes k to the largest finite ratio") {
    const auto P = scalar_dist({0, 1}, {0.5, 0.5});
    const auto Q = scalar_dist({0, 1, 2}, {0.25, 0.25, 0.5});
    const KBound kb = best_k_bound(P, Q, c, 0.0);
    // Q/P ratios are 1/2 on the shared cells; beyond k=1, only the P-less cell remains.
    CHECK(kb.value == doctest::Approx(c.c * 0.5).epsilon(1e-12));
  }

  SUBCASE("P = Q returns the base loss at k = 1") {
    const auto P = wide_uniform();
    const KBound kb = best_k_bound(P, P, c, 0.07);
    CHECK(kb.k == 1.0);
    CHECK(kb.value == doctest::Approx(0.07).epsilon(1e-12));
  }

  SUBCASE("the paper pair with small base loss strictly beats the TV bound") {
    const double eps = 0.1; // eps < c/2
    const KBound kb = best_k_bound(wide_uniform(), narrow_uniform(), c, eps);
    CHECK(kb.k == doctest::Approx(2.0));
    CHECK(kb.value == doctest::Approx(2.0 * eps).epsilon(1e-12));
    CHECK(kb.value < c.c * 0.5 + eps);
  }
}

TEST_CASE("sample_iid: determinism, point mass, and frequencies") {
  const auto point = scalar_dist({7}, {1.0});
  RngStream rng(1);
  for (const auto& x : sample_iid(point, 50, rng)) CHECK(x[0] == 7.0);

  RngStream r1(9), r2(9);
  const auto a = sample_iid(wide_uniform(), 100, r1);
  const auto b = sample_iid(wide_uniform(), 100, r2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i][0] == b[i][0]);

  const std::size_t n = 100000;
  RngStream r3(33);
  const auto idx = sample_iid_indices(wide_uniform(), n, r3);
  std::vector<double> counts(4, 0.0);
  for (auto i : idx) counts[i] += 1.0;
  for (int i = 0; i < 4; ++i) {
    const double expect = 0.25 * n;
    const double sigma = std::sqrt(n * 0.25 * 0.75);
    CHECK(std::abs(counts[static_cast<std::size_t>(i)] - expect) <= 4.0 * sigma);
  }
}

TEST_CASE("tv_coupling: degenerate cases and exact modification rate") {
  SUBCASE("P = Q never modifies") {
    RngStream rng(2);
    const auto cs = tv_coupling(wide_uniform(), wide_uniform(), 200, rng);
    CHECK(cs.flagged_count() == 0);
    for (std::size_t i = 0; i < cs.x.size(); ++i) CHECK(cs.x[i] == cs.z[i]);
  }

  SUBCASE("disjoint supports always modify") {
    RngStream rng(3);
    const auto A = scalar_dist({0, 1}, {0.5, 0.5});
    const auto B = scalar_dist({2, 3}, {0.5, 0.5});
    const auto cs = tv_coupling(A, B, 200, rng);
    CHECK(cs.flagged_count() == 200);
  }

  SUBCASE("modified fraction matches TV and z is P-distributed") {
    RngStream rng(4);
    const std::size_t n = 100000;
    const auto cs = tv_coupling(wide_uniform(), narrow_uniform(), n, rng);
    const double frac = static_cast<double>(cs.flagged_count()) / static_cast<double>(n);
    const double sigma = std::sqrt(0.5 * 0.5 / static_cast<double>(n));
    CHECK(std::abs(frac - 0.5) <= 4.0 * sigma);

    const AlignedPair al = align(wide_uniform(), narrow_uniform());
    CHECK(chi2_statistic(cs.z, al.p, n) <= chi2_crit_999(3.0));
    CHECK(chi2_statistic(cs.x, al.q, n) <= chi2_crit_999(1.0));
  }
}

TEST_CASE("dk_coupling: pmf identity, abstain rate, and marginals") {
  SUBCASE("pmf identity for random pairs") {
    RngStream rng(5);
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t m = 2 + rng.next_below(6);
      std::vector<double> codes, p(m), q(m);
      double sp = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        codes.push_back(static_cast<double>(i));
        p[i] = rng.next_double() < 0.25 ? 0.0 : rng.next_double();
        q[i] = rng.next_double() < 0.25 ? 0.0 : rng.next_double();
        sp += p[i];
        sq += q[i];
      }
      if (sp == 0.0) p[0] = sp = 1.0;
      if (sq == 0.0) q[0] = sq = 1.0;
      for (auto& v : p) v /= sp;
      for (auto& v : q) v /= sq;
      double tp = 0.0, tq = 0.0;
      for (double v : p) tp += v;
      for (double v : q) tq += v;
      p.back() += 1.0 - tp;
      q.back() += 1.0 - tq;
      if (p.back() < 0) p.back() = 0;
      if (q.back() < 0) q.back() = 0;
      double tp2 = 0.0, tq2 = 0.0;
      for (double v : p) tp2 += v;
      for (double v : q) tq2 += v;
      for (auto& v : p) v /= tp2;
      for (auto& v : q) v /= tq2;

      const auto P = scalar_dist(codes, p);
      const auto Q = scalar_dist(codes, q);
      const double k = 1.0 + 4.0 * rng.next_double();
      CHECK(dk_coupling_identity_error(P, Q, k) <= 1e-12);
    }
  }

  SUBCASE("P = Q with k = 1: no abstentions, z copies x") {
    RngStream rng(6);
    const auto cs = dk_coupling(wide_uniform(), wide_uniform(), 1.0, 300, rng);
    CHECK(cs.flagged_count() == 0);
    for (std::size_t i = 0; i < cs.x.size(); ++i) CHECK(cs.x[i] == cs.z[i]);
  }

  SUBCASE("paper pair at k = 2: zero abstentions, P marginal via the copy rule") {
    RngStream rng(7);
    const std::size_t n = 100000;
    const auto cs = dk_coupling(wide_uniform(), narrow_uniform(), 2.0, n, rng);
    CHECK(cs.flagged_count() == 0); // D_2 = 0
    const AlignedPair al = align(wide_uniform(), narrow_uniform());
    CHECK(chi2_statistic(cs.z, al.p, n) <= chi2_crit_999(3.0));
  }

  SUBCASE("abstain fraction tracks D_k") {
    RngStream rng(8);
    const auto P = scalar_dist({0, 1, 2}, {0.6, 0.4, 0.0});
    const auto Q = scalar_dist({0, 1, 2}, {0.2, 0.2, 0.6});
    for (double k : {1.0, 1.5, 3.0}) {
      const double dk = dk_divergence(P, Q, k);
      const std::size_t n = 100000;
      const auto cs = dk_coupling(P, Q, k, n, rng);
      const double frac = static_cast<double>(cs.flagged_count()) / static_cast<double>(n);
      const double sigma = std::sqrt(std::max(dk * (1.0 - dk), 1e-9) / static_cast<double>(n));
      CHECK(std::abs(frac - dk) <= 4.0 * sigma);
      const AlignedPair al = align(P, Q);
      CHECK(chi2_statistic(cs.z, al.p, n) <= chi2_crit_999(1.0));
    }
  }
}

TEST_CASE("corrupt: counts, targeted policy, validation") {
  std::vector<FeaturePoint> z;
  for (int i = 0; i < 10; ++i) z.push_back(scalar_point(i));

  SUBCASE("gamma = 0 is the identity") {
    RngStream rng(9);
    const auto r = corrupt(z, 0.0, ResamplePolicy{wide_uniform()}, rng);
    CHECK(r.modified.empty());
    for (int i = 0; i < 10; ++i) CHECK(r.x[static_cast<std::size_t>(i)][0] == z[static_cast<std::size_t>(i)][0]);
  }

  SUBCASE("gamma = 1 targeted constant replaces everything that differs") {
    RngStream rng(10);
    const TargetedPolicy policy{std::vector<FeaturePoint>(10, scalar_point(3.0))};
    const auto r = corrupt(z, 1.0, policy, rng);
    CHECK(r.modified.size() == 9); // index 3 already equals the replacement
    for (const auto& x : r.x) CHECK(x[0] == 3.0);
  }

  SUBCASE("|M| never exceeds floor(gamma n)") {
    RngStream rng(11);
    for (double gamma : {0.15, 0.5, 0.85}) {
      const auto r = corrupt(z, gamma, ResamplePolicy{wide_uniform()}, rng);
      CHECK(r.modified.size() <= static_cast<std::size_t>(gamma * 10.0));
    }
  }

  SUBCASE("short replacement list is rejected") {
    RngStream rng(12);
    const TargetedPolicy policy{std::vector<FeaturePoint>(2, scalar_point(0.0))};
    CHECK_THROWS_AS(corrupt(z, 0.5, policy, rng), InvalidInputError);
  }
}

TEST_CASE("DiscreteDistribution validation and json") {
  CHECK_THROWS_AS(scalar_dist({0, 1}, {0.6, 0.6}), InvalidInputError);
  CHECK_THROWS_AS(scalar_dist({0, 1}, {-0.1, 1.1}), InvalidInputError);
  CHECK_THROWS_AS(scalar_dist({0, 0}, {0.5, 0.5}), InvalidInputError);

  const auto d = DiscreteDistribution::from_json_text(R"({"support": [0, [1.5]], "pmf": [0.25, 0.75]})");
  CHECK(d.size() == 2);
  CHECK(d.point(1)[0] == 1.5);
  CHECK(d.mass(0) == 0.25);
}
