#include "selpred/bounds.hpp"

#include <cmath>

#include "selpred/mma.hpp"

namespace selpred {

namespace {
double lg(double x) { return std::log2(x); }
} // namespace

ExpectedBound classification_bound_expected(int d, int n) {
  if (d < 1 || n < 2) throw InvalidInputError("classification_bound_expected: need d >= 1, n >= 2");
  const double dd = d, nn = n;
  return ExpectedBound{2.0 * dd * lg(2.0 * nn) / nn, 2.0 * dd * lg(3.0 * nn) / nn};
}

HighProbBound classification_bound_highprob(int d, int n, double delta) {
  if (d < 1 || n < 2) throw InvalidInputError("classification_bound_highprob: need d >= 1, n >= 2");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidInputError("classification_bound_highprob: need delta in (0,1)");
  const double dd = d, nn = n;
  return HighProbBound{(2.0 * dd * lg(2.0 * nn) + lg(1.0 / (2.0 * delta))) / nn,
                       (2.0 * dd * lg(2.0 * nn) + lg(1.0 / delta)) / nn};
}

PqMetrics pq_metrics(const DiscreteDistribution& Q, const DiscreteDistribution& P, const Hypothesis& h,
                     const Hypothesis& f, const std::function<double(const FeaturePoint&)>& abstain_prob) {
  PqMetrics m{0.0, 0.0};
  for (std::size_t i = 0; i < Q.size(); ++i) {
    const FeaturePoint& x = Q.point(i);
    const double a = abstain_prob(x);
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidInputError("pq_metrics: abstain_prob must be in [0,1]");
    if (h(x) != f(x)) m.eps1 += Q.mass(i) * (1.0 - a);
  }
  for (std::size_t i = 0; i < P.size(); ++i) {
    const FeaturePoint& x = P.point(i);
    const double a = abstain_prob(x);
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidInputError("pq_metrics: abstain_prob must be in [0,1]");
    m.eps2 += P.mass(i) * a;
  }
  return m;
}

double generalize_abstainer(const HypothesisClass& cls, const LabeledDataset& train,
                            std::span<const FeaturePoint> test_rest, const Hypothesis& h, AbstainCost c,
                            const FeaturePoint& x_prime) {
  std::vector<FeaturePoint> test;
  test.reserve(test_rest.size() + 1);
  test.push_back(x_prime);
  test.insert(test.end(), test_rest.begin(), test_rest.end());
  const MmaResult r = mma_classification(cls, train, test, h, c);
  return r.a[0];
}

} // namespace selpred
