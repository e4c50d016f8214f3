#include "selpred/regression.hpp"

#include <cmath>

namespace selpred {

double vs_radius(std::size_t n, double delta) {
  if (n < 1) throw InvalidInputError("vs_radius: need n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInputError("vs_radius: need delta in (0,1)");
  const double nn = static_cast<double>(n);
  return 8.0 / std::sqrt(nn) + std::sqrt(2.0 * std::log(3.0 / delta) / nn);
}

std::pair<Hypothesis, RegressionVersionSpace> build_version_space(const LabeledDataset& train, double delta) {
  Hypothesis h = fit_ball_least_squares(train);
  RegressionVersionSpace vs{train.points, h, vs_radius(train.size(), delta)};
  return {std::move(h), std::move(vs)};
}

RegressionPipelineResult regression_pipeline(const LabeledDataset& train,
                                             std::span<const FeaturePoint> test, AbstainCost c,
                                             double delta) {
  if (test.empty()) throw InvalidInputError("regression_pipeline: empty test set");
  auto [h, vs] = build_version_space(train, delta);
  MmaResult mma = mma_regression(vs.train_features, h, test, c, vs.radius);
  RegressionPipelineResult out{h, mma.a, mma.certified_bound, std::move(vs), std::move(mma)};
  return out;
}

} // namespace selpred
