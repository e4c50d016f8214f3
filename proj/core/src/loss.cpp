#include "selpred/loss.hpp"

#include <cmath>

namespace selpred {

double point_loss(LossKind kind, Label y, Label yhat) {
  switch (kind) {
    case LossKind::ZeroOne:
      if (!is_binary_label(y) || !is_binary_label(yhat))
        throw InvalidInputError("point_loss: zero-one loss needs labels in {0,1}");
      return std::abs(y - yhat);
    case LossKind::Squared:
      if (std::abs(y) > 1.0 || std::abs(yhat) > 1.0)
        throw InvalidInputError("point_loss: squared loss needs labels in [-1,1]");
      return (y - yhat) * (y - yhat);
  }
  throw InvalidInputError("point_loss: unknown loss kind");
}

double abstention_loss(std::span<const double> losses, const AbstentionVector& a, AbstainCost c) {
  if (losses.size() != a.size())
    throw InvalidInputError("abstention_loss: losses and abstention vector length mismatch");
  if (losses.empty()) throw InvalidInputError("abstention_loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    s += a[i] * c.c + (1.0 - a[i]) * losses[i];
  }
  return s / static_cast<double>(losses.size());
}

double abstention_loss(std::span<const double> losses, std::span<const std::uint8_t> abstain, AbstainCost c) {
  if (losses.size() != abstain.size())
    throw InvalidInputError("abstention_loss: losses and abstain flags length mismatch");
  if (losses.empty()) throw InvalidInputError("abstention_loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    s += abstain[i] ? c.c : losses[i];
  }
  return s / static_cast<double>(losses.size());
}

double mean_loss(std::span<const double> losses) {
  if (losses.empty()) throw InvalidInputError("mean_loss: empty input");
  double s = 0.0;
  for (double v : losses) s += v;
  return s / static_cast<double>(losses.size());
}

} // namespace selpred
