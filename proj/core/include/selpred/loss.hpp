#pragma once

#include <span>

#include "selpred/types.hpp"

namespace selpred {

enum class LossKind {
  ZeroOne, ///< |y - yhat| on {0,1} labels
  Squared, ///< (y - yhat)^2 on [-1,1] labels
};

/// Base loss on a single prediction. Zero-one requires binary labels.
double point_loss(LossKind kind, Label y, Label yhat);

/// Abstention-weighted empirical loss: (1/n) sum_i [a_i * c + (1 - a_i) * losses_i].
/// The subset variant (abstain on a set A) is the special case a_i = 1[i in A].
double abstention_loss(std::span<const double> losses, const AbstentionVector& a, AbstainCost c);

/// Same, with a hard abstention set given as indicator flags.
double abstention_loss(std::span<const double> losses, std::span<const std::uint8_t> abstain, AbstainCost c);

/// Mean of per-point losses (the a = 0 case).
double mean_loss(std::span<const double> losses);

} // namespace selpred
