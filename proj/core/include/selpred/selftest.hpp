#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace selpred {

struct SelfTestResult {
  int checks = 0;
  int failures = 0;
  std::vector<std::string> lines; ///< one line per suite, plus any failure detail
  bool passed() const { return failures == 0; }
};

/// Module invariant suites: the affine abstention-loss identity, ERM
/// determinism and dominance, CDT KKT residuals, D_k monotonicity and
/// piecewise linearity, MMA incumbent monotonicity, and report determinism.
SelfTestResult run_selftest(std::uint64_t seed = 7);

} // namespace selpred
