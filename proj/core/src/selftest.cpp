#include "selpred/selftest.hpp"

#include <cmath>
#include <sstream>

#include "selpred/bounds.hpp"
#include "selpred/cdt.hpp"
#include "selpred/harness.hpp"
#include "selpred/loss.hpp"
#include "selpred/maximizers.hpp"
#include "selpred/mma.hpp"
#include "selpred/rng.hpp"
#include "selpred/shift.hpp"

namespace selpred {

namespace {

struct Suite {
  SelfTestResult& result;
  std::string name;
  int local_checks = 0;
  int local_failures = 0;

  void check(bool ok, const std::string& detail) {
    result.checks += 1;
    local_checks += 1;
    if (!ok) {
      result.failures += 1;
      local_failures += 1;
      result.lines.push_back("    FAIL " + name + ": " + detail);
    }
  }
  ~Suite() {
    std::ostringstream line;
    line << (local_failures == 0 ? "[ ok ] " : "[FAIL] ") << name << " (" << local_checks
         << " checks, " << local_failures << " failures)";
    result.lines.insert(result.lines.end() - static_cast<std::ptrdiff_t>(local_failures), line.str());
  }
};

std::vector<double> random_pmf(RngStream& rng, std::size_t m, bool allow_zeros) {
  std::vector<double> p(m);
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p[i] = allow_zeros && rng.next_double() < 0.3 ? 0.0 : rng.next_double();
    s += p[i];
  }
  if (s == 0.0) p[0] = s = 1.0;
  for (double& v : p) v /= s;
  // Renormalize exactly enough to satisfy the constructor's 1e-12 gate.
  double total = 0.0;
  for (double v : p) total += v;
  p[m - 1] += 1.0 - total;
  if (p[m - 1] < 0.0) p[m - 1] = 0.0;
  total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

DiscreteDistribution random_distribution(RngStream& rng, std::size_t m, bool allow_zeros) {
  std::vector<FeaturePoint> support;
  for (std::size_t i = 0; i < m; ++i) support.push_back(scalar_point(static_cast<double>(i)));
  return DiscreteDistribution(std::move(support), random_pmf(rng, m, allow_zeros));
}

std::shared_ptr<const FiniteClass> random_finite_class(RngStream& rng, std::size_t domain,
                                                       std::size_t rows) {
  std::vector<double> codes;
  for (std::size_t i = 0; i < domain; ++i) codes.push_back(static_cast<double>(i));
  std::vector<std::vector<std::uint8_t>> table;
  rows = std::min(rows, std::size_t{1} << domain); // distinct rows cap
  while (table.size() < rows) {
    std::vector<std::uint8_t> row(domain);
    for (auto& v : row) v = static_cast<std::uint8_t>(rng.next_below(2));
    bool dup = false;
    for (const auto& existing : table) dup = dup || existing == row;
    if (!dup) table.push_back(std::move(row));
  }
  return std::make_shared<const FiniteClass>(std::move(codes), std::move(table));
}

void suite_affine_identity(SelfTestResult& result, RngStream rng) {
  Suite suite{result, "affine abstention-loss identity"};
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.next_below(12);
    std::vector<double> losses(n), a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      losses[i] = rng.next_double();
      a[i] = rng.next_double();
      b[i] = rng.next_double();
    }
    const double c = 0.05 + 0.95 * rng.next_double();
    const AbstainCost cost(c);
    const double lhs =
        abstention_loss(losses, AbstentionVector(a), cost) - abstention_loss(losses, AbstentionVector(b), cost);
    double rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) rhs += (a[i] - b[i]) * (c - losses[i]);
    rhs /= static_cast<double>(n);
    suite.check(std::abs(lhs - rhs) <= 1e-14, "loss difference != separator inner product");

    // Same identity through the separator vector itself.
    const Eigen::VectorXd v = loss_separator(losses, c);
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += v(static_cast<Eigen::Index>(i)) * (a[i] - b[i]);
    suite.check(std::abs(dot / static_cast<double>(n) - lhs) <= 1e-14, "separator identity broken");
  }
}

void suite_erm(SelfTestResult& result, RngStream rng) {
  Suite suite{result, "ERM determinism and dominance"};
  for (int rep = 0; rep < 60; ++rep) {
    const auto cls = random_finite_class(rng, 2 + rng.next_below(4), 3 + rng.next_below(12));
    const std::size_t n = 1 + rng.next_below(10);
    std::vector<FeaturePoint> xs;
    std::vector<Label> ys;
    std::vector<double> ws;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(scalar_point(static_cast<double>(rng.next_below(cls->domain_size()))));
      ys.push_back(static_cast<double>(rng.next_below(2)));
      ws.push_back(rng.next_double() * 3.0);
    }
    const LabeledDataset data(xs, ys, ws);
    const HypothesisClass hc{cls};
    const Hypothesis g1 = erm_weighted(hc, data, LossKind::ZeroOne);
    const Hypothesis g2 = erm_weighted(hc, data, LossKind::ZeroOne);
    suite.check(g1.finite_member()->index == g2.finite_member()->index, "finite ERM not deterministic");

    auto weighted_loss = [&](const Hypothesis& g) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += ws[i] * std::abs(ys[i] - g(xs[i]));
      return s;
    };
    const double best = weighted_loss(g1);
    bool dominated = true;
    for (std::size_t r = 0; r < cls->size(); ++r) {
      dominated = dominated && best <= weighted_loss(Hypothesis{FiniteMember{cls, r}}) + 1e-12;
    }
    suite.check(dominated, "finite ERM not optimal");
  }

  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 1 + rng.next_below(14);
    std::vector<FeaturePoint> xs;
    std::vector<Label> ys;
    std::vector<double> ws;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(scalar_point(std::floor(rng.next_double() * 8.0)));
      ys.push_back(static_cast<double>(rng.next_below(2)));
      ws.push_back(rng.next_double() * 2.0);
    }
    const LabeledDataset data(xs, ys, ws);
    const HypothesisClass hc{ThresholdFamily{}};
    const Hypothesis g1 = erm_weighted(hc, data, LossKind::ZeroOne);
    const Hypothesis g2 = erm_weighted(hc, data, LossKind::ZeroOne);
    suite.check(g1.threshold()->cut == g2.threshold()->cut, "threshold ERM not deterministic");

    auto weighted_loss = [&](double cut) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double pred = xs[i][0] <= cut ? 0.0 : 1.0;
        s += ws[i] * std::abs(ys[i] - pred);
      }
      return s;
    };
    std::vector<double> values;
    for (const auto& x : xs) values.push_back(x[0]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> cuts{values.front() - 1.0, values.back() + 1.0};
    for (std::size_t i = 0; i + 1 < values.size(); ++i) cuts.push_back(0.5 * (values[i] + values[i + 1]));
    const double best = weighted_loss(g1.threshold()->cut);
    bool dominated = true;
    for (double cut : cuts) dominated = dominated && best <= weighted_loss(cut) + 1e-12;
    suite.check(dominated, "threshold ERM not optimal over all cuts");
  }
}

void suite_kkt(SelfTestResult& result, RngStream rng) {
  Suite suite{result, "CDT KKT residuals"};
  for (int rep = 0; rep < 40; ++rep) {
    const int d = 2 + static_cast<int>(rng.next_below(2));
    const std::size_t n_test = 3 + rng.next_below(6);
    const std::size_t n_train = 3 + rng.next_below(6);
    std::vector<FeaturePoint> train, test;
    auto ball_point = [&]() {
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian();
      const double norm = v.norm();
      return FeaturePoint(v * (rng.next_double() / std::max(norm, 1e-12)));
    };
    for (std::size_t i = 0; i < n_train; ++i) train.push_back(ball_point());
    for (std::size_t i = 0; i < n_test; ++i) test.push_back(ball_point());
    Eigen::VectorXd wh(d);
    for (int i = 0; i < d; ++i) wh(i) = rng.next_gaussian();
    wh *= 0.7 * rng.next_double() / std::max(wh.norm(), 1e-12);
    std::vector<double> a(n_test);
    for (double& v : a) v = rng.next_double();
    const double alpha = 0.05 + 0.5 * rng.next_double();

    const CdtProblem problem = regression_max_problem(train, Hypothesis{LinearPredictor{wh}}, test,
                                                      AbstentionVector(a), alpha);
    try {
      const CdtSolution sol = cdt_solve(problem, 1e-9);
      suite.check(sol.kkt.violation1 <= 1e-8 && sol.kkt.violation2 <= 1e-8, "constraint violation");
      suite.check(sol.kkt.stationarity <= 1e-7, "stationarity residual");
      suite.check(sol.kkt.lambda1 >= 0.0 && sol.kkt.lambda2 >= 0.0, "negative multiplier");
      suite.check(sol.kkt.comp_slack <= 1e-7, "complementary slackness");
    } catch (const NumericError& e) {
      suite.check(false, std::string("cdt_solve did not certify: ") + e.what());
    }
  }
}

void suite_dk(SelfTestResult& result, RngStream rng) {
  Suite suite{result, "D_k monotonicity and piecewise linearity"};
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t m = 2 + rng.next_below(8);
    const DiscreteDistribution P = random_distribution(rng, m, true);
    const DiscreteDistribution Q = random_distribution(rng, m, true);

    suite.check(std::abs(dk_divergence(P, Q, 1.0) - tv_distance(P, Q)) <= 1e-15, "D_1 != TV");

    double prev = 2.0;
    for (double k = 1.0; k <= 16.0; k *= 2.0) {
      const double v = dk_divergence(P, Q, k);
      suite.check(v <= prev + 1e-15, "D_k increased in k");
      suite.check(v >= 0.0 && v <= 1.0, "D_k out of range");
      prev = v;
    }

    // Piecewise linearity: between adjacent kink ratios the midpoint value
    // equals the chord value.
    const AlignedPair al = align(P, Q);
    std::vector<double> kinks{1.0};
    for (std::size_t i = 0; i < al.support.size(); ++i) {
      if (al.p[i] > 0.0 && al.q[i] / al.p[i] > 1.0) kinks.push_back(al.q[i] / al.p[i]);
    }
    std::sort(kinks.begin(), kinks.end());
    for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
      const double k0 = kinks[i], k1 = kinks[i + 1];
      if (k1 - k0 < 1e-9) continue;
      const double mid = 0.5 * (k0 + k1);
      const double chord = 0.5 * (dk_divergence(P, Q, k0) + dk_divergence(P, Q, k1));
      suite.check(std::abs(dk_divergence(P, Q, mid) - chord) <= 1e-12, "D_k not linear between kinks");
    }

    // Zero characterization: D_k = 0 iff Q <= k P pointwise.
    for (double k : {1.0, 2.0, 5.0}) {
      bool pointwise = true;
      for (std::size_t i = 0; i < al.support.size(); ++i) pointwise = pointwise && al.q[i] <= k * al.p[i] + 1e-15;
      suite.check((dk_divergence(P, Q, k) <= 1e-15) == pointwise, "D_k zero characterization");
    }

    const AbstainCost c(0.4);
    const double base = 0.02 * rng.next_double();
    const KBound kb = best_k_bound(P, Q, c, base);
    suite.check(kb.value <= c.c * tv_distance(P, Q) + base + 1e-12, "best_k worse than TV bound");
  }
}

void suite_incumbent(SelfTestResult& result, RngStream rng) {
  Suite suite{result, "MMA incumbent monotonicity"};
  for (int rep = 0; rep < 10; ++rep) {
    const auto cls = random_finite_class(rng, 4, 10);
    const std::size_t n = 4;
    const std::size_t target = rng.next_below(cls->size());
    const Hypothesis f{FiniteMember{cls, target}};
    std::vector<FeaturePoint> xs, test;
    std::vector<Label> ys;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(scalar_point(static_cast<double>(rng.next_below(cls->domain_size()))));
      ys.push_back(f(xs.back()));
      test.push_back(scalar_point(static_cast<double>(rng.next_below(cls->domain_size()))));
    }
    const LabeledDataset train(xs, ys);
    const Hypothesis h = erm_weighted(HypothesisClass{cls}, train, LossKind::ZeroOne);
    const MmaResult res = mma_classification_exact(cls, train, test, h, AbstainCost(0.3));
    bool monotone = true;
    for (std::size_t i = 1; i < res.diag.incumbent_trajectory.size(); ++i) {
      monotone = monotone &&
                 res.diag.incumbent_trajectory[i] <= res.diag.incumbent_trajectory[i - 1] + 1e-15;
    }
    suite.check(monotone, "incumbent witnessed loss increased");
    suite.check(res.witness_loss <= res.certified_bound + 1e-15, "certified bound below witness");
  }
}

void suite_report_determinism(SelfTestResult& result) {
  Suite suite{result, "report determinism"};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::ClassificationShift;
  cfg.cls.type = ClassSpec::Type::Threshold;
  std::vector<FeaturePoint> support;
  for (int i = 0; i < 6; ++i) support.push_back(scalar_point(i));
  cfg.P = DiscreteDistribution(support, {0.25, 0.25, 0.125, 0.125, 0.125, 0.125});
  cfg.Q = DiscreteDistribution(support, {0.125, 0.125, 0.125, 0.125, 0.25, 0.25});
  cfg.n = 6;
  cfg.c = 0.5;
  cfg.trials = 4;
  cfg.seed = 99;
  cfg.jobs = 2;

  const Report r1 = run_classification_shift(cfg);
  const Report r2 = run_classification_shift(cfg);
  suite.check(render_csv(r1) == render_csv(r2), "CSV bytes differ across identical runs");
  suite.check(render_summary_json(r1) == render_summary_json(r2), "summary bytes differ");

  double csv_mean = 0.0;
  for (const auto& rec : r1.records) csv_mean += rec.realized_loss;
  csv_mean /= static_cast<double>(r1.records.size());
  suite.check(std::abs(csv_mean - r1.summary.at("mean_realized_loss")) <= 1e-15,
              "summary mean != column mean");
}

} // namespace

SelfTestResult run_selftest(std::uint64_t seed) {
  SelfTestResult result;
  RngStream rng(seed);
  suite_affine_identity(result, rng.split(1));
  suite_erm(result, rng.split(2));
  suite_kkt(result, rng.split(3));
  suite_dk(result, rng.split(4));
  suite_incumbent(result, rng.split(5));
  suite_report_determinism(result);
  return result;
}

} // namespace selpred
