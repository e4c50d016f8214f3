#include "selpred/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "selpred/bounds.hpp"
#include "selpred/loss.hpp"
#include "selpred/maximizers.hpp"
#include "selpred/mma.hpp"
#include "selpred/regression.hpp"
#include "selpred/rng.hpp"

namespace selpred {

namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool points_equal(const FeaturePoint& a, const FeaturePoint& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return false;
  }
  return true;
}

DiscreteDistribution resolve_distribution(const json& v) {
  if (v.is_string()) return DiscreteDistribution::from_file(v.get<std::string>());
  return DiscreteDistribution::from_json_text(v.dump());
}

HypothesisClass hypothesis_class_of(const ClassSpec& spec) {
  if (spec.type == ClassSpec::Type::Finite) return HypothesisClass{spec.finite};
  return HypothesisClass{ThresholdFamily{}};
}

// Sorted union of the support codes of the configured distributions (d = 1).
std::vector<double> support_codes(const ExperimentConfig& cfg) {
  std::vector<double> codes;
  auto push = [&](const DiscreteDistribution& D) {
    for (const auto& x : D.support()) {
      if (x.size() != 1)
        throw InvalidInputError("harness: classification distributions need d=1 support points");
      codes.push_back(x[0]);
    }
  };
  push(*cfg.P);
  if (cfg.Q) push(*cfg.Q);
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  return codes;
}

Hypothesis draw_classification_target(const ExperimentConfig& cfg, RngStream& rng) {
  if (cfg.cls.type == ClassSpec::Type::Finite) {
    const std::size_t row = rng.next_below(cfg.cls.finite->size());
    return Hypothesis{FiniteMember{cfg.cls.finite, row}};
  }
  const auto codes = support_codes(cfg);
  if (codes.size() < 2) return Hypothesis{Threshold{codes.front() - 1.0, ThresholdOrientation::LeqZero}};
  const std::size_t gap = rng.next_below(codes.size() - 1);
  return Hypothesis{Threshold{0.5 * (codes[gap] + codes[gap + 1]), ThresholdOrientation::LeqZero}};
}

Hypothesis draw_linear_target(int d, double sigma, RngStream& rng) {
  Eigen::VectorXd w(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) w(i) = rng.next_gaussian();
    norm = w.norm();
  } while (norm == 0.0);
  // Magnitude capped at 1 - sigma so noisy labels never clamp.
  const double mag = (1.0 - sigma) * (0.5 + 0.5 * rng.next_double());
  w *= mag / norm;
  return Hypothesis{LinearPredictor{std::move(w)}};
}

LabeledDataset labeled_by(const Hypothesis& f, std::vector<FeaturePoint> points) {
  std::vector<Label> labels;
  labels.reserve(points.size());
  for (const auto& x : points) labels.push_back(f(x));
  return LabeledDataset(std::move(points), std::move(labels));
}

template <typename Fn>
std::vector<TrialRecord> run_trials(const ExperimentConfig& cfg, Fn&& trial_fn) {
  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= cfg.trials || failed.load()) return;
      try {
        RngStream rng = RngStream(cfg.seed).split(static_cast<std::uint64_t>(t));
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord rec = trial_fn(t, rng);
        rec.trial = t;
        rec.seed = rng.seed();
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        records[static_cast<std::size_t>(t)] = rec;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const int jobs = std::max(1, std::min(cfg.jobs, cfg.trials));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

double binomial_sigma(double p, int trials) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
}

int class_vc_dimension(const ExperimentConfig& cfg) {
  return vc_dimension(hypothesis_class_of(cfg.cls));
}

// Ambiguity-gap midpoint of a realizable threshold training set: the interval
// between the rightmost 0-labeled and leftmost 1-labeled training points
// (orientation LeqZero), where both labels remain consistent.
FeaturePoint threshold_blind_spot(const LabeledDataset& train, const std::vector<double>& codes) {
  double lo = codes.front() - 2.0;
  double hi = codes.back() + 2.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double x = train.points[i][0];
    if (train.labels[i] == 0.0)
      lo = std::max(lo, x);
    else
      hi = std::min(hi, x);
  }
  return scalar_point(0.5 * (lo + hi));
}

std::optional<FeaturePoint> finite_blind_spot(const FiniteClass& cls, const LabeledDataset& train) {
  const auto rows = consistent_rows(cls, train);
  for (std::size_t col = 0; col < cls.domain_size(); ++col) {
    bool saw0 = false, saw1 = false;
    for (std::size_t r : rows) {
      (cls.predict(r, col) ? saw1 : saw0) = true;
      if (saw0 && saw1) return cls.point(col);
    }
  }
  return std::nullopt;
}

} // namespace

// ---------------------------------------------------------------------------
// Config

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ClassificationShift: return "classification_shift";
    case ExperimentKind::Adversarial: return "adversarial";
    case ExperimentKind::Regression: return "regression";
    case ExperimentKind::Generalization: return "generalization";
    case ExperimentKind::PqMetrics: return "pq_metrics";
  }
  throw InvalidInputError("to_string: unknown experiment kind");
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "classification_shift") return ExperimentKind::ClassificationShift;
  if (s == "adversarial") return ExperimentKind::Adversarial;
  if (s == "regression") return ExperimentKind::Regression;
  if (s == "generalization") return ExperimentKind::Generalization;
  if (s == "pq_metrics") return ExperimentKind::PqMetrics;
  throw InvalidInputError("unknown experiment kind: " + s);
}

void ExperimentConfig::validate() const {
  if (n < 2) throw InvalidInputError("config: need n >= 2");
  if (trials < 1) throw InvalidInputError("config: need trials >= 1");
  if (!(c > 0.0 && c <= 1.0)) throw InvalidInputError("config: need c in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInputError("config: need delta in (0,1)");
  if (!(adversary.gamma >= 0.0 && adversary.gamma <= 1.0))
    throw InvalidInputError("config: need gamma in [0,1]");
  if (!P) throw InvalidInputError("config: distribution P is required");
  const bool needs_q = kind != ExperimentKind::Adversarial;
  if (needs_q && !Q) throw InvalidInputError("config: distribution Q is required for this experiment");
  if (kind == ExperimentKind::Regression) {
    if (cls.type != ClassSpec::Type::Linear)
      throw InvalidInputError("config: regression requires the linear class");
    if (!(sigma >= 0.0 && sigma < 1.0)) throw InvalidInputError("config: need sigma in [0,1)");
    auto check = [&](const DiscreteDistribution& D, const char* name) {
      for (const auto& x : D.support()) {
        if (x.size() != cls.linear_dim)
          throw InvalidInputError(std::string("config: ") + name + " support dimension != class d");
        if (x.norm() > 1.0 + 1e-9)
          throw InvalidInputError(std::string("config: ") + name + " support must lie in the unit ball");
      }
    };
    check(*P, "P");
    check(*Q, "Q");
  } else if (cls.type == ClassSpec::Type::Finite && !cls.finite) {
    throw InvalidInputError("config: finite class not resolved");
  }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(j.at("kind").get<std::string>());

  const json& cj = j.at("class");
  const std::string type = cj.at("type").get<std::string>();
  if (type == "threshold") {
    cfg.cls.type = ClassSpec::Type::Threshold;
  } else if (type == "finite") {
    cfg.cls.type = ClassSpec::Type::Finite;
    if (cj.contains("path"))
      cfg.cls.finite = FiniteClass::from_file(cj.at("path").get<std::string>());
    else
      cfg.cls.finite = FiniteClass::from_json_text(cj.at("class").dump());
  } else if (type == "linear") {
    cfg.cls.type = ClassSpec::Type::Linear;
    cfg.cls.linear_dim = cj.at("d").get<int>();
  } else {
    throw InvalidInputError("config: class type must be threshold | finite | linear");
  }

  if (j.contains("P")) cfg.P = resolve_distribution(j.at("P"));
  if (j.contains("Q")) cfg.Q = resolve_distribution(j.at("Q"));
  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    cfg.adversary.gamma = a.value("gamma", 0.0);
    cfg.adversary.targeted = a.value("policy", std::string("resample")) == "targeted";
    if (a.contains("replacement")) cfg.adversary.resample_from = resolve_distribution(a.at("replacement"));
  }
  cfg.n = j.at("n").get<int>();
  cfg.c = j.at("c").get<double>();
  cfg.trials = j.value("trials", 1);
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.delta = j.value("delta", 0.05);
  cfg.sigma = j.value("sigma", 0.1);
  cfg.jobs = j.value("jobs", 1);
  cfg.out_dir = j.value("out", std::string());
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentConfig::echo_json() const {
  json j;
  j["kind"] = to_string(kind);
  switch (cls.type) {
    case ClassSpec::Type::Threshold: j["class"] = {{"type", "threshold"}}; break;
    case ClassSpec::Type::Finite:
      j["class"] = {{"type", "finite"},
                    {"hypotheses", cls.finite ? cls.finite->size() : 0},
                    {"domain", cls.finite ? cls.finite->domain_size() : 0}};
      break;
    case ClassSpec::Type::Linear: j["class"] = {{"type", "linear"}, {"d", cls.linear_dim}}; break;
  }
  auto dist_json = [](const DiscreteDistribution& D) {
    json out;
    json support = json::array();
    for (const auto& x : D.support()) {
      json pt = json::array();
      for (Eigen::Index i = 0; i < x.size(); ++i) pt.push_back(x(i));
      support.push_back(pt);
    }
    out["support"] = support;
    out["pmf"] = D.pmf();
    return out;
  };
  if (P) j["P"] = dist_json(*P);
  if (Q) j["Q"] = dist_json(*Q);
  if (adversary.gamma > 0.0) {
    j["adversary"] = {{"gamma", adversary.gamma},
                      {"policy", adversary.targeted ? "targeted" : "resample"}};
  }
  // jobs is an execution knob, not part of the experiment identity; results
  // are byte-identical across job counts, so it stays out of the echo.
  j["n"] = n;
  j["c"] = c;
  j["trials"] = trials;
  j["seed"] = seed;
  j["delta"] = delta;
  j["sigma"] = sigma;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Report statistics

double Report::mean(double TrialRecord::* field) const {
  if (records.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : records) s += r.*field;
  return s / static_cast<double>(records.size());
}

double Report::standard_error(double TrialRecord::* field) const {
  const std::size_t t = records.size();
  if (t < 2) return 0.0;
  const double m = mean(field);
  double ss = 0.0;
  for (const auto& r : records) {
    const double d = r.*field - m;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(t - 1)) / std::sqrt(static_cast<double>(t));
}

// ---------------------------------------------------------------------------
// Experiments

Report run_classification_shift(const ExperimentConfig& config) {
  config.validate();
  const HypothesisClass cls = hypothesis_class_of(config.cls);
  const std::size_t n = static_cast<std::size_t>(config.n);
  const AbstainCost cost(config.c);

  Report report;
  report.config = config;
  report.records = run_trials(config, [&](int, RngStream& rng) {
    const Hypothesis f = draw_classification_target(config, rng);
    LabeledDataset train = labeled_by(f, sample_iid(*config.P, n, rng));
    const Hypothesis h = erm_weighted(cls, train, LossKind::ZeroOne);
    const auto test = sample_iid(*config.Q, n, rng);
    const MmaResult res = mma_classification(cls, train, test, h, cost);

    const auto losses = point_losses(f, h, test, LossKind::ZeroOne);
    TrialRecord rec;
    rec.realized_loss = abstention_loss(losses, res.a, cost);
    rec.certified_bound = res.certified_bound;
    rec.abstain_mass = res.a.mass();
    double unc = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) unc += (1.0 - res.a[i]) * losses[i];
    rec.uncovered_error = unc / static_cast<double>(n);
    rec.oracle_calls = res.diag.oracle_calls;
    return rec;
  });

  const int d = class_vc_dimension(config);
  const double tv = tv_distance(*config.P, *config.Q);
  const ExpectedBound gen = classification_bound_expected(d, config.n);
  const KBound min_k = best_k_bound(*config.P, *config.Q, cost, gen.with_slack);
  const double mean_loss = report.mean(&TrialRecord::realized_loss);
  const double se = report.standard_error(&TrialRecord::realized_loss);
  const double bound = config.c * tv + gen.with_slack;

  report.summary["vc_dim"] = d;
  report.summary["tv"] = tv;
  report.summary["generalization_term"] = gen.with_slack;
  report.summary["theorem1_bound"] = bound;
  report.summary["theorem1_threshold"] = bound + 3.0 * se;
  report.summary["min_k_bound"] = min_k.value;
  report.summary["min_k_at"] = min_k.k;
  report.summary["mean_realized_loss"] = mean_loss;
  report.summary["stderr_realized_loss"] = se;
  report.summary["mean_abstain_mass"] = report.mean(&TrialRecord::abstain_mass);
  report.summary["mean_certified_bound"] = report.mean(&TrialRecord::certified_bound);
  report.pass = mean_loss <= bound + 3.0 * se;
  return report;
}

Report run_adversarial(const ExperimentConfig& config) {
  config.validate();
  const HypothesisClass cls = hypothesis_class_of(config.cls);
  const std::size_t n = static_cast<std::size_t>(config.n);
  const AbstainCost cost(config.c);
  const int d = class_vc_dimension(config);
  const double hp = classification_bound_highprob(d, config.n, config.delta).post_mma;
  const auto codes = support_codes(config);

  Report report;
  report.config = config;
  report.records = run_trials(config, [&](int, RngStream& rng) {
    const Hypothesis f = draw_classification_target(config, rng);
    LabeledDataset train = labeled_by(f, sample_iid(*config.P, n, rng));
    const Hypothesis h = erm_weighted(cls, train, LossKind::ZeroOne);
    const auto natural = sample_iid(*config.P, n, rng);

    CorruptionPolicy policy = [&]() -> CorruptionPolicy {
      if (!config.adversary.targeted)
        return ResamplePolicy{config.adversary.resample_from ? *config.adversary.resample_from
                                                             : *config.P};
      std::optional<FeaturePoint> spot;
      if (config.cls.type == ClassSpec::Type::Finite)
        spot = finite_blind_spot(*config.cls.finite, train);
      else
        spot = threshold_blind_spot(train, codes);
      if (!spot) return ResamplePolicy{*config.P};
      return TargetedPolicy{std::vector<FeaturePoint>(n, *spot)};
    }();
    const CorruptionResult corrupted = corrupt(natural, config.adversary.gamma, policy, rng);

    const MmaResult res = mma_classification(cls, train, corrupted.x, h, cost);
    const auto losses = point_losses(f, h, corrupted.x, LossKind::ZeroOne);

    TrialRecord rec;
    rec.realized_loss = abstention_loss(losses, res.a, cost);
    rec.certified_bound = res.certified_bound;
    rec.abstain_mass = res.a.mass();
    double unc = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) unc += (1.0 - res.a[i]) * losses[i];
    rec.uncovered_error = unc / static_cast<double>(n);
    rec.oracle_calls = res.diag.oracle_calls;
    rec.modified_count = static_cast<long>(corrupted.modified.size());
    rec.trial_bound = config.c * static_cast<double>(rec.modified_count) / static_cast<double>(n) + hp;
    return rec;
  });

  int violations = 0;
  for (const auto& r : report.records) {
    if (r.realized_loss > r.trial_bound + 1e-12) ++violations;
  }
  const double rate = static_cast<double>(violations) / static_cast<double>(config.trials);
  const double threshold = config.delta + 3.0 * binomial_sigma(config.delta, config.trials);

  report.summary["vc_dim"] = d;
  report.summary["highprob_term"] = hp;
  report.summary["violation_rate"] = rate;
  report.summary["violation_threshold"] = threshold;
  report.summary["mean_realized_loss"] = report.mean(&TrialRecord::realized_loss);
  report.summary["mean_modified"] = [&] {
    double s = 0.0;
    for (const auto& r : report.records) s += static_cast<double>(r.modified_count);
    return s / static_cast<double>(report.records.size());
  }();
  report.summary["mean_abstain_mass"] = report.mean(&TrialRecord::abstain_mass);
  report.pass = rate <= threshold;
  return report;
}

Report run_regression(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n = static_cast<std::size_t>(config.n);
  const AbstainCost cost(config.c);
  const int d = config.cls.linear_dim;

  // P-mass lookup for blind-spot accounting (Q-points with zero P-mass).
  const AlignedPair aligned = align(*config.P, *config.Q);

  Report report;
  report.config = config;
  std::atomic<long> clamped{0};
  report.records = run_trials(config, [&](int, RngStream& rng) {
    const Hypothesis f = draw_linear_target(d, config.sigma, rng);
    auto xbar = sample_iid(*config.P, n, rng);
    std::vector<Label> ybar(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double noise = (2.0 * rng.next_double() - 1.0) * config.sigma;
      double y = f(xbar[i]) + noise;
      if (y > 1.0 || y < -1.0) {
        clamped.fetch_add(1);
        y = std::clamp(y, -1.0, 1.0);
      }
      ybar[i] = y;
    }
    LabeledDataset train(std::move(xbar), std::move(ybar));
    const auto test = sample_iid(*config.Q, n, rng);

    const RegressionPipelineResult pipe = regression_pipeline(train, test, cost, config.delta);
    const auto losses = point_losses(f, pipe.h, test, LossKind::Squared);

    TrialRecord rec;
    rec.realized_loss = abstention_loss(losses, pipe.a, cost);
    rec.certified_bound = pipe.certified_bound;
    rec.abstain_mass = pipe.a.mass();
    double unc = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) unc += (1.0 - pipe.a[i]) * losses[i];
    rec.uncovered_error = unc / static_cast<double>(n);
    rec.oracle_calls = pipe.mma.diag.oracle_calls;
    rec.membership_event = pipe.version_space.contains(f);

    // Mean abstention over test points that P cannot produce.
    double blind_mass = 0.0;
    int blind_count = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      for (std::size_t s = 0; s < aligned.support.size(); ++s) {
        if (points_equal(aligned.support[s], test[i])) {
          if (aligned.p[s] == 0.0) {
            blind_mass += pipe.a[i];
            ++blind_count;
          }
          break;
        }
      }
    }
    rec.aux = blind_count > 0 ? blind_mass / blind_count : 0.0;
    rec.aux2 = blind_count;
    return rec;
  });

  const double tv = tv_distance(*config.P, *config.Q);
  const double eps = vs_radius(n, config.delta);
  const double bound = config.c * tv + 14.0 * eps + 1.0 / static_cast<double>(n);
  const double mean_loss = report.mean(&TrialRecord::realized_loss);
  const double se = report.standard_error(&TrialRecord::realized_loss);
  double members = 0.0;
  for (const auto& r : report.records) members += r.membership_event ? 1.0 : 0.0;
  const double member_rate = members / static_cast<double>(config.trials);
  const double member_floor =
      1.0 - config.delta - 3.0 * binomial_sigma(config.delta, config.trials);

  double blind_points = 0.0, blind_mass = 0.0;
  for (const auto& r : report.records) {
    blind_points += r.aux2;
    blind_mass += r.aux * r.aux2;
  }

  report.summary["tv"] = tv;
  report.summary["vs_radius"] = eps;
  report.summary["theorem4_chain_bound"] = bound;
  report.summary["theorem4_threshold"] = bound + 3.0 * se;
  report.summary["mean_realized_loss"] = mean_loss;
  report.summary["stderr_realized_loss"] = se;
  report.summary["membership_rate"] = member_rate;
  report.summary["membership_floor"] = member_floor;
  report.summary["mean_abstain_mass"] = report.mean(&TrialRecord::abstain_mass);
  report.summary["mean_certified_bound"] = report.mean(&TrialRecord::certified_bound);
  report.summary["clamped_labels"] = static_cast<double>(clamped.load());
  report.summary["blind_abstain_mass"] = blind_points > 0 ? blind_mass / blind_points : 0.0;
  report.summary["blind_point_count"] = blind_points;
  // Empirical ratio for the unspecified Theorem-4 constant (no threshold).
  report.summary["kappa_ratio"] =
      (mean_loss - config.c * tv) * std::sqrt(static_cast<double>(n)) / std::log(static_cast<double>(n));
  report.pass = mean_loss <= bound + 3.0 * se && member_rate >= member_floor;
  return report;
}

Report run_generalization(const ExperimentConfig& config) {
  config.validate();
  const HypothesisClass cls = hypothesis_class_of(config.cls);
  const std::size_t n = static_cast<std::size_t>(config.n);
  const AbstainCost cost(config.c);
  const int d = class_vc_dimension(config);

  Report report;
  report.config = config;
  report.records = run_trials(config, [&](int, RngStream& rng) {
    const Hypothesis f = draw_classification_target(config, rng);
    LabeledDataset train = labeled_by(f, sample_iid(*config.P, n, rng));
    const Hypothesis h = erm_weighted(cls, train, LossKind::ZeroOne);

    // Exact generalization loss of the transduction-derived abstainer over Q.
    auto rest = sample_iid(*config.Q, n - 1, rng);
    double gen_loss = 0.0;
    for (std::size_t s = 0; s < config.Q->size(); ++s) {
      // Fresh shuffle per evaluation; MMA is run on (x', shuffled rest).
      for (std::size_t i = rest.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(rest[i - 1], rest[j]);
      }
      const FeaturePoint& x = config.Q->point(s);
      const double a = generalize_abstainer(cls, train, rest, h, cost, x);
      gen_loss +=
          config.Q->mass(s) * (a * config.c + (1.0 - a) * point_loss(LossKind::ZeroOne, f(x), h(x)));
    }

    // Matched transductive run on a fresh test draw.
    const auto test = sample_iid(*config.Q, n, rng);
    const MmaResult res = mma_classification(cls, train, test, h, cost);
    const auto losses = point_losses(f, h, test, LossKind::ZeroOne);

    TrialRecord rec;
    rec.realized_loss = abstention_loss(losses, res.a, cost);
    rec.certified_bound = res.certified_bound;
    rec.abstain_mass = res.a.mass();
    rec.oracle_calls = res.diag.oracle_calls;
    rec.aux = gen_loss;
    return rec;
  });

  const ExpectedBound gen = classification_bound_expected(d, config.n);
  const KBound min_k = best_k_bound(*config.P, *config.Q, cost, gen.with_slack);
  const double tv = tv_distance(*config.P, *config.Q);
  const double k1_bound = config.c * tv + gen.with_slack;

  const double mean_trans = report.mean(&TrialRecord::realized_loss);
  const double se_trans = report.standard_error(&TrialRecord::realized_loss);
  const double mean_gen = report.mean(&TrialRecord::aux);
  const double se_gen = report.standard_error(&TrialRecord::aux);
  const double diff_threshold = 3.0 * std::sqrt(se_trans * se_trans + se_gen * se_gen) + 1e-9;

  report.summary["vc_dim"] = d;
  report.summary["tv"] = tv;
  report.summary["mean_transductive_loss"] = mean_trans;
  report.summary["mean_generalization_loss"] = mean_gen;
  report.summary["equality_gap"] = std::abs(mean_trans - mean_gen);
  report.summary["equality_threshold"] = diff_threshold;
  report.summary["theorem2_min_k_bound"] = min_k.value;
  report.summary["theorem2_min_k_at"] = min_k.k;
  report.summary["theorem2_k1_bound"] = k1_bound;
  report.summary["stderr_generalization_loss"] = se_gen;
  report.pass = std::abs(mean_trans - mean_gen) <= diff_threshold &&
                mean_gen <= min_k.value + 3.0 * se_gen && min_k.value <= k1_bound + 1e-15;
  return report;
}

Report run_pq_metrics(const ExperimentConfig& config) {
  config.validate();
  const HypothesisClass cls = hypothesis_class_of(config.cls);
  const std::size_t n = static_cast<std::size_t>(config.n);
  const AbstainCost cost(config.c);
  const AlignedPair aligned = align(*config.P, *config.Q);
  constexpr std::size_t kMcDraws = 20000;

  Report report;
  report.config = config;
  std::atomic<int> mc_failures{0};
  report.records = run_trials(config, [&](int, RngStream& rng) {
    const Hypothesis f = draw_classification_target(config, rng);
    LabeledDataset train = labeled_by(f, sample_iid(*config.P, n, rng));
    const Hypothesis h = erm_weighted(cls, train, LossKind::ZeroOne);
    auto rest = sample_iid(*config.Q, n - 1, rng);

    // Abstain probability cached on the union support.
    std::vector<double> alpha(aligned.support.size());
    for (std::size_t s = 0; s < aligned.support.size(); ++s) {
      for (std::size_t i = rest.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(rest[i - 1], rest[j]);
      }
      alpha[s] = generalize_abstainer(cls, train, rest, h, cost, aligned.support[s]);
    }
    auto lookup = [&](const FeaturePoint& x) {
      for (std::size_t s = 0; s < aligned.support.size(); ++s) {
        if (points_equal(aligned.support[s], x)) return alpha[s];
      }
      throw InvalidInputError("pq_metrics: point off the union support");
    };
    const PqMetrics exact = pq_metrics(*config.Q, *config.P, h, f, lookup);

    // Monte-Carlo cross-check of both expectations (4-sigma binomial bands).
    double eps1_hat = 0.0, eps2_hat = 0.0;
    {
      std::vector<double> q_cdf(aligned.q.size()), p_cdf(aligned.p.size());
      std::partial_sum(aligned.q.begin(), aligned.q.end(), q_cdf.begin());
      std::partial_sum(aligned.p.begin(), aligned.p.end(), p_cdf.begin());
      auto draw = [&](const std::vector<double>& cdf) {
        const double u = rng.next_double();
        return static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin(),
                                     static_cast<std::ptrdiff_t>(cdf.size()) - 1));
      };
      for (std::size_t m = 0; m < kMcDraws; ++m) {
        const std::size_t sq = draw(q_cdf);
        const bool abstain_q = rng.next_double() < alpha[sq];
        if (!abstain_q && h(aligned.support[sq]) != f(aligned.support[sq])) eps1_hat += 1.0;
        const std::size_t sp = draw(p_cdf);
        if (rng.next_double() < alpha[sp]) eps2_hat += 1.0;
      }
      eps1_hat /= static_cast<double>(kMcDraws);
      eps2_hat /= static_cast<double>(kMcDraws);
    }
    const double band1 = 4.0 * std::sqrt(std::max(exact.eps1 * (1.0 - exact.eps1), 1e-12) / kMcDraws);
    const double band2 = 4.0 * std::sqrt(std::max(exact.eps2 * (1.0 - exact.eps2), 1e-12) / kMcDraws);
    if (std::abs(eps1_hat - exact.eps1) > band1 || std::abs(eps2_hat - exact.eps2) > band2)
      mc_failures.fetch_add(1);

    TrialRecord rec;
    rec.aux = exact.eps1;
    rec.aux2 = exact.eps2;
    // Chow-model loss of the same abstainer, for reference.
    double chow = 0.0;
    for (std::size_t s = 0; s < aligned.support.size(); ++s) {
      chow += aligned.q[s] * (alpha[s] * config.c +
                              (1.0 - alpha[s]) *
                                  point_loss(LossKind::ZeroOne, f(aligned.support[s]),
                                             h(aligned.support[s])));
    }
    rec.realized_loss = chow;
    return rec;
  });

  double mean_eps1 = 0.0, mean_eps2 = 0.0;
  for (const auto& r : report.records) {
    mean_eps1 += r.aux;
    mean_eps2 += r.aux2;
  }
  mean_eps1 /= static_cast<double>(config.trials);
  mean_eps2 /= static_cast<double>(config.trials);

  report.summary["mean_eps1"] = mean_eps1;
  report.summary["mean_eps2"] = mean_eps2;
  report.summary["mean_chow_loss"] = report.mean(&TrialRecord::realized_loss);
  report.summary["mc_check_failures"] = mc_failures.load();
  report.pass = mc_failures.load() == 0;
  return report;
}

Report run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::ClassificationShift: return run_classification_shift(config);
    case ExperimentKind::Adversarial: return run_adversarial(config);
    case ExperimentKind::Regression: return run_regression(config);
    case ExperimentKind::Generalization: return run_generalization(config);
    case ExperimentKind::PqMetrics: return run_pq_metrics(config);
  }
  throw InvalidInputError("run_experiment: unknown kind");
}

// ---------------------------------------------------------------------------
// Persistence

namespace {
const char* kCsvColumns =
    "trial,seed,realized_loss,certified_bound,abstain_mass,uncovered_error,oracle_calls,"
    "membership_event,trial_bound,modified_count,aux,aux2";
} // namespace

std::string render_csv(const Report& report) {
  std::ostringstream out;
  out << kCsvColumns << "\n";
  for (const auto& r : report.records) {
    out << r.trial << ',' << r.seed << ',' << format_double(r.realized_loss) << ','
        << format_double(r.certified_bound) << ',' << format_double(r.abstain_mass) << ','
        << format_double(r.uncovered_error) << ',' << r.oracle_calls << ','
        << (r.membership_event ? 1 : 0) << ',' << format_double(r.trial_bound) << ','
        << r.modified_count << ',' << format_double(r.aux) << ',' << format_double(r.aux2) << "\n";
  }
  return out.str();
}

std::string render_summary_json(const Report& report) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = to_string(report.config.kind);
  j["config"] = json::parse(report.config.echo_json());
  j["master_seed"] = report.config.seed;
  j["trials"] = static_cast<int>(report.records.size());
  j["csv_columns"] = kCsvColumns;
  json s;
  for (const auto& [k, v] : report.summary) s[k] = v;
  j["summary"] = s;
  j["pass"] = report.pass;
  return j.dump(2) + "\n";
}

void emit_report(const Report& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(out_dir);
    {
      std::ofstream csv(fs::path(out_dir) / "trials.csv", std::ios::binary);
      if (!csv) throw std::runtime_error("open failed");
      csv << render_csv(report);
    }
    {
      std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::binary);
      if (!js) throw std::runtime_error("open failed");
      js << render_summary_json(report);
    }
  } catch (const std::exception& e) {
    throw InvalidInputError("emit_report: cannot write under '" + out_dir + "': " + e.what());
  }
}

} // namespace selpred
