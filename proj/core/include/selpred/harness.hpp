#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selpred/hypothesis.hpp"
#include "selpred/shift.hpp"
#include "selpred/types.hpp"

namespace selpred {

enum class ExperimentKind {
  ClassificationShift,
  Adversarial,
  Regression,
  Generalization,
  PqMetrics,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct ClassSpec {
  enum class Type { Finite, Threshold, Linear };
  Type type = Type::Threshold;
  std::shared_ptr<const FiniteClass> finite; ///< resolved for Type::Finite
  int linear_dim = 1;                        ///< for Type::Linear
};

struct AdversarySpec {
  double gamma = 0.0;
  bool targeted = false;                              ///< else resample
  std::optional<DiscreteDistribution> resample_from;  ///< defaults to P
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::ClassificationShift;
  ClassSpec cls;
  std::optional<DiscreteDistribution> P;
  std::optional<DiscreteDistribution> Q;
  AdversarySpec adversary;
  int n = 2;
  double c = 0.5;
  int trials = 1;
  std::uint64_t seed = 1;
  double delta = 0.05;
  double sigma = 0.1; ///< regression label noise half-width
  int jobs = 1;
  std::string out_dir;

  void validate() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string echo_json() const; ///< normalized config echo for the summary
};

/// One row of the persisted CSV. Wall time is recorded in memory for operator
/// feedback but kept out of the CSV and JSON so re-runs with the same
/// (config, seed) are byte-identical.
struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  double realized_loss = 0.0;
  double certified_bound = 0.0;
  double abstain_mass = 0.0;
  double uncovered_error = 0.0;
  long oracle_calls = 0;
  bool membership_event = true; ///< version-space membership (regression) / realizability
  double trial_bound = 0.0;     ///< per-trial theorem threshold where applicable
  long modified_count = 0;      ///< |M| for the adversarial runs
  double aux = 0.0;  ///< extra per kind: generalization exact l_Q; regression blind abstain mass; pq eps1
  double aux2 = 0.0; ///< extra per kind: regression blind point count; pq eps2
  double wall_ms = 0.0; ///< not persisted
};

struct Report {
  ExperimentConfig config;
  std::vector<TrialRecord> records;
  std::map<std::string, double> summary; ///< means, bounds, rates; persisted sorted
  bool pass = true;                      ///< bound checks within tolerance
  double total_wall_ms = 0.0;            ///< not persisted

  double mean(double TrialRecord::* field) const;
  double standard_error(double TrialRecord::* field) const;
};

Report run_classification_shift(const ExperimentConfig& config);
Report run_adversarial(const ExperimentConfig& config);
Report run_regression(const ExperimentConfig& config);
Report run_generalization(const ExperimentConfig& config);
Report run_pq_metrics(const ExperimentConfig& config);
Report run_experiment(const ExperimentConfig& config);

/// Write trials.csv and summary.json under out_dir (created if needed).
/// Deterministic bytes given (config, seed).
void emit_report(const Report& report, const std::string& out_dir);

/// In-memory renderings used by emit_report and the determinism self-checks.
std::string render_csv(const Report& report);
std::string render_summary_json(const Report& report);

} // namespace selpred
