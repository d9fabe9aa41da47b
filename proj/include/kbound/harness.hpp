#pragma once

#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kbound/config.hpp"

namespace kbound {

struct TrialRecord {
  std::uint64_t seed = 0;
  int d = 0;
  int m = 0;
  int sigma_popcount = 0;
  std::string learner;
  std::uint64_t budget = 0;
  std::uint64_t queries = 0;
  double lambda = 0.0;
  double y = 0.0;
  double delta = 0.0;
  bool clamped = false;
  int missed_blocks = 0;
  double wall_ms = 0.0;  // in-memory only; CSV output must be byte-reproducible
};

// One complete trial: sample the instance, run the learner against a fresh
// oracle, evaluate the gap against the exact optimum, audit block coverage.
// Fully reproducible from (cfg, point, trial_seed); a gap below -1e-9 is a
// solver bug and throws.
TrialRecord run_trial(const ExperimentConfig& cfg, const ResolvedPoint& point,
                      std::uint64_t trial_seed);

struct SweepPointSummary {
  ResolvedPoint point;
  int trials = 0;
  double mean_delta = 0.0;
  double stderr_delta = 0.0;
  double mean_missed = 0.0;
  int clamped_count = 0;
  double bound = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_halfwidth = 0.0;  // 2 standard errors of the OLS slope
};

struct ScalingReport {
  std::vector<SweepPointSummary> points;
  std::vector<TrialRecord> trials;  // ordered by (point index, trial index)
  SlopeFit fit;
  bool fit_valid = false;
  std::string bound_name;
  double wall_ms = 0.0;
};

// Runs trials for every sweep point in parallel (trial-level parallelism,
// deterministic aggregation) and fits the log-log slope of the mean gap.
ScalingReport run_scaling_experiment(const ExperimentConfig& cfg);

// Ordinary least squares on (log x, log y); requires >= 4 points and a
// non-degenerate x range.
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

void emit_trials_csv(std::span<const TrialRecord> records, std::ostream& out);
void emit_sweep_csv(const ScalingReport& report, std::ostream& out);
std::string report_to_json(const ScalingReport& report, const ExperimentConfig& cfg);
std::string render_report_table(const std::string& report_json);

// Worker pool used for trial-level parallelism; size from KBOUND_WORKERS
// (default: hardware concurrency). Results must be written to preassigned
// slots so scheduling cannot affect output.
int worker_count();
void parallel_for(int n, const std::function<void(int)>& body);

std::string format_double(double v);  // shortest round-trip decimal, stable

}  // namespace kbound
