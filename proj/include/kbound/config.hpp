#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kbound/learners.hpp"
#include "kbound/losses.hpp"
#include "kbound/solvers.hpp"

namespace kbound {

// One experiment description: loss/regime, the problem sizes (possibly under
// per-point rules), the target policy, the learner, and the Monte Carlo
// plan. Loaded from a flat `key = value` text file with '#' comments; any
// key can be overridden from the command line.
struct ExperimentConfig {
  Loss loss = Loss::absolute;
  std::string regime = "norm";  // "norm" | "soft"
  double norm_bound = 2.0;      // R^2 for the norm regime
  double lambda = 0.0;          // soft regime (sweep values override per point)

  int d = 0;                   // fixed d (d_rule = "fixed")
  std::string d_rule = "fixed";  // "fixed" | "sqrtB": d = ceil(sqrt(100 B / 3))
  int m = 0;                   // fixed m (m_rule = "fixed")
  std::string m_rule = "fixed";  // "fixed" | "128d": m = 128 d

  std::string sweep_axis = "B";        // "B" | "lambda"
  std::vector<std::uint64_t> budgets;  // B values (single value for `run`)
  std::vector<double> lambdas;         // lambda values when sweeping lambda

  // "fixed" (y = y_value) | "invsqrtd" (1/sqrt(d)) | "cor3" (1/(2 lambda d)) | "one"
  std::string y_policy = "fixed";
  double y_value = 0.0;

  LearnerSpec learner;
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string bound = "none";  // "thm1" | "cor1" | "cor3" | "cor4" | "cor5" | "none"
  std::string output;          // output path prefix

  Objective objective(double lambda_value) const;
  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Problem sizes of one sweep point after applying the d/m rules and the
// target policy.
struct ResolvedPoint {
  double x;  // the sweep-axis value
  int d;
  int m;
  std::uint64_t budget;
  double lambda;
  double y;
};

std::vector<ResolvedPoint> resolve_points(const ExperimentConfig& cfg);

// Lower-bound overlay at a sweep point, computed from the explicit constants
// of the corresponding statement (never fitted):
//   thm1/cor1: 1/(70 sqrt(d))        cor3: 1/(960 lambda d)
//   cor4: 1/240                      cor5: 2^-18 min{1, (lambda sqrt(B))^-3}
double bound_overlay(const std::string& name, const ResolvedPoint& point);

}  // namespace kbound
