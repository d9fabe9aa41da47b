#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kbound/learners.hpp"
#include "kbound/losses.hpp"

namespace kbound {

struct CheckResult {
  std::string name;
  bool pass = false;
  double stat = 0.0;       // headline statistic (max deviation, estimate, margin)
  double threshold = 0.0;  // what it was compared against
  std::string detail;
};

// Randomized equality suites: the block-path objective against the dense
// O(m^2) path (loss rewrite plus quadratic form), and the reduced 2d x 2d
// ridge solve against the dense one (both the coefficient identity and the
// objective-rewrite chain). Deviations beyond 1e-10 / 1e-9 fail.
std::vector<CheckResult> verify_identities(std::uint64_t seed, int lemma2_cases = 100,
                                           int lemma2_max_m = 256, int lemma7_cases = 50,
                                           int lemma7_max_m = 96);

struct CoverageEstimate {
  double estimate = 0.0;  // Monte Carlo mean of the missed-block count
  double stderr_of_mean = 0.0;
  int trials = 0;
};

// Monte Carlo estimate of sum_i Pr(E_i) for a learner's query pattern on
// fresh hard instances.
CoverageEstimate estimate_block_coverage(const LearnerSpec& learner, int d, int m,
                                         std::uint64_t budget, int trials, std::uint64_t seed);

// Pass iff estimate - 3 stderr > d/2 (requires m >= 2d and B < (3/50) d^2).
CheckResult verify_block_coverage(const LearnerSpec& learner, int d, int m, std::uint64_t budget,
                                  int trials, std::uint64_t seed);

struct MinimaxCheck {
  bool pass = false;
  double grid_min = 0.0;  // min over the (u,v) grid of max_sigma g^sigma
  double rhs = 0.0;       // (lambda/12) (2 u1* - u2*)^2
  double argmin_u = 0.0;
  double argmin_v = 0.0;
  double predicted_uv = 0.0;       // (u1* + u2*) / 3
  double quad_at_predicted = 0.0;  // quadratic lower bound at that point (= rhs)
  double max_f0_violation = 0.0;   // strong-convexity displacement bound, sigma = 0
  double max_f1_violation = 0.0;   // and sigma = 1
};

// Grid check of min_{u,v} max_sigma g^sigma_n(u,v) >= (lambda/12)(2u1*-u2*)^2
// at block-share parameter p = m/(n d) in [1/2, 2], plus the pointwise
// strong-convexity displacement bounds. The grid minimum over a subset of
// the plane can only overestimate the true minimum, so a failure indicates
// wrong closed forms rather than grid resolution.
MinimaxCheck verify_thm2_minimax(Loss loss, double lambda, int d, double p, double y,
                                 int grid = 161);

// Low-rank ridge bound at one configuration: draws landmark indices, builds
// the surrogate, searches the adversarial z against its reduced matrix, and
// compares the achieved gap with 1/(2 (lambda d)^2 (1 + lambda d)). With
// cover_all_blocks the landmarks hit every block (k = 2d) and the gap must
// vanish instead.
CheckResult verify_lowrank_bound(int d, int m, double lambda, int landmark_count,
                                 bool cover_all_blocks, std::uint64_t seed);

// Everything above at default desk-scale parameters; the `verify` CLI
// subcommand prints one line per entry and exits nonzero on any failure.
std::vector<CheckResult> verify_all(std::uint64_t seed);

}  // namespace kbound
