#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kbound/instance.hpp"
#include "kbound/oracle.hpp"
#include "kbound/solvers.hpp"

namespace kbound {

// Learner selection for the experiment driver. subsample, uniform_random and
// zero are the budgeted learners evaluated on hard instances; full_info is
// the unlimited-budget reference; linear_solution is the zero-query optimum
// for the linear loss; nystrom runs on the low-rank lane.
struct LearnerSpec {
  enum class Kind { subsample, uniform_random_queries, zero, full_info, linear_solution, nystrom };
  Kind kind = Kind::subsample;
  int landmarks = 1;  // nystrom only

  static LearnerSpec parse(const std::string& name);
  const char* name() const;
};

struct LearnResult {
  Coefficients alpha;
  std::uint64_t queries_used = 0;
};

// The sub-sampling strategy: draws floor(sqrt(B)) training indices uniformly
// with replacement, queries the full sub-kernel through the oracle (diagonal
// entries are skipped -- they are 1 by construction and would only burn
// budget), solves the sub-problem exactly in the grouped model, and embeds
// the solution back with zeros elsewhere. Duplicate draws keep their weight.
LearnResult subsample_learn(BudgetedOracle& oracle, double y, const Objective& obj,
                            std::uint64_t seed);

// Baseline with a non-subsampling query pattern: spends the budget on
// uniformly random off-diagonal pairs, merges indices connected by observed
// ones into groups (unobserved entries treated as zero), and solves the
// grouped problem over all m points.
LearnResult uniform_random_learn(BudgetedOracle& oracle, double y, const Objective& obj,
                                 std::uint64_t seed);

Coefficients zero_learn(int m);

// Exact solve with unlimited information (no oracle involved).
Coefficients full_info_learn(const BlockKernel& kernel, const Objective& obj, double y);

// Query pattern only, for block-coverage statistics: walks down random
// landmark columns until the budget is gone.
void nystrom_query_pattern(BudgetedOracle& oracle, std::uint64_t seed);

struct NystromResult {
  Coefficients alpha;
  BlockConstantMatrix kprime;  // the low-rank surrogate actually solved on
  int covered_blocks = 0;
};

// Nystrom-style low-rank learner for the ridge-regression instance: builds
// the feature map from the chosen landmark columns of the true kernel
// (pseudo-inverse cutoff 1e-10 on the landmark block), forms the surrogate
// K', and returns the ridge solution on K' together with K' itself so the
// gap can be evaluated against the true kernel.
NystromResult nystrom_learn(const LowRankInstance& instance, std::span<const int> landmarks,
                            double lambda);

}  // namespace kbound
