#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "kbound/instance.hpp"

namespace kbound {

// Raised when a learner asks for a new distinct entry with no budget left.
// An error rather than a silent clamp, so learners cannot overspend by
// accident; learners are expected to catch it and finalize.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("kernel query budget exhausted") {}
};

struct QueryRecord {
  int s;
  int r;
  int value;
  bool charged;
};

// The only path by which learners may read kernel entries. Budget counts
// distinct unordered pairs: re-queries and transposes are free, diagonal
// queries are charged like any other pair. Owned by a single trial; never
// shared across threads.
class BudgetedOracle {
 public:
  BudgetedOracle(const BlockKernel& kernel, std::uint64_t budget)
      : kernel_(&kernel), budget_(budget) {}

  // Returns K_{s,r}, logging the query and charging the budget iff the
  // unordered pair {s,r} is new. Throws BudgetExhausted (before logging)
  // when a new pair is requested with zero remaining budget.
  int query(int s, int r);

  // Training-set size; public information, unlike the kernel's structure.
  int m() const { return kernel_->m(); }

  std::uint64_t budget() const { return budget_; }
  std::uint64_t used() const { return seen_.size(); }
  std::uint64_t remaining() const { return budget_ - used(); }
  const std::vector<QueryRecord>& log() const { return log_; }

  // Bit i set iff event E_i holds: no logged query has both endpoints in
  // block i. Intended to be read after a learner finishes.
  std::vector<std::uint8_t> missed_blocks() const;
  int missed_block_count() const;

  // Audit export, one row per logged query: t,s,r,value,charged
  // (t is the 1-based query ordinal; s,r are 1-based indices).
  void write_log_csv(std::ostream& out) const;

 private:
  const BlockKernel* kernel_;
  std::uint64_t budget_;
  std::unordered_set<std::uint64_t> seen_;
  std::vector<QueryRecord> log_;
};

}  // namespace kbound
