#include "kbound/oracle.hpp"

#include <algorithm>

namespace kbound {

static std::uint64_t pair_key(int s, int r, int m) {
  const std::uint64_t lo = static_cast<std::uint64_t>(std::min(s, r));
  const std::uint64_t hi = static_cast<std::uint64_t>(std::max(s, r));
  return lo * static_cast<std::uint64_t>(m) + hi;
}

int BudgetedOracle::query(int s, int r) {
  const std::uint64_t key = pair_key(s, r, kernel_->m());
  const bool is_new = !seen_.contains(key);
  if (is_new && remaining() == 0) throw BudgetExhausted();
  const int value = kernel_->entry(s, r);  // also bounds-checks s, r
  if (is_new) seen_.insert(key);
  log_.push_back({s, r, value, is_new});
  return value;
}

std::vector<std::uint8_t> BudgetedOracle::missed_blocks() const {
  std::vector<std::uint8_t> missed(kernel_->d(), 1);
  const auto& assignment = kernel_->assignment();
  for (const QueryRecord& q : log_) {
    const auto bs = assignment[q.s].block;
    if (bs == assignment[q.r].block) missed[bs] = 0;
  }
  return missed;
}

int BudgetedOracle::missed_block_count() const {
  int count = 0;
  for (std::uint8_t bit : missed_blocks()) count += bit;
  return count;
}

void BudgetedOracle::write_log_csv(std::ostream& out) const {
  out << "t,s,r,value,charged\n";
  for (std::size_t i = 0; i < log_.size(); ++i) {
    const QueryRecord& q = log_[i];
    out << (i + 1) << ',' << (q.s + 1) << ',' << (q.r + 1) << ',' << q.value << ','
        << (q.charged ? 1 : 0) << '\n';
  }
}

}  // namespace kbound
