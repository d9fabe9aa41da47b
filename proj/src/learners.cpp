#include "kbound/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "kbound/rng.hpp"

namespace kbound {

LearnerSpec LearnerSpec::parse(const std::string& name) {
  LearnerSpec spec;
  if (name == "subsample") spec.kind = Kind::subsample;
  else if (name == "uniform_random_queries" || name == "uniform") spec.kind = Kind::uniform_random_queries;
  else if (name == "zero") spec.kind = Kind::zero;
  else if (name == "full_info") spec.kind = Kind::full_info;
  else if (name == "linear_solution") spec.kind = Kind::linear_solution;
  else if (name == "nystrom") spec.kind = Kind::nystrom;
  else throw std::invalid_argument("unknown learner: " + name);
  return spec;
}

const char* LearnerSpec::name() const {
  switch (kind) {
    case Kind::subsample: return "subsample";
    case Kind::uniform_random_queries: return "uniform_random_queries";
    case Kind::zero: return "zero";
    case Kind::full_info: return "full_info";
    case Kind::linear_solution: return "linear_solution";
    case Kind::nystrom: return "nystrom";
  }
  return "?";
}

namespace {

struct UnionFind {
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void merge(int a, int b) { parent[find(a)] = find(b); }
  std::vector<int> parent;
};

GroupedSolution solve_grouped(std::span<const int> counts, int total, const Objective& obj,
                              double y) {
  if (obj.regime == Objective::Regime::soft)
    return solve_grouped_soft(counts, total, obj.loss, obj.lambda, y);
  return solve_grouped_constrained_abs(counts, total, obj.norm_bound, y);
}

}  // namespace

LearnResult subsample_learn(BudgetedOracle& oracle, double y, const Objective& obj,
                            std::uint64_t seed) {
  const std::uint64_t budget = oracle.budget();
  if (budget < 1) throw std::invalid_argument("subsample_learn: budget must be >= 1");
  const int m = oracle.m();
  const int nhat = static_cast<int>(std::floor(std::sqrt(static_cast<double>(budget))));

  Rng rng(seed);
  std::vector<int> draws(nhat);
  for (int& t : draws) t = static_cast<int>(rng.uniform_below(m));

  // Distinct underlying indices with multiplicities (draws are with replacement).
  std::unordered_map<int, int> multiplicity;
  for (int t : draws) ++multiplicity[t];
  std::vector<int> points;
  points.reserve(multiplicity.size());
  for (const auto& [t, count] : multiplicity) points.push_back(t);
  std::sort(points.begin(), points.end());
  const int k = static_cast<int>(points.size());

  // The full sub-kernel on the distinct points. Diagonal entries are 1 by
  // construction and are not queried; floor(sqrt(B))^2 <= B guarantees the
  // off-diagonal pairs fit the budget.
  UnionFind uf(k);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (oracle.query(points[a], points[b]) == 1) uf.merge(a, b);

  // Group the sampled multiset by observed equivalence and solve exactly.
  std::unordered_map<int, int> group_of_root;
  std::vector<int> counts;
  std::vector<int> group_of_point(k);
  for (int a = 0; a < k; ++a) {
    const int root = uf.find(a);
    auto [it, inserted] = group_of_root.try_emplace(root, static_cast<int>(counts.size()));
    if (inserted) counts.push_back(0);
    group_of_point[a] = it->second;
    counts[it->second] += multiplicity.at(points[a]);
  }

  const GroupedSolution sol = solve_grouped(counts, nhat, obj, y);

  // Embed: each of the count_c copies carries gamma_c / count_c, and copies
  // of the same index add up.
  LearnResult out;
  out.alpha.assign(m, 0.0);
  for (int a = 0; a < k; ++a) {
    const int c = group_of_point[a];
    out.alpha[points[a]] =
        sol.gamma[c] * static_cast<double>(multiplicity.at(points[a])) / counts[c];
  }
  out.queries_used = oracle.used();
  return out;
}

LearnResult uniform_random_learn(BudgetedOracle& oracle, double y, const Objective& obj,
                                 std::uint64_t seed) {
  const int m = oracle.m();
  Rng rng(seed);

  // Spend the budget on uniformly random off-diagonal pairs; repeats are free
  // so keep drawing until the charged count reaches the budget (or every pair
  // has been seen).
  const std::uint64_t total_pairs =
      static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m - 1) / 2;
  const std::uint64_t target = std::min(oracle.budget(), total_pairs);
  UnionFind uf(m);
  while (oracle.used() < target) {
    const int s = static_cast<int>(rng.uniform_below(m));
    int r = static_cast<int>(rng.uniform_below(m - 1));
    if (r >= s) ++r;
    if (oracle.query(s, r) == 1) uf.merge(s, r);
  }

  // Best-effort completion: observed ones merge points into groups, all
  // other entries are taken as zero. Unqueried points stay as singletons
  // (their diagonal is known to be 1).
  std::vector<int> group_of_root(m, -1);
  std::vector<int> counts;
  std::vector<int> group_of_point(m);
  for (int t = 0; t < m; ++t) {
    const int root = uf.find(t);
    if (group_of_root[root] < 0) {
      group_of_root[root] = static_cast<int>(counts.size());
      counts.push_back(0);
    }
    group_of_point[t] = group_of_root[root];
    counts[group_of_root[root]] += 1;
  }

  const GroupedSolution sol = solve_grouped(counts, m, obj, y);

  LearnResult out;
  out.alpha.assign(m, 0.0);
  for (int t = 0; t < m; ++t) {
    const int c = group_of_point[t];
    out.alpha[t] = sol.gamma[c] / counts[c];
  }
  out.queries_used = oracle.used();
  return out;
}

Coefficients zero_learn(int m) { return Coefficients(m, 0.0); }

Coefficients full_info_learn(const BlockKernel& kernel, const Objective& obj, double y) {
  if (obj.regime == Objective::Regime::soft) {
    const BlockSolution sol = solve_block_erm(kernel, obj.loss, obj.lambda, y);
    return spread_block_coefficients(kernel, sol.beta);
  }
  const ConstrainedSolution sol = solve_norm_constrained_abs(kernel, obj.norm_bound, y);
  return spread_block_coefficients(kernel, sol.beta);
}

void nystrom_query_pattern(BudgetedOracle& oracle, std::uint64_t seed) {
  const int m = oracle.m();
  Rng rng(seed);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));
  // Walk down whole landmark columns, landmark by landmark, until the budget
  // is gone (the typical budgeted case stops inside the first column).
  for (int landmark : order) {
    for (int t = 0; t < m; ++t) {
      if (t == landmark) continue;
      if (oracle.remaining() == 0) return;
      oracle.query(landmark, t);
    }
  }
}

NystromResult nystrom_learn(const LowRankInstance& instance, std::span<const int> landmarks,
                            double lambda) {
  const int m = instance.m();
  const int n = 2 * instance.d();
  const int k = static_cast<int>(landmarks.size());
  if (k < 1) throw std::invalid_argument("nystrom_learn: need at least one landmark");
  for (int l : landmarks)
    if (l < 0 || l >= m) throw std::invalid_argument("nystrom_learn: landmark out of range");

  // On this instance a kernel column is the indicator of the landmark's
  // block, so the reduced column of landmark a is e_{block(a)} and
  // K' = C W^+ C^T reduces to G' = M W^+ M^T.
  std::vector<int> block(k);
  for (int a = 0; a < k; ++a) block[a] = instance.partition(landmarks[a]);

  SymMatrix w(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) w(a, b) = (block[a] == block[b]) ? 1.0 : 0.0;
  const SymMatrix winv = pseudo_inverse(w, 1e-10);

  SymMatrix g(static_cast<std::size_t>(n));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) g(block[a], block[b]) += winv(a, b);

  NystromResult out;
  out.kprime = BlockConstantMatrix{m, instance.d(), std::move(g)};
  std::vector<int> distinct(block);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  out.covered_blocks = static_cast<int>(distinct.size());

  std::vector<double> z(n);
  for (int j = 0; j < n; ++j) z[j] = static_cast<double>(instance.z()[j]);
  out.alpha = ridge_closed_form(out.kprime, z, lambda);
  return out;
}

}  // namespace kbound
