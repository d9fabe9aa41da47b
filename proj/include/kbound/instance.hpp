#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kbound/linalg.hpp"

namespace kbound {

// Where a training point lands in the block construction: block index in
// [0, d) and sub-block 0 or 1. When sigma[block] = 1 the two sub-blocks
// carry the same instance vector; when sigma[block] = 0 they are orthogonal.
struct PointAssignment {
  std::uint32_t block;
  std::uint8_t sub;
};

// Implicit representation of an m x m hard kernel matrix: a bit vector
// sigma in {0,1}^d plus the per-point (block, sub) assignment that already
// folds in the random permutation. Entries are evaluated in O(1); the dense
// matrix is only ever materialized on debug/verification paths (m <= 2048).
// Immutable after construction, safe to share across threads.
class BlockKernel {
 public:
  BlockKernel(int d, std::vector<std::uint8_t> sigma, std::vector<PointAssignment> assignment);

  int m() const { return static_cast<int>(assignment_.size()); }
  int d() const { return d_; }
  const std::vector<std::uint8_t>& sigma() const { return sigma_; }
  const std::vector<PointAssignment>& assignment() const { return assignment_; }
  // N_i: total points in block i (both sub-blocks; always even).
  const std::vector<int>& block_sizes() const { return block_sizes_; }
  int sub_block_size(int block) const { return block_sizes_[block] / 2; }
  int sigma_popcount() const;

  // K_{s,r} in {0,1}; indices are 0-based, diagonal is 1, symmetric.
  int entry(int s, int r) const;

  // Dense m x m copy, gated to m <= 2048.
  SymMatrix materialize() const;

 private:
  void check_index(int t) const;

  int d_;
  std::vector<std::uint8_t> sigma_;
  std::vector<PointAssignment> assignment_;
  std::vector<int> block_sizes_;
};

// Draws a kernel from the hard-instance distribution: sigma uniform on
// {0,1}^d, m/2 point pairs with uniformly random block labels (with
// replacement), and a uniform permutation folded into the assignment.
// Rejects odd m and d < 1; warns on stderr when m < 2d. Deterministic in
// the seed.
BlockKernel sample_hard_kernel(int d, int m, std::uint64_t seed);

// Rebuilds a kernel with the same pair labels and sigma but a freshly drawn
// permutation; block sizes are unchanged by construction.
BlockKernel resample_permutation(const BlockKernel& kernel, std::uint64_t seed);

// The explicit instance vectors behind a kernel: point t is the standard
// basis vector e_{index} of R^{2d}, with index = block if sigma[block] = 1
// or sub = 0, and index = block + d otherwise. Pairwise dot products of the
// returned vectors reproduce entry() exactly.
std::vector<int> realize_instances(const BlockKernel& kernel);

// Training set for the low-rank lower bound: m points split by
// i(t) = floor(t / (m/2d)) into 2d equal blocks (0-based), with labels
// y_t = z[i(t)] for z in {-1,+1}^{2d}. The induced kernel matrix is
// block-diagonal with 2d all-ones blocks, so its 2d x 2d representative
// matrix is the identity.
class LowRankInstance {
 public:
  LowRankInstance(int d, int m, std::vector<int> z);

  int m() const { return m_; }
  int d() const { return d_; }
  int block_size() const { return m_ / (2 * d_); }
  const std::vector<int>& z() const { return z_; }

  int partition(int t) const { return t / block_size(); }
  double target(int t) const { return static_cast<double>(z_[partition(t)]); }
  std::vector<double> targets() const;

  int entry(int s, int r) const { return partition(s) == partition(r) ? 1 : 0; }
  SymMatrix materialize() const;

 private:
  int d_;
  int m_;
  std::vector<int> z_;
};

struct ZSearchResult {
  std::vector<int> z;
  double score;   // sum over the bottom-d eigenvectors u_i of (u_i . z)^2
  bool reached;   // score >= d (up to a 1e-9 float allowance)
  int evaluations;
};

// Searches z in {-1,+1}^{2d} maximizing sum_{i<=d} (u_i . z)^2 where u_i are
// the bottom-d eigenvectors of the learner's 2d x 2d reduced matrix. Random
// restarts plus greedy single-coordinate sign flips, early exit once the
// score reaches d (guaranteed attainable: the expectation over uniform z is
// exactly d). Fails with reached = false and the best z found if
// search_budget evaluations run out first.
ZSearchResult search_adversarial_z(const SymMatrix& reduced_gram, int d, int search_budget,
                                   std::uint64_t seed);

// Convenience wrapper: builds the low-rank training set with the given z, or
// with a searched z when z is empty. Requires 2d | m. Throws
// std::runtime_error with a diagnostic if the search budget is exhausted
// before reaching the score threshold.
LowRankInstance build_lowrank_instance(int d, int m, std::vector<int> z,
                                       const SymMatrix* reduced_gram = nullptr,
                                       int search_budget = 100000, std::uint64_t seed = 0);

// JSON (de)serialization. One schema, two shapes: hard kernels carry
// {m, d, sigma, assignment} and low-rank instances carry {m, d, z}.
// Indices, block ids and subs are 1-based on disk.
std::string to_json(const BlockKernel& kernel);
std::string to_json(const LowRankInstance& instance);
BlockKernel block_kernel_from_json(const std::string& text);
LowRankInstance lowrank_instance_from_json(const std::string& text);
bool json_is_lowrank(const std::string& text);

}  // namespace kbound
