#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "kbound/instance.hpp"
#include "kbound/linalg.hpp"
#include "kbound/rng.hpp"
#include "kbound/solvers.hpp"

using kbound::BlockKernel;
using kbound::LowRankInstance;
using kbound::PointAssignment;
using kbound::sample_hard_kernel;

namespace {

BlockKernel find_sampled(int d, int m, bool sigma_one) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    BlockKernel k = sample_hard_kernel(d, m, seed);
    if ((k.sigma()[0] != 0) == sigma_one) return k;
  }
  throw std::runtime_error("no seed with the requested sigma");
}

}  // namespace

TEST_CASE("preconditions") {
  CHECK_THROWS_AS(sample_hard_kernel(1, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_hard_kernel(0, 4, 0), std::invalid_argument);
}

TEST_CASE("d=1 single merged block is all ones") {
  const BlockKernel k = find_sampled(1, 4, true);
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < 4; ++r) CHECK(k.entry(s, r) == 1);
}

TEST_CASE("d=1 split block is two all-ones sub-blocks with equal halves") {
  const BlockKernel k = find_sampled(1, 4, false);
  CHECK(k.block_sizes()[0] == 4);
  int sub_zero = 0;
  for (const PointAssignment& pa : k.assignment()) sub_zero += pa.sub == 0 ? 1 : 0;
  CHECK(sub_zero == 2);
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < 4; ++r) {
      const bool same_sub = k.assignment()[s].sub == k.assignment()[r].sub;
      CHECK(k.entry(s, r) == (same_sub ? 1 : 0));
    }
}

TEST_CASE("kernel entries: diagonal, symmetry, block structure") {
  const BlockKernel k = sample_hard_kernel(5, 40, 7);
  for (int s = 0; s < 40; ++s) CHECK(k.entry(s, s) == 1);
  for (int s = 0; s < 40; ++s)
    for (int r = 0; r < 40; ++r) {
      CHECK(k.entry(s, r) == k.entry(r, s));
      const auto& a = k.assignment()[s];
      const auto& b = k.assignment()[r];
      if (a.block != b.block) CHECK(k.entry(s, r) == 0);
      else if (a.sub != b.sub && !k.sigma()[a.block]) CHECK(k.entry(s, r) == 0);
      else CHECK(k.entry(s, r) == 1);
    }
  CHECK_THROWS_AS(k.entry(-1, 0), std::out_of_range);
  CHECK_THROWS_AS(k.entry(0, 40), std::out_of_range);
}

TEST_CASE("block sizes: even, equal halves, sum to m") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BlockKernel k = sample_hard_kernel(6, 48, seed);
    int total = 0;
    for (int i = 0; i < k.d(); ++i) {
      CHECK(k.block_sizes()[i] % 2 == 0);
      total += k.block_sizes()[i];
    }
    CHECK(total == 48);
  }
}

TEST_CASE("sample mean of N_1 matches m/d") {
  // expectation of a block's size is m/d
  const int trials = 100000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t)
    sum += sample_hard_kernel(8, 64, 1000000 + t).block_sizes()[0];
  CHECK(sum / trials == doctest::Approx(8.0).epsilon(0.0125));
}

TEST_CASE("materialized kernel is PSD with rank at most 2d") {
  const BlockKernel k = sample_hard_kernel(3, 12, 11);
  const auto eig = kbound::jacobi_eigensolve(k.materialize());
  int positive = 0;
  for (double w : eig.values) {
    CHECK(w >= -1e-9);
    positive += w > 1e-9 ? 1 : 0;
  }
  CHECK(positive <= 6);
}

TEST_CASE("realized instances reproduce the kernel exactly") {
  SUBCASE("d=1 merged pair") {
    const BlockKernel k = find_sampled(1, 2, true);
    const auto basis = kbound::realize_instances(k);
    CHECK(basis[0] == basis[1]);
  }
  SUBCASE("d=1 split pair") {
    const BlockKernel k = find_sampled(1, 2, false);
    const auto basis = kbound::realize_instances(k);
    CHECK(basis[0] != basis[1]);
    CHECK(std::min(basis[0], basis[1]) == 0);
    CHECK(std::max(basis[0], basis[1]) == 1);  // e_{i+d} with i = 0, d = 1
  }
  SUBCASE("gram matrix oracle, exhaustive up to m = 64") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const BlockKernel k = sample_hard_kernel(seed == 3 ? 8 : 4, seed == 3 ? 64 : 16, seed);
      const auto basis = kbound::realize_instances(k);
      // densify and take real dot products
      std::vector<std::vector<double>> vecs(k.m(), std::vector<double>(2 * k.d(), 0.0));
      for (int t = 0; t < k.m(); ++t) vecs[t][basis[t]] = 1.0;
      for (int s = 0; s < k.m(); ++s)
        for (int r = 0; r < k.m(); ++r) {
          double dot = 0.0;
          for (int j = 0; j < 2 * k.d(); ++j) dot += vecs[s][j] * vecs[r][j];
          CHECK(dot == static_cast<double>(k.entry(s, r)));
        }
    }
  }
}

TEST_CASE("pair labels are uniform over blocks") {
  // each of the m/2 pairs lands on block i with probability 1/d, so the
  // total pair count of block i over all trials is Binomial(trials*m/2, 1/d)
  const int d = 4, m = 8, trials = 10000;
  std::vector<long> pair_hits(d, 0);
  for (int t = 0; t < trials; ++t) {
    const BlockKernel k = sample_hard_kernel(d, m, 555000 + t);
    for (int i = 0; i < d; ++i) pair_hits[i] += k.block_sizes()[i] / 2;
  }
  const double draws = static_cast<double>(trials) * (m / 2);
  const double expect = draws / d;
  const double sd = std::sqrt(draws * (1.0 / d) * (1.0 - 1.0 / d));
  for (int i = 0; i < d; ++i)
    CHECK(std::abs(static_cast<double>(pair_hits[i]) - expect) <= 3.0 * sd);
}

TEST_CASE("resampling the permutation keeps the block-size multiset") {
  const BlockKernel k = sample_hard_kernel(6, 60, 17);
  const BlockKernel k2 = kbound::resample_permutation(k, 999);
  CHECK(k2.sigma() == k.sigma());
  CHECK(k2.block_sizes() == k.block_sizes());
  bool some_moved = false;
  for (int t = 0; t < k.m(); ++t)
    some_moved = some_moved || k.assignment()[t].block != k2.assignment()[t].block;
  CHECK(some_moved);
}

TEST_CASE("hard-kernel JSON round-trip is lossless") {
  const BlockKernel k = sample_hard_kernel(5, 26, 123);
  const BlockKernel back = kbound::block_kernel_from_json(kbound::to_json(k));
  CHECK(back.m() == k.m());
  CHECK(back.d() == k.d());
  CHECK(back.sigma() == k.sigma());
  for (int t = 0; t < k.m(); ++t) {
    CHECK(back.assignment()[t].block == k.assignment()[t].block);
    CHECK(back.assignment()[t].sub == k.assignment()[t].sub);
  }
  CHECK_FALSE(kbound::json_is_lowrank(kbound::to_json(k)));
}

TEST_CASE("low-rank instance: partition, targets, identity gram") {
  const LowRankInstance inst(2, 8, {1, 1, -1, -1});
  const std::vector<double> expected{1, 1, 1, 1, -1, -1, -1, -1};
  CHECK(inst.targets() == expected);
  // materialized kernel is block-diagonal all-ones; reduced matrix is I
  const auto g = kbound::reduce_gram(inst.materialize(), 8, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(g(i, j) == (i == j ? 1.0 : 0.0));

  CHECK_THROWS_AS(LowRankInstance(2, 10, std::vector<int>(4, 1)), std::invalid_argument);
  CHECK_THROWS_AS(LowRankInstance(2, 8, std::vector<int>{1, 2, -1, -1}), std::invalid_argument);

  const LowRankInstance back = kbound::lowrank_instance_from_json(kbound::to_json(inst));
  CHECK(back.z() == inst.z());
  CHECK(back.m() == inst.m());
  CHECK(kbound::json_is_lowrank(kbound::to_json(inst)));
}

TEST_CASE("z search: rank-0 reduced matrix makes every sign vector optimal") {
  const int d = 4;
  kbound::SymMatrix zero(2 * d);
  const auto res = kbound::search_adversarial_z(zero, d, 1000, 42);
  CHECK(res.reached);
  CHECK(res.score == doctest::Approx(static_cast<double>(d)).epsilon(1e-12));

  // exhaustive oracle at d <= 6: with an orthonormal basis of eigenvectors of
  // the zero matrix, every z in {-1,+1}^{2d} scores exactly d
  for (int mask = 0; mask < (1 << (2 * d)); ++mask) {
    double score = 0.0;
    for (int i = 0; i < d; ++i) {
      const double zi = (mask >> i) & 1 ? 1.0 : -1.0;
      score += zi * zi;  // eigenvectors are the standard basis
    }
    CHECK(score == doctest::Approx(static_cast<double>(d)));
  }
}

TEST_CASE("z search: expectation of the projector score over uniform z is d") {
  const int d = 4;
  const int n = 2 * d;
  // random symmetric matrix -> random orthonormal eigenbasis
  kbound::Rng rng(2024);
  kbound::SymMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) a.set_symmetric(i, j, rng.uniform_real(-1.0, 1.0));
  const auto eig = kbound::jacobi_eigensolve(a);

  const int trials = 100000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> z(n);
    for (double& v : z) v = rng.bit() ? 1.0 : -1.0;
    for (int k = 0; k < d; ++k) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += eig.vectors(i, k) * z[i];
      sum += dot * dot;
    }
  }
  CHECK(sum / trials == doctest::Approx(4.0).epsilon(0.0125));
}

TEST_CASE("z search reports failure when the budget is zero") {
  kbound::SymMatrix g = kbound::SymMatrix::identity(4);
  const auto res = kbound::search_adversarial_z(g, 2, 0, 1);
  CHECK_FALSE(res.reached);
  CHECK_THROWS_AS(kbound::build_lowrank_instance(2, 8, {}, &g, 0, 1), std::runtime_error);
}

TEST_CASE("build_lowrank_instance with search") {
  kbound::SymMatrix g(8);  // rank-0 surrogate
  const LowRankInstance inst = kbound::build_lowrank_instance(4, 32, {}, &g, 1000, 3);
  CHECK(inst.m() == 32);
  CHECK(static_cast<int>(inst.z().size()) == 8);
}
