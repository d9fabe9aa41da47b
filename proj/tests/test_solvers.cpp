#include <doctest.h>

#include <stdexcept>

#include <array>
#include <cmath>
#include <vector>

#include "kbound/instance.hpp"
#include "kbound/rng.hpp"
#include "kbound/solvers.hpp"
#include "oracles.hpp"

using kbound::BlockCoefficients;
using kbound::BlockConstantMatrix;
using kbound::BlockKernel;
using kbound::Loss;
using kbound::Objective;
using kbound::PointAssignment;

namespace {

// d blocks of identical even size, laid out sequentially
BlockKernel uniform_kernel(int d, int block_size, std::vector<std::uint8_t> sigma) {
  std::vector<PointAssignment> assignment;
  for (int i = 0; i < d; ++i)
    for (int c = 0; c < block_size; ++c)
      assignment.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint8_t>(c % 2)});
  return BlockKernel(d, std::move(sigma), std::move(assignment));
}

double loss_eval(Loss loss, double u, double y) { return kbound::eval_loss(loss, u, y); }

}  // namespace

TEST_CASE("reduce_coefficients") {
  const BlockKernel k = kbound::sample_hard_kernel(3, 12, 5);
  SUBCASE("zero maps to zero") {
    const auto beta = kbound::reduce_coefficients(k, std::vector<double>(12, 0.0));
    for (const auto& b : beta.beta) {
      CHECK(b[0] == 0.0);
      CHECK(b[1] == 0.0);
    }
  }
  SUBCASE("a unit vector lands in its sub-block slot") {
    // find a point in block 2 (0-based), sub-block 1 if present
    for (int t = 0; t < 12; ++t) {
      const auto& pa = k.assignment()[t];
      if (pa.block == 2 && pa.sub == 1) {
        std::vector<double> alpha(12, 0.0);
        alpha[t] = 1.0;
        const auto beta = kbound::reduce_coefficients(k, alpha);
        CHECK(beta.beta[2][1] == 1.0);
        CHECK(beta.beta[2][0] == 0.0);
        CHECK(beta.beta[0][0] == 0.0);
        break;
      }
    }
  }
  SUBCASE("random alpha matches direct summation") {
    kbound::Rng rng(8);
    std::vector<double> alpha(12);
    for (double& a : alpha) a = rng.uniform_real(-2.0, 2.0);
    const auto beta = kbound::reduce_coefficients(k, alpha);
    std::vector<std::array<double, 2>> direct(3, {0.0, 0.0});
    for (int t = 0; t < 12; ++t)
      direct[k.assignment()[t].block][k.assignment()[t].sub] += alpha[t];
    for (int i = 0; i < 3; ++i) {
      CHECK(beta.beta[i][0] == direct[i][0]);
      CHECK(beta.beta[i][1] == direct[i][1]);
    }
  }
}

TEST_CASE("objective value: zero predictor under the squared loss") {
  const BlockKernel k = kbound::sample_hard_kernel(4, 24, 2);
  const Objective obj = Objective::soft(Loss::squared, 0.3);
  CHECK(kbound::objective_value(k, obj, std::vector<double>(24, 0.0), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("block formula equals the dense path (small)") {
  kbound::Rng rng(31);
  double max_dev = 0.0;
  for (int c = 0; c < 25; ++c) {
    const BlockKernel k = kbound::sample_hard_kernel(3, 24, 100 + c);
    const Loss loss = static_cast<Loss>(rng.uniform_below(4));
    const double lambda = rng.uniform_real(0.05, 1.0);
    const double y = loss == Loss::hinge ? 1.0 : rng.uniform_real(-1.0, 1.0);
    std::vector<double> alpha(24);
    for (double& a : alpha) a = rng.uniform_real(-1.0, 1.0);
    const Objective obj = Objective::soft(loss, lambda);
    const double block_path = kbound::objective_value(k, obj, alpha, y);
    const double dense_path =
        kbound::objective_value_dense(k, obj, alpha, std::vector<double>(24, y));
    max_dev = std::max(max_dev, std::abs(block_path - dense_path));
  }
  CHECK(max_dev <= 1e-10);
}

TEST_CASE("all-ones kernel: quadratic form is the squared coefficient sum") {
  const BlockKernel k = uniform_kernel(1, 6, {1});
  kbound::Rng rng(6);
  std::vector<double> alpha(6);
  double sum = 0.0;
  for (double& a : alpha) {
    a = rng.uniform_real(-1.0, 1.0);
    sum += a;
  }
  const auto beta = kbound::reduce_coefficients(k, alpha);
  CHECK(kbound::quadratic_form(k, beta) == doctest::Approx(sum * sum).epsilon(1e-12));
}

TEST_CASE("block ERM closed forms match the general-bound minimizers") {
  const int d = 4, block = 6;  // m = 24, N_i = m/d
  const double lambda = 0.125, y = 0.8;
  SUBCASE("split blocks: beta* = y/(1 + lambda d) per sub-block") {
    const BlockKernel k = uniform_kernel(d, block, {0, 0, 0, 0});
    const auto sol = kbound::solve_block_erm(k, Loss::squared, lambda, y);
    const double expected = y / (1.0 + lambda * d);
    for (int i = 0; i < d; ++i) {
      CHECK(sol.beta.beta[i][0] == doctest::Approx(expected).epsilon(1e-14));
      CHECK(sol.beta.beta[i][1] == doctest::Approx(expected).epsilon(1e-14));
    }
  }
  SUBCASE("merged blocks: s* = y/(1 + lambda d / 2)") {
    const BlockKernel k = uniform_kernel(d, block, {1, 1, 1, 1});
    const auto sol = kbound::solve_block_erm(k, Loss::squared, lambda, y);
    const double expected = y / (1.0 + lambda * d / 2.0);
    for (int i = 0; i < d; ++i)
      CHECK(sol.beta.beta[i][0] + sol.beta.beta[i][1] ==
            doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("block ERM value matches a 2-d grid search per block") {
  for (const Loss loss : {Loss::absolute, Loss::hinge, Loss::squared, Loss::linear}) {
    for (const std::uint8_t sigma : {std::uint8_t{0}, std::uint8_t{1}}) {
      const BlockKernel k = uniform_kernel(1, 8, {sigma});
      const double lambda = 0.35;
      const double y = loss == Loss::hinge ? 1.0 : 0.9;
      const auto sol = kbound::solve_block_erm(k, loss, lambda, y);
      const double s = sigma ? 1.0 : 0.0;
      const auto objective = [&](double b1, double b2) {
        return 0.5 * (loss_eval(loss, b1 + s * b2, y) + loss_eval(loss, s * b1 + b2, y)) +
               0.5 * lambda * (b1 * b1 + b2 * b2 + 2.0 * s * b1 * b2);
      };
      const auto grid = oracles::grid2d_min(objective, -5.0, 5.0);
      CHECK(sol.value == doctest::Approx(grid.value).epsilon(1e-5));
      CHECK(sol.value <= grid.value + 1e-10);  // solver is exact, grid is not
    }
  }
}

TEST_CASE("block ERM is a global-minimum witness against random coefficients") {
  kbound::Rng rng(17);
  const BlockKernel k = kbound::sample_hard_kernel(5, 40, 77);
  for (const Loss loss : {Loss::absolute, Loss::hinge, Loss::squared, Loss::linear}) {
    const double lambda = 0.2;
    const double y = loss == Loss::hinge ? 1.0 : 0.6;
    const Objective obj = Objective::soft(loss, lambda);
    const double best = kbound::solve_block_erm(k, loss, lambda, y).value;
    for (int c = 0; c < 1000; ++c) {
      std::vector<double> alpha(40);
      for (double& a : alpha) a = rng.uniform_real(-1.5, 1.5);
      CHECK(best <= kbound::objective_value(k, obj, alpha, y) + 1e-12);
    }
  }
}

TEST_CASE("delta gap") {
  const BlockKernel k = kbound::sample_hard_kernel(4, 32, 3);
  SUBCASE("the exact solution has zero gap") {
    const Objective obj = Objective::soft(Loss::squared, 0.4);
    const auto sol = kbound::solve_block_erm(k, Loss::squared, 0.4, 0.7);
    const auto alpha = kbound::spread_block_coefficients(k, sol.beta);
    CHECK(kbound::delta_gap(k, obj, alpha, 0.7) <= 1e-10);
  }
  SUBCASE("linear-loss closed form has zero gap") {
    const Objective obj = Objective::soft(Loss::linear, 0.3);
    const auto alpha = kbound::linear_loss_solution(std::vector<double>(32, 0.9), 0.3);
    CHECK(kbound::delta_gap(k, obj, alpha, 0.9) <= 1e-10);
  }
  SUBCASE("zero predictor, squared loss, split equal blocks: gap is 1/(1+lambda d)") {
    const int d = 4;
    const BlockKernel ku = uniform_kernel(d, 8, {0, 0, 0, 0});
    const double lambda = 0.25;
    const Objective obj = Objective::soft(Loss::squared, lambda);
    const double gap = kbound::delta_gap(ku, obj, std::vector<double>(32, 0.0), 1.0);
    // optimal value is lambda d/(1+lambda d); the zero predictor pays 1
    CHECK(gap == doctest::Approx(1.0 / (1.0 + lambda * d)).epsilon(1e-12));
    const double optimal = kbound::solve_block_erm(ku, Loss::squared, lambda, 1.0).value;
    CHECK(gap == doctest::Approx(1.0 - optimal).epsilon(1e-12));
  }
}

TEST_CASE("norm-constrained certificate") {
  kbound::Rng rng(12);
  for (int c = 0; c < 20; ++c) {
    const int d = static_cast<int>(rng.uniform_int(1, 64));
    const int m = 2 * static_cast<int>(rng.uniform_int(d, 4 * d));
    const BlockKernel k = kbound::sample_hard_kernel(d, m, 900 + c);
    const double y = 1.0 / std::sqrt(static_cast<double>(d));
    const auto alpha = kbound::thm1_certificate(k);
    const Objective obj = Objective::norm_constrained(2.0);
    CHECK(kbound::objective_value(k, obj, alpha, y) <= 1e-12);
    CHECK(kbound::quadratic_form(k, kbound::reduce_coefficients(k, alpha)) <= 2.0 + 1e-12);
  }
  SUBCASE("d=1 merged pair: total mass 1, norm 1") {
    // the sub-block split of a merged block is arbitrary; only the sum matters
    const BlockKernel k = uniform_kernel(1, 2, {1});
    const auto alpha = kbound::thm1_certificate(k);
    CHECK(alpha[0] + alpha[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kbound::quadratic_form(k, kbound::reduce_coefficients(k, alpha)) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kbound::objective_value(k, Objective::norm_constrained(2.0), alpha, 1.0) <= 1e-14);
  }
}

TEST_CASE("norm-constrained solve") {
  SUBCASE("hard instance at R^2 = 2 and y = 1/sqrt(d) reaches zero") {
    const BlockKernel k = kbound::sample_hard_kernel(6, 36, 21);
    const auto sol = kbound::solve_norm_constrained_abs(k, 2.0, 1.0 / std::sqrt(6.0));
    CHECK(sol.value <= 1e-12);
    CHECK(kbound::quadratic_form(k, sol.beta) <= 2.0 + 1e-9);
  }
  SUBCASE("R^2 = 0 forces the zero predictor") {
    const BlockKernel k = kbound::sample_hard_kernel(3, 12, 4);
    const auto sol = kbound::solve_norm_constrained_abs(k, 0.0, 0.7);
    CHECK(sol.value == doctest::Approx(0.7).epsilon(1e-12));
    for (const auto& b : sol.beta.beta) {
      CHECK(b[0] == 0.0);
      CHECK(b[1] == 0.0);
    }
  }
  SUBCASE("active constraint agrees with the projected-subgradient oracle") {
    kbound::Rng rng(2001);
    for (int c = 0; c < 4; ++c) {
      const int d = 3;
      const int m = 12;
      const BlockKernel k = kbound::sample_hard_kernel(d, m, 3000 + c);
      const double y = rng.uniform_real(1.0, 2.0);
      const double r2 = rng.uniform_real(0.3, 1.2);
      const auto sol = kbound::solve_norm_constrained_abs(k, r2, y);

      // independent grouped view: sigma=0 blocks contribute two sub-block
      // groups, sigma=1 blocks one merged group
      std::vector<double> weights;
      for (int i = 0; i < d; ++i) {
        const int ni = k.block_sizes()[i];
        if (ni == 0) continue;
        if (k.sigma()[i]) weights.push_back(static_cast<double>(ni) / m);
        else {
          weights.push_back(0.5 * ni / m);
          weights.push_back(0.5 * ni / m);
        }
      }
      const double reference = oracles::projected_subgradient_min(weights, y, r2);
      CHECK(sol.value == doctest::Approx(reference).epsilon(1e-4));
      CHECK(sol.value <= reference + 1e-6);
      CHECK(kbound::quadratic_form(k, sol.beta) <= r2 + 1e-6);
    }
  }
}

TEST_CASE("linear loss closed-form solution") {
  SUBCASE("zero targets give zero coefficients") {
    const auto alpha = kbound::linear_loss_solution(std::vector<double>(8, 0.0), 0.5);
    for (double a : alpha) CHECK(a == 0.0);
  }
  SUBCASE("stationarity: v + lambda alpha vanishes") {
    const int m = 16;
    std::vector<double> y(m, 0.65);
    SUBCASE("power-of-two lambda is bit-exact") {
      const double lambda = 0.25;
      const auto alpha = kbound::linear_loss_solution(y, lambda);
      for (int t = 0; t < m; ++t) CHECK(y[t] / m + lambda * alpha[t] == 0.0);
    }
    SUBCASE("generic lambda is exact to rounding") {
      const double lambda = 0.3;
      const auto alpha = kbound::linear_loss_solution(y, lambda);
      for (int t = 0; t < m; ++t) CHECK(std::abs(y[t] / m + lambda * alpha[t]) <= 1e-17);
    }
  }
}

TEST_CASE("gram reduction and expansion") {
  SUBCASE("rank-1 constant feature map gives the all-ones representative") {
    const int m = 12, d = 3;
    kbound::SymMatrix ones(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) ones(i, j) = 1.0;
    const auto g = kbound::reduce_gram(ones, m, d);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) CHECK(g(i, j) == 1.0);
  }
  SUBCASE("round-trip through expansion") {
    kbound::Rng rng(44);
    const int d = 3, m = 24;
    kbound::SymMatrix g(2 * d);
    for (int i = 0; i < 2 * d; ++i)
      for (int j = i; j < 2 * d; ++j) g.set_symmetric(i, j, rng.uniform_real(-1.0, 1.0));
    const BlockConstantMatrix kp{m, d, g};
    const auto back = kbound::reduce_gram(kbound::expand_gram(kp), m, d);
    for (int i = 0; i < 2 * d; ++i)
      for (int j = 0; j < 2 * d; ++j) CHECK(back(i, j) == g(i, j));
  }
  SUBCASE("non-block-constant input is rejected") {
    kbound::SymMatrix bad(8);
    bad(0, 1) = 0.5;  // differs from bad(1,0) = 0 inside one block pair
    CHECK_THROWS_AS(kbound::reduce_gram(bad, 8, 2), std::invalid_argument);
  }
}

TEST_CASE("ridge closed form") {
  SUBCASE("identity representative: beta = z/(1 + d lambda)") {
    const int d = 2, m = 16;
    const BlockConstantMatrix kp{m, d, kbound::SymMatrix::identity(2 * d)};
    const std::vector<double> z{1.0, -1.0, 1.0, 1.0};
    const double lambda = 0.5;
    const auto alpha = kbound::ridge_closed_form(kp, z, lambda);
    const auto beta = kbound::reduce_partition_coefficients(alpha, m, d);
    for (int j = 0; j < 2 * d; ++j)
      CHECK(beta[j] == doctest::Approx(z[j] / (1.0 + d * lambda)).epsilon(1e-12));
  }
  SUBCASE("large lambda crushes the solution") {
    const int d = 2, m = 8;
    const BlockConstantMatrix kp{m, d, kbound::SymMatrix::identity(2 * d)};
    const std::vector<double> z{1.0, -1.0, 1.0, -1.0};
    const double lambda = 1e6;
    const auto beta =
        kbound::reduce_partition_coefficients(kbound::ridge_closed_form(kp, z, lambda), m, d);
    for (double b : beta) CHECK(std::abs(b) <= 1.0 / (d * lambda) + 1e-12);
  }
  SUBCASE("dense solve agrees with the reduced solve") {
    kbound::Rng rng(314);
    const int d = 4, m = 48, n = 2 * d;
    kbound::SymMatrix g(n);
    std::vector<double> a(n * n);
    for (double& v : a) v = rng.uniform_real(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k2 = 0; k2 < n; ++k2) s += a[i * n + k2] * a[j * n + k2];
        g(i, j) = s / n;
      }
    const BlockConstantMatrix kp{m, d, g};
    std::vector<double> z(n);
    for (double& v : z) v = rng.uniform_real(-1.0, 1.0);
    std::vector<double> y(m);
    for (int t = 0; t < m; ++t) y[t] = z[t / (m / n)];
    const auto dense = kbound::ridge_closed_form_dense(kbound::expand_gram(kp), y, 0.7);
    const auto reduced = kbound::ridge_closed_form(kp, z, 0.7);
    for (int t = 0; t < m; ++t) CHECK(dense[t] == doctest::Approx(reduced[t]).epsilon(1e-9));
  }
}

TEST_CASE("low-rank objective matches a dense oracle") {
  kbound::Rng rng(217);
  const int d = 2, m = 16;
  const kbound::LowRankInstance inst(d, m, {1, -1, -1, 1});
  const double lambda = 0.4;
  const auto dense_k = inst.materialize();
  const auto y = inst.targets();

  std::vector<double> alpha(m);
  for (double& v : alpha) v = rng.uniform_real(-1.0, 1.0);
  const double reduced_path = kbound::lowrank_objective(inst, alpha, lambda);
  const double dense_path = oracles::dense_objective(
      dense_k, alpha, y, lambda, [](double u, double t) { return (u - t) * (u - t); });
  CHECK(reduced_path == doctest::Approx(dense_path).epsilon(1e-12));

  // the optimum equals the objective of the dense ridge solution on the true kernel
  const auto ridge = kbound::ridge_closed_form_dense(dense_k, y, lambda);
  const double ridge_objective = oracles::dense_objective(
      dense_k, ridge, y, lambda, [](double u, double t) { return (u - t) * (u - t); });
  CHECK(kbound::lowrank_optimal_value(inst, lambda) ==
        doctest::Approx(ridge_objective).epsilon(1e-12));

  CHECK(kbound::lowrank_delta_gap(inst, alpha, lambda) ==
        doctest::Approx(reduced_path - ridge_objective).epsilon(1e-10));
}
