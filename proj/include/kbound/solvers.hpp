#pragma once

#include <array>
#include <span>
#include <vector>

#include "kbound/instance.hpp"
#include "kbound/linalg.hpp"
#include "kbound/losses.hpp"

namespace kbound {

// Coefficient vector alpha of length m; the predictor is w = sum_t alpha_t psi(x_t).
using Coefficients = std::vector<double>;

// The per-block sub-sums beta_{i,1} = sum_{t in T_{i,1}} alpha_t and
// beta_{i,2}; for block kernels the objective depends on alpha only through
// these 2d numbers.
struct BlockCoefficients {
  std::vector<std::array<double, 2>> beta;  // beta[i] = {beta_{i,1}, beta_{i,2}}
};

// Exactly one regime is active: soft regularization (lambda > 0, no
// constraint) or a norm constraint alpha^T K alpha <= norm_bound with
// lambda = 0 (absolute loss only).
struct Objective {
  enum class Regime { soft, norm_constrained };
  Loss loss;
  Regime regime;
  double lambda = 0.0;      // soft regime, > 0
  double norm_bound = 0.0;  // R^2, norm regime

  static Objective soft(Loss loss, double lambda);
  static Objective norm_constrained(double r2);
};

BlockCoefficients reduce_coefficients(const BlockKernel& kernel, std::span<const double> alpha);

// alpha^T K alpha = sum_i (beta1^2 + beta2^2 + 2 sigma_i beta1 beta2).
double quadratic_form(const BlockKernel& kernel, const BlockCoefficients& beta);

// Regularized empirical objective for a constant target y, via the block
// identity: the average loss equals
//   sum_i (N_i / 2m) [ l(b1 + sigma_i b2, y) + l(sigma_i b1 + b2, y) ].
double objective_value(const BlockKernel& kernel, const Objective& obj,
                       const BlockCoefficients& beta, double y);
double objective_value(const BlockKernel& kernel, const Objective& obj,
                       std::span<const double> alpha, double y);

// O(m^2) verification path evaluating predictions entry by entry; accepts
// per-point targets. Gated to m <= 2048.
double objective_value_dense(const BlockKernel& kernel, const Objective& obj,
                             std::span<const double> alpha, std::span<const double> y);

// ----- grouped all-ones model -----
// Both the per-block solves and the learners' sub-problems reduce to groups
// of mutually-equivalent points: group c of weight counts[c] predicts a
// single number gamma_c, the average loss is sum_c (counts[c]/total)
// l(gamma_c, y) and the quadratic form is sum_c gamma_c^2.
struct GroupedSolution {
  std::vector<double> gamma;
  double value;
  double multiplier;  // Lagrange multiplier (constrained solve only)
};

// Exact soft-regularized minimum: gamma_c = u_star(loss, y, lambda*total/(2*counts[c])).
GroupedSolution solve_grouped_soft(std::span<const int> counts, int total, Loss loss,
                                   double lambda, double y);

// Exact minimum of sum_c (counts[c]/total)|gamma_c - y| subject to
// sum gamma_c^2 <= r2, via bisection on the Lagrange multiplier
// (bracket [1e-12, 1e6], 200 iterations, constraint tolerance 1e-9).
GroupedSolution solve_grouped_constrained_abs(std::span<const int> counts, int total, double r2,
                                              double y);

// ----- block-kernel solves -----
struct BlockSolution {
  BlockCoefficients beta;
  double value;
};

// Exact global minimum of the soft-regularized objective at constant target
// y, solved independently per block by scalar closed forms: sigma_i = 0
// gives two separable problems with beta* = u_star(loss, y, lambda*m/N_i);
// sigma_i = 1 reduces to one problem in s = b1 + b2 with
// s* = u_star(loss, y, lambda*m/(2 N_i)), reported as the split (s*, 0).
// Downstream code must not depend on that split: for sigma_i = 1 the
// objective is a function of b1 + b2 only.
BlockSolution solve_block_erm(const BlockKernel& kernel, Loss loss, double lambda, double y);

struct ConstrainedSolution {
  BlockCoefficients beta;
  double value;
  double multiplier;
};

// Exact minimum of the norm-constrained absolute-loss problem
// min { (1/m) sum_t |alpha^T K e_t - y| : alpha^T K alpha <= r2 }.
ConstrainedSolution solve_norm_constrained_abs(const BlockKernel& kernel, double r2, double y);

// Optimal value of the configured objective (soft or norm-constrained).
double optimal_objective_value(const BlockKernel& kernel, const Objective& obj, double y);

// Achieved objective minus the exact optimum. Negative values above -1e-12
// are clamped to 0 (float noise; *clamped reports it); anything more
// negative is returned as-is for the caller to flag as a solver bug.
double delta_gap(const BlockKernel& kernel, const Objective& obj, std::span<const double> alpha,
                 double y, bool* clamped = nullptr);

// Distributes block sub-sums uniformly over the members of each sub-block;
// throws if mass is requested in an empty sub-block.
Coefficients spread_block_coefficients(const BlockKernel& kernel, const BlockCoefficients& beta);

// The feasible zero-loss certificate for the norm-constrained problem at
// y = 1/sqrt(d): beta_{i,1} = beta_{i,2} = 1/sqrt(d) if sigma_i = 0,
// (1/sqrt(d), 0) if sigma_i = 1 (empty blocks stay 0), spread uniformly
// within sub-blocks. Satisfies alpha^T K alpha <= 2.
Coefficients thm1_certificate(const BlockKernel& kernel);

// Optimal coefficients for the linear loss under soft regularization:
// alpha = -v / lambda with v_t = y_t / m. Needs zero kernel queries.
Coefficients linear_loss_solution(std::span<const double> y, double lambda);

// ----- block-constant matrices and ridge regression (low-rank lane) -----

// An m x m matrix constant on the blocks of the equal partition
// i(t) = floor(t / (m/2d)), represented by its 2d x 2d matrix G.
struct BlockConstantMatrix {
  int m;
  int d;
  SymMatrix g;  // 2d x 2d
};

// Extracts G from a dense block-constant matrix, validating constancy on
// every block pair (throws std::invalid_argument beyond tol).
SymMatrix reduce_gram(const SymMatrix& dense, int m, int d, double tol = 1e-12);

// Dense expansion oracle for round-trip checks.
SymMatrix expand_gram(const BlockConstantMatrix& kp);

// beta_j = sum_{t : i(t) = j} alpha_t over the equal partition.
std::vector<double> reduce_partition_coefficients(std::span<const double> alpha, int m, int d);

// Ridge solution alpha = (K' + (lambda m / 2) I)^{-1} y for a block-constant
// K' and block-constant targets y_t = z[i(t)], via the reduced 2d x 2d
// system: the block sums of alpha equal (G + d lambda I)^{-1} z and alpha is
// constant within blocks.
Coefficients ridge_closed_form(const BlockConstantMatrix& kp, std::span<const double> z,
                               double lambda);

// Dense-path ridge for verification, any symmetric PSD K (m <= 2048).
Coefficients ridge_closed_form_dense(const SymMatrix& k, std::span<const double> y, double lambda);

// ----- low-rank instance objective (squared loss, soft regularization) -----

// Objective of alpha on the true kernel of the instance, evaluated through
// the block sums: (1/2d) ((1 + d lambda) |beta|^2 - 2 z.beta + |z|^2).
double lowrank_objective(const LowRankInstance& instance, std::span<const double> alpha,
                         double lambda);

double lowrank_optimal_value(const LowRankInstance& instance, double lambda);

// Objective minus optimum; equals ((1+d lambda)/2d) |beta - z/(1+d lambda)|^2.
double lowrank_delta_gap(const LowRankInstance& instance, std::span<const double> alpha,
                         double lambda);

}  // namespace kbound
