#include "kbound/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kbound {

Objective Objective::soft(Loss loss, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("soft regime requires lambda > 0");
  Objective obj;
  obj.loss = loss;
  obj.regime = Regime::soft;
  obj.lambda = lambda;
  return obj;
}

Objective Objective::norm_constrained(double r2) {
  if (r2 < 0.0) throw std::invalid_argument("norm bound must be non-negative");
  Objective obj;
  obj.loss = Loss::absolute;
  obj.regime = Regime::norm_constrained;
  obj.norm_bound = r2;
  return obj;
}

BlockCoefficients reduce_coefficients(const BlockKernel& kernel, std::span<const double> alpha) {
  if (alpha.size() != static_cast<std::size_t>(kernel.m()))
    throw std::invalid_argument("reduce_coefficients: length mismatch");
  BlockCoefficients out;
  out.beta.assign(kernel.d(), {0.0, 0.0});
  const auto& assignment = kernel.assignment();
  for (int t = 0; t < kernel.m(); ++t)
    out.beta[assignment[t].block][assignment[t].sub] += alpha[t];
  return out;
}

double quadratic_form(const BlockKernel& kernel, const BlockCoefficients& beta) {
  double q = 0.0;
  for (int i = 0; i < kernel.d(); ++i) {
    const double b1 = beta.beta[i][0];
    const double b2 = beta.beta[i][1];
    q += b1 * b1 + b2 * b2;
    if (kernel.sigma()[i]) q += 2.0 * b1 * b2;
  }
  return q;
}

double objective_value(const BlockKernel& kernel, const Objective& obj,
                       const BlockCoefficients& beta, double y) {
  const double m = static_cast<double>(kernel.m());
  double loss = 0.0;
  for (int i = 0; i < kernel.d(); ++i) {
    const int ni = kernel.block_sizes()[i];
    if (ni == 0) continue;
    const double b1 = beta.beta[i][0];
    const double b2 = beta.beta[i][1];
    const double s = kernel.sigma()[i] ? 1.0 : 0.0;
    loss += (ni / (2.0 * m)) *
            (eval_loss(obj.loss, b1 + s * b2, y) + eval_loss(obj.loss, s * b1 + b2, y));
  }
  if (obj.regime == Objective::Regime::soft)
    loss += 0.5 * obj.lambda * quadratic_form(kernel, beta);
  return loss;
}

double objective_value(const BlockKernel& kernel, const Objective& obj,
                       std::span<const double> alpha, double y) {
  return objective_value(kernel, obj, reduce_coefficients(kernel, alpha), y);
}

double objective_value_dense(const BlockKernel& kernel, const Objective& obj,
                             std::span<const double> alpha, std::span<const double> y) {
  const int m = kernel.m();
  if (m > 2048) throw std::runtime_error("objective_value_dense is gated to m <= 2048");
  if (alpha.size() != static_cast<std::size_t>(m) || y.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("objective_value_dense: length mismatch");
  double loss = 0.0;
  double quad = 0.0;
  for (int t = 0; t < m; ++t) {
    double pred = 0.0;
    for (int s = 0; s < m; ++s)
      if (kernel.entry(s, t)) pred += alpha[s];
    loss += eval_loss(obj.loss, pred, y[t]);
    quad += alpha[t] * pred;
  }
  loss /= static_cast<double>(m);
  if (obj.regime == Objective::Regime::soft) loss += 0.5 * obj.lambda * quad;
  return loss;
}

GroupedSolution solve_grouped_soft(std::span<const int> counts, int total, Loss loss,
                                   double lambda, double y) {
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_grouped_soft: lambda must be > 0");
  GroupedSolution out;
  out.gamma.resize(counts.size(), 0.0);
  out.multiplier = 0.0;
  double value = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    const double a = lambda * static_cast<double>(total) / (2.0 * counts[c]);
    const double g = u_star(loss, y, a);
    out.gamma[c] = g;
    value += (static_cast<double>(counts[c]) / total) * eval_loss(loss, g, y) +
             0.5 * lambda * g * g;
  }
  out.value = value;
  return out;
}

GroupedSolution solve_grouped_constrained_abs(std::span<const int> counts, int total, double r2,
                                              double y) {
  GroupedSolution out;
  out.gamma.resize(counts.size(), 0.0);

  auto eval_at = [&](double mu, std::vector<double>& gamma) {
    double q = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) { gamma[c] = 0.0; continue; }
      const double a = mu * static_cast<double>(total) / (2.0 * counts[c]);
      gamma[c] = u_star(Loss::absolute, y, a);
      q += gamma[c] * gamma[c];
    }
    return q;
  };
  auto loss_at = [&](const std::vector<double>& gamma) {
    double v = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c)
      if (counts[c] != 0)
        v += (static_cast<double>(counts[c]) / total) * std::abs(gamma[c] - y);
    return v;
  };

  if (r2 <= 0.0) {
    // feasible set is {0}
    out.value = std::abs(y);
    out.multiplier = std::numeric_limits<double>::infinity();
    return out;
  }

  double mu_lo = 1e-12;
  double mu_hi = 1e6;
  if (eval_at(mu_lo, out.gamma) <= r2) {
    // unconstrained optimum (every gamma at y) is feasible
    out.value = loss_at(out.gamma);
    out.multiplier = 0.0;
    return out;
  }
  for (int it = 0; it < 200; ++it) {
    const double mu = 0.5 * (mu_lo + mu_hi);
    const double q = eval_at(mu, out.gamma);
    if (std::abs(q - r2) <= 1e-9) { mu_lo = mu_hi = mu; break; }
    if (q > r2) mu_lo = mu; else mu_hi = mu;
  }
  const double mu = 0.5 * (mu_lo + mu_hi);
  eval_at(mu, out.gamma);
  out.value = loss_at(out.gamma);
  out.multiplier = mu;
  return out;
}

namespace {

// Flattens the sigma structure into the grouped model: a sigma = 0 block is
// two independent sub-blocks of size N_i/2, a sigma = 1 block acts as one
// group of size N_i through the sum b1 + b2.
struct GroupedView {
  std::vector<int> counts;
  std::vector<int> block_of;  // owning block per group
  std::vector<int> sub_of;    // 0/1 for split blocks, -1 for merged ones
};

GroupedView grouped_view(const BlockKernel& kernel) {
  GroupedView v;
  for (int i = 0; i < kernel.d(); ++i) {
    const int ni = kernel.block_sizes()[i];
    if (ni == 0) continue;
    if (kernel.sigma()[i]) {
      v.counts.push_back(ni);
      v.block_of.push_back(i);
      v.sub_of.push_back(-1);
    } else {
      for (int sub = 0; sub < 2; ++sub) {
        v.counts.push_back(ni / 2);
        v.block_of.push_back(i);
        v.sub_of.push_back(sub);
      }
    }
  }
  return v;
}

BlockCoefficients gamma_to_beta(const BlockKernel& kernel, const GroupedView& view,
                                const std::vector<double>& gamma) {
  BlockCoefficients beta;
  beta.beta.assign(kernel.d(), {0.0, 0.0});
  for (std::size_t c = 0; c < gamma.size(); ++c) {
    const int i = view.block_of[c];
    if (view.sub_of[c] < 0) beta.beta[i] = {gamma[c], 0.0};
    else beta.beta[i][view.sub_of[c]] = gamma[c];
  }
  return beta;
}

}  // namespace

BlockSolution solve_block_erm(const BlockKernel& kernel, Loss loss, double lambda, double y) {
  const GroupedView view = grouped_view(kernel);
  GroupedSolution sol = solve_grouped_soft(view.counts, kernel.m(), loss, lambda, y);
  return {gamma_to_beta(kernel, view, sol.gamma), sol.value};
}

ConstrainedSolution solve_norm_constrained_abs(const BlockKernel& kernel, double r2, double y) {
  const GroupedView view = grouped_view(kernel);
  GroupedSolution sol = solve_grouped_constrained_abs(view.counts, kernel.m(), r2, y);
  return {gamma_to_beta(kernel, view, sol.gamma), sol.value, sol.multiplier};
}

double optimal_objective_value(const BlockKernel& kernel, const Objective& obj, double y) {
  if (obj.regime == Objective::Regime::soft)
    return solve_block_erm(kernel, obj.loss, obj.lambda, y).value;
  return solve_norm_constrained_abs(kernel, obj.norm_bound, y).value;
}

double delta_gap(const BlockKernel& kernel, const Objective& obj, std::span<const double> alpha,
                 double y, bool* clamped) {
  const double achieved = objective_value(kernel, obj, alpha, y);
  const double optimal = optimal_objective_value(kernel, obj, y);
  double gap = achieved - optimal;
  if (clamped) *clamped = false;
  if (gap < 0.0 && gap >= -1e-12) {
    gap = 0.0;
    if (clamped) *clamped = true;
  }
  return gap;
}

Coefficients spread_block_coefficients(const BlockKernel& kernel, const BlockCoefficients& beta) {
  if (beta.beta.size() != static_cast<std::size_t>(kernel.d()))
    throw std::invalid_argument("spread_block_coefficients: beta length != d");
  Coefficients alpha(kernel.m(), 0.0);
  const auto& assignment = kernel.assignment();
  for (int t = 0; t < kernel.m(); ++t) {
    const auto& pa = assignment[t];
    const double mass = beta.beta[pa.block][pa.sub];
    if (mass == 0.0) continue;
    alpha[t] = mass / kernel.sub_block_size(pa.block);
  }
  // a nonzero beta on an empty sub-block cannot be realized by any alpha
  for (int i = 0; i < kernel.d(); ++i)
    if (kernel.block_sizes()[i] == 0 && (beta.beta[i][0] != 0.0 || beta.beta[i][1] != 0.0))
      throw std::invalid_argument("spread_block_coefficients: mass in empty block");
  return alpha;
}

Coefficients thm1_certificate(const BlockKernel& kernel) {
  const double v = 1.0 / std::sqrt(static_cast<double>(kernel.d()));
  BlockCoefficients beta;
  beta.beta.assign(kernel.d(), {0.0, 0.0});
  for (int i = 0; i < kernel.d(); ++i) {
    if (kernel.block_sizes()[i] == 0) continue;
    beta.beta[i] = kernel.sigma()[i] ? std::array<double, 2>{v, 0.0}
                                     : std::array<double, 2>{v, v};
  }
  return spread_block_coefficients(kernel, beta);
}

Coefficients linear_loss_solution(std::span<const double> y, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("linear_loss_solution: lambda must be > 0");
  Coefficients alpha(y.size());
  const double m = static_cast<double>(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) alpha[t] = -y[t] / (lambda * m);
  return alpha;
}

// ----- block-constant matrices -----

static int partition_block_size(int m, int d) {
  const int n = 2 * d;
  if (d < 1 || m < n || m % n != 0)
    throw std::invalid_argument("block-constant matrix requires 2d | m");
  return m / n;
}

SymMatrix reduce_gram(const SymMatrix& dense, int m, int d, double tol) {
  if (dense.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("reduce_gram: dense size != m");
  const int bs = partition_block_size(m, d);
  const int n = 2 * d;
  SymMatrix g(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int jp = 0; jp < n; ++jp) {
      const double rep = dense(j * bs, jp * bs);
      for (int t = j * bs; t < (j + 1) * bs; ++t)
        for (int tp = jp * bs; tp < (jp + 1) * bs; ++tp)
          if (std::abs(dense(t, tp) - rep) > tol)
            throw std::invalid_argument("reduce_gram: matrix is not block-constant");
      g(j, jp) = rep;
    }
  return g;
}

SymMatrix expand_gram(const BlockConstantMatrix& kp) {
  const int bs = partition_block_size(kp.m, kp.d);
  SymMatrix dense(static_cast<std::size_t>(kp.m));
  for (int t = 0; t < kp.m; ++t)
    for (int tp = 0; tp < kp.m; ++tp) dense(t, tp) = kp.g(t / bs, tp / bs);
  return dense;
}

std::vector<double> reduce_partition_coefficients(std::span<const double> alpha, int m, int d) {
  if (alpha.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("reduce_partition_coefficients: length mismatch");
  const int bs = partition_block_size(m, d);
  std::vector<double> beta(2 * d, 0.0);
  for (int t = 0; t < m; ++t) beta[t / bs] += alpha[t];
  return beta;
}

Coefficients ridge_closed_form(const BlockConstantMatrix& kp, std::span<const double> z,
                               double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_closed_form: lambda must be > 0");
  const int n = 2 * kp.d;
  if (z.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("ridge_closed_form: z must have length 2d");
  const int bs = partition_block_size(kp.m, kp.d);
  SymMatrix system = kp.g;
  for (int j = 0; j < n; ++j) system(j, j) += static_cast<double>(kp.d) * lambda;
  const std::vector<double> gamma = cholesky_solve(system, z);
  Coefficients alpha(kp.m);
  const double scale = static_cast<double>(n) / kp.m;
  for (int t = 0; t < kp.m; ++t) alpha[t] = scale * gamma[t / bs];
  return alpha;
}

Coefficients ridge_closed_form_dense(const SymMatrix& k, std::span<const double> y,
                                     double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_closed_form_dense: lambda must be > 0");
  const std::size_t m = k.size();
  if (m > 2048) throw std::runtime_error("ridge_closed_form_dense is gated to m <= 2048");
  SymMatrix system = k;
  for (std::size_t t = 0; t < m; ++t) system(t, t) += 0.5 * lambda * static_cast<double>(m);
  return cholesky_solve(system, y);
}

// ----- low-rank instance objective -----

double lowrank_objective(const LowRankInstance& instance, std::span<const double> alpha,
                         double lambda) {
  const int n = 2 * instance.d();
  const std::vector<double> beta =
      reduce_partition_coefficients(alpha, instance.m(), instance.d());
  const double dl = static_cast<double>(instance.d()) * lambda;
  double quad = 0.0, cross = 0.0;
  for (int j = 0; j < n; ++j) {
    quad += beta[j] * beta[j];
    cross += static_cast<double>(instance.z()[j]) * beta[j];
  }
  const double znorm2 = static_cast<double>(n);
  return ((1.0 + dl) * quad - 2.0 * cross + znorm2) / static_cast<double>(n);
}

double lowrank_optimal_value(const LowRankInstance& instance, double lambda) {
  const double dl = static_cast<double>(instance.d()) * lambda;
  return dl / (1.0 + dl);
}

double lowrank_delta_gap(const LowRankInstance& instance, std::span<const double> alpha,
                         double lambda) {
  const int n = 2 * instance.d();
  const std::vector<double> beta =
      reduce_partition_coefficients(alpha, instance.m(), instance.d());
  const double dl = static_cast<double>(instance.d()) * lambda;
  double dist2 = 0.0;
  for (int j = 0; j < n; ++j) {
    const double diff = beta[j] - static_cast<double>(instance.z()[j]) / (1.0 + dl);
    dist2 += diff * diff;
  }
  return (1.0 + dl) / static_cast<double>(n) * dist2;
}

}  // namespace kbound
