#include "kbound/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kbound/harness.hpp"
#include "kbound/oracle.hpp"
#include "kbound/rng.hpp"
#include "kbound/solvers.hpp"

namespace kbound {

namespace {

std::string describe(double stat, double threshold) {
  std::ostringstream out;
  out << "stat=" << format_double(stat) << " threshold=" << format_double(threshold);
  return out.str();
}

Loss random_loss(Rng& rng) {
  switch (rng.uniform_below(4)) {
    case 0: return Loss::absolute;
    case 1: return Loss::hinge;
    case 2: return Loss::squared;
    default: return Loss::linear;
  }
}

}  // namespace

std::vector<CheckResult> verify_identities(std::uint64_t seed, int lemma2_cases, int lemma2_max_m,
                                           int lemma7_cases, int lemma7_max_m) {
  std::vector<CheckResult> out;

  // Block-path objective vs dense path, random (alpha, K) at constant target.
  {
    Rng rng(seed);
    double max_dev = 0.0;
    for (int c = 0; c < lemma2_cases; ++c) {
      const int m = 2 * static_cast<int>(rng.uniform_int(4, lemma2_max_m / 2));
      const int d = static_cast<int>(rng.uniform_int(1, std::max(1, m / 4)));
      const BlockKernel kernel = sample_hard_kernel(d, m, rng.next_u64());
      const Loss loss = random_loss(rng);
      const double lambda = rng.uniform_real(0.01, 1.0);
      const double y = loss == Loss::hinge ? (rng.bit() ? 1.0 : -1.0) : rng.uniform_real(-1.0, 1.0);
      std::vector<double> alpha(m);
      for (double& a : alpha) a = rng.uniform_real(-1.0, 1.0);
      const Objective obj = Objective::soft(loss, lambda);
      const double block_path = objective_value(kernel, obj, alpha, y);
      const std::vector<double> targets(m, y);
      const double dense_path = objective_value_dense(kernel, obj, alpha, targets);
      max_dev = std::max(max_dev, std::abs(block_path - dense_path));
    }
    out.push_back({"lemma2_block_vs_dense", max_dev <= 1e-10, max_dev, 1e-10,
                   describe(max_dev, 1e-10)});
  }

  // Reduced ridge vs dense ridge, and the objective-rewrite chain, on random
  // block-constant matrices.
  {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double max_dev = 0.0;
    for (int c = 0; c < lemma7_cases; ++c) {
      const int d = static_cast<int>(rng.uniform_int(1, 8));
      const int max_bs = std::max(1, lemma7_max_m / (2 * d));
      const int bs = static_cast<int>(rng.uniform_int(1, max_bs));
      const int m = 2 * d * bs;
      const int n = 2 * d;
      const double lambda = rng.uniform_real(0.05, 2.0);

      // random PSD G = A A^T with modest scale
      SymMatrix g(static_cast<std::size_t>(n));
      {
        std::vector<double> a(static_cast<std::size_t>(n) * n);
        for (double& v : a) v = rng.uniform_real(-1.0, 1.0);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += a[i * n + k] * a[j * n + k];
            g(i, j) = s / n;
          }
      }
      const BlockConstantMatrix kp{m, d, g};
      const SymMatrix dense = expand_gram(kp);

      std::vector<double> z(n);
      for (double& v : z) v = rng.uniform_real(-1.0, 1.0);
      std::vector<double> y(m);
      for (int t = 0; t < m; ++t) y[t] = z[t / bs];

      // coefficient identity: dense ridge reduced to block sums equals the
      // 2d x 2d solve
      const Coefficients dense_alpha = ridge_closed_form_dense(dense, y, lambda);
      const std::vector<double> beta_from_dense = reduce_partition_coefficients(dense_alpha, m, d);
      SymMatrix system = g;
      for (int j = 0; j < n; ++j) system(j, j) += d * lambda;
      const std::vector<double> beta_reduced = cholesky_solve(system, z);
      for (int j = 0; j < n; ++j)
        max_dev = std::max(max_dev, std::abs(beta_from_dense[j] - beta_reduced[j]));

      // the reduced-path ridge must agree with the dense one entrywise
      const Coefficients reduced_alpha = ridge_closed_form(kp, z, lambda);
      for (int t = 0; t < m; ++t)
        max_dev = std::max(max_dev, std::abs(reduced_alpha[t] - dense_alpha[t]));

      // objective-rewrite chain on a random alpha
      std::vector<double> alpha(m);
      for (double& v : alpha) v = rng.uniform_real(-1.0, 1.0);
      std::vector<double> kalpha(m, 0.0);
      for (int t = 0; t < m; ++t) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += dense(t, r) * alpha[r];
        kalpha[t] = s;
      }
      double direct = 0.0, quad = 0.0, cross = 0.0, ynorm2 = 0.0, kk = 0.0;
      for (int t = 0; t < m; ++t) {
        const double residual = kalpha[t] - y[t];
        direct += residual * residual;
        quad += alpha[t] * kalpha[t];
        cross += y[t] * kalpha[t];
        ynorm2 += y[t] * y[t];
        kk += kalpha[t] * kalpha[t];
      }
      direct = direct / m + 0.5 * lambda * quad;
      const double matrix_form = (kk + 0.5 * lambda * m * quad - 2.0 * cross + ynorm2) / m;

      const std::vector<double> beta = reduce_partition_coefficients(alpha, m, d);
      std::vector<double> gbeta(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gbeta[i] += g(i, j) * beta[j];
      double znorm2 = 0.0;
      for (int i = 0; i < n; ++i) znorm2 += z[i] * z[i];
      // (1/2d)(beta^T (G + d lambda I) G beta - 2 z^T G beta + |z|^2)
      double quad_term = 0.0, cross_term = 0.0;
      for (int i = 0; i < n; ++i) {
        double gg = 0.0;
        for (int j = 0; j < n; ++j) gg += g(i, j) * gbeta[j];
        quad_term += beta[i] * (gg + d * lambda * gbeta[i]);
        cross_term += z[i] * gbeta[i];
      }
      const double reduced_form = (quad_term - 2.0 * cross_term + znorm2) / n;

      max_dev = std::max(max_dev, std::abs(direct - matrix_form));
      max_dev = std::max(max_dev, std::abs(direct - reduced_form));
    }
    out.push_back({"lemma7_reduced_vs_dense", max_dev <= 1e-9, max_dev, 1e-9,
                   describe(max_dev, 1e-9)});
  }

  return out;
}

CoverageEstimate estimate_block_coverage(const LearnerSpec& learner, int d, int m,
                                         std::uint64_t budget, int trials, std::uint64_t seed) {
  std::vector<double> missed(trials);
  parallel_for(trials, [&](int t) {
    const std::uint64_t trial_seed = derive_seed(seed, 0, t);
    const BlockKernel kernel = sample_hard_kernel(d, m, derive_seed(trial_seed, 0, 0));
    BudgetedOracle oracle(kernel, budget);
    const double y = 1.0 / std::sqrt(static_cast<double>(d));
    const Objective obj = Objective::norm_constrained(2.0);
    switch (learner.kind) {
      case LearnerSpec::Kind::subsample:
        subsample_learn(oracle, y, obj, derive_seed(trial_seed, 1, 0));
        break;
      case LearnerSpec::Kind::uniform_random_queries:
        uniform_random_learn(oracle, y, obj, derive_seed(trial_seed, 1, 0));
        break;
      case LearnerSpec::Kind::nystrom:
        nystrom_query_pattern(oracle, derive_seed(trial_seed, 1, 0));
        break;
      case LearnerSpec::Kind::zero:
      case LearnerSpec::Kind::linear_solution:
        break;  // no queries
      case LearnerSpec::Kind::full_info:
        throw std::invalid_argument("coverage is a budgeted-learner statistic");
    }
    missed[t] = static_cast<double>(oracle.missed_block_count());
  });

  CoverageEstimate est;
  est.trials = trials;
  est.estimate = pairwise_sum(missed) / trials;
  if (trials > 1) {
    std::vector<double> sq(trials);
    for (int t = 0; t < trials; ++t) sq[t] = (missed[t] - est.estimate) * (missed[t] - est.estimate);
    est.stderr_of_mean = std::sqrt(pairwise_sum(sq) / (trials - 1) / trials);
  }
  return est;
}

CheckResult verify_block_coverage(const LearnerSpec& learner, int d, int m, std::uint64_t budget,
                                  int trials, std::uint64_t seed) {
  if (m < 2 * d) throw std::invalid_argument("verify_block_coverage: requires m >= 2d");
  if (!(static_cast<double>(budget) < 0.06 * d * d))
    throw std::invalid_argument("verify_block_coverage: requires B < (3/50) d^2");
  const CoverageEstimate est = estimate_block_coverage(learner, d, m, budget, trials, seed);
  const double threshold = static_cast<double>(d) / 2.0;
  const double margin = est.estimate - 3.0 * est.stderr_of_mean;
  CheckResult out;
  out.name = std::string("lemma5_coverage_") + learner.name();
  out.pass = margin > threshold;
  out.stat = est.estimate;
  out.threshold = threshold;
  std::ostringstream detail;
  detail << "estimate=" << format_double(est.estimate)
         << " stderr=" << format_double(est.stderr_of_mean) << " trials=" << est.trials
         << " need > " << format_double(threshold);
  out.detail = detail.str();
  return out;
}

MinimaxCheck verify_thm2_minimax(Loss loss, double lambda, int d, double p, double y, int grid) {
  if (!(lambda > 0.0) || d < 1 || !(p >= 0.5 && p <= 2.0))
    throw std::invalid_argument("verify_thm2_minimax: bad parameters");

  const double pd = p * static_cast<double>(d);
  const double c0 = 1.0 / (2.0 * pd);  // n / (2m)
  const double u1 = u_star(loss, y, p * lambda * d);
  const double u2 = u_star(loss, y, p * lambda * d / 2.0);

  const double min_f0 = 2.0 * (c0 * eval_loss(loss, u1, y) + 0.5 * lambda * u1 * u1);
  const double min_f1 = 2.0 * c0 * eval_loss(loss, u2, y) + 0.5 * lambda * u2 * u2;

  auto g0 = [&](double u, double v) {
    return c0 * (eval_loss(loss, u, y) + eval_loss(loss, v, y)) +
           0.5 * lambda * (u * u + v * v) - min_f0;
  };
  auto g1 = [&](double u, double v) {
    const double s = u + v;
    return 2.0 * c0 * eval_loss(loss, s, y) + 0.5 * lambda * s * s - min_f1;
  };

  const double lo = std::min({0.0, u1, u2, y}) - 1.0;
  const double hi = std::max({0.0, u1, u2, y}) + 1.0;

  MinimaxCheck check;
  check.rhs = lambda / 12.0 * (2.0 * u1 - u2) * (2.0 * u1 - u2);
  check.predicted_uv = (u1 + u2) / 3.0;
  {
    const double w = check.predicted_uv;
    check.quad_at_predicted =
        0.25 * lambda * ((w - u1) * (w - u1) + (w - u1) * (w - u1) + (2.0 * w - u2) * (2.0 * w - u2));
  }

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double u = lo + (hi - lo) * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double v = lo + (hi - lo) * j / (grid - 1);
      const double a = g0(u, v);
      const double b = g1(u, v);
      const double value = std::max(a, b);
      if (value < best) {
        best = value;
        check.argmin_u = u;
        check.argmin_v = v;
      }
      const double f0_bound = 0.5 * lambda * ((u - u1) * (u - u1) + (v - u1) * (v - u1));
      const double f1_bound = 0.5 * lambda * (u + v - u2) * (u + v - u2);
      check.max_f0_violation = std::max(check.max_f0_violation, f0_bound - a);
      check.max_f1_violation = std::max(check.max_f1_violation, f1_bound - b);
    }
  }
  check.grid_min = best;
  check.pass = best >= check.rhs - 1e-6 && check.max_f0_violation <= 1e-9 &&
               check.max_f1_violation <= 1e-9 &&
               std::abs(check.quad_at_predicted - check.rhs) <= 1e-12 * std::max(1.0, check.rhs);
  return check;
}

CheckResult verify_lowrank_bound(int d, int m, double lambda, int landmark_count,
                                 bool cover_all_blocks, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> landmarks;
  if (cover_all_blocks) {
    const int bs = m / (2 * d);
    for (int j = 0; j < 2 * d; ++j)
      landmarks.push_back(j * bs + static_cast<int>(rng.uniform_below(bs)));
  } else {
    std::vector<int> all(m);
    for (int i = 0; i < m; ++i) all[i] = i;
    rng.shuffle(std::span<int>(all));
    landmarks.assign(all.begin(), all.begin() + landmark_count);
  }

  // The surrogate depends on the landmarks, not on z, so build it once with a
  // provisional z, search the adversarial z against its reduced matrix, and
  // re-run the ridge solve on the real instance.
  const LowRankInstance probe(d, m, std::vector<int>(2 * d, 1));
  const NystromResult first = nystrom_learn(probe, landmarks, lambda);
  const ZSearchResult zres = search_adversarial_z(first.kprime.g, d, 100000, rng.next_u64());

  const LowRankInstance instance(d, m, zres.z);
  const NystromResult run = nystrom_learn(instance, landmarks, lambda);
  const double gap = lowrank_delta_gap(instance, run.alpha, lambda);

  const double ld = lambda * static_cast<double>(d);
  const double bound = 1.0 / (2.0 * ld * ld * (1.0 + ld));

  CheckResult out;
  std::ostringstream name;
  name << "thm4_lowrank_d" << d << "_lambda" << lambda << (cover_all_blocks ? "_cover" : "");
  out.name = name.str();
  out.stat = gap;
  if (cover_all_blocks) {
    out.threshold = 1e-9;
    out.pass = gap <= 1e-9;
  } else {
    out.threshold = bound - 1e-9;
    out.pass = zres.reached && gap >= bound - 1e-9;
  }
  std::ostringstream detail;
  detail << "gap=" << format_double(gap) << " bound=" << format_double(bound)
         << " covered_blocks=" << run.covered_blocks << " z_score=" << format_double(zres.score);
  out.detail = detail.str();
  return out;
}

std::vector<CheckResult> verify_all(std::uint64_t seed) {
  std::vector<CheckResult> results = verify_identities(seed);

  for (const char* learner : {"subsample", "uniform_random_queries", "nystrom"})
    results.push_back(
        verify_block_coverage(LearnerSpec::parse(learner), 40, 5120, 95, 1000, seed));

  {
    Rng rng(seed ^ 0x517cc1b727220a95ULL);
    for (Loss loss : {Loss::absolute, Loss::hinge, Loss::squared, Loss::linear}) {
      bool all_pass = true;
      double worst_margin = std::numeric_limits<double>::infinity();
      for (int c = 0; c < 20; ++c) {
        const double lambda = rng.uniform_real(0.01, 0.5);
        const int d = static_cast<int>(rng.uniform_int(1, 64));
        const double p = rng.uniform_real(0.5, 2.0);
        const double y = loss == Loss::hinge ? (rng.bit() ? 1.0 : -1.0)
                                             : rng.uniform_real(-1.0, 1.0);
        const MinimaxCheck check = verify_thm2_minimax(loss, lambda, d, p, y);
        all_pass = all_pass && check.pass;
        worst_margin = std::min(worst_margin, check.grid_min - check.rhs);
      }
      results.push_back({std::string("thm2_minimax_") + loss_name(loss), all_pass, worst_margin,
                         -1e-6, describe(worst_margin, -1e-6)});
    }
  }

  {
    std::uint64_t s = seed ^ 0xd1b54a32d192ed03ULL;
    for (int d : {4, 8, 16})
      for (double lambda : {0.1, 0.5, 1.0}) {
        results.push_back(verify_lowrank_bound(d, 8 * d, lambda, d, false, ++s));
        results.push_back(verify_lowrank_bound(d, 8 * d, lambda, 2 * d, true, ++s));
      }
  }

  return results;
}

}  // namespace kbound
