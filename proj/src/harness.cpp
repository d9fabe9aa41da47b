#include "kbound/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "kbound/oracle.hpp"
#include "kbound/rng.hpp"

namespace kbound {

using nlohmann::json;

int worker_count() {
  if (const char* env = std::getenv("KBOUND_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

static TrialRecord run_trial_impl(const ExperimentConfig& cfg, const ResolvedPoint& point,
                                  std::uint64_t trial_seed) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t instance_seed = derive_seed(trial_seed, 0, 0);
  const std::uint64_t learner_seed = derive_seed(trial_seed, 1, 0);

  const BlockKernel kernel = sample_hard_kernel(point.d, point.m, instance_seed);
  const Objective obj = cfg.objective(point.lambda);
  BudgetedOracle oracle(kernel, point.budget);

  Coefficients alpha;
  switch (cfg.learner.kind) {
    case LearnerSpec::Kind::subsample:
      alpha = subsample_learn(oracle, point.y, obj, learner_seed).alpha;
      break;
    case LearnerSpec::Kind::uniform_random_queries:
      alpha = uniform_random_learn(oracle, point.y, obj, learner_seed).alpha;
      break;
    case LearnerSpec::Kind::zero:
      alpha = zero_learn(point.m);
      break;
    case LearnerSpec::Kind::full_info:
      alpha = full_info_learn(kernel, obj, point.y);
      break;
    case LearnerSpec::Kind::linear_solution: {
      const std::vector<double> targets(point.m, point.y);
      alpha = linear_loss_solution(targets, point.lambda);
      break;
    }
    case LearnerSpec::Kind::nystrom:
      throw std::invalid_argument("nystrom learner is not a budgeted hard-instance learner");
  }

  TrialRecord rec;
  rec.seed = trial_seed;
  rec.d = point.d;
  rec.m = point.m;
  rec.sigma_popcount = kernel.sigma_popcount();
  rec.learner = cfg.learner.name();
  rec.budget = point.budget;
  rec.queries = oracle.used();
  rec.lambda = point.lambda;
  rec.y = point.y;
  rec.delta = delta_gap(kernel, obj, alpha, point.y, &rec.clamped);
  if (rec.delta < -1e-9)
    throw std::runtime_error("trial produced a gap below -1e-9; solver bug (delta = " +
                             format_double(rec.delta) + ")");
  rec.missed_blocks = oracle.missed_block_count();
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return rec;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const ResolvedPoint& point,
                      std::uint64_t trial_seed) {
  try {
    return run_trial_impl(cfg, point, trial_seed);
  } catch (const std::exception& e) {
    std::ostringstream context;
    context << "trial failed (learner=" << cfg.learner.name() << " d=" << point.d
            << " m=" << point.m << " B=" << point.budget << " lambda=" << point.lambda
            << " seed=" << trial_seed << "): " << e.what();
    throw std::runtime_error(context.str());
  }
}

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog_slope: size mismatch");
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("fit_loglog_slope: needs at least 4 points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: points must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) { mx += lx[i]; my += ly[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate x range");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += r * r;
  }
  const double var = rss / static_cast<double>(n - 2) / sxx;
  fit.ci_halfwidth = 2.0 * std::sqrt(var);
  return fit;
}

namespace {

struct Moments {
  double mean;
  double stderr_of_mean;
};

Moments mean_and_stderr(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  if (values.size() < 2) return {mean, 0.0};
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    sq[i] = (values[i] - mean) * (values[i] - mean);
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

ScalingReport run_scaling_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ResolvedPoint> points = resolve_points(cfg);

  ScalingReport report;
  report.bound_name = cfg.bound;
  report.trials.resize(points.size() * static_cast<std::size_t>(cfg.trials));

  // One flat task list over (sweep point, trial index); each task writes its
  // preassigned slot so aggregation is independent of scheduling.
  const int total = static_cast<int>(report.trials.size());
  parallel_for(total, [&](int task) {
    const int point_index = task / cfg.trials;
    const int trial_index = task % cfg.trials;
    const std::uint64_t trial_seed = derive_seed(cfg.seed, point_index, trial_index);
    report.trials[task] = run_trial(cfg, points[point_index], trial_seed);
  });

  for (std::size_t p = 0; p < points.size(); ++p) {
    SweepPointSummary s;
    s.point = points[p];
    s.trials = cfg.trials;
    std::vector<double> deltas(cfg.trials);
    std::vector<double> missed(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialRecord& rec = report.trials[p * cfg.trials + t];
      deltas[t] = rec.delta;
      missed[t] = static_cast<double>(rec.missed_blocks);
      s.clamped_count += rec.clamped ? 1 : 0;
    }
    const Moments dm = mean_and_stderr(deltas);
    s.mean_delta = dm.mean;
    s.stderr_delta = dm.stderr_of_mean;
    s.mean_missed = mean_and_stderr(missed).mean;
    s.bound = bound_overlay(cfg.bound, points[p]);
    report.points.push_back(s);
  }

  report.fit_valid = false;
  if (report.points.size() >= 4) {
    std::vector<double> xs, ys;
    for (const SweepPointSummary& s : report.points)
      if (s.mean_delta > 0.0) {
        xs.push_back(s.point.x);
        ys.push_back(s.mean_delta);
      }
    if (xs.size() >= 4) {
      report.fit = fit_loglog_slope(xs, ys);
      report.fit_valid = true;
    }
  }

  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void emit_trials_csv(std::span<const TrialRecord> records, std::ostream& out) {
  out << "trial,seed,learner,d,m,B,lambda,y,queries,delta,clamped,missed_blocks\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& r = records[i];
    out << i << ',' << r.seed << ',' << r.learner << ',' << r.d << ',' << r.m << ',' << r.budget
        << ',' << format_double(r.lambda) << ',' << format_double(r.y) << ',' << r.queries << ','
        << format_double(r.delta) << ',' << (r.clamped ? 1 : 0) << ',' << r.missed_blocks << '\n';
  }
}

void emit_sweep_csv(const ScalingReport& report, std::ostream& out) {
  out << "x,d,m,B,lambda,y,trials,mean_delta,stderr_delta,mean_missed,clamped,bound\n";
  for (const SweepPointSummary& s : report.points) {
    out << format_double(s.point.x) << ',' << s.point.d << ',' << s.point.m << ',' << s.point.budget
        << ',' << format_double(s.point.lambda) << ',' << format_double(s.point.y) << ','
        << s.trials << ',' << format_double(s.mean_delta) << ',' << format_double(s.stderr_delta)
        << ',' << format_double(s.mean_missed) << ',' << s.clamped_count << ','
        << format_double(s.bound) << '\n';
  }
}

std::string report_to_json(const ScalingReport& report, const ExperimentConfig& cfg) {
  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "scaling_report";
  doc["config"] = {{"loss", loss_name(cfg.loss)},
                   {"regime", cfg.regime},
                   {"learner", cfg.learner.name()},
                   {"sweep_axis", cfg.sweep_axis},
                   {"trials", cfg.trials},
                   {"seed", cfg.seed},
                   {"y_policy", cfg.y_policy},
                   {"bound", cfg.bound}};
  doc["points"] = json::array();
  for (const SweepPointSummary& s : report.points) {
    doc["points"].push_back({{"x", s.point.x},
                             {"d", s.point.d},
                             {"m", s.point.m},
                             {"B", s.point.budget},
                             {"lambda", s.point.lambda},
                             {"y", s.point.y},
                             {"trials", s.trials},
                             {"mean_delta", s.mean_delta},
                             {"stderr_delta", s.stderr_delta},
                             {"mean_missed", s.mean_missed},
                             {"clamped", s.clamped_count},
                             {"bound", s.bound}});
  }
  if (report.fit_valid) {
    doc["slope"] = {{"estimate", report.fit.slope},
                    {"intercept", report.fit.intercept},
                    {"ci_halfwidth", report.fit.ci_halfwidth}};
  } else {
    doc["slope"] = nullptr;
  }
  doc["wall_ms"] = report.wall_ms;
  return doc.dump(2);
}

std::string render_report_table(const std::string& report_json) {
  const json doc = json::parse(report_json);
  std::ostringstream out;
  out << "loss=" << doc["config"]["loss"].get<std::string>()
      << " regime=" << doc["config"]["regime"].get<std::string>()
      << " learner=" << doc["config"]["learner"].get<std::string>()
      << " trials/point=" << doc["config"]["trials"].get<int>() << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%12s %6s %8s %12s %12s %12s %10s\n", "x", "d", "B",
                "mean_delta", "stderr", "bound", "mean/bound");
  out << line;
  for (const auto& p : doc["points"]) {
    const double bound = p["bound"].get<double>();
    const double mean = p["mean_delta"].get<double>();
    std::snprintf(line, sizeof(line), "%12.6g %6d %8llu %12.6g %12.3g %12.6g %10.3g\n",
                  p["x"].get<double>(), p["d"].get<int>(),
                  static_cast<unsigned long long>(p["B"].get<std::uint64_t>()), mean,
                  p["stderr_delta"].get<double>(), bound, bound > 0.0 ? mean / bound : 0.0);
    out << line;
  }
  if (!doc["slope"].is_null()) {
    std::snprintf(line, sizeof(line), "log-log slope: %.4f +- %.4f\n",
                  doc["slope"]["estimate"].get<double>(),
                  doc["slope"]["ci_halfwidth"].get<double>());
    out << line;
  }
  return out.str();
}

}  // namespace kbound
