#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kbound/config.hpp"
#include "kbound/harness.hpp"
#include "kbound/instance.hpp"
#include "kbound/learners.hpp"
#include "kbound/oracle.hpp"
#include "kbound/rng.hpp"
#include "kbound/verify.hpp"

namespace {

kbound::ExperimentConfig load_with_overrides(const std::string& config_path,
                                             const std::vector<std::string>& overrides) {
  kbound::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = kbound::load_config(config_path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must look like key=value: " + kv);
    kbound::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

int print_checks(const std::vector<kbound::CheckResult>& checks) {
  bool all_pass = true;
  for (const auto& check : checks) {
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.detail
              << '\n';
    all_pass = all_pass && check.pass;
  }
  std::cout << (all_pass ? "verification OK" : "verification FAILED") << '\n';
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hard kernel-learning instances: budgeted and low-rank learners against "
               "a query-counting oracle, with numerical verification of the bound suite"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* generate = app.add_subcommand("generate", "emit an instance as JSON");
  int gen_d = 4, gen_m = 32;
  std::uint64_t gen_seed = 1;
  bool gen_lowrank = false;
  std::string gen_z, gen_out;
  generate->add_option("--d", gen_d, "block-pair parameter d");
  generate->add_option("--m", gen_m, "training-set size m");
  generate->add_option("--seed", gen_seed, "RNG seed");
  generate->add_flag("--lowrank", gen_lowrank, "emit a low-rank ridge instance instead");
  generate->add_option("--z", gen_z, "comma-separated +-1 labels for the low-rank instance "
                                     "(default: all ones)");
  generate->add_option("-o,--out", gen_out, "output path (default: stdout)");

  // ---- run / sweep ----
  std::string run_config, run_out, run_query_log;
  std::vector<std::string> run_set;
  auto* run = app.add_subcommand("run", "run one experiment point, write per-trial CSV");
  run->add_option("--config", run_config, "config file (key = value lines)");
  run->add_option("--set", run_set, "override, key=value (repeatable)");
  run->add_option("-o,--out", run_out, "output CSV path (default: stdout)");
  run->add_option("--query-log", run_query_log,
                  "also write the first trial's oracle query log (audit CSV) to this path");

  std::string sweep_config, sweep_out = "sweep";
  std::vector<std::string> sweep_set;
  auto* sweep = app.add_subcommand("sweep", "run a scaling sweep, write CSV + JSON report");
  sweep->add_option("--config", sweep_config, "config file (key = value lines)");
  sweep->add_option("--set", sweep_set, "override, key=value (repeatable)");
  sweep->add_option("-o,--out", sweep_out, "output prefix (<out>.csv, <out>_trials.csv, <out>.json)");

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "run the verification suites; nonzero exit on failure");
  std::string suite = "all";
  std::uint64_t verify_seed = 20240901;
  int cov_d = 40, cov_m = 5120, cov_trials = 1000;
  std::uint64_t cov_budget = 95;
  std::string cov_learner = "uniform_random_queries";
  verify->add_option("--suite", suite, "all | identities | coverage | minimax | lowrank");
  verify->add_option("--seed", verify_seed, "RNG seed");
  verify->add_option("--d", cov_d, "coverage suite: d");
  verify->add_option("--m", cov_m, "coverage suite: m");
  verify->add_option("--B", cov_budget, "coverage suite: budget");
  verify->add_option("--trials", cov_trials, "coverage suite: Monte Carlo trials");
  verify->add_option("--learner", cov_learner, "coverage suite: learner");

  // ---- report ----
  auto* report = app.add_subcommand("report", "render a JSON scaling report as a table");
  std::string report_in;
  report->add_option("-i,--in", report_in, "scaling report JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      std::string text;
      if (gen_lowrank) {
        std::vector<int> z;
        if (gen_z.empty()) z.assign(2 * gen_d, 1);
        else {
          std::stringstream ss(gen_z);
          std::string item;
          while (std::getline(ss, item, ',')) z.push_back(std::stoi(item));
        }
        text = kbound::to_json(kbound::LowRankInstance(gen_d, gen_m, z));
      } else {
        text = kbound::to_json(kbound::sample_hard_kernel(gen_d, gen_m, gen_seed));
      }
      if (gen_out.empty()) std::cout << text << '\n';
      else write_file(gen_out, text + "\n");
      return 0;
    }

    if (run->parsed()) {
      kbound::ExperimentConfig cfg = load_with_overrides(run_config, run_set);
      cfg.validate();
      const auto points = kbound::resolve_points(cfg);
      if (points.size() != 1)
        throw std::invalid_argument("`run` wants exactly one sweep point; use `sweep` for grids");
      std::vector<kbound::TrialRecord> records(cfg.trials);
      kbound::parallel_for(cfg.trials, [&](int t) {
        records[t] = kbound::run_trial(cfg, points[0], kbound::derive_seed(cfg.seed, 0, t));
      });
      std::ostringstream csv;
      kbound::emit_trials_csv(records, csv);
      if (run_out.empty()) std::cout << csv.str();
      else write_file(run_out, csv.str());

      std::vector<double> deltas;
      for (const auto& r : records) deltas.push_back(r.delta);
      const double mean = kbound::pairwise_sum(deltas) / deltas.size();
      std::cerr << "trials=" << records.size() << " mean_delta=" << kbound::format_double(mean)
                << '\n';

      if (!run_query_log.empty()) {
        // replay trial 0 against a fresh oracle and export its audit log
        const std::uint64_t trial_seed = kbound::derive_seed(cfg.seed, 0, 0);
        const kbound::BlockKernel kernel = kbound::sample_hard_kernel(
            points[0].d, points[0].m, kbound::derive_seed(trial_seed, 0, 0));
        kbound::BudgetedOracle oracle(kernel, points[0].budget);
        const kbound::Objective obj = cfg.objective(points[0].lambda);
        const std::uint64_t learner_seed = kbound::derive_seed(trial_seed, 1, 0);
        switch (cfg.learner.kind) {
          case kbound::LearnerSpec::Kind::subsample:
            kbound::subsample_learn(oracle, points[0].y, obj, learner_seed);
            break;
          case kbound::LearnerSpec::Kind::uniform_random_queries:
            kbound::uniform_random_learn(oracle, points[0].y, obj, learner_seed);
            break;
          default:
            break;  // other learners issue no oracle queries
        }
        std::ofstream log_out(run_query_log, std::ios::binary);
        if (!log_out) throw std::runtime_error("cannot open for writing: " + run_query_log);
        oracle.write_log_csv(log_out);
      }
      return 0;
    }

    if (sweep->parsed()) {
      kbound::ExperimentConfig cfg = load_with_overrides(sweep_config, sweep_set);
      cfg.validate();
      const kbound::ScalingReport rep = kbound::run_scaling_experiment(cfg);
      std::ostringstream agg, trials;
      kbound::emit_sweep_csv(rep, agg);
      kbound::emit_trials_csv(rep.trials, trials);
      write_file(sweep_out + ".csv", agg.str());
      write_file(sweep_out + "_trials.csv", trials.str());
      const std::string json_text = kbound::report_to_json(rep, cfg);
      write_file(sweep_out + ".json", json_text);
      std::cout << kbound::render_report_table(json_text);
      return 0;
    }

    if (verify->parsed()) {
      std::vector<kbound::CheckResult> checks;
      if (suite == "all") {
        checks = kbound::verify_all(verify_seed);
      } else if (suite == "identities") {
        checks = kbound::verify_identities(verify_seed);
      } else if (suite == "coverage") {
        checks.push_back(kbound::verify_block_coverage(kbound::LearnerSpec::parse(cov_learner),
                                                       cov_d, cov_m, cov_budget, cov_trials,
                                                       verify_seed));
      } else if (suite == "minimax") {
        for (kbound::Loss loss : {kbound::Loss::absolute, kbound::Loss::hinge,
                                  kbound::Loss::squared, kbound::Loss::linear}) {
          const double y = loss == kbound::Loss::hinge ? 1.0 : 0.5;
          const kbound::MinimaxCheck check = kbound::verify_thm2_minimax(loss, 0.05, 10, 1.0, y);
          std::ostringstream detail;
          detail << "grid_min=" << kbound::format_double(check.grid_min)
                 << " rhs=" << kbound::format_double(check.rhs);
          checks.push_back({std::string("thm2_minimax_") + kbound::loss_name(loss), check.pass,
                            check.grid_min, check.rhs, detail.str()});
        }
      } else if (suite == "lowrank") {
        std::uint64_t s = verify_seed;
        for (int d : {4, 8, 16})
          for (double lambda : {0.1, 0.5, 1.0}) {
            checks.push_back(kbound::verify_lowrank_bound(d, 8 * d, lambda, d, false, ++s));
            checks.push_back(kbound::verify_lowrank_bound(d, 8 * d, lambda, 2 * d, true, ++s));
          }
      } else {
        throw std::invalid_argument("unknown suite: " + suite);
      }
      return print_checks(checks);
    }

    if (report->parsed()) {
      std::ifstream in(report_in);
      if (!in) throw std::runtime_error("cannot open: " + report_in);
      std::stringstream buffer;
      buffer << in.rdbuf();
      std::cout << kbound::render_report_table(buffer.str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
