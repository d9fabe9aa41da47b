#include "kbound/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kbound {

Objective ExperimentConfig::objective(double lambda_value) const {
  if (regime == "soft") return Objective::soft(loss, lambda_value);
  if (regime == "norm") return Objective::norm_constrained(norm_bound);
  throw std::invalid_argument("config: regime must be 'norm' or 'soft'");
}

void ExperimentConfig::validate() const {
  if (regime != "norm" && regime != "soft")
    throw std::invalid_argument("config: regime must be 'norm' or 'soft'");
  if (regime == "norm" && loss != Loss::absolute)
    throw std::invalid_argument("config: the norm-constrained regime supports the absolute loss only");
  if (regime == "soft" && sweep_axis != "lambda" && !(lambda > 0.0))
    throw std::invalid_argument("config: soft regime needs lambda > 0");
  if (sweep_axis == "B" && budgets.empty())
    throw std::invalid_argument("config: empty B grid");
  if (sweep_axis == "lambda" && lambdas.empty())
    throw std::invalid_argument("config: empty lambda grid");
  if (sweep_axis == "lambda" && budgets.size() != 1)
    throw std::invalid_argument("config: lambda sweep needs exactly one B");
  if (d_rule == "fixed" && d < 1) throw std::invalid_argument("config: d must be >= 1");
  if (m_rule == "fixed" && m < 2) throw std::invalid_argument("config: m must be >= 2");
  if (d_rule != "fixed" && d_rule != "sqrtB")
    throw std::invalid_argument("config: d_rule must be 'fixed' or 'sqrtB'");
  if (m_rule != "fixed" && m_rule != "128d")
    throw std::invalid_argument("config: m_rule must be 'fixed' or '128d'");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (learner.kind == LearnerSpec::Kind::linear_solution && loss != Loss::linear)
    throw std::invalid_argument("config: linear_solution learner requires the linear loss");
  if (learner.kind == LearnerSpec::Kind::nystrom)
    throw std::invalid_argument("config: the nystrom learner runs on the low-rank lane, not the budgeted one");
  if (y_policy != "fixed" && y_policy != "invsqrtd" && y_policy != "cor3" && y_policy != "one")
    throw std::invalid_argument("config: unknown y_policy");
  if (y_policy == "cor3" && regime != "soft")
    throw std::invalid_argument("config: the cor3 target rule needs the soft regime");
}

static std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

template <typename T, typename F>
static std::vector<T> parse_list(const std::string& text, F parse_one) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_one(item));
  }
  return out;
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "loss") cfg.loss = parse_loss(value);
  else if (key == "regime") cfg.regime = value;
  else if (key == "norm_bound") cfg.norm_bound = std::stod(value);
  else if (key == "lambda") {
    cfg.lambdas = parse_list<double>(value, [](const std::string& s) { return std::stod(s); });
    cfg.lambda = cfg.lambdas.size() == 1 ? cfg.lambdas[0] : 0.0;
  } else if (key == "d") cfg.d = std::stoi(value);
  else if (key == "d_rule") cfg.d_rule = value;
  else if (key == "m") cfg.m = std::stoi(value);
  else if (key == "m_rule") cfg.m_rule = value;
  else if (key == "sweep" || key == "sweep_axis") cfg.sweep_axis = value;
  else if (key == "B") cfg.budgets = parse_list<std::uint64_t>(value, [](const std::string& s) {
      return static_cast<std::uint64_t>(std::stoull(s)); });
  else if (key == "y_policy") cfg.y_policy = value;
  else if (key == "y_value") cfg.y_value = std::stod(value);
  else if (key == "learner") cfg.learner = LearnerSpec::parse(value);
  else if (key == "landmarks") cfg.learner.landmarks = std::stoi(value);
  else if (key == "trials") cfg.trials = std::stoi(value);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "bound") cfg.bound = value;
  else if (key == "output") cfg.output = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

static int cor_recipe_d(std::uint64_t budget) {
  return static_cast<int>(std::ceil(std::sqrt(100.0 * static_cast<double>(budget) / 3.0)));
}

std::vector<ResolvedPoint> resolve_points(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ResolvedPoint> points;
  const bool sweep_lambda = cfg.sweep_axis == "lambda";
  const std::size_t n = sweep_lambda ? cfg.lambdas.size() : cfg.budgets.size();
  for (std::size_t i = 0; i < n; ++i) {
    ResolvedPoint pt;
    pt.budget = sweep_lambda ? cfg.budgets[0] : cfg.budgets[i];
    pt.lambda = cfg.regime == "soft" ? (sweep_lambda ? cfg.lambdas[i] : cfg.lambda) : 0.0;
    pt.x = sweep_lambda ? pt.lambda : static_cast<double>(pt.budget);
    pt.d = cfg.d_rule == "sqrtB" ? cor_recipe_d(pt.budget) : cfg.d;
    pt.m = cfg.m_rule == "128d" ? 128 * pt.d : cfg.m;
    if (cfg.y_policy == "fixed") pt.y = cfg.y_value;
    else if (cfg.y_policy == "one") pt.y = 1.0;
    else if (cfg.y_policy == "invsqrtd") pt.y = 1.0 / std::sqrt(static_cast<double>(pt.d));
    else pt.y = 1.0 / (2.0 * pt.lambda * static_cast<double>(pt.d));  // cor3
    points.push_back(pt);
  }
  return points;
}

double bound_overlay(const std::string& name, const ResolvedPoint& point) {
  if (name == "none" || name.empty()) return 0.0;
  if (name == "thm1" || name == "cor1") return 1.0 / (70.0 * std::sqrt(static_cast<double>(point.d)));
  if (name == "cor3") return 1.0 / (960.0 * point.lambda * static_cast<double>(point.d));
  if (name == "cor4") return 1.0 / 240.0;
  if (name == "cor5") {
    const double lsb = point.lambda * std::sqrt(static_cast<double>(point.budget));
    const double decay = lsb > 1.0 ? 1.0 / (lsb * lsb * lsb) : 1.0;
    return std::pow(2.0, -18.0) * decay;
  }
  throw std::invalid_argument("unknown bound overlay: " + name);
}

}  // namespace kbound
