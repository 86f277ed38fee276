// evopath command line: transfer, compare, train-expert, eval, oracle.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evopath/harness.hpp"
#include "evopath/oracle.hpp"

namespace fs = std::filesystem;
using namespace evopath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTimeout = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string method;
  std::string env;
  std::optional<int> threads;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_method) {
  cmd->add_option("--config", o.config, "flat key = value config file");
  cmd->add_option("--seed", o.seed, "single seed, overrides the config's seeds");
  cmd->add_option("--out", o.out, "output directory");
  if (with_method) cmd->add_option("--method", o.method, "deps, linear or both");
  cmd->add_option("--env", o.env, "landscape or grasp-reacher");
  cmd->add_option("--threads", o.threads, "rollout worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = parse_config(o.config);
  }
  if (!o.env.empty()) apply_config_value(cfg, "env", o.env);
  if (!o.method.empty()) apply_config_value(cfg, "method", o.method);
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.threads) apply_config_value(cfg, "threads", std::to_string(*o.threads));
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    auto strip = [](std::string x) {
      x.erase(0, x.find_first_not_of(' '));
      x.erase(x.find_last_not_of(' ') + 1);
      return x;
    };
    try {
      apply_config_value(cfg, strip(s.substr(0, eq)), strip(s.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--set ") + s + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

int run_methods(const CommonOptions& o, bool both) {
  ExperimentConfig cfg = build_config(o);
  if (both) cfg.methods = {TransferMethod::kDeps, TransferMethod::kLinear};
  ExperimentResult res = run_experiment(cfg, &std::cerr);
  std::cout << summarize(res.rows).dump(1) << "\n";
  std::cerr << "wrote " << (cfg.out_dir / "metrics.csv").string() << "\n";
  return res.any_timeout ? kExitTimeout : kExitOk;
}

int train_expert(const CommonOptions& o) {
  ExperimentConfig cfg = build_config(o);
  const auto family = make_family(cfg);
  if (!family->trainable()) throw ConfigError("train-expert needs a trainable env (grasp-reacher)");
  fs::create_directories(cfg.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = cfg.seeds.size() > 1 ? cfg.out_dir / ("seed_" + std::to_string(seed)) : cfg.out_dir;
    fs::create_directories(dir);
    SeedExpert ex = make_seed_expert(*family, cfg, seed);
    ex.policy.save(dir / "expert.json");
    if (!ex.demo_states.empty()) save_demo(dir / "demo.json", family->id(), ex.demo_states);
    if (ex.log) {
      write_json(dir / "expert_log.json", ex.log->to_json());
      std::cerr << "seed " << seed << ": " << ex.log->ledger.train_iters << " train iters, final success "
                << ex.log->final_success << "\n";
    }
    std::cerr << "wrote " << (dir / "expert.json").string() << "\n";
  }
  return kExitOk;
}

Vec parse_alpha(const std::string& text, int dim) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      xs.push_back(std::stod(part, &used));
      if (part.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError("--alpha: cannot parse '" + part + "'");
    }
  }
  if (xs.size() == 1) return Vec::Constant(dim, xs[0]);
  if (static_cast<int>(xs.size()) != dim) {
    throw ConfigError("--alpha has " + std::to_string(xs.size()) + " entries, env has " + std::to_string(dim));
  }
  return Eigen::Map<const Vec>(xs.data(), dim);
}

int eval_policy(const CommonOptions& o, const std::string& policy_path, const std::string& alpha_text, int episodes,
                const std::string& mode) {
  ExperimentConfig cfg = build_config(o);
  const auto family = make_family(cfg);
  GaussianMlpPolicy policy = GaussianMlpPolicy::load(policy_path);
  if (policy.obs_dim() != family->obs_dim() || policy.act_dim() != family->act_dim()) {
    throw DimensionError("policy '" + policy_path + "' does not fit env '" + family->id() + "'");
  }
  Vec a = parse_alpha(alpha_text, family->dim());
  if ((a.array() < 0.0).any() || (a.array() > 1.0).any()) throw ConfigError("--alpha must lie in [0, 1]");
  const EvolutionParameter alpha(a);
  Ledger ledger;
  const ActionMode m = mode == "mean" ? ActionMode::kMean : ActionMode::kStochastic;
  EvalResult r = evaluate_success(policy, *family, alpha, episodes, Rng(cfg.seeds.front()).derive("eval"), ledger,
                                  cfg.transfer.rl.gamma, m, cfg.transfer.rl.workers);
  nlohmann::json doc = {{"env", family->id()},
                        {"alpha", std::vector<double>(a.data(), a.data() + a.size())},
                        {"episodes", r.episodes},
                        {"mode", mode},
                        {"success_rate", r.success_rate},
                        {"mean_return", r.mean_return}};
  std::cout << doc.dump(1) << "\n";
  return kExitOk;
}

int run_oracle(const CommonOptions& o, int resolution) {
  ExperimentConfig cfg = build_config(o);
  if (cfg.env != "landscape") throw ConfigError("oracle works on the landscape env only");
  MaximinPath p = landscape_oracle(cfg.landscape, resolution);
  nlohmann::json path = nlohmann::json::array();
  for (const auto& v : p.path) path.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  nlohmann::json doc = {{"resolution", resolution}, {"maximin_value", p.maximin_value}, {"path", path}};
  if (!o.out.empty()) {
    fs::create_directories(cfg.out_dir);
    write_json(cfg.out_dir / "oracle_path.json", doc);
  }
  std::cout << "maximin_value " << p.maximin_value << " path_length " << p.path.size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolution path search between a source and a target robot"};
  app.require_subcommand(1);

  CommonOptions transfer_o, compare_o, expert_o, eval_o, oracle_o;
  auto* transfer = app.add_subcommand("transfer", "run one transfer method per seed");
  add_common(transfer, transfer_o, true);
  auto* compare = app.add_subcommand("compare", "run deps and linear on every seed");
  add_common(compare, compare_o, false);
  auto* expert = app.add_subcommand("train-expert", "train a source-robot expert from a scripted demo");
  add_common(expert, expert_o, false);

  auto* eval = app.add_subcommand("eval", "success rate of a policy at one alpha");
  add_common(eval, eval_o, false);
  std::string policy_path, alpha_text = "0", mode = "mean";
  int episodes = 100;
  eval->add_option("--policy", policy_path, "policy json")->required();
  eval->add_option("--alpha", alpha_text, "one value for every dimension or a comma list");
  eval->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  eval->add_option("--mode", mode)->check(CLI::IsMember({"mean", "stochastic"}));

  auto* oracle = app.add_subcommand("oracle", "grid maximin path on the landscape");
  add_common(oracle, oracle_o, false);
  int resolution = 21;
  oracle->add_option("--resolution", resolution, "grid points per axis")->check(CLI::Range(2, 1001));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*transfer) return run_methods(transfer_o, false);
    if (*compare) return run_methods(compare_o, true);
    if (*expert) return train_expert(expert_o);
    if (*eval) return eval_policy(eval_o, policy_path, alpha_text, episodes, mode);
    if (*oracle) return run_oracle(oracle_o, resolution);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
