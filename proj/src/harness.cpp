#include "evopath/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace evopath {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc() || p != end || !std::isfinite(x)) {
    throw ConfigError("expected a real number, got '" + v + "'");
  }
  return x;
}

std::int64_t parse_int(const std::string& v) {
  std::int64_t x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (v.empty() || ec != std::errc() || p != end) throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

int parse_int32(const std::string& v) {
  const std::int64_t x = parse_int(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("integer out of range: '" + v + "'");
  }
  return static_cast<int>(x);
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

ActionMode parse_mode(const std::string& v) {
  if (v == "stochastic") return ActionMode::kStochastic;
  if (v == "mean") return ActionMode::kMean;
  throw ConfigError("expected stochastic or mean, got '" + v + "'");
}

std::string mode_name(ActionMode m) { return m == ActionMode::kMean ? "mean" : "stochastic"; }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&](const std::string& key, auto member, auto check, const char* range) {
      t[key] = [member, check, key, range](ExperimentConfig& c, const std::string& v) {
        const double x = parse_real(v);
        require(check(x), key + " must be " + range);
        member(c) = x;
      };
    };
    auto integer = [&](const std::string& key, auto member, std::int64_t lo, const char* range) {
      t[key] = [member, lo, key, range](ExperimentConfig& c, const std::string& v) {
        const std::int64_t x = parse_int(v);
        require(x >= lo, key + " must be " + range);
        using T = std::remove_reference_t<decltype(member(c))>;
        if constexpr (std::is_same_v<T, int>) member(c) = parse_int32(v);
        else member(c) = static_cast<T>(x);
      };
    };
    auto boolean = [&](const std::string& key, auto member) {
      t[key] = [member](ExperimentConfig& c, const std::string& v) { member(c) = parse_bool(v); };
    };
    auto positive = [](double x) { return x > 0.0; };
    auto nonneg = [](double x) { return x >= 0.0; };
    auto unit_open = [](double x) { return x > 0.0 && x < 1.0; };
    auto unit_half = [](double x) { return x > 0.0 && x <= 1.0; };

    t["env"] = [](ExperimentConfig& c, const std::string& v) {
      require(v == "landscape" || v == "grasp-reacher", "unknown env '" + v + "' (expected landscape or grasp-reacher)");
      c.env = v;
    };
    t["method"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "both") c.methods = {TransferMethod::kDeps, TransferMethod::kLinear};
      else c.methods = {parse_method(v)};
    };
    t["seeds"] = [](ExperimentConfig& c, const std::string& v) {
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split(v, ',')) {
        const std::int64_t x = parse_int(s);
        require(x >= 0, "seeds must be non-negative");
        seeds.push_back(static_cast<std::uint64_t>(x));
      }
      require(!seeds.empty(), "seeds must not be empty");
      c.seeds = std::move(seeds);
    };
    t["out"] = [](ExperimentConfig& c, const std::string& v) {
      require(!v.empty(), "out must not be empty");
      c.out_dir = v;
    };
    t["expert"] = [](ExperimentConfig& c, const std::string& v) { c.expert_path = v; };
    boolean("record_wall_time", [](ExperimentConfig& c) -> bool& { return c.record_wall_time; });

    // transfer
    real("xi", [](ExperimentConfig& c) -> double& { return c.transfer.xi; }, positive, "> 0");
    integer("n", [](ExperimentConfig& c) -> int& { return c.transfer.n; }, 1, ">= 1");
    real("lambda", [](ExperimentConfig& c) -> double& { return c.transfer.lambda; }, nonneg, ">= 0");
    real("lambda1", [](ExperimentConfig& c) -> double& { return c.transfer.lambda1; }, unit_open, "in (0, 1)");
    real("q", [](ExperimentConfig& c) -> double& { return c.transfer.q; }, unit_half, "in (0, 1]");
    integer("curriculum_iters", [](ExperimentConfig& c) -> int& { return c.transfer.curriculum_iters; }, 0, ">= 0");
    integer("probes_per_delta", [](ExperimentConfig& c) -> int& { return c.transfer.probes_per_delta; }, 1, ">= 1");
    boolean("common_random_numbers", [](ExperimentConfig& c) -> bool& { return c.transfer.common_random_numbers; });
    integer("eval_episodes", [](ExperimentConfig& c) -> int& { return c.transfer.eval_episodes; }, 1, ">= 1");
    integer("precheck_episodes", [](ExperimentConfig& c) -> int& { return c.transfer.precheck_episodes; }, 1, ">= 1");
    integer("eval_every", [](ExperimentConfig& c) -> int& { return c.transfer.eval_every; }, 1, ">= 1");
    boolean("early_stop", [](ExperimentConfig& c) -> bool& { return c.transfer.early_stop; });
    t["faithful"] = [](ExperimentConfig& c, const std::string& v) {
      if (parse_bool(v)) c.transfer.early_stop = false;
    };
    boolean("recheck_after_train", [](ExperimentConfig& c) -> bool& { return c.transfer.recheck_after_train; });
    t["initial_direction"] = [](ExperimentConfig& c, const std::string& v) {
      require(v == "pull" || v == "sphere", "initial_direction must be pull or sphere");
      c.transfer.initial_direction = v == "pull" ? InitialDirection::kPull : InitialDirection::kSphere;
    };
    real("ridge", [](ExperimentConfig& c) -> double& { return c.transfer.ridge; }, nonneg, ">= 0");
    integer("max_steps", [](ExperimentConfig& c) -> int& { return c.transfer.max_steps; }, 1, ">= 1");
    integer("max_train_iters", [](ExperimentConfig& c) -> long& { return c.transfer.max_train_iters; }, 0, ">= 0");
    boolean("train_at_target", [](ExperimentConfig& c) -> bool& { return c.transfer.train_at_target; });
    real("target_success", [](ExperimentConfig& c) -> double& { return c.transfer.target_success; }, unit_half, "in (0, 1]");
    integer("target_eval_episodes", [](ExperimentConfig& c) -> int& { return c.transfer.target_eval_episodes; }, 1, ">= 1");
    t["eval_mode"] = [](ExperimentConfig& c, const std::string& v) {
      c.transfer.eval_mode = parse_mode(v);
      c.expert.eval_mode = c.transfer.eval_mode;
    };

    // rl, shared by transfer and expert training
    auto rl_real = [&](const std::string& key, double RlConfig::*m, auto check, const char* range) {
      t[key] = [m, check, key, range](ExperimentConfig& c, const std::string& v) {
        const double x = parse_real(v);
        require(check(x), key + " must be " + range);
        c.transfer.rl.*m = x;
        c.expert.rl.*m = x;
      };
    };
    auto rl_int = [&](const std::string& key, int RlConfig::*m, int lo) {
      t[key] = [m, lo, key](ExperimentConfig& c, const std::string& v) {
        const int x = parse_int32(v);
        require(x >= lo, key + " must be >= " + std::to_string(lo));
        c.transfer.rl.*m = x;
        c.expert.rl.*m = x;
      };
    };
    rl_real("gamma", &RlConfig::gamma, [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]");
    rl_real("gae_lambda", &RlConfig::gae_lambda, [](double x) { return x >= 0.0 && x <= 1.0; }, "in [0, 1]");
    rl_real("npg_step", &RlConfig::npg_step, positive, "> 0");
    rl_real("cg_damping", &RlConfig::cg_damping, nonneg, ">= 0");
    rl_int("batch", &RlConfig::batch, 1);
    rl_int("cg_iters", &RlConfig::cg_iters, 1);
    rl_int("threads", &RlConfig::workers, 1);
    t["value_epochs"] = [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_int32(v);
      require(x >= 0, "value_epochs must be >= 0");
      c.transfer.rl.value_fit.epochs = c.expert.rl.value_fit.epochs = x;
    };
    t["value_learning_rate"] = [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_real(v);
      require(x > 0.0, "value_learning_rate must be > 0");
      c.transfer.rl.value_fit.learning_rate = c.expert.rl.value_fit.learning_rate = x;
    };

    // landscape
    integer("landscape.dim", [](ExperimentConfig& c) -> int& { return c.landscape.dim; }, 1, ">= 1");
    real("landscape.barrier_height", [](ExperimentConfig& c) -> double& { return c.landscape.barrier_height; }, nonneg, ">= 0");
    real("landscape.barrier_width", [](ExperimentConfig& c) -> double& { return c.landscape.barrier_width; }, positive, "> 0");
    real("landscape.noise_sigma", [](ExperimentConfig& c) -> double& { return c.landscape.noise_sigma; }, nonneg, ">= 0");
    real("landscape.success_threshold", [](ExperimentConfig& c) -> double& { return c.landscape.success_threshold; },
         [](double) { return true; }, "a real number");
    t["landscape.barrier_center"] = [](ExperimentConfig& c, const std::string& v) {
      const auto parts = split(v, ',');
      Vec center(static_cast<Eigen::Index>(parts.size()));
      for (std::size_t i = 0; i < parts.size(); ++i) center[static_cast<Eigen::Index>(i)] = parse_real(parts[i]);
      c.landscape.barrier_center = center;
    };

    // reacher
    real("reacher.dt", [](ExperimentConfig& c) -> double& { return c.reacher.dt; }, positive, "> 0");
    integer("reacher.hold_steps", [](ExperimentConfig& c) -> int& { return c.reacher.hold_steps; }, 1, ">= 1");
    integer("reacher.horizon", [](ExperimentConfig& c) -> int& { return c.reacher.horizon; }, 1, ">= 1");

    // expert training
    integer("expert.stride", [](ExperimentConfig& c) -> int& { return c.expert.stride; }, 1, ">= 1");
    real("expert.promote_threshold", [](ExperimentConfig& c) -> double& { return c.expert.promote_threshold; }, unit_half,
         "in (0, 1]");
    integer("expert.window", [](ExperimentConfig& c) -> int& { return c.expert.window; }, 1, ">= 1");
    real("expert.noise_scale", [](ExperimentConfig& c) -> double& { return c.expert.noise_scale; }, nonneg, ">= 0");
    integer("expert.max_outer_iters", [](ExperimentConfig& c) -> int& { return c.expert.max_outer_iters; }, 1, ">= 1");
    real("expert.final_threshold", [](ExperimentConfig& c) -> double& { return c.expert.final_threshold; }, unit_half,
         "in (0, 1]");
    integer("expert.final_eval_episodes", [](ExperimentConfig& c) -> int& { return c.expert.final_eval_episodes; }, 1,
            ">= 1");
    return t;
  }();
  return table;
}

}  // namespace

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& t = setters();
  auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(cfg, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void ExperimentConfig::validate() const {
  require(!env.empty(), "missing required key 'env'");
  require(env == "landscape" || env == "grasp-reacher", "unknown env '" + env + "'");
  require(!methods.empty(), "no method selected");
  require(!seeds.empty(), "seeds must not be empty");
  transfer.validate();
  expert.validate();
  if (env == "landscape") {
    landscape.validate();
    if (landscape.barrier_center.size() && landscape.barrier_center.size() != landscape.dim) {
      throw ConfigError("landscape.barrier_center has " + std::to_string(landscape.barrier_center.size()) +
                        " entries but landscape.dim is " + std::to_string(landscape.dim));
    }
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  std::vector<std::string> names;
  for (auto m : methods) names.push_back(method_name(m));
  nlohmann::json doc = {{"env", env},
                        {"methods", names},
                        {"seeds", seeds},
                        {"transfer", transfer.to_json()},
                        {"expert_path", expert_path.string()}};
  if (env == "landscape") {
    const Vec c = landscape.center();
    doc["landscape"] = {{"dim", landscape.dim},
                        {"barrier_height", landscape.barrier_height},
                        {"barrier_center", std::vector<double>(c.data(), c.data() + c.size())},
                        {"barrier_width", landscape.barrier_width},
                        {"noise_sigma", landscape.noise_sigma},
                        {"success_threshold", landscape.success_threshold}};
  } else {
    doc["reacher"] = {{"dt", reacher.dt}, {"hold_steps", reacher.hold_steps}, {"horizon", reacher.horizon}};
    doc["expert"] = {{"stride", expert.stride},
                     {"promote_threshold", expert.promote_threshold},
                     {"window", expert.window},
                     {"noise_scale", expert.noise_scale},
                     {"max_outer_iters", expert.max_outer_iters},
                     {"final_threshold", expert.final_threshold},
                     {"final_eval_episodes", expert.final_eval_episodes},
                     {"eval_mode", mode_name(expert.eval_mode)}};
  }
  return doc;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      apply_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (cfg.env.empty()) throw ConfigError(source + ": missing required key 'env'");
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::unique_ptr<MdpFamily> make_family(const ExperimentConfig& cfg) {
  if (cfg.env == "landscape") return std::make_unique<LandscapeFamily>(cfg.landscape);
  if (cfg.env == "grasp-reacher") return std::make_unique<GraspReacherFamily>(cfg.reacher);
  throw ConfigError("unknown env '" + cfg.env + "'");
}

// ---- metrics -------------------------------------------------------------

MetricsRow metrics_row(const PathRecord& record, double wall_time_s) {
  const Ledger total = record.cumulative();
  MetricsRow row;
  row.seed = record.seed;
  row.method = record.method;
  row.env = record.env_id;
  row.sim_epochs_total = total.sim_epochs();
  row.sim_epochs_jacobian = total.jacobian_epochs;
  row.sim_epochs_training = total.training_epochs;
  row.sim_epochs_evaluation = total.evaluation_epochs;
  row.train_iters = total.train_iters;
  row.reached_target = record.status == "completed" && (!record.target.ran || record.target.reached);
  row.wall_time_s = wall_time_s;
  return row;
}

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = kMetricsHeader;
  out += '\n';
  char wall[64];
  for (const auto& r : rows) {
    // "%.3f" under the "C" locale; snprintf would follow the global locale
    auto [end, ec] = std::to_chars(wall, wall + sizeof wall, r.wall_time_s, std::chars_format::fixed, 3);
    if (ec != std::errc()) throw FormatError("cannot format wall time");
    out += std::to_string(r.seed) + ',' + r.method + ',' + r.env + ',' + std::to_string(r.sim_epochs_total) + ',' +
           std::to_string(r.sim_epochs_jacobian) + ',' + std::to_string(r.sim_epochs_training) + ',' +
           std::to_string(r.sim_epochs_evaluation) + ',' + std::to_string(r.train_iters) + ',' +
           (r.reached_target ? "true" : "false") + ',' + std::string(wall, end) + '\n';
  }
  return out;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << format_metrics_csv(rows);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError("metrics csv: unexpected header");
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) throw FormatError("metrics csv line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      MetricsRow r;
      const std::int64_t seed = parse_int(f[0]);
      if (seed < 0) throw ConfigError("negative seed");
      r.seed = static_cast<std::uint64_t>(seed);
      r.method = f[1];
      r.env = f[2];
      r.sim_epochs_total = parse_int(f[3]);
      r.sim_epochs_jacobian = parse_int(f[4]);
      r.sim_epochs_training = parse_int(f[5]);
      r.sim_epochs_evaluation = parse_int(f[6]);
      r.train_iters = parse_int(f[7]);
      r.reached_target = parse_bool(f[8]);
      r.wall_time_s = parse_real(f[9]);
      rows.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw FormatError("metrics csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str());
}

nlohmann::json summarize(const std::vector<MetricsRow>& rows) {
  using nlohmann::json;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
  }
  auto stat = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    json s = {{"mean", mean}, {"std", nullptr}};
    if (xs.size() >= 2) {
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      s["std"] = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
  };
  json methods = json::object();
  for (const auto& m : order) {
    std::vector<double> total, jac, train, eval, iters, wall;
    int reached = 0;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      total.push_back(static_cast<double>(r.sim_epochs_total));
      jac.push_back(static_cast<double>(r.sim_epochs_jacobian));
      train.push_back(static_cast<double>(r.sim_epochs_training));
      eval.push_back(static_cast<double>(r.sim_epochs_evaluation));
      iters.push_back(static_cast<double>(r.train_iters));
      wall.push_back(r.wall_time_s);
      reached += r.reached_target;
    }
    methods[m] = {{"runs", total.size()},
                  {"reached_target", reached},
                  {"sim_epochs_total", stat(total)},
                  {"sim_epochs_jacobian", stat(jac)},
                  {"sim_epochs_training", stat(train)},
                  {"sim_epochs_evaluation", stat(eval)},
                  {"train_iters", stat(iters)},
                  {"wall_time_s", stat(wall)}};
  }
  return {{"format", "evopath-summary"}, {"std", "sample (n - 1)"}, {"methods", methods}};
}

// ---- runs ----------------------------------------------------------------

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

SeedExpert make_seed_expert(const MdpFamily& family, const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedExpert out;
  if (!cfg.expert_path.empty()) {
    out.policy = GaussianMlpPolicy::load(cfg.expert_path);
    if (out.policy.obs_dim() != family.obs_dim() || out.policy.act_dim() != family.act_dim()) {
      throw DimensionError("expert '" + cfg.expert_path.string() + "' does not fit env '" + family.id() + "'");
    }
    return out;
  }
  const Rng root = Rng(seed).derive("expert");
  Rng init = root.derive("policy-init");
  GaussianMlpPolicy initial(family.obs_dim(), family.act_dim());
  initial.initialize(init);
  if (!family.trainable()) {
    out.policy = initial;
    return out;
  }
  const auto* reacher = dynamic_cast<const GraspReacherFamily*>(&family);
  if (!reacher) throw UnsupportedError("no demonstration source for env '" + family.id() + "'");
  Rng demo_rng = root.derive("demo");
  out.demo_states = make_demo_trajectory(*reacher, demo_rng).states;
  ExpertResult res = reverse_curriculum_train(family, out.demo_states, initial, cfg.expert, root.derive("train").bits());
  if (!res.log.success) {
    throw Error("expert training for seed " + std::to_string(seed) + " stopped at demo index " +
                std::to_string(res.log.furthest_index) + " (final success " +
                std::to_string(res.log.final_success) + ")");
  }
  out.policy = std::move(res.policy);
  out.log = std::move(res.log);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
  namespace fs = std::filesystem;
  cfg.validate();
  const auto family = make_family(cfg);
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "config.json", cfg.to_json());

  ExperimentResult result;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path seed_dir = cfg.out_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    SeedExpert expert = make_seed_expert(*family, cfg, seed);
    if (family->trainable()) {
      expert.policy.save(seed_dir / "expert.json");
      if (expert.log) write_json(seed_dir / "expert_log.json", expert.log->to_json());
    }
    for (TransferMethod method : cfg.methods) {
      const fs::path method_dir = seed_dir / method_name(method);
      fs::create_directories(method_dir);
      const auto t0 = std::chrono::steady_clock::now();
      TransferResult tr = run_transfer(method, *family, expert.policy, cfg.transfer, seed);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      tr.record.policy_ref = "policy.json";
      tr.policy.save(method_dir / "policy.json");
      write_json(method_dir / "path_record.json", tr.record.to_json());
      MetricsRow row = metrics_row(tr.record, cfg.record_wall_time ? wall : 0.0);
      result.any_timeout = result.any_timeout || tr.timed_out();
      if (progress) {
        *progress << "seed " << seed << " " << row.method << ": " << tr.record.status
                  << ", train_iters " << row.train_iters << ", sim_epochs " << row.sim_epochs_total
                  << (row.reached_target ? ", reached target" : ", target not reached") << "\n";
      }
      result.rows.push_back(std::move(row));
    }
  }
  write_metrics_csv(result.rows, cfg.out_dir / "metrics.csv");
  write_json(cfg.out_dir / "summary.json", summarize(result.rows));
  return result;
}

}  // namespace evopath
