#pragma once

// Experiment plumbing: flat key = value configs, environment construction,
// multi-seed runs of the transfer methods and their CSV / JSON outputs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evopath/expert.hpp"
#include "evopath/landscape.hpp"
#include "evopath/path_search.hpp"
#include "evopath/reacher.hpp"

namespace evopath {

struct ExperimentConfig {
  std::string env;                      // "landscape" or "grasp-reacher", required
  std::vector<TransferMethod> methods = {TransferMethod::kDeps};
  std::vector<std::uint64_t> seeds = {1};
  std::filesystem::path out_dir = "runs";
  TransferConfig transfer;              // includes the RL settings
  LandscapeConfig landscape;
  ReacherConfig reacher = ReacherConfig::defaults();
  ReverseCurriculumConfig expert;
  std::filesystem::path expert_path;    // empty: train an expert per seed
  bool record_wall_time = true;         // false writes 0 so the CSV is fully reproducible

  void validate() const;
  nlohmann::json to_json() const;
};

// Parses `key = value` lines; '#' starts a comment. Unknown, duplicate,
// malformed or out-of-range keys raise ConfigError("<source>:<line>: ...").
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
ExperimentConfig parse_config(const std::filesystem::path& path);

// Applies one assignment; used by the parser and for command line overrides.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

std::unique_ptr<MdpFamily> make_family(const ExperimentConfig& cfg);

struct MetricsRow {
  std::uint64_t seed = 0;
  std::string method;
  std::string env;
  long sim_epochs_total = 0;
  long sim_epochs_jacobian = 0;
  long sim_epochs_training = 0;
  long sim_epochs_evaluation = 0;
  long train_iters = 0;
  bool reached_target = false;
  double wall_time_s = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr const char* kMetricsHeader =
    "seed,method,env,sim_epochs_total,sim_epochs_jacobian,sim_epochs_training,"
    "sim_epochs_evaluation,train_iters,reached_target,wall_time_s";

MetricsRow metrics_row(const PathRecord& record, double wall_time_s);
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// Mean and sample standard deviation (n - 1) per method; std is null for n < 2.
nlohmann::json summarize(const std::vector<MetricsRow>& rows);

// Expert for one seed: trained by reverse curriculum from a scripted demo on
// trainable families, a fresh policy otherwise.
struct SeedExpert {
  GaussianMlpPolicy policy;
  std::optional<ExpertTrainingLog> log;
  std::vector<Vec> demo_states;
};
SeedExpert make_seed_expert(const MdpFamily& family, const ExperimentConfig& cfg, std::uint64_t seed);

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  bool any_timeout = false;
};

// Writes <out>/seed_<s>/{expert.json, <method>/path_record.json,
// <method>/policy.json}, <out>/metrics.csv and <out>/summary.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace evopath
