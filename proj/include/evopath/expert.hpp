#pragma once

// Source-robot expert training from one state-only demonstration by reverse
// curriculum: episodes start on demo states near the goal, and the start index
// moves backward along the demo each time the policy masters the current one.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "evopath/reacher.hpp"
#include "evopath/rl.hpp"

namespace evopath {

struct ReverseCurriculumConfig {
  int stride = 5;                   // demo states to move backward per promotion
  double promote_threshold = 0.667; // windowed training success needed to promote
  int window = 20;                  // trajectories in the promotion window
  double noise_scale = 0.02;        // start-position jitter
  int max_outer_iters = 2000;       // policy updates, all stages together
  double final_threshold = 0.8;     // success required from the nominal reset
  int final_eval_episodes = 100;
  int final_eval_every = 10;        // index-0 updates between final evaluations
  ActionMode eval_mode = ActionMode::kStochastic;
  RlConfig rl;

  void validate() const;
};

struct CurriculumStage {
  int index = 0;  // demo index episodes start from; 0 is the nominal reset distribution
  int iterations = 0;
  double window_success = 0.0;
};

struct ExpertTrainingLog {
  std::vector<CurriculumStage> stages;
  std::vector<double> final_evaluations;
  Ledger ledger;
  bool success = false;
  int furthest_index = 0;  // smallest index promoted into
  double final_success = 0.0;

  nlohmann::json to_json() const;
};

struct ExpertResult {
  GaussianMlpPolicy policy;
  ExpertTrainingLog log;
};

// Throws UnsupportedError when the environment cannot reset to a state and
// PreconditionError when the demo is empty.
ExpertResult reverse_curriculum_train(const MdpFamily& family, const std::vector<Vec>& demo_states,
                                      const GaussianMlpPolicy& policy_init,
                                      const ReverseCurriculumConfig& cfg, std::uint64_t seed);

// Demo trajectory document: {"format": "evopath-demo", "env_id", "state_dim", "states": [[...], ...]}.
nlohmann::json demo_to_json(const std::string& env_id, const std::vector<Vec>& states);
std::vector<Vec> demo_from_json(const nlohmann::json& doc, int state_dim);
void save_demo(const std::filesystem::path& path, const std::string& env_id, const std::vector<Vec>& states);
std::vector<Vec> load_demo(const std::filesystem::path& path, int state_dim);

// Welford running mean / variance over observation columns.
class RunningStats {
 public:
  explicit RunningStats(int dim) : mean_(Vec::Zero(dim)), m2_(Vec::Zero(dim)) {}
  void push(const Mat& columns);
  long count() const { return count_; }
  const Vec& mean() const { return mean_; }
  Vec stddev(double floor) const;

 private:
  Vec mean_;
  Vec m2_;
  long count_ = 0;
};

// Sets the policy's observation normalization to (shift, scale) and rewrites the
// first layer so the policy computes exactly the same function as before.
void fold_normalization(GaussianMlpPolicy& policy, const Vec& shift, const Vec& scale);

}  // namespace evopath
