#pragma once

// Evolution path search: walk from alpha = 0 to alpha = 1 in steps of length
// xi, steering each step by a least-squares estimate of d E[return] / d alpha
// blended with a pull toward the target corner, and fine-tuning the policy on
// randomly interpolated robots between the current and next alpha.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evopath/env.hpp"
#include "evopath/ledger.hpp"
#include "evopath/policy.hpp"
#include "evopath/rl.hpp"

namespace evopath {

enum class InitialDirection { kPull, kSphere };
enum class TransferMethod { kDeps, kLinear };

std::string method_name(TransferMethod m);
TransferMethod parse_method(const std::string& s);

struct TransferConfig {
  double xi = 0.03;          // step length in alpha space
  int n = 72;                // sphere probes per Jacobian estimate
  double lambda = 1.0;       // pull weight
  double lambda1 = 0.995;    // curriculum range shrink ratio
  double q = 0.667;          // success-rate gate
  int curriculum_iters = 50; // N_e
  int probes_per_delta = 1;  // m, episodes per probe point
  // Episode j at every probe point replays the same random stream (start
  // state, action and dynamics noise), so rho_i - rho_0 carries no
  // episode-to-episode noise.
  bool common_random_numbers = true;
  int eval_episodes = 12;
  int precheck_episodes = 100;  // expert validation at alpha = 0
  int eval_every = 5;        // curriculum iterations between early-stop checks
  bool early_stop = true;
  bool recheck_after_train = false;
  InitialDirection initial_direction = InitialDirection::kPull;
  double ridge = 0.0;  // 0: minimum-norm least squares
  int max_steps = 2000;
  long max_train_iters = 20000;
  // After reaching alpha = 1, keep training there until this success rate.
  bool train_at_target = true;
  double target_success = 0.8;
  int target_eval_episodes = 50;
  // How gate checks, probes and target evaluations act: sampled or mean actions.
  ActionMode eval_mode = ActionMode::kStochastic;
  RlConfig rl;

  void validate() const;
  nlohmann::json to_json() const;
};

struct JacobianEstimate {
  Vec J;
  double residual_norm = 0.0;
  int n_probes = 0;
  double rho0 = 0.0;
};

struct ProbeResult {
  double rho0 = 0.0;
  Vec rho;
  long epochs_used = 0;
};

struct ProbeOptions {
  int episodes_per_point = 1;  // m
  double gamma = 0.995;
  ActionMode mode = ActionMode::kStochastic;
  bool common_random_numbers = true;
  int workers = 1;
};

// rho_i = mean discounted return of m episodes on F(clamp(alpha + delta_i));
// delta_0 = 0 gives rho0. Adds (n + 1) m jacobian epochs to the ledger.
ProbeResult probe_returns(const GaussianMlpPolicy& policy, const MdpFamily& family,
                          const EvolutionParameter& alpha, const SphereSample& deltas,
                          const ProbeOptions& opts, const Rng& stream, Ledger& ledger);

// Least-squares J for D J ~ rho - rho0 1 with the deltas as rows of D.
// ridge = 0: minimum-norm solution; ridge > 0: (D^T D + ridge I)^{-1} D^T (rho - rho0 1).
JacobianEstimate lsq_jacobian(const Mat& deltas, const Vec& rho, double rho0, double ridge = 0.0);

struct Direction {
  Vec l;
  bool fallback = false;  // pull-only direction used
};

// l = J/|J| + lambda (1 - alpha)/|1 - alpha|, rescaled to length xi. Falls back
// to the pull direction when |J| or the blended vector vanishes.
Direction evolution_direction(const Vec& J, const EvolutionParameter& alpha, double lambda, double xi);

// beta ~ Uniform(1 - lambda1^e, 1)
double beta_lower_bound(double lambda1, int e);
double sample_beta(Rng& rng, double lambda1, int e);

struct CurriculumResult {
  int iterations = 0;
  bool early_stopped = false;
  std::optional<double> last_check;
};

// Up to N_e updates; in iteration e every trajectory draws its own beta and runs
// on F(clamp(alpha + beta l)). No-op for non-trainable families.
CurriculumResult curriculum_train(Learner& learner, const MdpFamily& family,
                                  const EvolutionParameter& alpha, const Vec& l,
                                  const TransferConfig& cfg, const Rng& stream, Ledger& ledger);

struct PathStep {
  int index = 0;
  Vec alpha;       // before the step
  Vec direction;   // l used for the step
  Vec alpha_next;  // clamp(alpha + l)
  double gate_success = 0.0;
  bool triggered = false;
  bool redirect_only = false;
  std::optional<JacobianEstimate> jacobian;
  bool direction_fallback = false;
  int curriculum_iters = 0;
  bool early_stopped = false;
  std::optional<double> recheck_success;
  Ledger counters;
};

struct TargetPhase {
  bool ran = false;
  std::vector<double> evaluations;
  double final_success = 0.0;
  bool reached = false;
  Ledger counters;
};

inline constexpr int kPathRecordSchemaVersion = 1;

struct PathRecord {
  std::string method;
  std::string env_id;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::string status = "completed";  // or "timeout"
  double precheck_success = 0.0;
  Ledger precheck;
  std::vector<PathStep> steps;
  TargetPhase target;
  Vec final_alpha;
  std::string policy_ref;

  Ledger cumulative() const;
  std::vector<Vec> visited() const;  // alpha_0 followed by every alpha_next
  nlohmann::json to_json() const;
};

struct TransferResult {
  GaussianMlpPolicy policy;
  PathRecord record;
  bool timed_out() const { return record.status != "completed"; }
};

TransferResult deps_transfer(const MdpFamily& family, const GaussianMlpPolicy& expert,
                             const TransferConfig& cfg, std::uint64_t seed);
TransferResult linear_transfer(const MdpFamily& family, const GaussianMlpPolicy& expert,
                               const TransferConfig& cfg, std::uint64_t seed);
TransferResult run_transfer(TransferMethod method, const MdpFamily& family,
                            const GaussianMlpPolicy& expert, const TransferConfig& cfg,
                            std::uint64_t seed);

}  // namespace evopath
