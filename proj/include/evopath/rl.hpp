#pragma once

// Rollouts, generalized advantage estimation, baseline regression and natural
// policy gradient updates.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evopath/env.hpp"
#include "evopath/ledger.hpp"
#include "evopath/policy.hpp"
#include "evopath/value_function.hpp"

namespace evopath {

struct RlConfig {
  double gamma = 0.995;
  double gae_lambda = 0.97;
  double npg_step = 1e-4;  // KL-normalized step size delta
  int batch = 12;          // trajectories per update
  int cg_iters = 10;
  double cg_damping = 1e-4;
  ValueFitOptions value_fit;
  int workers = 1;  // rollout threads; results are independent of this

  void validate() const;
};

enum class ActionMode { kStochastic, kMean };
enum class DoneReason { kSuccess, kHorizon };

struct Trajectory {
  Mat observations;  // obs_dim x T, observation before each action
  Mat actions;       // act_dim x T, unclipped sampled actions
  Vec rewards;       // T
  Vec log_probs;     // T
  int horizon = 0;
  bool success = false;
  DoneReason done_reason = DoneReason::kHorizon;

  int length() const { return static_cast<int>(rewards.size()); }
  double discounted_return(double gamma) const;
};

// Environment instance plus an optional start state for reset-to-state.
struct EpisodeSetup {
  std::unique_ptr<Environment> env;
  std::optional<Vec> start_state;
};
// Builds the environment for trajectory `index`; may draw from `rng`.
using EpisodeFactory = std::function<EpisodeSetup(int index, Rng& rng)>;

Trajectory run_episode(const GaussianMlpPolicy& policy, EpisodeSetup setup, Rng& rng, ActionMode mode);

// Runs `batch` complete episodes. Trajectory j uses the stream stream.derive("traj", j)
// and is added to the ledger under `purpose`.
std::vector<Trajectory> collect_rollouts(const GaussianMlpPolicy& policy, const EpisodeFactory& factory,
                                         int batch, const Rng& stream, Ledger& ledger,
                                         EpochPurpose purpose = EpochPurpose::kTraining,
                                         ActionMode mode = ActionMode::kStochastic, int workers = 1);

// sum_{k >= t} gamma^{k-t} r_k for every t.
Vec discounted_returns(const Vec& rewards, double gamma);

// A_t = delta_t + gamma lambda A_{t+1}, delta_t = r_t + gamma V(s_{t+1}) - V(s_t), V after the
// last step is 0. Raw (unnormalized) advantages.
Vec compute_gae(const Trajectory& traj, const Vec& values, double gamma, double gae_lambda);

// Zero mean, unit standard deviation when the std is positive.
Vec normalize_advantages(const Vec& advantages);

// Value-network inputs: normalized observation and t / horizon.
Mat value_features(const GaussianMlpPolicy& policy, const Trajectory& traj);

ValueFitStats fit_value(ValueFunction& value_fn, const GaussianMlpPolicy& policy,
                        const std::vector<Trajectory>& trajectories, const RlConfig& cfg);

// ---- natural gradient --------------------------------------------------

// (F + damping I) v with F = S S^T / N for score columns S.
Vec fisher_vector_product(const Mat& scores, const Vec& v, double damping);

struct CgResult {
  Vec x;
  int iterations = 0;
  double residual_norm = 0.0;
};
CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& b, int max_iters,
                            double rel_tol = 1e-10);

struct NpgStep {
  Vec delta;  // parameter increment, zero if skipped
  Vec gradient;
  double gTx = 0.0;
  double step_scale = 0.0;
  double cg_residual = 0.0;
  int cg_iterations = 0;
  bool applied = false;
  std::string skip_reason;
};

// g = S A / N, x = (F + damping I)^{-1} g by CG, delta = sqrt(2 step / (g^T x + eps)) x.
NpgStep compute_npg_step(const Mat& scores, const Vec& advantages, double step, int cg_iters,
                         double damping);

struct NpgDiagnostics {
  bool applied = false;
  std::string skip_reason;
  double gradient_norm = 0.0;
  double gTx = 0.0;
  double kl = 0.0;  // mean KL(old || new) on the batch after the step
  double cg_residual = 0.0;
};

// One update; always increments ledger.train_iters, including skipped updates.
NpgDiagnostics npg_update(GaussianMlpPolicy& policy, const std::vector<Trajectory>& trajectories,
                          const Vec& advantages, const RlConfig& cfg, Ledger& ledger);

// Policy together with its value baseline.
struct Learner {
  GaussianMlpPolicy policy;
  ValueFunction value;

  static Learner fresh(int obs_dim, int act_dim, Rng& rng);
  // Value net with a new initialization, matching the policy's observation size.
  static Learner around(GaussianMlpPolicy policy, Rng& rng);
};

struct IterationStats {
  double batch_success_rate = 0.0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  NpgDiagnostics npg;
  ValueFitStats value;
};

// Collect a batch, compute advantages, update the policy, refit the baseline.
IterationStats train_iteration(Learner& learner, const EpisodeFactory& factory, const RlConfig& cfg,
                               const Rng& stream, Ledger& ledger);

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
  int episodes = 0;
};

// Success rate of the policy on F(alpha) over fresh episodes (mean actions by
// default); adds `episodes` evaluation epochs to the ledger.
EvalResult evaluate_success(const GaussianMlpPolicy& policy, const MdpFamily& family,
                            const EvolutionParameter& alpha, int episodes, const Rng& stream,
                            Ledger& ledger, double gamma, ActionMode mode = ActionMode::kMean,
                            int workers = 1);

}  // namespace evopath
