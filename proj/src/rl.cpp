#include "evopath/rl.hpp"

#include <cmath>

#include "evopath/parallel.hpp"

namespace evopath {

void RlConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("rl: gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("rl: gae_lambda must be in [0, 1]");
  if (!(npg_step > 0.0)) throw ConfigError("rl: npg_step must be > 0");
  if (batch < 1) throw ConfigError("rl: batch must be >= 1");
  if (cg_iters < 1) throw ConfigError("rl: cg_iters must be >= 1");
  if (!(cg_damping > 0.0)) throw ConfigError("rl: cg_damping must be > 0");
  if (value_fit.epochs < 0 || !(value_fit.learning_rate > 0.0)) throw ConfigError("rl: bad value fit options");
  if (workers < 1) throw ConfigError("rl: workers must be >= 1");
}

double Trajectory::discounted_return(double gamma) const {
  double ret = 0.0, discount = 1.0;
  for (Eigen::Index t = 0; t < rewards.size(); ++t) {
    ret += discount * rewards[t];
    discount *= gamma;
  }
  return ret;
}

Trajectory run_episode(const GaussianMlpPolicy& policy, EpisodeSetup setup, Rng& rng, ActionMode mode) {
  Environment& env = *setup.env;
  Vec obs = setup.start_state ? env.reset_to_state(*setup.start_state) : env.reset(rng);
  const int horizon = env.horizon();
  std::vector<Vec> observations, actions;
  std::vector<double> rewards, log_probs;
  while (!env.done()) {
    Vec action;
    double lp = 0.0;
    if (mode == ActionMode::kStochastic) {
      ActionSample s = policy.sample(obs, rng);
      action = std::move(s.action);
      lp = s.log_prob;
    } else {
      action = policy.mean(obs);
      lp = policy.log_prob(obs, action);
    }
    StepResult r = env.step(action, rng);
    observations.push_back(std::move(obs));
    actions.push_back(std::move(action));
    rewards.push_back(r.reward);
    log_probs.push_back(lp);
    obs = std::move(r.observation);
  }

  Trajectory traj;
  const int n = static_cast<int>(rewards.size());
  traj.observations.resize(env.obs_dim(), n);
  traj.actions.resize(env.act_dim(), n);
  for (int t = 0; t < n; ++t) {
    traj.observations.col(t) = observations[t];
    traj.actions.col(t) = actions[t];
  }
  traj.rewards = Eigen::Map<Vec>(rewards.data(), n);
  traj.log_probs = Eigen::Map<Vec>(log_probs.data(), n);
  traj.horizon = horizon;
  traj.success = env.success();
  traj.done_reason = env.success() ? DoneReason::kSuccess : DoneReason::kHorizon;
  return traj;
}

std::vector<Trajectory> collect_rollouts(const GaussianMlpPolicy& policy, const EpisodeFactory& factory,
                                         int batch, const Rng& stream, Ledger& ledger,
                                         EpochPurpose purpose, ActionMode mode, int workers) {
  if (batch < 1) throw PreconditionError("collect_rollouts: batch must be >= 1");
  std::vector<Trajectory> out(batch);
  parallel_for(batch, workers, [&](int j) {
    Rng rng = stream.derive("traj", static_cast<std::uint64_t>(j));
    EpisodeSetup setup = factory(j, rng);
    out[j] = run_episode(policy, std::move(setup), rng, mode);
  });
  ledger.add_epochs(purpose, batch);
  return out;
}

Vec discounted_returns(const Vec& rewards, double gamma) {
  Vec out(rewards.size());
  double acc = 0.0;
  for (Eigen::Index t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

Vec compute_gae(const Trajectory& traj, const Vec& values, double gamma, double gae_lambda) {
  const int n = traj.length();
  if (values.size() != n) throw DimensionError("compute_gae: one value per step required");
  Vec adv(n);
  double next_adv = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double next_value = (t + 1 < n) ? values[t + 1] : 0.0;
    const double delta = traj.rewards[t] + gamma * next_value - values[t];
    next_adv = delta + gamma * gae_lambda * next_adv;
    adv[t] = next_adv;
  }
  return adv;
}

Vec normalize_advantages(const Vec& advantages) {
  if (advantages.size() == 0) return advantages;
  const double mean = advantages.mean();
  Vec centered = advantages.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / static_cast<double>(advantages.size()));
  if (std > 0.0) centered /= std;
  return centered;
}

Mat value_features(const GaussianMlpPolicy& policy, const Trajectory& traj) {
  const int n = traj.length();
  Mat f(policy.obs_dim() + 1, n);
  f.topRows(policy.obs_dim()) = policy.normalize(traj.observations);
  const double h = static_cast<double>(std::max(traj.horizon, 1));
  for (int t = 0; t < n; ++t) f(policy.obs_dim(), t) = t / h;
  return f;
}

namespace {

struct Stacked {
  Mat features;
  Mat observations;
  Mat actions;
  Vec returns;
};

Stacked stack(const GaussianMlpPolicy& policy, const std::vector<Trajectory>& trajs, double gamma) {
  Eigen::Index total = 0;
  for (const auto& t : trajs) total += t.length();
  Stacked s;
  s.features.resize(policy.obs_dim() + 1, total);
  s.observations.resize(policy.obs_dim(), total);
  s.actions.resize(policy.act_dim(), total);
  s.returns.resize(total);
  Eigen::Index off = 0;
  for (const auto& t : trajs) {
    const int n = t.length();
    s.features.middleCols(off, n) = value_features(policy, t);
    s.observations.middleCols(off, n) = t.observations;
    s.actions.middleCols(off, n) = t.actions;
    s.returns.segment(off, n) = discounted_returns(t.rewards, gamma);
    off += n;
  }
  return s;
}

}  // namespace

ValueFitStats fit_value(ValueFunction& value_fn, const GaussianMlpPolicy& policy,
                        const std::vector<Trajectory>& trajectories, const RlConfig& cfg) {
  if (trajectories.empty()) throw PreconditionError("fit_value: no trajectories");
  Stacked s = stack(policy, trajectories, cfg.gamma);
  return value_fn.fit(s.features, s.returns, cfg.value_fit);
}

Vec fisher_vector_product(const Mat& scores, const Vec& v, double damping) {
  const double n = static_cast<double>(scores.cols());
  Vec sv = scores.transpose() * v;
  return scores * sv / n + damping * v;
}

CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& b, int max_iters,
                            double rel_tol) {
  CgResult out;
  out.x = Vec::Zero(b.size());
  Vec r = b;
  Vec p = r;
  double rr = r.squaredNorm();
  const double stop = rel_tol * rel_tol * b.squaredNorm();
  for (int k = 0; k < max_iters && rr > stop; ++k) {
    Vec ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    out.x += step * p;
    r -= step * ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    out.iterations = k + 1;
  }
  out.residual_norm = (apply(out.x) - b).norm();
  return out;
}

NpgStep compute_npg_step(const Mat& scores, const Vec& advantages, double step, int cg_iters,
                         double damping) {
  NpgStep out;
  out.delta = Vec::Zero(scores.rows());
  if (scores.cols() == 0 || scores.cols() != advantages.size()) {
    throw DimensionError("npg: one advantage per score column required");
  }
  out.gradient = scores * advantages / static_cast<double>(scores.cols());
  if (!out.gradient.allFinite()) {
    out.skip_reason = "non-finite gradient";
    return out;
  }
  if (out.gradient.squaredNorm() == 0.0) {
    out.skip_reason = "zero gradient";
    return out;
  }
  CgResult cg = conjugate_gradient(
      [&](const Vec& v) { return fisher_vector_product(scores, v, damping); }, out.gradient, cg_iters);
  out.cg_iterations = cg.iterations;
  out.cg_residual = cg.residual_norm;
  out.gTx = out.gradient.dot(cg.x);
  if (!(out.gTx > 0.0) || !cg.x.allFinite()) {
    out.skip_reason = "non-positive curvature";
    return out;
  }
  out.step_scale = std::sqrt(2.0 * step / (out.gTx + 1e-10));
  out.delta = out.step_scale * cg.x;
  out.applied = true;
  return out;
}

NpgDiagnostics npg_update(GaussianMlpPolicy& policy, const std::vector<Trajectory>& trajectories,
                          const Vec& advantages, const RlConfig& cfg, Ledger& ledger) {
  ++ledger.train_iters;
  NpgDiagnostics diag;
  if (trajectories.empty()) throw PreconditionError("npg_update: empty batch");

  bool any_reward = false;
  for (const auto& t : trajectories) any_reward = any_reward || (t.rewards.array() != 0.0).any();
  if (!any_reward) {
    diag.skip_reason = "zero-reward batch";
    return diag;
  }

  Stacked s = stack(policy, trajectories, cfg.gamma);
  const Mat scores = policy.score_matrix(s.observations, s.actions);
  NpgStep step = compute_npg_step(scores, advantages, cfg.npg_step, cfg.cg_iters, cfg.cg_damping);
  diag.gradient_norm = step.gradient.size() ? step.gradient.norm() : 0.0;
  diag.gTx = step.gTx;
  diag.cg_residual = step.cg_residual;
  if (!step.applied) {
    diag.skip_reason = step.skip_reason;
    return diag;
  }
  const GaussianMlpPolicy old = policy;
  Vec updated = policy.params() + step.delta;
  if (!updated.allFinite()) {
    diag.skip_reason = "non-finite parameters after step";
    return diag;
  }
  policy.set_params(updated);
  diag.applied = true;
  diag.kl = old.mean_kl(policy, s.observations);
  return diag;
}

Learner Learner::fresh(int obs_dim, int act_dim, Rng& rng) {
  GaussianMlpPolicy policy(obs_dim, act_dim);
  Rng policy_rng = rng.derive("policy-init");
  policy.initialize(policy_rng);
  return around(std::move(policy), rng);
}

Learner Learner::around(GaussianMlpPolicy policy, Rng& rng) {
  Learner l;
  l.value = ValueFunction(policy.obs_dim() + 1);
  Rng value_rng = rng.derive("value-init");
  l.value.initialize(value_rng);
  l.policy = std::move(policy);
  return l;
}

IterationStats train_iteration(Learner& learner, const EpisodeFactory& factory, const RlConfig& cfg,
                               const Rng& stream, Ledger& ledger) {
  IterationStats stats;
  std::vector<Trajectory> batch = collect_rollouts(learner.policy, factory, cfg.batch, stream, ledger,
                                                   EpochPurpose::kTraining, ActionMode::kStochastic,
                                                   cfg.workers);
  Eigen::Index total = 0;
  int successes = 0;
  double ret = 0.0;
  for (const auto& t : batch) {
    total += t.length();
    successes += t.success ? 1 : 0;
    ret += t.discounted_return(cfg.gamma);
  }
  stats.batch_success_rate = static_cast<double>(successes) / cfg.batch;
  stats.mean_return = ret / cfg.batch;
  stats.mean_length = static_cast<double>(total) / cfg.batch;

  Vec advantages(total);
  Eigen::Index off = 0;
  for (const auto& t : batch) {
    const Vec values = learner.value.predict(value_features(learner.policy, t));
    advantages.segment(off, t.length()) = compute_gae(t, values, cfg.gamma, cfg.gae_lambda);
    off += t.length();
  }
  advantages = normalize_advantages(advantages);

  // The baseline is refit on features from the policy that collected the batch.
  const GaussianMlpPolicy collector = learner.policy;
  stats.npg = npg_update(learner.policy, batch, advantages, cfg, ledger);
  stats.value = fit_value(learner.value, collector, batch, cfg);
  return stats;
}

EvalResult evaluate_success(const GaussianMlpPolicy& policy, const MdpFamily& family,
                            const EvolutionParameter& alpha, int episodes, const Rng& stream,
                            Ledger& ledger, double gamma, ActionMode mode, int workers) {
  if (episodes < 1) throw PreconditionError("evaluate_success: episodes must be >= 1");
  EpisodeFactory factory = [&](int, Rng&) { return EpisodeSetup{family.make(alpha), std::nullopt}; };
  auto trajs = collect_rollouts(policy, factory, episodes, stream, ledger, EpochPurpose::kEvaluation,
                                mode, workers);
  EvalResult out;
  out.episodes = episodes;
  int successes = 0;
  double ret = 0.0;
  for (const auto& t : trajs) {
    successes += t.success ? 1 : 0;
    ret += t.discounted_return(gamma);
  }
  out.success_rate = static_cast<double>(successes) / episodes;
  out.mean_return = ret / episodes;
  return out;
}

}  // namespace evopath
