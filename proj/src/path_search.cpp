#include "evopath/path_search.hpp"

#include <cmath>

#include "evopath/parallel.hpp"

namespace evopath {

std::string method_name(TransferMethod m) { return m == TransferMethod::kDeps ? "deps" : "linear"; }

TransferMethod parse_method(const std::string& s) {
  if (s == "deps") return TransferMethod::kDeps;
  if (s == "linear") return TransferMethod::kLinear;
  throw ConfigError("unknown method '" + s + "' (expected deps or linear)");
}

void TransferConfig::validate() const {
  if (!(xi > 0.0)) throw ConfigError("xi must be > 0");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(lambda1 > 0.0 && lambda1 < 1.0)) throw ConfigError("lambda1 must be in (0, 1)");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must be in (0, 1]");
  if (curriculum_iters < 0) throw ConfigError("curriculum_iters must be >= 0");
  if (probes_per_delta < 1) throw ConfigError("probes_per_delta must be >= 1");
  if (eval_episodes < 1 || target_eval_episodes < 1 || precheck_episodes < 1) throw ConfigError("eval episode counts must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be >= 0");
  if (max_steps < 1 || max_train_iters < 0) throw ConfigError("step and iteration caps must be positive");
  if (!(target_success > 0.0 && target_success <= 1.0)) throw ConfigError("target_success must be in (0, 1]");
  rl.validate();
}

nlohmann::json TransferConfig::to_json() const {
  return {{"xi", xi},
          {"n", n},
          {"lambda", lambda},
          {"lambda1", lambda1},
          {"q", q},
          {"curriculum_iters", curriculum_iters},
          {"probes_per_delta", probes_per_delta},
          {"common_random_numbers", common_random_numbers},
          {"eval_episodes", eval_episodes},
          {"precheck_episodes", precheck_episodes},
          {"eval_every", eval_every},
          {"early_stop", early_stop},
          {"recheck_after_train", recheck_after_train},
          {"initial_direction", initial_direction == InitialDirection::kPull ? "pull" : "sphere"},
          {"ridge", ridge},
          {"max_steps", max_steps},
          {"max_train_iters", max_train_iters},
          {"train_at_target", train_at_target},
          {"target_success", target_success},
          {"target_eval_episodes", target_eval_episodes},
          {"eval_mode", eval_mode == ActionMode::kMean ? "mean" : "stochastic"},
          {"rl",
           {{"gamma", rl.gamma},
            {"gae_lambda", rl.gae_lambda},
            {"npg_step", rl.npg_step},
            {"batch", rl.batch},
            {"cg_iters", rl.cg_iters},
            {"cg_damping", rl.cg_damping},
            {"value_epochs", rl.value_fit.epochs},
            {"value_lr", rl.value_fit.learning_rate}}}};
}

ProbeResult probe_returns(const GaussianMlpPolicy& policy, const MdpFamily& family,
                          const EvolutionParameter& alpha, const SphereSample& deltas,
                          const ProbeOptions& opts, const Rng& stream, Ledger& ledger) {
  const int m = opts.episodes_per_point;
  if (m < 1) throw PreconditionError("probe_returns: m must be >= 1");
  if (deltas.dim() != alpha.dim()) throw DimensionError("probe_returns: delta dimension mismatch");
  const int points = deltas.count() + 1;
  std::vector<double> returns(static_cast<std::size_t>(points) * m);
  parallel_for(points * m, opts.workers, [&](int job) {
    const int i = job / m;
    const int episode = job % m;
    const EvolutionParameter at =
        i == 0 ? alpha : clamp_box(alpha.values() + deltas.deltas.row(i - 1).transpose());
    Rng rng = opts.common_random_numbers ? stream.derive("episode", static_cast<std::uint64_t>(episode))
                                         : stream.derive("probe", static_cast<std::uint64_t>(job));
    Trajectory t = run_episode(policy, EpisodeSetup{family.make(at), std::nullopt}, rng, opts.mode);
    returns[job] = t.discounted_return(opts.gamma);
  });
  ledger.add_epochs(EpochPurpose::kJacobian, static_cast<long>(points) * m);

  ProbeResult out;
  out.epochs_used = static_cast<long>(points) * m;
  auto mean_of = [&](int i) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += returns[static_cast<std::size_t>(i) * m + k];
    return s / m;
  };
  out.rho0 = mean_of(0);
  out.rho.resize(deltas.count());
  for (int i = 1; i < points; ++i) out.rho[i - 1] = mean_of(i);
  return out;
}

JacobianEstimate lsq_jacobian(const Mat& deltas, const Vec& rho, double rho0, double ridge) {
  if (deltas.rows() < 1 || deltas.rows() != rho.size()) {
    throw DimensionError("lsq_jacobian: need one return per probe direction");
  }
  if (!deltas.allFinite() || !rho.allFinite() || !std::isfinite(rho0)) {
    throw PreconditionError("lsq_jacobian: non-finite input");
  }
  if (!(ridge >= 0.0)) throw PreconditionError("lsq_jacobian: ridge must be >= 0");
  const Vec rhs = rho.array() - rho0;
  JacobianEstimate est;
  if (ridge == 0.0) {
    // minimum-norm least squares, also defined when n < D
    est.J = deltas.completeOrthogonalDecomposition().solve(rhs);
  } else {
    Mat normal = deltas.transpose() * deltas;
    normal.diagonal().array() += ridge;
    est.J = normal.ldlt().solve(deltas.transpose() * rhs);
  }
  est.residual_norm = (deltas * est.J - rhs).norm();
  est.n_probes = static_cast<int>(deltas.rows());
  est.rho0 = rho0;
  return est;
}

Direction evolution_direction(const Vec& J, const EvolutionParameter& alpha, double lambda, double xi) {
  if (J.size() != alpha.dim()) throw DimensionError("evolution_direction: J dimension mismatch");
  if (alpha.at_target()) throw PreconditionError("evolution_direction: alpha is already the target");
  const Vec to_target = Vec::Ones(alpha.dim()) - alpha.values();
  const Vec pull = to_target / to_target.norm();
  Direction out;
  constexpr double kTiny = 1e-12;
  const double jn = J.norm();
  if (!(jn >= kTiny)) {
    out.l = xi * pull;
    out.fallback = true;
    return out;
  }
  const Vec blended = J / jn + lambda * pull;
  const double bn = blended.norm();
  if (!(bn >= kTiny)) {
    out.l = xi * pull;
    out.fallback = true;
    return out;
  }
  out.l = blended / bn * xi;
  return out;
}

double beta_lower_bound(double lambda1, int e) { return 1.0 - std::pow(lambda1, e); }

double sample_beta(Rng& rng, double lambda1, int e) {
  return rng.uniform(beta_lower_bound(lambda1, e), 1.0);
}

CurriculumResult curriculum_train(Learner& learner, const MdpFamily& family,
                                  const EvolutionParameter& alpha, const Vec& l,
                                  const TransferConfig& cfg, const Rng& stream, Ledger& ledger) {
  CurriculumResult out;
  if (!family.trainable()) return out;
  const EvolutionParameter next = clamp_box(alpha.values() + l);
  for (int e = 0; e < cfg.curriculum_iters; ++e) {
    if (ledger.train_iters >= cfg.max_train_iters) break;
    EpisodeFactory factory = [&](int, Rng& rng) {
      const double beta = sample_beta(rng, cfg.lambda1, e);
      return EpisodeSetup{family.make(clamp_box(alpha.values() + beta * l)), std::nullopt};
    };
    train_iteration(learner, factory, cfg.rl, stream.derive("iter", e), ledger);
    ++out.iterations;
    if (cfg.early_stop && (e + 1) % cfg.eval_every == 0) {
      EvalResult check = evaluate_success(learner.policy, family, next, cfg.eval_episodes,
                                          stream.derive("check", e), ledger, cfg.rl.gamma,
                                          cfg.eval_mode, cfg.rl.workers);
      out.last_check = check.success_rate;
      if (check.success_rate >= cfg.q) {
        out.early_stopped = true;
        break;
      }
    }
  }
  return out;
}

// ---- path record -------------------------------------------------------

Ledger PathRecord::cumulative() const {
  Ledger total = precheck;
  for (const auto& s : steps) total += s.counters;
  total += target.counters;
  return total;
}

std::vector<Vec> PathRecord::visited() const {
  std::vector<Vec> out;
  if (!steps.empty()) out.push_back(steps.front().alpha);
  for (const auto& s : steps) out.push_back(s.alpha_next);
  return out;
}

namespace {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json ledger_json(const Ledger& l) {
  return {{"sim_epochs_total", l.sim_epochs()},
          {"sim_epochs_jacobian", l.jacobian_epochs},
          {"sim_epochs_training", l.training_epochs},
          {"sim_epochs_evaluation", l.evaluation_epochs},
          {"train_iters", l.train_iters}};
}

}  // namespace

nlohmann::json PathRecord::to_json() const {
  using nlohmann::json;
  json doc;
  doc["schema"] = "evopath-path-record";
  doc["schema_version"] = kPathRecordSchemaVersion;
  doc["method"] = method;
  doc["env"] = env_id;
  doc["seed"] = seed;
  doc["status"] = status;
  doc["config"] = config;
  doc["precheck"] = {{"success_rate", precheck_success}, {"counters", ledger_json(precheck)}};
  json arr = json::array();
  for (const auto& s : steps) {
    json j;
    j["index"] = s.index;
    j["alpha"] = vec_json(s.alpha);
    j["direction"] = vec_json(s.direction);
    j["alpha_next"] = vec_json(s.alpha_next);
    j["gate_success"] = s.gate_success;
    j["triggered"] = s.triggered;
    if (s.redirect_only) j["redirect_only"] = true;
    if (s.jacobian) {
      j["jacobian"] = {{"J", vec_json(s.jacobian->J)},
                       {"residual_norm", s.jacobian->residual_norm},
                       {"n_probes", s.jacobian->n_probes},
                       {"rho0", s.jacobian->rho0},
                       {"fallback", s.direction_fallback}};
    } else {
      j["jacobian"] = nullptr;
    }
    j["curriculum_iters"] = s.curriculum_iters;
    j["early_stopped"] = s.early_stopped;
    if (s.recheck_success) j["recheck_success"] = *s.recheck_success;
    j["counters"] = ledger_json(s.counters);
    arr.push_back(std::move(j));
  }
  doc["steps"] = std::move(arr);
  doc["target_phase"] = {{"ran", target.ran},
                         {"evaluations", target.evaluations},
                         {"final_success", target.final_success},
                         {"reached", target.reached},
                         {"counters", ledger_json(target.counters)}};
  doc["final_alpha"] = vec_json(final_alpha);
  doc["policy"] = policy_ref;
  doc["cumulative"] = ledger_json(cumulative());
  return doc;
}

// ---- transfer loop -----------------------------------------------------

TransferResult run_transfer(TransferMethod method, const MdpFamily& family,
                            const GaussianMlpPolicy& expert, const TransferConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  if (family.trainable() && (expert.obs_dim() != family.obs_dim() || expert.act_dim() != family.act_dim())) {
    throw DimensionError("transfer: expert policy shape does not match the environment family");
  }
  const int dim = family.dim();
  const Rng root(seed);
  Rng learner_rng = root.derive("learner");
  Learner learner = Learner::around(expert, learner_rng);

  TransferResult result;
  PathRecord& rec = result.record;
  rec.method = method_name(method);
  rec.env_id = family.id();
  rec.seed = seed;
  rec.config = cfg.to_json();

  EvolutionParameter alpha = EvolutionParameter::zeros(dim);
  const Vec linear_l = Vec::Constant(dim, cfg.xi / std::sqrt(static_cast<double>(dim)));
  Vec l;
  if (method == TransferMethod::kLinear || cfg.initial_direction == InitialDirection::kPull) {
    l = linear_l;
  } else {
    Rng init = root.derive("init");
    l = sample_sphere(init, dim, cfg.xi, 1).deltas.row(0).transpose();
  }

  // The "policy" of a non-trainable family has nothing to validate.
  if (family.trainable()) {
    EvalResult pre = evaluate_success(learner.policy, family, alpha, cfg.precheck_episodes,
                                      root.derive("precheck"), rec.precheck, cfg.rl.gamma,
                                      cfg.eval_mode, cfg.rl.workers);
    rec.precheck_success = pre.success_rate;
    if (pre.success_rate < cfg.q) {
      throw PreconditionError("expert success " + std::to_string(pre.success_rate) +
                              " at alpha = 0 is below q = " + std::to_string(cfg.q));
    }
  }

  bool force_redirect = false;
  for (int k = 0; !alpha.at_target(); ++k) {
    const long iters_so_far = rec.cumulative().train_iters;
    if (k >= cfg.max_steps || iters_so_far >= cfg.max_train_iters) {
      rec.status = "timeout";
      break;
    }
    PathStep step;
    step.index = k;
    step.alpha = alpha.values();
    Ledger& ledger = step.counters;
    ledger.train_iters = 0;
    // budget checks inside the curriculum see the run-wide iteration count
    Ledger budget;
    budget.train_iters = iters_so_far;

    EvalResult gate = evaluate_success(learner.policy, family, clamp_box(alpha.values() + l),
                                       cfg.eval_episodes, root.derive("gate", k), ledger, cfg.rl.gamma,
                                       cfg.eval_mode, cfg.rl.workers);
    step.gate_success = gate.success_rate;
    step.triggered = gate.success_rate < cfg.q;

    if (method == TransferMethod::kDeps && (step.triggered || force_redirect)) {
      step.redirect_only = !step.triggered;
      Rng sphere_rng = root.derive("sphere", k);
      SphereSample deltas = sample_sphere(sphere_rng, dim, cfg.xi, cfg.n);
      const ProbeOptions popts{cfg.probes_per_delta, cfg.rl.gamma, cfg.eval_mode,
                               cfg.common_random_numbers, cfg.rl.workers};
      ProbeResult probe = probe_returns(learner.policy, family, alpha, deltas, popts,
                                        root.derive("probe", k), ledger);
      step.jacobian = lsq_jacobian(deltas.deltas, probe.rho, probe.rho0, cfg.ridge);
      Direction dir = evolution_direction(step.jacobian->J, alpha, cfg.lambda, cfg.xi);
      l = dir.l;
      step.direction_fallback = dir.fallback;
    }
    if (step.triggered) {
      const long before = budget.train_iters;
      CurriculumResult cr = curriculum_train(learner, family, alpha, l, cfg, root.derive("train", k), budget);
      step.curriculum_iters = cr.iterations;
      step.early_stopped = cr.early_stopped;
      ledger.train_iters += budget.train_iters - before;
      ledger.training_epochs += budget.training_epochs;
      ledger.evaluation_epochs += budget.evaluation_epochs;
      if (cfg.recheck_after_train) {
        EvalResult re = evaluate_success(learner.policy, family, clamp_box(alpha.values() + l),
                                         cfg.eval_episodes, root.derive("recheck", k), ledger,
                                         cfg.rl.gamma, cfg.eval_mode, cfg.rl.workers);
        step.recheck_success = re.success_rate;
      }
    }
    step.direction = l;
    const EvolutionParameter next = clamp_box(alpha.values() + l);
    step.alpha_next = next.values();
    force_redirect = (next == alpha);
    alpha = next;
    rec.steps.push_back(std::move(step));
  }

  if (alpha.at_target() && cfg.train_at_target && family.trainable()) {
    TargetPhase& tp = rec.target;
    tp.ran = true;
    const Rng target_stream = root.derive("target");
    for (int round = 0;; ++round) {
      EvalResult ev = evaluate_success(learner.policy, family, alpha, cfg.target_eval_episodes,
                                       target_stream.derive("eval", round), tp.counters, cfg.rl.gamma,
                                       cfg.eval_mode, cfg.rl.workers);
      tp.evaluations.push_back(ev.success_rate);
      tp.final_success = ev.success_rate;
      if (ev.success_rate >= cfg.target_success) {
        tp.reached = true;
        break;
      }
      Ledger budget;
      budget.train_iters = rec.cumulative().train_iters;
      if (budget.train_iters >= cfg.max_train_iters) {
        rec.status = "timeout";
        break;
      }
      EpisodeFactory factory = [&](int, Rng&) { return EpisodeSetup{family.make(alpha), std::nullopt}; };
      for (int e = 0; e < cfg.eval_every && budget.train_iters < cfg.max_train_iters; ++e) {
        const long before = budget.train_iters;
        train_iteration(learner, factory, cfg.rl, target_stream.derive("iter", round * cfg.eval_every + e),
                        budget);
        tp.counters.train_iters += budget.train_iters - before;
      }
      tp.counters.training_epochs += budget.training_epochs;
    }
  }

  rec.final_alpha = alpha.values();
  result.policy = learner.policy;
  return result;
}

TransferResult deps_transfer(const MdpFamily& family, const GaussianMlpPolicy& expert,
                             const TransferConfig& cfg, std::uint64_t seed) {
  return run_transfer(TransferMethod::kDeps, family, expert, cfg, seed);
}

TransferResult linear_transfer(const MdpFamily& family, const GaussianMlpPolicy& expert,
                               const TransferConfig& cfg, std::uint64_t seed) {
  return run_transfer(TransferMethod::kLinear, family, expert, cfg, seed);
}

}  // namespace evopath
