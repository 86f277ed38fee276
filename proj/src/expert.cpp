#include "evopath/expert.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>

namespace evopath {

void ReverseCurriculumConfig::validate() const {
  if (stride < 1) throw ConfigError("reverse curriculum: stride must be >= 1");
  if (!(promote_threshold > 0.0 && promote_threshold <= 1.0)) {
    throw ConfigError("reverse curriculum: promote_threshold must be in (0, 1]");
  }
  if (window < 1) throw ConfigError("reverse curriculum: window must be >= 1");
  if (!(noise_scale >= 0.0)) throw ConfigError("reverse curriculum: noise_scale must be >= 0");
  if (max_outer_iters < 1) throw ConfigError("reverse curriculum: max_outer_iters must be >= 1");
  if (!(final_threshold > 0.0 && final_threshold <= 1.0)) {
    throw ConfigError("reverse curriculum: final_threshold must be in (0, 1]");
  }
  if (final_eval_episodes < 1 || final_eval_every < 1) throw ConfigError("reverse curriculum: bad final evaluation");
  rl.validate();
}

void RunningStats::push(const Mat& columns) {
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    ++count_;
    const Vec delta = columns.col(c) - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += (delta.array() * (columns.col(c) - mean_).array()).matrix();
  }
}

Vec RunningStats::stddev(double floor) const {
  if (count_ < 2) return Vec::Ones(mean_.size());
  return (m2_ / static_cast<double>(count_ - 1)).cwiseSqrt().cwiseMax(floor);
}

void fold_normalization(GaussianMlpPolicy& policy, const Vec& shift, const Vec& scale) {
  // first layer sees (o - s_old)/c_old today; rewrite W, b so that it sees
  // (o - shift)/scale and produces the same pre-activation.
  auto& first = policy.net().layers().front();
  const Vec& s_old = policy.obs_shift();
  const Vec& c_old = policy.obs_scale();
  // W_old (o - s_old)/c_old = W_new (o - shift)/scale + db
  const Mat w_raw = first.weight * c_old.cwiseInverse().asDiagonal();
  const Vec b_raw = first.bias - w_raw * s_old;
  first.weight = w_raw * scale.asDiagonal();
  first.bias = b_raw + w_raw * shift;
  policy.set_normalization(shift, scale);
}

ExpertResult reverse_curriculum_train(const MdpFamily& family, const std::vector<Vec>& demo_states,
                                      const GaussianMlpPolicy& policy_init,
                                      const ReverseCurriculumConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (demo_states.empty()) throw PreconditionError("reverse curriculum: empty demonstration");
  const EvolutionParameter source = EvolutionParameter::zeros(family.dim());
  {
    auto probe = family.make(source);
    if (!probe->supports_state_reset()) {
      throw UnsupportedError("reverse curriculum: environment '" + family.id() +
                             "' cannot reset to a state");
    }
    if (static_cast<int>(demo_states.front().size()) != probe->state_dim()) {
      throw DimensionError("reverse curriculum: demo state length does not match the environment");
    }
  }

  const Rng root(seed);
  Rng learner_rng = root.derive("learner");
  Learner learner = Learner::around(policy_init, learner_rng);
  RunningStats obs_stats(family.obs_dim());

  ExpertResult result;
  ExpertTrainingLog& log = result.log;
  Ledger& ledger = log.ledger;

  const int last = static_cast<int>(demo_states.size()) - 1;
  int index = std::max(0, last + 1 - cfg.stride);
  log.furthest_index = index;
  std::deque<bool> window;
  CurriculumStage stage{index, 0, 0.0};

  auto factory_for = [&](int start_index) -> EpisodeFactory {
    return [&, start_index](int, Rng& rng) {
      EpisodeSetup setup{family.make(source), std::nullopt};
      if (start_index > 0) {
        setup.start_state = setup.env->jitter_start_state(demo_states[start_index], cfg.noise_scale, rng);
      }
      return setup;
    };
  };

  int final_round = 0;
  int since_eval = 0;
  for (int it = 0; ledger.train_iters < cfg.max_outer_iters; ++it) {
    const Rng iter_stream = root.derive("iter", static_cast<std::uint64_t>(it));
    IterationStats st = train_iteration(learner, factory_for(index), cfg.rl, iter_stream, ledger);
    ++stage.iterations;
    // only the count matters for the window, not which trajectories succeeded
    const int successes = static_cast<int>(std::lround(st.batch_success_rate * cfg.rl.batch));
    for (int j = 0; j < cfg.rl.batch; ++j) {
      window.push_back(j < successes);
      if (static_cast<int>(window.size()) > cfg.window) window.pop_front();
    }
    const double window_rate =
        static_cast<double>(std::count(window.begin(), window.end(), true)) / std::max<std::size_t>(window.size(), 1);
    stage.window_success = window_rate;

    if (index > 0) {
      if (static_cast<int>(window.size()) >= cfg.window && window_rate >= cfg.promote_threshold) {
        log.stages.push_back(stage);
        index = std::max(0, index - cfg.stride);
        log.furthest_index = index;
        stage = CurriculumStage{index, 0, 0.0};
        window.clear();
      }
      continue;
    }

    ++since_eval;
    if (since_eval < cfg.final_eval_every &&
        !(static_cast<int>(window.size()) >= cfg.window && window_rate >= cfg.promote_threshold)) {
      continue;
    }
    since_eval = 0;
    EvalResult ev = evaluate_success(learner.policy, family, source, cfg.final_eval_episodes,
                                     root.derive("final", static_cast<std::uint64_t>(final_round++)), ledger,
                                     cfg.rl.gamma, cfg.eval_mode, cfg.rl.workers);
    log.final_evaluations.push_back(ev.success_rate);
    log.final_success = ev.success_rate;
    if (ev.success_rate >= cfg.final_threshold) {
      log.success = true;
      break;
    }
  }
  log.stages.push_back(stage);

  // Freeze observation statistics gathered from the source reacher into the
  // policy without changing the function it computes.
  {
    Ledger scratch;
    EpisodeFactory nominal = factory_for(0);
    auto trajs = collect_rollouts(learner.policy, nominal, cfg.rl.batch, root.derive("obs-stats"), scratch,
                                  EpochPurpose::kEvaluation, ActionMode::kMean, cfg.rl.workers);
    for (const auto& t : trajs) obs_stats.push(t.observations);
    for (const auto& s : demo_states) {
      auto env = family.make(source);
      Rng unused;
      obs_stats.push(env->reset_to_state(env->jitter_start_state(s, 0.0, unused)));
    }
    fold_normalization(learner.policy, obs_stats.mean(), obs_stats.stddev(1e-2));
    ledger.evaluation_epochs += scratch.evaluation_epochs;
  }

  result.policy = learner.policy;
  result.policy.set_env_id(family.id());
  return result;
}

nlohmann::json ExpertTrainingLog::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"index", s.index}, {"iterations", s.iterations}, {"window_success", s.window_success}});
  }
  return {{"stages", stages_json},
          {"final_evaluations", final_evaluations},
          {"final_success", final_success},
          {"success", success},
          {"furthest_index", furthest_index},
          {"train_iters", ledger.train_iters},
          {"sim_epochs_training", ledger.training_epochs},
          {"sim_epochs_evaluation", ledger.evaluation_epochs}};
}

nlohmann::json demo_to_json(const std::string& env_id, const std::vector<Vec>& states) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : states) arr.push_back(std::vector<double>(s.data(), s.data() + s.size()));
  return {{"format", "evopath-demo"},
          {"env_id", env_id},
          {"state_dim", states.empty() ? 0 : states.front().size()},
          {"states", arr}};
}

std::vector<Vec> demo_from_json(const nlohmann::json& doc, int state_dim) {
  try {
    if (doc.value("format", "") != "evopath-demo") throw FormatError("demo: not a demo document");
    std::vector<Vec> out;
    for (const auto& row : doc.at("states")) {
      auto v = row.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != state_dim) {
        throw FormatError("demo: state length " + std::to_string(v.size()) + ", expected " +
                          std::to_string(state_dim));
      }
      out.emplace_back(Eigen::Map<const Vec>(v.data(), state_dim));
    }
    if (out.empty()) throw FormatError("demo: no states");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("demo: malformed document: ") + e.what());
  }
}

void save_demo(const std::filesystem::path& path, const std::string& env_id, const std::vector<Vec>& states) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write demo file " + path.string());
  out << demo_to_json(env_id, states).dump(1) << '\n';
}

std::vector<Vec> load_demo(const std::filesystem::path& path, int state_dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read demo file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return demo_from_json(doc, state_dim);
}

}  // namespace evopath
