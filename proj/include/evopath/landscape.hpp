#pragma once

// Analytic reward landscape over the evolution cube: a smooth progress term
// with a Gaussian barrier that the straight diagonal passes through.

#include <memory>

#include "evopath/env.hpp"

namespace evopath {

struct LandscapeConfig {
  int dim = 2;
  double barrier_height = 0.8;
  Vec barrier_center;  // empty means 0.5 * 1
  double barrier_width = 0.15;
  double noise_sigma = 0.0;
  // success indicator threshold: 1{f + noise >= success_threshold}
  double success_threshold = 0.3;

  Vec center() const { return barrier_center.size() ? barrier_center : Vec::Constant(dim, 0.5); }
  void validate() const;
};

// f(alpha) = 1 - |1 - alpha|^2 / D - B exp(-|alpha - c|^2 / (2 w^2))
double landscape_value(const Vec& alpha, const LandscapeConfig& cfg);
Vec landscape_gradient(const Vec& alpha, const LandscapeConfig& cfg);
// f(alpha) plus N(0, noise_sigma^2).
double landscape_reward(const Vec& alpha, const LandscapeConfig& cfg, Rng& rng);

// One-step bandit: observation is a constant zero, the action is ignored and
// the single reward is the noisy landscape value.
class LandscapeEnv final : public Environment {
 public:
  LandscapeEnv(LandscapeConfig cfg, Vec alpha) : cfg_(std::move(cfg)), alpha_(std::move(alpha)) {}

  int obs_dim() const override { return 1; }
  int act_dim() const override { return 1; }
  int horizon() const override { return 1; }
  Vec reset(Rng& rng) override;
  StepResult step(const Vec& action, Rng& rng) override;
  bool done() const override { return done_; }
  bool success() const override { return success_; }
  int time_step() const override { return t_; }

 private:
  LandscapeConfig cfg_;
  Vec alpha_;
  bool done_ = true;
  bool success_ = false;
  int t_ = 0;
};

class LandscapeFamily final : public MdpFamily {
 public:
  explicit LandscapeFamily(LandscapeConfig cfg);

  std::string id() const override { return "landscape"; }
  const ParamSpace& space() const override { return space_; }
  int obs_dim() const override { return 1; }
  int act_dim() const override { return 1; }
  int horizon() const override { return 1; }
  bool trainable() const override { return false; }
  std::unique_ptr<Environment> make(const EvolutionParameter& alpha) const override;

  const LandscapeConfig& config() const { return cfg_; }

 private:
  LandscapeConfig cfg_;
  ParamSpace space_;
};

}  // namespace evopath
