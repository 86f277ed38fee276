#pragma once

// Grasp-handoff point-mass reacher. Two actuation channels cross-fade along
// the evolution: the hand gain h fades out while the servo gain s fades in.
// Grip quality Q = max(h, s) scales the success tolerance, so configurations
// where both channels are half engaged are the hard ones.

#include <algorithm>
#include <memory>
#include <vector>

#include "evopath/env.hpp"

namespace evopath {

// Physical parameter indices inside theta.
enum ReacherParam : int {
  kHandGain = 0,
  kServoGain,
  kMass,
  kDamping,
  kActionScale,
  kBaseTolerance,
  kStartRadius,
  kDynNoise,
  kReacherDims
};

struct ReacherConfig {
  Vec theta_source;
  Vec theta_target;
  double dt = 0.05;
  int hold_steps = 10;
  int horizon = 200;

  static ReacherConfig defaults();
  ParamSpace space() const;
};

// Physical parameters of one intermediate reacher.
struct ReacherParams {
  double hand_gain, servo_gain, mass, damping, action_scale, base_tolerance, start_radius, dyn_noise;

  static ReacherParams from_theta(const Vec& theta);
  double grip_quality() const { return std::max(hand_gain, servo_gain); }
  // eps0 * (0.25 + 0.75 Q)
  double effective_tolerance() const { return base_tolerance * (0.25 + 0.75 * grip_quality()); }
};

// State vector layout: [px, py, vx, vy, hold_count].
inline constexpr int kReacherStateDim = 5;
// Observation layout: [p, v, goal - p] with the goal at the origin.
inline constexpr int kReacherObsDim = 6;

class GraspReacherEnv final : public Environment {
 public:
  GraspReacherEnv(const ReacherConfig& cfg, ReacherParams params);

  int obs_dim() const override { return kReacherObsDim; }
  int act_dim() const override { return 2; }
  int horizon() const override { return horizon_; }
  Vec reset(Rng& rng) override;
  StepResult step(const Vec& action, Rng& rng) override;
  bool done() const override { return done_; }
  bool success() const override { return success_; }
  int time_step() const override { return t_; }

  bool supports_state_reset() const override { return true; }
  int state_dim() const override { return kReacherStateDim; }
  Vec state() const override;
  Vec reset_to_state(const Vec& state) override;
  Vec jitter_start_state(const Vec& state, double scale, Rng& rng) const override;

  const ReacherParams& params() const { return params_; }
  Vec observation() const;

 private:
  ReacherParams params_;
  double dt_;
  int hold_steps_;
  int horizon_;
  Eigen::Vector2d p_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d v_ = Eigen::Vector2d::Zero();
  int hold_ = 0;
  int t_ = 0;
  bool done_ = true;
  bool success_ = false;
};

class GraspReacherFamily final : public MdpFamily {
 public:
  explicit GraspReacherFamily(ReacherConfig cfg = ReacherConfig::defaults());

  std::string id() const override { return "grasp-reacher"; }
  const ParamSpace& space() const override { return space_; }
  int obs_dim() const override { return kReacherObsDim; }
  int act_dim() const override { return 2; }
  int horizon() const override { return cfg_.horizon; }
  bool trainable() const override { return true; }
  std::unique_ptr<Environment> make(const EvolutionParameter& alpha) const override;

  std::unique_ptr<GraspReacherEnv> make_reacher(const EvolutionParameter& alpha) const;
  ReacherParams params_at(const EvolutionParameter& alpha) const;
  const ReacherConfig& config() const { return cfg_; }

 private:
  ReacherConfig cfg_;
  ParamSpace space_;
};

struct DemoTrajectory {
  std::vector<Vec> states;        // env states, first is the reset state
  std::vector<Vec> observations;  // observation at each state
};

// PD gains of the scripted demonstrator.
inline constexpr double kDemoKp = 2.0;
inline constexpr double kDemoKd = 1.5;

Vec scripted_pd_action(const Vec& observation);

// Scripted run at alpha = 0 ending in task success. Throws Error when the
// controller fails, which means the environment itself is broken.
DemoTrajectory make_demo_trajectory(const GraspReacherFamily& family, Rng& rng);


}  // namespace evopath
