#include "evopath/reacher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace evopath {

ReacherConfig ReacherConfig::defaults() {
  ReacherConfig cfg;
  cfg.theta_source.resize(kReacherDims);
  cfg.theta_target.resize(kReacherDims);
  //                 h    s    m    d     r    eps0  R    sigma
  cfg.theta_source << 1.0, 0.0, 1.0, 0.05, 1.0, 0.15, 1.0, 0.0;
  cfg.theta_target << 0.0, 1.0, 1.5, 0.15, 0.8, 0.10, 1.2, 0.01;
  return cfg;
}

ParamSpace ReacherConfig::space() const {
  return ParamSpace(theta_source, theta_target,
                    {"hand_gain", "servo_gain", "mass", "damping", "action_scale",
                     "base_tolerance", "start_radius", "dyn_noise"});
}

ReacherParams ReacherParams::from_theta(const Vec& theta) {
  if (theta.size() != kReacherDims) throw DimensionError("reacher: theta must have 8 components");
  return {theta[kHandGain],      theta[kServoGain],     theta[kMass],
          theta[kDamping],       theta[kActionScale],   theta[kBaseTolerance],
          theta[kStartRadius],   theta[kDynNoise]};
}

GraspReacherEnv::GraspReacherEnv(const ReacherConfig& cfg, ReacherParams params)
    : params_(params), dt_(cfg.dt), hold_steps_(cfg.hold_steps), horizon_(cfg.horizon) {}

Vec GraspReacherEnv::observation() const {
  Vec obs(kReacherObsDim);
  obs << p_, v_, -p_;
  return obs;
}

Vec GraspReacherEnv::reset(Rng& rng) {
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p_ = params_.start_radius * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  v_.setZero();
  hold_ = 0;
  t_ = 0;
  done_ = false;
  success_ = false;
  return observation();
}

StepResult GraspReacherEnv::step(const Vec& action, Rng& rng) {
  if (done_) throw PreconditionError("grasp-reacher: step after episode end");
  if (action.size() != 2) throw DimensionError("grasp-reacher: action must have 2 components");
  const Eigen::Vector2d a = action.array().max(-1.0).min(1.0).matrix();
  const double gain = params_.action_scale * (params_.hand_gain + params_.servo_gain);
  v_ = (1.0 - params_.damping) * v_ + gain * a * dt_ / params_.mass;
  if (params_.dyn_noise > 0.0) {
    v_.x() += params_.dyn_noise * rng.normal();
    v_.y() += params_.dyn_noise * rng.normal();
  }
  p_ += v_ * dt_;
  ++t_;

  StepResult r;
  if (p_.norm() <= params_.effective_tolerance()) {
    ++hold_;
  } else {
    hold_ = 0;
  }
  if (hold_ >= hold_steps_) {
    r.reward = 1.0;
    success_ = true;
    done_ = true;
  }
  if (t_ >= horizon_) done_ = true;
  r.done = done_;
  r.observation = observation();
  return r;
}

Vec GraspReacherEnv::state() const {
  Vec s(kReacherStateDim);
  s << p_, v_, static_cast<double>(hold_);
  return s;
}

Vec GraspReacherEnv::reset_to_state(const Vec& state) {
  if (state.size() != kReacherStateDim) throw DimensionError("grasp-reacher: state must have 5 components");
  if (!state.allFinite()) throw PreconditionError("grasp-reacher: non-finite state");
  const double hold = state[4];
  if (hold < 0.0 || hold >= hold_steps_ || hold != std::floor(hold)) {
    throw PreconditionError("grasp-reacher: hold counter must be an integer in [0, hold_steps)");
  }
  p_ = state.head<2>();
  v_ = state.segment<2>(2);
  hold_ = static_cast<int>(hold);
  t_ = 0;
  done_ = false;
  success_ = false;
  return observation();
}

Vec GraspReacherEnv::jitter_start_state(const Vec& state, double scale, Rng& rng) const {
  if (state.size() != kReacherStateDim) throw DimensionError("grasp-reacher: state must have 5 components");
  Vec s = state;
  if (scale > 0.0) {
    s[0] += scale * rng.normal();
    s[1] += scale * rng.normal();
  }
  s[4] = 0.0;
  return s;
}

GraspReacherFamily::GraspReacherFamily(ReacherConfig cfg)
    : cfg_(std::move(cfg)), space_(cfg_.space()) {
  if (cfg_.horizon < 1 || cfg_.hold_steps < 1 || !(cfg_.dt > 0.0)) {
    throw ConfigError("grasp-reacher: horizon, hold_steps and dt must be positive");
  }
}

ReacherParams GraspReacherFamily::params_at(const EvolutionParameter& alpha) const {
  return ReacherParams::from_theta(interpolate(space_, alpha));
}

std::unique_ptr<GraspReacherEnv> GraspReacherFamily::make_reacher(const EvolutionParameter& alpha) const {
  return std::make_unique<GraspReacherEnv>(cfg_, params_at(alpha));
}

std::unique_ptr<Environment> GraspReacherFamily::make(const EvolutionParameter& alpha) const {
  return make_reacher(alpha);
}

Vec scripted_pd_action(const Vec& observation) {
  Vec a = -kDemoKp * observation.head(2) - kDemoKd * observation.segment(2, 2);
  return a.array().max(-1.0).min(1.0).matrix();
}

DemoTrajectory make_demo_trajectory(const GraspReacherFamily& family, Rng& rng) {
  auto env = family.make_reacher(EvolutionParameter::zeros(family.dim()));
  DemoTrajectory demo;
  Vec obs = env->reset(rng);
  demo.states.push_back(env->state());
  demo.observations.push_back(obs);
  while (!env->done()) {
    StepResult r = env->step(scripted_pd_action(obs), rng);
    obs = r.observation;
    if (!env->done()) {
      demo.states.push_back(env->state());
      demo.observations.push_back(obs);
    }
  }
  if (!env->success()) throw Error("scripted demonstrator failed to solve the source reacher");
  return demo;
}

}  // namespace evopath
