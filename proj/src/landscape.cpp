#include "evopath/landscape.hpp"

#include <cmath>

namespace evopath {

void LandscapeConfig::validate() const {
  if (dim < 1) throw ConfigError("landscape: dim must be >= 1");
  if (!(barrier_height >= 0.0)) throw ConfigError("landscape: barrier_height must be >= 0");
  if (!(barrier_width > 0.0)) throw ConfigError("landscape: barrier_width must be > 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("landscape: noise_sigma must be >= 0");
  if (barrier_center.size() != 0 && barrier_center.size() != dim) {
    throw ConfigError("landscape: barrier_center length does not match dim");
  }
}

double landscape_value(const Vec& alpha, const LandscapeConfig& cfg) {
  const double d = static_cast<double>(alpha.size());
  const double progress = 1.0 - (Vec::Ones(alpha.size()) - alpha).squaredNorm() / d;
  const double w = cfg.barrier_width;
  const double barrier =
      cfg.barrier_height * std::exp(-(alpha - cfg.center()).squaredNorm() / (2.0 * w * w));
  return progress - barrier;
}

Vec landscape_gradient(const Vec& alpha, const LandscapeConfig& cfg) {
  const double d = static_cast<double>(alpha.size());
  const double w = cfg.barrier_width;
  const Vec offset = alpha - cfg.center();
  const double barrier =
      cfg.barrier_height * std::exp(-offset.squaredNorm() / (2.0 * w * w));
  return 2.0 / d * (Vec::Ones(alpha.size()) - alpha) + barrier / (w * w) * offset;
}

double landscape_reward(const Vec& alpha, const LandscapeConfig& cfg, Rng& rng) {
  double f = landscape_value(alpha, cfg);
  if (cfg.noise_sigma > 0.0) f += cfg.noise_sigma * rng.normal();
  return f;
}

Vec LandscapeEnv::reset(Rng& /*rng*/) {
  done_ = false;
  success_ = false;
  t_ = 0;
  return Vec::Zero(1);
}

StepResult LandscapeEnv::step(const Vec& /*action*/, Rng& rng) {
  if (done_) throw PreconditionError("landscape: step after episode end");
  StepResult r;
  r.reward = landscape_reward(alpha_, cfg_, rng);
  r.observation = Vec::Zero(1);
  r.done = true;
  success_ = r.reward >= cfg_.success_threshold;
  done_ = true;
  t_ = 1;
  return r;
}

LandscapeFamily::LandscapeFamily(LandscapeConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      space_(Vec::Zero(cfg_.dim), Vec::Ones(cfg_.dim)) {}

std::unique_ptr<Environment> LandscapeFamily::make(const EvolutionParameter& alpha) const {
  if (alpha.dim() != cfg_.dim) throw DimensionError("landscape: alpha dimension mismatch");
  return std::make_unique<LandscapeEnv>(cfg_, alpha.values());
}

}  // namespace evopath
