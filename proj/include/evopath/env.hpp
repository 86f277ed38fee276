#pragma once

#include <memory>
#include <string>

#include "evopath/evolution.hpp"
#include "evopath/random.hpp"
#include "evopath/types.hpp"

namespace evopath {

struct StepResult {
  Vec observation;
  double reward = 0.0;
  bool done = false;
};

// One concrete episodic environment F(alpha). Single-threaded; owned by one
// rollout worker.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual int horizon() const = 0;

  virtual Vec reset(Rng& rng) = 0;
  // Throws PreconditionError when called after the episode ended.
  virtual StepResult step(const Vec& action, Rng& rng) = 0;

  virtual bool done() const = 0;
  // Set iff a task-completion reward was emitted this episode.
  virtual bool success() const = 0;
  virtual int time_step() const = 0;

  virtual bool supports_state_reset() const { return false; }
  virtual int state_dim() const { return 0; }
  virtual Vec state() const { throw UnsupportedError("environment does not expose its state"); }
  virtual Vec reset_to_state(const Vec& /*state*/) {
    throw UnsupportedError("environment does not support reset-to-state");
  }
  // A valid start state near `state`: positions jittered by N(0, scale^2),
  // episode-progress counters cleared.
  virtual Vec jitter_start_state(const Vec& /*state*/, double /*scale*/, Rng& /*rng*/) const {
    throw UnsupportedError("environment does not support reset-to-state");
  }
};

// Factory producing F(alpha) for any alpha in the cube. Immutable and shareable.
class MdpFamily {
 public:
  virtual ~MdpFamily() = default;

  virtual std::string id() const = 0;
  virtual const ParamSpace& space() const = 0;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual int horizon() const = 0;
  // False for families whose "policy training" is a no-op.
  virtual bool trainable() const = 0;

  virtual std::unique_ptr<Environment> make(const EvolutionParameter& alpha) const = 0;

  int dim() const { return space().dim(); }
};

}  // namespace evopath
