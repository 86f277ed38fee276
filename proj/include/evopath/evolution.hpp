#pragma once

// Evolution-parameter arithmetic on the unit cube [0,1]^D.

#include <cmath>
#include <string>
#include <vector>

#include "evopath/random.hpp"
#include "evopath/types.hpp"

namespace evopath {

// Point in [0,1]^D. Construction checks the box, so every instance is valid.
class EvolutionParameter {
 public:
  EvolutionParameter() = default;
  explicit EvolutionParameter(Vec values);

  static EvolutionParameter zeros(int dim) { return EvolutionParameter(Vec::Zero(dim)); }
  static EvolutionParameter ones(int dim) { return EvolutionParameter(Vec::Ones(dim)); }
  static EvolutionParameter uniform(int dim, double value) {
    return EvolutionParameter(Vec::Constant(dim, value));
  }

  int dim() const { return static_cast<int>(values_.size()); }
  const Vec& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

  // Exact comparison; clamping snaps saturated components to exactly 1.
  bool at_target() const { return (values_.array() == 1.0).all(); }

  friend bool operator==(const EvolutionParameter& a, const EvolutionParameter& b) {
    return a.values_.size() == b.values_.size() && (a.values_.array() == b.values_.array()).all();
  }

 private:
  Vec values_;
};

class ParamSpace {
 public:
  ParamSpace(Vec theta_source, Vec theta_target, std::vector<std::string> dim_names = {});

  int dim() const { return static_cast<int>(theta_source_.size()); }
  const Vec& theta_source() const { return theta_source_; }
  const Vec& theta_target() const { return theta_target_; }
  const std::vector<std::string>& dim_names() const { return dim_names_; }
  int index_of(const std::string& name) const;

 private:
  Vec theta_source_;
  Vec theta_target_;
  std::vector<std::string> dim_names_;
};

// n probe directions stored as the rows of an n x D matrix.
struct SphereSample {
  Mat deltas;
  double radius = 0.0;

  int count() const { return static_cast<int>(deltas.rows()); }
  int dim() const { return static_cast<int>(deltas.cols()); }
};

// theta = (1 - alpha) .* theta_S + alpha .* theta_T
template <typename DerivedS, typename DerivedT, typename DerivedA>
VectorX<typename DerivedA::Scalar> interpolate(const Eigen::MatrixBase<DerivedS>& theta_source,
                                               const Eigen::MatrixBase<DerivedT>& theta_target,
                                               const Eigen::MatrixBase<DerivedA>& alpha) {
  if (theta_source.size() != alpha.size() || theta_target.size() != alpha.size()) {
    throw DimensionError("interpolate: alpha has " + std::to_string(alpha.size()) +
                         " components, parameter space has " +
                         std::to_string(theta_source.size()));
  }
  using Scalar = typename DerivedA::Scalar;
  return ((Scalar(1) - alpha.array()) * theta_source.array() +
          alpha.array() * theta_target.array())
      .matrix();
}

inline Vec interpolate(const ParamSpace& space, const EvolutionParameter& alpha) {
  return interpolate(space.theta_source(), space.theta_target(), alpha.values());
}

// Uniform draws on the sphere of radius xi in R^D (normalized Gaussian).
SphereSample sample_sphere(Rng& rng, int dim, double xi, int n);

template <typename Derived>
EvolutionParameter clamp_box(const Eigen::MatrixBase<Derived>& raw) {
  return EvolutionParameter(raw.array().max(0.0).min(1.0).matrix().template cast<double>());
}

template <typename Derived>
typename Derived::Scalar distance_to_target(const Eigen::MatrixBase<Derived>& alpha) {
  using Scalar = typename Derived::Scalar;
  return (VectorX<Scalar>::Ones(alpha.size()) - alpha).norm();
}

inline double distance_to_target(const EvolutionParameter& alpha) {
  return distance_to_target(alpha.values());
}

}  // namespace evopath
