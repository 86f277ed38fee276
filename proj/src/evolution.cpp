#include "evopath/evolution.hpp"

#include <set>

namespace evopath {

EvolutionParameter::EvolutionParameter(Vec values) : values_(std::move(values)) {
  if (values_.size() < 1) throw DimensionError("evolution parameter needs D >= 1");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw PreconditionError("evolution parameter component " + std::to_string(i) + " = " +
                              std::to_string(v) + " outside [0,1]");
    }
  }
}

ParamSpace::ParamSpace(Vec theta_source, Vec theta_target, std::vector<std::string> dim_names)
    : theta_source_(std::move(theta_source)),
      theta_target_(std::move(theta_target)),
      dim_names_(std::move(dim_names)) {
  if (theta_source_.size() != theta_target_.size()) {
    throw DimensionError("source and target parameter vectors differ in length");
  }
  if (dim_names_.empty()) {
    for (int i = 0; i < dim(); ++i) dim_names_.push_back("dim" + std::to_string(i));
  }
  if (static_cast<int>(dim_names_.size()) != dim()) {
    throw DimensionError("dimension label count does not match parameter count");
  }
  std::set<std::string> unique(dim_names_.begin(), dim_names_.end());
  if (unique.size() != dim_names_.size()) throw PreconditionError("dimension labels must be unique");
}

int ParamSpace::index_of(const std::string& name) const {
  for (int i = 0; i < dim(); ++i) {
    if (dim_names_[i] == name) return i;
  }
  throw PreconditionError("no dimension named '" + name + "'");
}

SphereSample sample_sphere(Rng& rng, int dim, double xi, int n) {
  if (dim < 1) throw PreconditionError("sample_sphere: D must be >= 1");
  if (n < 1) throw PreconditionError("sample_sphere: n must be >= 1");
  if (!(xi > 0.0)) throw PreconditionError("sample_sphere: radius must be positive");

  SphereSample out;
  out.radius = xi;
  out.deltas.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    Vec g(dim);
    double norm = 0.0;
    // a zero Gaussian draw has probability zero, but redraw rather than divide by it
    while (norm == 0.0) {
      for (int j = 0; j < dim; ++j) g[j] = rng.normal();
      norm = g.norm();
    }
    out.deltas.row(i) = (g / norm * xi).transpose();
  }
  return out;
}

}  // namespace evopath
