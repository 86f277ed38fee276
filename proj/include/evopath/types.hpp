#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace evopath {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map categories onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct UnsupportedError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace evopath
