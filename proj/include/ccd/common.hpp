#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ccd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Selects between the OpenMP kernels and the serial reference path.
enum class Execution { serial, parallel };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments outside the modeled envelope (negative rotor speed, plant out of bounds, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state encountered during time integration.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Resolvent (jwI - A) numerically singular.
class PoleProximityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Trim Newton iteration failed to converge.
class TrimError : public Error {
 public:
  TrimError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// LPV construction failed (structure mismatch, non-monotone sample axis, ...).
class BuildError : public Error {
 public:
  using Error::Error;
};

/// LPV evaluation outside the sample span without (or beyond) allowed extrapolation.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace ccd
