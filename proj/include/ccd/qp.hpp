#pragma once

// Sparse primal-dual interior-point solver for
//
//   min  1/2 z'Hz + c'z
//   s.t. A z = b,  g_lo <= G z <= g_hi,  z_lo <= z <= z_hi
//
// Mehrotra predictor-corrector on the reduced KKT system, factorized with a sparse LDL'.
// H may be indefinite: the Hessian block is shifted until the KKT matrix has the inertia of a
// local minimizer, so the result is a KKT point, not a certified global minimum.

#include "ccd/common.hpp"

#include <Eigen/SparseCore>

#include <limits>
#include <string>

namespace ccd::qp {

using SparseMatrix = Eigen::SparseMatrix<double>;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  SparseMatrix H;  // n x n, symmetric (both triangles stored)
  Vector c;
  SparseMatrix A;  // equality rows
  Vector b;
  SparseMatrix G;  // two-sided inequality rows
  Vector g_lo, g_hi;
  Vector z_lo, z_hi;
  /// Typical magnitude per variable (empty = all ones); the solver works in z / scale.
  Vector scale;

  int variables() const { return static_cast<int>(c.size()); }
  /// Fills empty blocks with correctly sized empties and checks shapes.
  void normalize();
  void validate() const;
};

enum class Status { optimal, infeasible, max_iter, numerical_error };

const char* to_string(Status s);

struct Options {
  double tolerance = 1e-8;
  int max_iter = 200;
  double fraction_to_boundary = 0.995;
  /// Dual magnitude treated as divergence (infeasibility suspected).
  double dual_divergence = 1e12;
  /// Confirm suspected infeasibility with an elastic phase-1 solve.
  bool verify_infeasible = true;
  bool equilibrate = true;
};

struct Solution {
  Status status = Status::numerical_error;
  Vector z;
  /// Multipliers with H z + c - A'y - G'nu - mu = 0; nu, mu >= 0 at active lower bounds and
  /// <= 0 at active upper bounds.
  Vector y, nu, mu;
  double objective = 0.0;
  int iterations = 0;
  std::string message;
};

Solution solve(Problem problem, const Options& options = {});

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  /// Most negative multiplier sign violation.
  double dual_sign = 0.0;
  double max() const;
};

/// Residuals of a candidate solution in the original (unscaled) problem.
KktResiduals kkt_residuals(const Problem& problem, const Solution& solution);

double objective(const Problem& problem, const Vector& z);

}  // namespace ccd::qp
