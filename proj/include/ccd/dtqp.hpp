#pragma once

// Direct transcription of linear optimal-control problems into sparse QPs, and the
// power-maximizing FOWT control subproblem built on an LPV model.

#include "ccd/lpv.hpp"
#include "ccd/qp.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <numbers>

namespace ccd::dtqp {

/// Linear time-varying problem sampled on a mesh; every per-point vector has one entry per mesh point.
///   dx/dt = A_i x + B_i u + d_i
///   min  sum_i w_i (1/2 z_i' Q_i z_i + q_i' z_i + r_i),  z_i = [x_i; u_i], w_i trapezoid weights
struct LinearOcp {
  std::vector<double> t;
  int nx = 0;
  int nu = 0;
  std::vector<Matrix> A, B;
  std::vector<Vector> d;
  std::vector<Matrix> Q;
  std::vector<Vector> q;
  std::vector<double> r;
  /// Simple bounds on z_i (use +-kInf for none).
  std::vector<Vector> lo, hi;
  /// Path rows g_lo <= G_i z_i <= g_hi (may have zero rows).
  std::vector<Matrix> G;
  std::vector<Vector> g_lo, g_hi;
  /// Fixed boundary states; empty means free.
  Vector x_initial;
  Vector x_final;
  /// Typical magnitude of each entry of z_i.
  Vector scale;

  std::size_t points() const { return t.size(); }
  void validate() const;
};

struct TranscribedQp {
  qp::Problem problem;
  int points = 0;
  int nx = 0;
  int nu = 0;
  int defect_rows = 0;
  int initial_rows = 0;
  int terminal_rows = 0;
  /// Objective constant dropped from the QP.
  double constant = 0.0;
  /// Mesh point referenced by each inequality row.
  std::vector<int> row_point;

  int width() const { return nx + nu; }
  Eigen::Index index(int point, int variable) const { return static_cast<Eigen::Index>(point) * width() + variable; }
};

/// Trapezoid quadrature weights on a strictly increasing grid.
std::vector<double> trapezoid_weights(const std::vector<double>& t);

/// Trapezoidal defects x_{i+1} - x_i = h_i/2 (f_i + f_{i+1}).
TranscribedQp transcribe(const LinearOcp& ocp);

/// z_i blocks of a solution vector, one row per mesh point.
Matrix unstack(const TranscribedQp& tq, const Vector& z);

// ---- FOWT control subproblem ----

struct Limits {
  double omega_max = 0.7850;          // rad/s
  double theta_max = 6.0 * std::numbers::pi / 180;  // rad
  double tau_max = 19.8e6;            // N m
  double beta_max = 0.3948;           // rad
  double shear_max = 5000.0;          // kN
  double moment_max = 32000.0;        // kN m

  void validate() const;
};

inline constexpr double kOmegaMax1 = 0.7850;
inline constexpr double kOmegaMax2 = 0.9424;

struct Weights {
  double power = 1e-8;
  double tau_penalty = 1e-16;
  double beta_penalty = 10.0;
  double pitch_penalty = 1.0;
};

struct OcProblem {
  std::shared_ptr<const lpv::LpvModel> lpv;
  lti::Trajectory wind;
  int mesh = 2500;
  Weights weights;
  Limits limits;
  double efficiency = 0.965;
  /// LPV evaluation beyond the sampled wind range (within the model's own limit).
  bool allow_extrapolation = true;
  qp::Options solver;

  double final_time() const { return wind.end() - wind.start(); }
  void validate() const;
};

/// Names of the path constraints tracked for activity.
const std::vector<std::string>& constraint_names();

struct OcSolution {
  qp::Status status = qp::Status::numerical_error;
  std::string message;
  int iterations = 0;
  lti::Trajectory states;    // absolute
  lti::Trajectory controls;  // absolute
  lti::Trajectory outputs;   // absolute
  lti::Trajectory wind;      // wind at the mesh points
  double objective = 0.0;
  double mean_power = 0.0;   // W, zero unless optimal
  double efficiency = 0.965;
  /// Fraction of mesh points where each path constraint is active.
  std::map<std::string, double> active_fraction;
  /// Largest violation of any path, dynamic or initial constraint, in each row's own units.
  double max_violation = 0.0;

  bool optimal() const { return status == qp::Status::optimal; }
};

TranscribedQp transcribe(const OcProblem& problem);
OcSolution solve_ocp(const OcProblem& problem);

/// Mean of eta * tau_g * omega_g over the solution; throws DomainError unless optimal.
double average_power(const OcSolution& solution);
/// Trapezoid time average of a sampled signal.
double time_average(const std::vector<double>& t, const Vector& values);

/// t, states, controls, outputs, wind.
std::string solution_csv(const OcSolution& solution);
nlohmann::json solution_summary(const OcSolution& solution);

}  // namespace ccd::dtqp
