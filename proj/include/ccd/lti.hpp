#pragma once

#include "ccd/common.hpp"

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ccd::lti {

inline constexpr int kStateDim = 5;
inline constexpr int kInputDim = 2;

/// Canonical label orders: xi = [Theta_p_dot, Theta_p, delta_T_dot, delta_T, omega_g], u = [tau_g, beta].
const std::vector<std::string>& state_labels();
const std::vector<std::string>& input_labels();
const std::vector<std::string>& output_labels();

struct Labels {
  std::vector<std::string> states;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  bool operator==(const Labels&) const = default;
};

/// One linearization: dxi/dt = A xi + B u, y = g + C xi + D u (relative coordinates).
struct StateSpaceModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Vector g;
  Labels labels;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }

  /// Throws DimensionError on inconsistent shapes, DomainError on non-finite entries.
  void validate() const;

  /// Sub-model keeping only the listed output rows.
  StateSpaceModel select_outputs(std::span<const int> rows) const;
  int output_index(const std::string& label) const;
  int state_index(const std::string& label) const;
};

/// Stationary point (xi_o, u_o) at scheduling value w and plant design x_p = [c_s, c_d].
struct OperatingPoint {
  double w = 0.0;
  Vector xi_o = Vector::Zero(kStateDim);
  Vector u_o = Vector::Zero(kInputDim);
  Eigen::Vector2d x_p = Eigen::Vector2d::Zero();
  bool extrapolated = false;
};

/// Sampled signal: one row of `values` per grid point, one column per channel.
struct Trajectory {
  std::vector<double> t;
  Matrix values;
  std::vector<std::string> labels;

  Trajectory() = default;
  Trajectory(std::vector<double> grid, Matrix vals, std::vector<std::string> names = {});

  void validate() const;
  std::size_t size() const { return t.size(); }
  int channels() const { return static_cast<int>(values.cols()); }
  double start() const { return t.front(); }
  double end() const { return t.back(); }
  int channel(const std::string& label) const;

  /// Piecewise-linear interpolation, clamped to the end values outside the grid.
  Vector sample(double time) const;
  double sample(double time, int channel) const;

  static Trajectory constant(const std::vector<double>& grid, const Vector& value,
                             std::vector<std::string> names = {});
};

std::vector<double> uniform_grid(double t0, double t1, double step);
std::vector<double> linspace(double a, double b, std::size_t n);
std::vector<double> logspace(double lo_exp10, double hi_exp10, std::size_t n);

/// Classical RK4 on an arbitrary (strictly increasing) grid. `rhs(t, x)` returns dx/dt.
Matrix integrate_rk4(const std::function<Vector(double, const Vector&)>& rhs, const Vector& x0,
                     const std::vector<double>& grid);

/// Relative-state response of the LTI model; add op.xi_o to recover absolute states.
Trajectory simulate_lti(const StateSpaceModel& model, const OperatingPoint& op,
                        const Trajectory& u_delta, const Vector& xi_delta0,
                        const std::vector<double>& grid);

Trajectory to_absolute(const Trajectory& relative, const Vector& offset);

/// C (jwI - A)^-1 B + D.
Eigen::MatrixXcd frequency_response(const StateSpaceModel& model, double omega);

/// 400 log-spaced points over [1e-3, 1e2] rad/s.
std::vector<double> default_frequency_grid();

struct HinfOptions {
  /// Golden-section refinement around the grid peak.
  bool refine = true;
  Execution execution = Execution::parallel;
};

/// Largest singular value of G_a(jw) - G_b(jw) at every grid frequency.
std::vector<double> sigma_max_difference(const StateSpaceModel& a, const StateSpaceModel& b,
                                         std::span<const double> omega_grid,
                                         Execution execution = Execution::parallel);

struct HinfResult {
  double value = 0.0;
  double omega_peak = 0.0;
};

/// Gridded (lower-bound) estimate of ||G_a - G_b||_inf.
HinfResult hinf_error_detail(const StateSpaceModel& a, const StateSpaceModel& b,
                             std::span<const double> omega_grid, const HinfOptions& opts = {});
double hinf_error(const StateSpaceModel& a, const StateSpaceModel& b,
                  std::span<const double> omega_grid, const HinfOptions& opts = {});
double hinf_error(const StateSpaceModel& a, const StateSpaceModel& b);

/// Gridded ||G||_inf (difference against the zero system).
double hinf_norm(const StateSpaceModel& model, std::span<const double> omega_grid,
                 const HinfOptions& opts = {});

/// Eigenvalues of A sorted by real part, then imaginary part.
std::vector<std::complex<double>> eigenvalues(const StateSpaceModel& model);

}  // namespace ccd::lti
