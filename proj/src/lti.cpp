#include "ccd/lti.hpp"

#include "ccd/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace ccd::lti {

const std::vector<std::string>& state_labels() {
  static const std::vector<std::string> labels{"Theta_p_dot", "Theta_p", "delta_T_dot", "delta_T",
                                               "omega_g"};
  return labels;
}

const std::vector<std::string>& input_labels() {
  static const std::vector<std::string> labels{"tau_g", "beta"};
  return labels;
}

const std::vector<std::string>& output_labels() {
  static const std::vector<std::string> labels{"P", "F_s", "M_s", "omega_g", "Theta_p"};
  return labels;
}

void StateSpaceModel::validate() const {
  const auto n = A.rows();
  const auto m = B.cols();
  const auto p = C.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != p || D.cols() != m ||
      g.size() != p) {
    throw DimensionError(fmt::format(
        "inconsistent state-space dimensions: A {}x{}, B {}x{}, C {}x{}, D {}x{}, g {}", A.rows(),
        A.cols(), B.rows(), B.cols(), C.rows(), C.cols(), D.rows(), D.cols(), g.size()));
  }
  if (!labels.states.empty() && static_cast<Eigen::Index>(labels.states.size()) != n)
    throw DimensionError("state label count does not match A");
  if (!labels.inputs.empty() && static_cast<Eigen::Index>(labels.inputs.size()) != m)
    throw DimensionError("input label count does not match B");
  if (!labels.outputs.empty() && static_cast<Eigen::Index>(labels.outputs.size()) != p)
    throw DimensionError("output label count does not match C");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite() || !g.allFinite())
    throw DomainError("state-space model has non-finite entries");
}

StateSpaceModel StateSpaceModel::select_outputs(std::span<const int> rows) const {
  StateSpaceModel out;
  out.A = A;
  out.B = B;
  out.C.resize(static_cast<Eigen::Index>(rows.size()), C.cols());
  out.D.resize(static_cast<Eigen::Index>(rows.size()), D.cols());
  out.g.resize(static_cast<Eigen::Index>(rows.size()));
  out.labels.states = labels.states;
  out.labels.inputs = labels.inputs;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int r = rows[k];
    if (r < 0 || r >= C.rows()) throw DimensionError("output row out of range");
    out.C.row(static_cast<Eigen::Index>(k)) = C.row(r);
    out.D.row(static_cast<Eigen::Index>(k)) = D.row(r);
    out.g(static_cast<Eigen::Index>(k)) = g(r);
    if (!labels.outputs.empty()) out.labels.outputs.push_back(labels.outputs[r]);
  }
  return out;
}

namespace {
int find_label(const std::vector<std::string>& labels, const std::string& label) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DimensionError("unknown label '" + label + "'");
  return static_cast<int>(it - labels.begin());
}
}  // namespace

int StateSpaceModel::output_index(const std::string& label) const {
  return find_label(labels.outputs, label);
}

int StateSpaceModel::state_index(const std::string& label) const {
  return find_label(labels.states, label);
}

Trajectory::Trajectory(std::vector<double> grid, Matrix vals, std::vector<std::string> names)
    : t(std::move(grid)), values(std::move(vals)), labels(std::move(names)) {
  validate();
}

void Trajectory::validate() const {
  if (t.empty()) throw DimensionError("trajectory grid is empty");
  if (static_cast<Eigen::Index>(t.size()) != values.rows())
    throw DimensionError(
        fmt::format("trajectory has {} grid points but {} value rows", t.size(), values.rows()));
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw DomainError("trajectory grid is not strictly increasing");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != values.cols())
    throw DimensionError("trajectory label count does not match channel count");
}

int Trajectory::channel(const std::string& label) const { return find_label(labels, label); }

namespace {
// Index i with t[i] <= time < t[i+1], clamped to [0, n-2].
std::size_t locate(const std::vector<double>& t, double time) {
  if (t.size() < 2 || time <= t.front()) return 0;
  if (time >= t.back()) return t.size() - 2;
  auto it = std::upper_bound(t.begin(), t.end(), time);
  return static_cast<std::size_t>(it - t.begin()) - 1;
}
}  // namespace

Vector Trajectory::sample(double time) const {
  if (t.size() == 1 || time <= t.front()) return values.row(0).transpose();
  if (time >= t.back()) return values.row(values.rows() - 1).transpose();
  const std::size_t i = locate(t, time);
  const double s = (time - t[i]) / (t[i + 1] - t[i]);
  const auto r = static_cast<Eigen::Index>(i);
  return ((1.0 - s) * values.row(r) + s * values.row(r + 1)).transpose();
}

double Trajectory::sample(double time, int ch) const {
  if (t.size() == 1 || time <= t.front()) return values(0, ch);
  if (time >= t.back()) return values(values.rows() - 1, ch);
  const std::size_t i = locate(t, time);
  const double s = (time - t[i]) / (t[i + 1] - t[i]);
  const auto r = static_cast<Eigen::Index>(i);
  return (1.0 - s) * values(r, ch) + s * values(r + 1, ch);
}

Trajectory Trajectory::constant(const std::vector<double>& grid, const Vector& value,
                                std::vector<std::string> names) {
  Matrix vals(static_cast<Eigen::Index>(grid.size()), value.size());
  vals.rowwise() = value.transpose();
  return Trajectory(grid, std::move(vals), std::move(names));
}

std::vector<double> uniform_grid(double t0, double t1, double step) {
  if (!(t1 > t0) || !(step > 0.0)) throw DomainError("uniform_grid needs t1 > t0 and step > 0");
  const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / step));
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = t0 + static_cast<double>(i) * step;
  grid.back() = t1;
  return grid;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

std::vector<double> logspace(double lo_exp10, double hi_exp10, std::size_t n) {
  auto exps = linspace(lo_exp10, hi_exp10, n);
  for (double& e : exps) e = std::pow(10.0, e);
  return exps;
}

Matrix integrate_rk4(const std::function<Vector(double, const Vector&)>& rhs, const Vector& x0,
                     const std::vector<double>& grid) {
  if (grid.empty()) throw DimensionError("integration grid is empty");
  Matrix out(static_cast<Eigen::Index>(grid.size()), x0.size());
  Vector x = x0;
  out.row(0) = x.transpose();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const double h = grid[i + 1] - t;
    if (!(h > 0.0)) throw DomainError("integration grid is not strictly increasing");
    const Vector k1 = rhs(t, x);
    const Vector k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector k4 = rhs(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw DivergenceError(fmt::format("state became non-finite at t = {:.6g} s", grid[i + 1]),
                            grid[i + 1]);
    out.row(static_cast<Eigen::Index>(i + 1)) = x.transpose();
  }
  return out;
}

Trajectory simulate_lti(const StateSpaceModel& model, const OperatingPoint& /*op*/,
                        const Trajectory& u_delta, const Vector& xi_delta0,
                        const std::vector<double>& grid) {
  model.validate();
  if (grid.empty()) throw DimensionError("simulation grid is empty");
  if (u_delta.channels() != model.inputs())
    throw DimensionError("input trajectory channel count does not match B");
  if (xi_delta0.size() != model.states()) throw DimensionError("initial state has wrong size");
  constexpr double slack = 1e-9;
  if (grid.front() < u_delta.start() - slack || grid.back() > u_delta.end() + slack)
    throw DomainError("input signal does not cover the simulation grid");

  auto rhs = [&](double t, const Vector& x) -> Vector {
    return model.A * x + model.B * u_delta.sample(t);
  };
  return Trajectory(grid, integrate_rk4(rhs, xi_delta0, grid), model.labels.states);
}

Trajectory to_absolute(const Trajectory& relative, const Vector& offset) {
  Trajectory out = relative;
  out.values.rowwise() += offset.transpose();
  return out;
}

Eigen::MatrixXcd frequency_response(const StateSpaceModel& model, double omega) {
  using Complex = std::complex<double>;
  const auto n = model.states();
  const Eigen::MatrixXcd D = model.D.cast<Complex>();
  if (n == 0) return D;
  Eigen::MatrixXcd resolvent = -model.A.cast<Complex>();
  resolvent.diagonal().array() += Complex(0.0, omega);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(resolvent);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-13))
    throw PoleProximityError(
        fmt::format("jw = {:.6g}j is numerically an eigenvalue of A (rcond {:.3g})", omega, rcond));
  const Eigen::MatrixXcd X = lu.solve(model.B.cast<Complex>());
  return model.C.cast<Complex>() * X + D;
}

std::vector<double> default_frequency_grid() { return logspace(-3.0, 2.0, 400); }

namespace {

void check_compatible(const StateSpaceModel& a, const StateSpaceModel& b) {
  if (a.outputs() != b.outputs() || a.inputs() != b.inputs())
    throw DimensionError(fmt::format("cannot compare {}x{} and {}x{} transfer matrices",
                                     a.outputs(), a.inputs(), b.outputs(), b.inputs()));
}

double sigma_max_at(const StateSpaceModel& a, const StateSpaceModel& b, double omega) {
  const Eigen::MatrixXcd diff = frequency_response(a, omega) - frequency_response(b, omega);
  if (diff.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(diff);
  return svd.singularValues()(0);
}

}  // namespace

std::vector<double> sigma_max_difference(const StateSpaceModel& a, const StateSpaceModel& b,
                                         std::span<const double> omega_grid,
                                         Execution execution) {
  check_compatible(a, b);
  std::vector<double> sigma(omega_grid.size());
  parallel_for(
      omega_grid.size(), [&](std::size_t i) { sigma[i] = sigma_max_at(a, b, omega_grid[i]); },
      execution);
  return sigma;
}

HinfResult hinf_error_detail(const StateSpaceModel& a, const StateSpaceModel& b,
                             std::span<const double> omega_grid, const HinfOptions& opts) {
  if (omega_grid.empty()) throw DimensionError("frequency grid is empty");
  a.validate();
  b.validate();
  const auto sigma = sigma_max_difference(a, b, omega_grid, opts.execution);
  const auto peak = static_cast<std::size_t>(std::max_element(sigma.begin(), sigma.end()) -
                                             sigma.begin());
  HinfResult best{sigma[peak], omega_grid[peak]};
  if (!opts.refine || omega_grid.size() < 3 || best.value == 0.0) return best;

  // Golden-section search in log-frequency between the peak's grid neighbours.
  const std::size_t lo_i = peak == 0 ? 0 : peak - 1;
  const std::size_t hi_i = std::min(peak + 1, omega_grid.size() - 1);
  double lo = std::log(omega_grid[lo_i]);
  double hi = std::log(omega_grid[hi_i]);
  constexpr double ratio = 0.6180339887498949;
  auto f = [&](double logw) { return sigma_max_at(a, b, std::exp(logw)); };
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = f(x1);
    }
  }
  if (f1 > best.value) best = {f1, std::exp(x1)};
  if (f2 > best.value) best = {f2, std::exp(x2)};
  return best;
}

double hinf_error(const StateSpaceModel& a, const StateSpaceModel& b,
                  std::span<const double> omega_grid, const HinfOptions& opts) {
  return hinf_error_detail(a, b, omega_grid, opts).value;
}

double hinf_error(const StateSpaceModel& a, const StateSpaceModel& b) {
  const auto grid = default_frequency_grid();
  return hinf_error(a, b, grid);
}

double hinf_norm(const StateSpaceModel& model, std::span<const double> omega_grid,
                 const HinfOptions& opts) {
  StateSpaceModel zero = model;
  zero.C.setZero();
  zero.D.setZero();
  return hinf_error(model, zero, omega_grid, opts);
}

std::vector<std::complex<double>> eigenvalues(const StateSpaceModel& model) {
  if (model.A.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(model.A, /*computeEigenvectors=*/false);
  const auto ev = solver.eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return out;
}

}  // namespace ccd::lti
