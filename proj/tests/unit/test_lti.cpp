#include "ccd/lti.hpp"
#include "ccd/model_io.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ccd;
using namespace ccd::lti;

namespace {

StateSpaceModel scalar(double a, double b, double c, double d) {
  StateSpaceModel m;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Constant(1, 1, b);
  m.C = Matrix::Constant(1, 1, c);
  m.D = Matrix::Constant(1, 1, d);
  m.g = Vector::Zero(1);
  m.labels = {{"x"}, {"u"}, {"y"}};
  return m;
}

OperatingPoint op_of(int n, int m) {
  OperatingPoint op;
  op.xi_o = Vector::Zero(n);
  op.u_o = Vector::Zero(m);
  return op;
}

Trajectory zero_input(const std::vector<double>& grid, int m) {
  return Trajectory::constant(grid, Vector::Zero(m));
}

double exp_error(double step) {
  const auto grid = uniform_grid(0.0, 1.0, step);
  const auto traj = simulate_lti(scalar(-1, 0, 1, 0), op_of(1, 1), zero_input(grid, 1), Vector::Ones(1), grid);
  return std::abs(traj.values(traj.values.rows() - 1, 0) - std::exp(-1.0));
}

}  // namespace

TEST_SUITE("lti") {
  TEST_CASE("canonical label orders") {
    CHECK(state_labels() == std::vector<std::string>{"Theta_p_dot", "Theta_p", "delta_T_dot", "delta_T", "omega_g"});
    CHECK(input_labels() == std::vector<std::string>{"tau_g", "beta"});
  }

  TEST_CASE("model validation") {
    auto m = scalar(-1, 1, 1, 0);
    CHECK_NOTHROW(m.validate());
    m.B = Matrix::Zero(2, 1);
    CHECK_THROWS_AS(m.validate(), DimensionError);
    m = scalar(-1, 1, 1, 0);
    m.A(0, 0) = std::nan("");
    CHECK_THROWS_AS(m.validate(), DomainError);
  }

  TEST_CASE("zero dynamics keep the initial state") {
    StateSpaceModel m;
    m.A = Matrix::Zero(5, 5);
    m.B = Matrix::Zero(5, 2);
    m.C = Matrix::Identity(5, 5);
    m.D = Matrix::Zero(5, 2);
    m.g = Vector::Zero(5);
    m.labels = {state_labels(), input_labels(), state_labels()};
    const auto grid = uniform_grid(0.0, 3.0, 0.1);
    const Vector v = (Vector(5) << 1, -2, 3, 0.5, 0.25).finished();
    const auto traj = simulate_lti(m, op_of(5, 2), zero_input(grid, 2), v, grid);
    for (Eigen::Index i = 0; i < traj.values.rows(); ++i) CHECK((traj.values.row(i).transpose() - v).norm() == 0.0);
  }

  TEST_CASE("exponential decay matches the closed form") {
    CHECK(exp_error(1e-3) < 1e-6);
  }

  TEST_CASE("RK4 error falls with the fourth power of the step") {
    const double ratio = exp_error(0.1) / exp_error(0.05);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
  }

  TEST_CASE("divergence names the first bad time") {
    const auto grid = uniform_grid(0.0, 50.0, 0.5);
    try {
      simulate_lti(scalar(200, 0, 1, 0), op_of(1, 1), zero_input(grid, 1), Vector::Ones(1), grid);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.time() > 0.0);
      CHECK(e.time() <= 50.0);
    }
  }

  TEST_CASE("first-order lag frequency response") {
    const auto lag = scalar(-1, 1, 1, 0);
    CHECK(std::abs(frequency_response(lag, 0.0)(0, 0) - 1.0) < 1e-14);
    const auto g = frequency_response(lag, 1.0)(0, 0);
    CHECK(std::abs(std::abs(g) - 1 / std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(std::arg(g) + std::numbers::pi / 4) < 1e-14);
  }

  TEST_CASE("feedthrough-only model returns D") {
    auto m = scalar(-3, 1, 0, 2.5);
    for (double w : {0.0, 0.1, 10.0}) CHECK(frequency_response(m, w)(0, 0) == std::complex<double>(2.5, 0.0));
  }

  TEST_CASE("resolvent at a pole is refused") {
    CHECK_THROWS_AS(frequency_response(scalar(0, 1, 1, 0), 0.0), PoleProximityError);
  }

  TEST_CASE("DC gain identity -C A^-1 B + D") {
    StateSpaceModel m;
    m.A = (Matrix(3, 3) << -2, 1, 0, 0.5, -3, 1, 0, 0.2, -1).finished();
    m.B = (Matrix(3, 2) << 1, 0, 0, 2, 1, 1).finished();
    m.C = (Matrix(2, 3) << 1, 0, 1, 0, 1, -1).finished();
    m.D = (Matrix(2, 2) << 0.1, 0, 0, 0.2).finished();
    m.g = Vector::Zero(2);
    m.labels = {{"a", "b", "c"}, {"u1", "u2"}, {"y1", "y2"}};
    const Matrix dc = -m.C * m.A.inverse() * m.B + m.D;
    CHECK((frequency_response(m, 0.0).real() - dc).norm() < 1e-12);
    CHECK(frequency_response(m, 0.0).imag().norm() < 1e-12);
  }

  TEST_CASE("H-inf error of lags") {
    const auto a = scalar(-1, 1, 1, 0);
    const auto b = scalar(-1, 1, 2, 0);
    const auto grid = default_frequency_grid();
    CHECK(grid.size() == 400);
    CHECK(hinf_error(a, a, grid) == 0.0);
    // |G_a - G_b| = 1/|1 + jw|, largest at the lowest grid frequency.
    CHECK(std::abs(hinf_error(a, b, grid) - 1.0 / std::hypot(1.0, 1e-3)) < 1e-9);
  }

  TEST_CASE("H-inf error is a pseudometric on the grid") {
    const auto a = scalar(-1, 1, 1, 0), b = scalar(-2, 1, 1, 0.3), c = scalar(-0.5, 2, 1, 0);
    const auto grid = default_frequency_grid();
    HinfOptions o;
    o.refine = false;
    CHECK(hinf_error(a, b, grid, o) == doctest::Approx(hinf_error(b, a, grid, o)).epsilon(1e-12));
    CHECK(hinf_error(a, c, grid, o) <= hinf_error(a, b, grid, o) + hinf_error(b, c, grid, o) + 1e-12);
  }

  TEST_CASE("H-inf serial and parallel agree exactly") {
    const auto a = scalar(-1, 1, 1, 0), b = scalar(-2, 1, 1, 0.3);
    const auto grid = default_frequency_grid();
    const auto s = sigma_max_difference(a, b, grid, Execution::serial);
    const auto p = sigma_max_difference(a, b, grid, Execution::parallel);
    CHECK(s == p);
  }

  TEST_CASE("eigenvalue ordering") {
    StateSpaceModel m = scalar(0, 0, 0, 0);
    m.A = (Matrix(2, 2) << -1, 0, 0, -2).finished();
    m.B = Matrix::Zero(2, 1);
    m.C = Matrix::Zero(1, 2);
    auto ev = eigenvalues(m);
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].real() == doctest::Approx(-2));
    CHECK(ev[1].real() == doctest::Approx(-1));
    m.A = (Matrix(2, 2) << 0, 1, -4, 0).finished();
    ev = eigenvalues(m);
    CHECK(std::abs(ev[0] - std::complex<double>(0, -2)) < 1e-12);
    CHECK(std::abs(ev[1] - std::complex<double>(0, 2)) < 1e-12);
  }

  TEST_CASE("trajectory sampling interpolates and clamps") {
    Trajectory tr({0.0, 1.0, 3.0}, (Matrix(3, 1) << 0, 2, 6).finished(), {"v"});
    CHECK(tr.sample(0.5, 0) == doctest::Approx(1.0));
    CHECK(tr.sample(2.0, 0) == doctest::Approx(4.0));
    CHECK(tr.sample(-1.0, 0) == 0.0);
    CHECK(tr.sample(9.0, 0) == 6.0);
    CHECK(tr.channel("v") == 0);
    CHECK_THROWS_AS(Trajectory({0.0, 0.0}, Matrix::Zero(2, 1)).validate(), DomainError);
  }

  TEST_CASE("model JSON round trip is row-major and exact") {
    StateSpaceModel m;
    m.A = Matrix::Zero(5, 5);
    m.A(0, 1) = 0.1 + 0.2;
    m.A(4, 4) = -1.0 / 3.0;
    m.B = Matrix::Ones(5, 2) * 1e-7;
    m.C = Matrix::Identity(5, 5);
    m.D = Matrix::Zero(5, 2);
    m.g = Vector::LinSpaced(5, 1, 5);
    m.labels = {state_labels(), input_labels(), output_labels()};
    OperatingPoint op;
    op.w = 12.5;
    op.xi_o = Vector::LinSpaced(5, -1, 1);
    op.u_o = Vector::Ones(2);
    op.x_p = {51.75, 12.5};
    const auto j = io::model_to_json(m, op);
    CHECK(j.at("A")[0][1].get<double>() == m.A(0, 1));
    const auto doc = io::model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(doc.model.A == m.A);
    CHECK(doc.model.B == m.B);
    CHECK(doc.model.g == m.g);
    CHECK(doc.model.labels == m.labels);
    CHECK(doc.op.w == op.w);
    CHECK(doc.op.x_p == op.x_p);
  }

  TEST_CASE("FNV-1a digests") {
    CHECK(io::content_hash("") == "cbf29ce484222325");
    CHECK(io::content_hash("a") == "af63dc4c8601ec8c");
  }
}
