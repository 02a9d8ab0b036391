#include "ccd/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ccd;
using namespace ccd::fowt;

namespace {

const Surrogate& model() {
  static const Surrogate s;
  return s;
}

constexpr double kDeg = std::numbers::pi / 180;

Vec5 state_of(const lti::OperatingPoint& op) { return op.xi_o; }
Vec2 input_of(const lti::OperatingPoint& op) { return op.u_o; }

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("trim residual is tiny across the operating range") {
    for (int w = 3; w <= 25; ++w) {
      const auto op = model().trim(w, kNominalPlant);
      const Vec5 f = model().dynamics(state_of(op), input_of(op), w, kNominalPlant);
      CHECK(f.cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("platform pitch at 12 m/s lies in the expected band") {
    const double theta = model().trim(12.0, kNominalPlant).xi_o(1);
    CHECK(theta > 3 * kDeg);
    CHECK(theta < 6 * kDeg);
  }

  TEST_CASE("trim is continuous through the rated transition") {
    Vec5 lo = Vec5::Constant(1e300), hi = Vec5::Constant(-1e300);
    for (int w = 3; w <= 25; ++w) {
      const Vec5 x = model().trim(w, kNominalPlant).xi_o;
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    const Vec5 range = (hi - lo).cwiseMax(1e-12);
    Vec5 prev = model().trim(10.3, kNominalPlant).xi_o;
    for (double w = 10.31; w <= 10.9; w += 0.01) {
      const Vec5 x = model().trim(w, kNominalPlant).xi_o;
      CHECK(((x - prev).cwiseQuotient(range)).cwiseAbs().maxCoeff() < 0.01);
      prev = x;
    }
  }

  TEST_CASE("region behaviour of the trim schedule") {
    const auto& p = model().params();
    double last_power = 0.0;
    for (int w = 3; w <= 25; ++w) {
      const auto op = model().trim(w, kNominalPlant);
      const double power = p.generator_efficiency * op.u_o(0) * op.xi_o(4);
      if (w >= 12) CHECK(std::abs(power - 15e6) / 15e6 < 0.02);
      CHECK(power >= last_power * (1 - 1e-9));
      if (w < model().rated_wind()) CHECK(op.u_o(1) == 0.0);
      last_power = power;
    }
    CHECK(model().trim(25, kNominalPlant).u_o(1) > model().trim(20, kNominalPlant).u_o(1));
    CHECK(std::abs(model().rated_wind() - 10.6) / 10.6 < 0.01);
  }

  TEST_CASE("output map examples") {
    Vec5 xi;
    xi << 0, 0.05, 0, 0, 0.785;
    Vector y = model().outputs(xi, Vec2(19.8e6, 0.0), 12.0, kNominalPlant);
    CHECK(y(0) == doctest::Approx(0.965 * 19.8e6 * 0.785));
    CHECK(y(1) == 0.0);
    CHECK(y(2) == doctest::Approx(19.8e3));
    CHECK(y(3) == 0.785);
    CHECK(y(4) == 0.05);
    y = model().outputs(xi, Vec2(0.0, 0.0), 12.0, kNominalPlant);
    CHECK(y(0) == 0.0);
    CHECK(y(2) == 0.0);
    xi(3) = 0.1;
    y = model().outputs(xi, Vec2(0.0, 0.0), 12.0, kNominalPlant);
    CHECK(y(1) == doctest::Approx(model().params().tower_stiffness * 0.1 / 1000));
  }

  TEST_CASE("envelope violations are domain errors") {
    Vec5 xi;
    xi << 0, 0, 0, 0, -0.1;
    CHECK_THROWS_AS(model().dynamics(xi, Vec2(1e6, 0), 10.0, kNominalPlant), DomainError);
    xi(4) = 0.5;
    CHECK_THROWS_AS(model().dynamics(xi, Vec2(1e6, 0), 0.0, kNominalPlant), DomainError);
    CHECK_THROWS_AS(PlantBounds{}.require({10.0, 10.0}), DomainError);
    CHECK_THROWS_AS(PlantBounds{}.require({80.0, 12.0}), DomainError);
    CHECK_NOTHROW(PlantBounds{}.require(kNominalPlant));
    CHECK_THROWS_AS(model().trim(30.0, kNominalPlant), DomainError);
  }

  TEST_CASE("generator torque enters the speed equation through the drivetrain inertia") {
    const auto lin = model().linearize(12.0, kNominalPlant);
    const double expected = -1.0 / model().params().drivetrain_inertia;
    CHECK(std::abs(lin.model.B(4, 0) - expected) / std::abs(expected) < 1e-6);
  }

  TEST_CASE("Jacobians agree with an independent finite difference") {
    const double w = 12.0;
    const auto lin = model().linearize(w, kNominalPlant);
    const Vec5 x0 = lin.op.xi_o;
    const Vec2 u0 = lin.op.u_o;
    Matrix A(5, 5), B(5, 2);
    for (int k = 0; k < 5; ++k) {
      const double h = 1e-5 * std::max(std::abs(x0(k)), 1e-2);
      Vec5 xp = x0, xm = x0;
      xp(k) += h;
      xm(k) -= h;
      A.col(k) = (model().dynamics(xp, u0, w, kNominalPlant) - model().dynamics(xm, u0, w, kNominalPlant)) / (2 * h);
    }
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-5 * std::max(std::abs(u0(k)), 1e-2);
      Vec2 up = u0, um = u0;
      up(k) += h;
      um(k) -= h;
      B.col(k) = (model().dynamics(x0, up, w, kNominalPlant) - model().dynamics(x0, um, w, kNominalPlant)) / (2 * h);
    }
    for (int r = 0; r < 5; ++r) {
      const double ra = std::max(A.row(r).cwiseAbs().maxCoeff(), 1e-12);
      const double rb = std::max(B.row(r).cwiseAbs().maxCoeff(), 1e-30);
      CHECK((A.row(r) - lin.model.A.row(r)).cwiseAbs().maxCoeff() / ra < 1e-6);
      CHECK((B.row(r) - lin.model.B.row(r)).cwiseAbs().maxCoeff() / rb < 1e-6);
    }
  }

  TEST_CASE("halving the difference step barely moves the eigenvalues") {
    const auto a = lti::eigenvalues(model().linearize(12.0, kNominalPlant).model);
    const auto b = lti::eigenvalues(model().linearize(12.0, kNominalPlant, 5e-7).model);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) / std::abs(a[k]) < 1e-4);
  }

  TEST_CASE("linearizations are stable at every sample") {
    for (const auto& lin : linearize_range(model(), default_wind_samples(), kNominalPlant))
      for (const auto& ev : lti::eigenvalues(lin.model)) CHECK(ev.real() <= 1e-9);
  }

  TEST_CASE("stiffer platforms pitch less") {
    const double base = model().trim(12.0, kNominalPlant).xi_o(1);
    CHECK(model().trim(12.0, {60.0, 12.5}).xi_o(1) <= base);
    CHECK(model().trim(12.0, {51.75, 16.0}).xi_o(1) <= base);
    CHECK(model().trim(12.0, {40.0, 8.0}).xi_o(1) >= base);
  }

  TEST_CASE("power coefficient stays below the Betz limit") {
    double best = 0.0, best_tsr = 0.0;
    for (double tsr = 1.0; tsr <= 18.0; tsr += 0.05)
      for (double beta = 0.0; beta <= 0.4; beta += 0.01) {
        const double cp = model().power_coefficient(tsr, beta);
        CHECK(cp <= 16.0 / 27.0);
        if (beta == 0.0 && cp > best) {
          best = cp;
          best_tsr = tsr;
        }
      }
    CHECK(best_tsr > 2.0);
    CHECK(best_tsr < 17.0);
    CHECK(std::abs(best_tsr - model().optimal_tsr()) < 0.05);
  }

  TEST_CASE("holding the trim inputs keeps the trim state") {
    const auto op = model().trim(12.0, kNominalPlant);
    const auto grid = lti::uniform_grid(0.0, 600.0, 0.025);
    const auto wind = lti::Trajectory::constant(grid, Vector::Constant(1, 12.0));
    const auto u = lti::Trajectory::constant(grid, op.u_o);
    const auto traj = model().simulate(wind, u, op.xi_o, kNominalPlant, grid);
    for (Eigen::Index i = 0; i < traj.values.rows(); i += 400)
      CHECK((traj.values.row(i).transpose() - op.xi_o).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("a wind step with scheduled inputs settles at the new trim") {
    const auto grid = lti::uniform_grid(0.0, 600.0, 0.05);
    Matrix w(grid.size(), 1), u(grid.size(), 2);
    const auto lo = model().trim(8.0, kNominalPlant), hi = model().trim(18.0, kNominalPlant);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const bool after = grid[i] >= 50.0;
      w(i, 0) = after ? 18.0 : 8.0;
      u.row(i) = (after ? hi.u_o : lo.u_o).transpose();
    }
    const auto traj = model().simulate({grid, w}, {grid, u}, lo.xi_o, kNominalPlant, grid);
    const Vector end = traj.values.row(traj.values.rows() - 1).transpose();
    CHECK(std::abs(end(1) - hi.xi_o(1)) < 0.02 * std::abs(hi.xi_o(1)));
    CHECK(std::abs(end(4) - hi.xi_o(4)) < 0.02 * hi.xi_o(4));
  }

  TEST_CASE("parameter file matches the reference and rejects unknown keys") {
    const auto file = SurrogateParams::load(CCD_DATA_DIR "/iea15_surrogate.json");
    CHECK(file.to_json() == SurrogateParams::reference().to_json());
    auto j = file.to_json();
    CHECK(SurrogateParams::from_json(j).to_json() == j);
    j["unexpected"] = 1;
    CHECK_THROWS_AS(SurrogateParams::from_json(j), IoError);
  }
}
