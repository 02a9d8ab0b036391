#include "ccd/dtqp.hpp"
#include "ccd/plant_family.hpp"
#include "ccd/surrogate.hpp"
#include "ccd/wind.hpp"

#include <doctest.h>

#include <numbers>

using namespace ccd;
using namespace ccd::dtqp;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

// Minimum-effort double integrator from rest at 0 to rest at 1 over unit time:
// u = 6 - 12 t, x = 3 t^2 - 2 t^3, objective 6.
LinearOcp double_integrator(std::size_t n) {
  LinearOcp o;
  o.t = lti::linspace(0.0, 1.0, n);
  o.nx = 2;
  o.nu = 1;
  const Matrix A = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  const Matrix B = (Matrix(2, 1) << 0, 1).finished();
  Matrix Q = Matrix::Zero(3, 3);
  Q(2, 2) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    o.A.push_back(A);
    o.B.push_back(B);
    o.d.push_back(Vector::Zero(2));
    o.Q.push_back(Q);
    o.q.push_back(Vector::Zero(3));
    o.r.push_back(0.0);
    o.lo.push_back(Vector::Constant(3, -qp::kInf));
    o.hi.push_back(Vector::Constant(3, qp::kInf));
    o.G.push_back(Matrix::Zero(0, 3));
    o.g_lo.push_back(Vector::Zero(0));
    o.g_hi.push_back(Vector::Zero(0));
  }
  o.x_initial = Vector::Zero(2);
  o.x_final = (Vector(2) << 1, 0).finished();
  return o;
}

std::shared_ptr<const lpv::LpvModel> nominal_lpv() {
  static const auto model = std::make_shared<const lpv::LpvModel>(lpv::LpvModel::build(
      lpv::surrogate_samples(fowt::Surrogate{}, fowt::kNominalPlant, fowt::default_wind_samples())));
  return model;
}

OcProblem case_problem(int id, double theta_deg, int mesh) {
  OcProblem p;
  p.lpv = nominal_lpv();
  const auto means = design::default_case_means();
  p.wind = design::generate_wind_case(id, means[static_cast<std::size_t>(id - 1)], 1).profile;
  p.mesh = mesh;
  p.limits.theta_max = theta_deg * kDeg;
  return p;
}

OcSolution fake_solution(const std::vector<double>& t, const Vector& tau, const Vector& omega) {
  OcSolution s;
  s.status = qp::Status::optimal;
  Matrix xs = Matrix::Zero(static_cast<Eigen::Index>(t.size()), 5);
  xs.col(4) = omega;
  Matrix us = Matrix::Zero(static_cast<Eigen::Index>(t.size()), 2);
  us.col(0) = tau;
  s.states = lti::Trajectory(t, xs, lti::state_labels());
  s.controls = lti::Trajectory(t, us, lti::input_labels());
  return s;
}

}  // namespace

TEST_SUITE("dtqp") {
  TEST_CASE("trapezoid weights") {
    const auto w = trapezoid_weights({0.0, 1.0, 3.0});
    CHECK(w == std::vector<double>{0.5, 1.5, 1.0});
  }

  TEST_CASE("two-point problem without dynamics pins both points") {
    auto o = double_integrator(2);
    for (auto& a : o.A) a.setZero();
    for (auto& b : o.B) b.setZero();
    o.x_final.resize(0);
    const auto tq = transcribe(o);
    CHECK(tq.defect_rows == 2);
    CHECK(tq.initial_rows == 2);
    const auto sol = qp::solve(tq.problem);
    REQUIRE(sol.status == qp::Status::optimal);
    const Matrix Z = unstack(tq, sol.z);
    CHECK(Z.cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("double integrator converges to the closed form") {
    std::vector<double> errors;
    for (std::size_t n : {101u, 401u}) {
      const auto tq = transcribe(double_integrator(n));
      const auto sol = qp::solve(tq.problem);
      REQUIRE(sol.status == qp::Status::optimal);
      const Matrix Z = unstack(tq, sol.z);
      const auto t = lti::linspace(0.0, 1.0, n);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double ti = t[i];
        const auto r = static_cast<Eigen::Index>(i);
        err = std::max({err, std::abs(Z(r, 0) - (3 * ti * ti - 2 * ti * ti * ti)), std::abs(Z(r, 1) - (6 * ti - 6 * ti * ti))});
      }
      errors.push_back(err);
      CHECK(sol.objective + tq.constant == doctest::Approx(6.0).epsilon(1e-3));
    }
    CHECK(errors[0] < 1e-3);
    // The end controls are only first-order accurate, so states carry the convergence check.
    // Second order: a 4x finer mesh cuts the error about 16x.
    CHECK(errors[0] / errors[1] > 10.0);
  }

  TEST_CASE("FOWT transcription structure") {
    const int N = 60;
    auto pr = case_problem(7, 6.0, N);
    const auto tq = transcribe(pr);
    const auto& p = tq.problem;
    CHECK(tq.width() == 7);
    CHECK(tq.defect_rows == 5 * (N - 1));
    CHECK(tq.initial_rows == 5);
    CHECK(tq.terminal_rows == 0);
    CHECK(p.A.rows() == 5 * (N - 1) + 5);
    CHECK(p.G.rows() == 2 * N);
    const Matrix H(p.H);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const auto w = trapezoid_weights(lti::linspace(pr.wind.start(), pr.wind.end(), N));
    const double ke = pr.weights.power * pr.efficiency;
    for (int i = 0; i < N; ++i) {
      CHECK(H(tq.index(i, 5), tq.index(i, 4)) == doctest::Approx(-ke * w[static_cast<std::size_t>(i)]));
      // No coupling between mesh points.
      for (int j = 0; j < N; ++j)
        if (j != i) CHECK(H.block(tq.index(i, 0), tq.index(j, 0), 7, 7).cwiseAbs().maxCoeff() == 0.0);
    }
    // Every path row references a single mesh point.
    const Matrix G(p.G);
    for (Eigen::Index r = 0; r < G.rows(); ++r) {
      const int pt = tq.row_point[static_cast<std::size_t>(r)];
      CHECK(G.row(r).cwiseAbs().sum() == doctest::Approx(G.row(r).segment(tq.index(pt, 0), 7).cwiseAbs().sum()));
    }
  }

  TEST_CASE("constant wind leaves no drift in the defects") {
    auto pr = case_problem(7, 6.0, 40);
    const auto grid = lti::uniform_grid(0.0, 600.0, 1.0);
    pr.wind = lti::Trajectory::constant(grid, Vector::Constant(1, 14.0));
    const auto tq = transcribe(pr);
    CHECK(tq.problem.b.head(tq.defect_rows).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("average power examples") {
    const auto t = lti::linspace(0.0, 600.0, 601);
    const Eigen::Index n = 601;
    auto s = fake_solution(t, Vector::Constant(n, 19.8e6), Vector::Constant(n, 0.785));
    CHECK(average_power(s) == doctest::Approx(0.965 * 19.8e6 * 0.785));
    s = fake_solution(t, Vector::Zero(n), Vector::Constant(n, 0.785));
    CHECK(average_power(s) == 0.0);
    // Linear ramp of power from 0 to X averages X / 2.
    Vector ramp(n);
    for (Eigen::Index i = 0; i < n; ++i) ramp(i) = 1e7 * t[static_cast<std::size_t>(i)] / 600.0;
    s = fake_solution(t, ramp, Vector::Ones(n));
    CHECK(average_power(s) == doctest::Approx(0.965 * 1e7 / 2));
    s.status = qp::Status::infeasible;
    CHECK_THROWS_AS(average_power(s), DomainError);
  }

  TEST_CASE("pitch limit is respected and binding on the nominal plant") {
    const auto tight = solve_ocp(case_problem(7, 4.0, 500));
    REQUIRE(tight.optimal());
    CHECK(tight.max_violation < 1e-6);
    CHECK(tight.states.values.col(1).maxCoeff() <= 4.0 * kDeg * (1 + 1e-6));
    CHECK(tight.active_fraction.at("theta_max") > 0.0);
    CHECK(tight.states.values.col(4).maxCoeff() <= kOmegaMax1 * (1 + 1e-6));
    const auto loose = solve_ocp(case_problem(7, 6.0, 500));
    REQUIRE(loose.optimal());
    CHECK(loose.mean_power > tight.mean_power);
    CHECK(loose.mean_power <= 15e6 * (1 + 1e-6));
  }

  TEST_CASE("above rated the torque sits at its limit while pitch works") {
    const auto sol = solve_ocp(case_problem(9, 7.0, 500));
    REQUIRE(sol.optimal());
    const Vector tau = sol.controls.values.col(0);
    const Vector beta = sol.controls.values.col(1);
    CHECK(time_average(sol.controls.t, tau) > 0.95 * 19.8e6);
    CHECK(beta.maxCoeff() - beta.minCoeff() > 0.01);
  }

  TEST_CASE("an unreachable pitch limit is infeasible") {
    const auto sol = solve_ocp(case_problem(5, 3.0, 200));
    CHECK(sol.status == qp::Status::infeasible);
    CHECK(sol.mean_power == 0.0);
  }

  TEST_CASE("solution CSV layout") {
    const auto sol = solve_ocp(case_problem(2, 6.0, 50));
    REQUIRE(sol.optimal());
    const auto csv = solution_csv(sol);
    CHECK(csv.rfind("t,Theta_p_dot,Theta_p,delta_T_dot,delta_T,omega_g,tau_g,beta,P,F_s,M_s,omega_g,Theta_p,w\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
    CHECK(solution_summary(sol).at("status") == "optimal");
  }
}
