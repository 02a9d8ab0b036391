#include "ccd/lpv.hpp"
#include "ccd/pchip.hpp"
#include "ccd/plant_family.hpp"
#include "ccd/surrogate.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace ccd;
using namespace ccd::lpv;

namespace {

// Every matrix entry, operating point and output offset is affine in w.
Sample affine_sample(double w) {
  Sample s;
  auto& m = s.model;
  m.A = Matrix::Zero(5, 5);
  m.A(0, 1) = -0.2 - 0.01 * w;
  m.A(0, 0) = -0.5;
  m.A(1, 0) = 1.0;
  m.A(2, 3) = -3.0 + 0.05 * w;
  m.A(3, 2) = 1.0;
  m.A(4, 4) = -0.1 * w;
  m.B = Matrix::Zero(5, 2);
  m.B(4, 0) = -1e-7;
  m.B(4, 1) = -2.0 + 0.1 * w;
  m.C = Matrix::Identity(5, 5);
  m.D = Matrix::Zero(5, 2);
  m.D(0, 0) = 0.5 * w;
  m.g = Vector::LinSpaced(5, 1, 5) * w;
  m.labels = {lti::state_labels(), lti::input_labels(), lti::state_labels()};
  s.op.w = w;
  s.op.xi_o = Vector::LinSpaced(5, 0.1, 0.5) * w;
  s.op.u_o = Vector::Constant(2, 2.0 * w + 1.0);
  return s;
}

std::vector<Sample> affine_samples(std::initializer_list<double> ws) {
  std::vector<Sample> out;
  for (double w : ws) out.push_back(affine_sample(w));
  return out;
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

const fowt::Surrogate& surrogate() {
  static const fowt::Surrogate s;
  return s;
}

}  // namespace

TEST_SUITE("pchip") {
  TEST_CASE("linear data is reproduced exactly") {
    Pchip p({0.0, 1.0, 2.5, 4.0, 7.0}, (Matrix(5, 1) << 1, 3, 6, 9, 15).finished());
    for (double x = -1.0; x <= 8.0; x += 0.125) {
      CHECK(p(x)(0) == doctest::Approx(1 + 2 * x).epsilon(1e-13));
      CHECK(p.derivative(x)(0) == doctest::Approx(2.0).epsilon(1e-12));
    }
  }

  TEST_CASE("knots are interpolated and monotone data stays monotone") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5};
    const Matrix y = (Matrix(6, 1) << 0, 0.1, 0.2, 3, 3.1, 10).finished();
    Pchip p(x, y);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(p(x[k])(0) == y(k, 0));
    double prev = p(0.0)(0);
    for (double t = 0.01; t <= 5.0; t += 0.01) {
      const double v = p(t)(0);
      CHECK(v >= prev - 1e-14);
      prev = v;
    }
  }

  TEST_CASE("slope rules") {
    // Weighted harmonic mean for equal widths reduces to 2 s0 s1 / (s0 + s1).
    CHECK(pchip_interior_slope(1, 1, 1, 3) == doctest::Approx(1.5));
    CHECK(pchip_interior_slope(1, 1, -1, 3) == 0.0);
    // ((2 h0 + h1) s0 - h0 s1) / (h0 + h1).
    CHECK(pchip_end_slope(1, 1, 1, 1.5) == doctest::Approx(0.75));
    CHECK(pchip_end_slope(1, 1, 1, 4) == 0.0);
    CHECK(pchip_end_slope(1, 1, 1, -1) == doctest::Approx(2.0));
    CHECK(pchip_end_slope(1, 1, 1, -5) == doctest::Approx(3.0));
    CHECK(pchip_end_slope(1, 1, 1, 0) == doctest::Approx(1.5));
  }

  TEST_CASE("derivative matches a central difference") {
    Pchip p({0, 1, 2, 4}, (Matrix(4, 2) << 0, 1, 1, 0, 4, -1, 5, 3).finished());
    for (double x : {0.3, 1.7, 2.2, 3.9}) {
      const double h = 1e-6;
      const Vector fd = (p(x + h) - p(x - h)) / (2 * h);
      CHECK((fd - p.derivative(x)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_SUITE("lpv") {
  TEST_CASE("affine family is interpolated exactly") {
    const auto lpv = LpvModel::build(affine_samples({3, 5, 8, 12, 14}));
    for (double w : {3.0, 4.2, 7.5, 9.99, 13.1}) {
      const auto ev = lpv.eval(w);
      const auto ref = affine_sample(w);
      CHECK(max_abs(ev.model.A - ref.model.A) < 1e-12);
      CHECK(max_abs(ev.model.B - ref.model.B) < 1e-12);
      CHECK(max_abs(ev.model.D - ref.model.D) < 1e-12);
      CHECK(max_abs(ev.model.g - ref.model.g) < 1e-12);
      CHECK(max_abs(ev.op.xi_o - ref.op.xi_o) < 1e-12);
      CHECK(max_abs(ev.op.u_o - ref.op.u_o) < 1e-12);
      CHECK(max_abs(ev.dxi_dw - Vector::LinSpaced(5, 0.1, 0.5)) < 1e-12);
    }
  }

  TEST_CASE("training points are reproduced exactly") {
    const auto samples = surrogate_samples(surrogate(), fowt::kNominalPlant, fowt::default_wind_samples());
    const auto lpv = LpvModel::build(samples);
    for (const auto& s : samples) {
      const auto ev = lpv.eval(s.op.w);
      CHECK(max_abs(ev.model.A - s.model.A) == 0.0);
      CHECK(max_abs(ev.model.B - s.model.B) == 0.0);
      CHECK(max_abs(ev.model.C - s.model.C) == 0.0);
      CHECK(max_abs(ev.op.xi_o - s.op.xi_o) == 0.0);
    }
  }

  TEST_CASE("operating-point derivative matches a central difference") {
    const auto lpv = LpvModel::build(surrogate_samples(surrogate(), fowt::kNominalPlant, fowt::default_wind_samples()));
    for (double w : {4.5, 9.3, 11.2, 17.6}) {
      const double h = 1e-6;
      const Vector fd = (lpv.eval(w + h).op.xi_o - lpv.eval(w - h).op.xi_o) / (2 * h);
      const Vector d = lpv.eval(w).dxi_dw;
      for (int k = 0; k < 5; ++k) CHECK(std::abs(fd(k) - d(k)) <= 1e-6 * std::max(1.0, std::abs(d(k))));
    }
    // Above rated the speed is held, so its operating point is flat in w.
    CHECK(std::abs(lpv.eval(16.0).dxi_dw(4)) < 1e-6);
  }

  TEST_CASE("extrapolation guard") {
    const auto lpv = LpvModel::build(affine_samples({3, 5, 8, 12, 14}));
    CHECK_THROWS_AS(lpv.eval(2.5), ExtrapolationError);
    CHECK_THROWS_AS(lpv.eval(14.01), ExtrapolationError);
    CHECK_NOTHROW(lpv.eval(2.5, true));
    CHECK_NOTHROW(lpv.eval(16.0, true));
    CHECK_THROWS_AS(lpv.eval(0.9, true), ExtrapolationError);
    CHECK_THROWS_AS(lpv.eval(16.5, true), ExtrapolationError);
  }

  TEST_CASE("build rejects bad sample sets") {
    CHECK_THROWS_AS(LpvModel::build(affine_samples({3, 5, 8})), BuildError);
    CHECK_THROWS_AS(LpvModel::build(affine_samples({3, 5, 5, 8})), BuildError);
    CHECK_THROWS_AS(LpvModel::build(affine_samples({3, 8, 5, 12})), BuildError);
    auto bad = affine_samples({3, 5, 8, 12});
    bad[2].model.B = Matrix::Zero(5, 3);
    bad[2].model.D = Matrix::Zero(5, 3);
    bad[2].model.labels.inputs.push_back("extra");
    CHECK_THROWS_AS(LpvModel::build(bad), BuildError);
    bad = affine_samples({3, 5, 8, 12});
    bad[1].model.labels.states[0] = "other";
    CHECK_THROWS_AS(LpvModel::build(bad), BuildError);
  }

  TEST_CASE("sparsity union and mismatch count") {
    auto samples = affine_samples({3, 5, 8, 12});
    samples[1].model.A(2, 0) = 0.5;
    const auto lpv = LpvModel::build(samples);
    CHECK(lpv.mask().A(2, 0));
    CHECK(lpv.sparsity_mismatches()[0] == 1);
    CHECK(lpv.sparsity_mismatches()[1] == 0);
    CHECK(lpv.eval(5.0).model.A(2, 0) == 0.5);
    const auto m = SparsityMasks::of(samples[0].model, 1e-12);
    CHECK(m.united(m) == m);
    CHECK(m.mismatches(m) == 0);
  }

  TEST_CASE("save and load round trip") {
    const auto lpv = LpvModel::build(affine_samples({3, 5, 8, 12, 14}));
    const auto dir = std::filesystem::temp_directory_path() / "ccd_unit_lpv";
    std::filesystem::remove_all(dir);
    lpv.save(dir);
    const auto back = LpvModel::load(dir);
    for (double w : {3.0, 6.1, 13.7}) {
      CHECK(back.eval(w).model.A == lpv.eval(w).model.A);
      CHECK(back.eval(w).op.xi_o == lpv.eval(w).op.xi_o);
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("constant wind reduces to the frozen LTI model") {
    const auto lpv = LpvModel::build(affine_samples({3, 5, 8, 12, 14}));
    const auto grid = lti::uniform_grid(0.0, 20.0, 0.01);
    const auto wind = lti::Trajectory::constant(grid, Vector::Constant(1, 7.0));
    Matrix u(grid.size(), 2);
    for (std::size_t i = 0; i < grid.size(); ++i) u.row(i) << 1e5 * std::sin(grid[i]), 0.01;
    const lti::Trajectory ut(grid, u);
    const Vector x0 = Vector::Zero(5);
    const auto a = simulate_lpv(lpv, wind, ut, x0, grid);
    const auto ev = lpv.eval(7.0);
    const auto b = lti::simulate_lti(ev.model, ev.op, ut, x0, grid);
    CHECK(max_abs(a.values - b.values) < 1e-12);
    const auto z = simulate_lpv(lpv, wind, lti::Trajectory::constant(grid, Vector::Zero(2)), x0, grid);
    CHECK(max_abs(z.values) == 0.0);
  }

  TEST_CASE("slow ramp with scheduled inputs tracks the trim curve") {
    // Checked where the wind crosses a sample speed, so only the dynamic lag is measured.
    const auto lpv = LpvModel::build(surrogate_samples(surrogate(), fowt::kNominalPlant, fowt::default_wind_samples()));
    const double T = 15000.0;
    const auto grid = lti::uniform_grid(0.0, T, 0.25);
    Matrix w(grid.size(), 1);
    for (std::size_t i = 0; i < grid.size(); ++i) w(i, 0) = 5.0 + 15.0 * grid[i] / T;
    const lti::Trajectory wind(grid, w);
    const auto rel = simulate_lpv(lpv, wind, lti::Trajectory::constant(grid, Vector::Zero(2)), Vector::Zero(5), grid);
    const auto abs = lpv_absolute_states(lpv, rel, wind);
    Vector lo = Vector::Constant(5, 1e300), hi = Vector::Constant(5, -1e300);
    for (int ws = 5; ws <= 20; ++ws) {
      const Vector x = surrogate().trim(ws, fowt::kNominalPlant).xi_o;
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    const Vector range = (hi - lo).cwiseMax(1e-9);
    for (int ws = 6; ws <= 20; ++ws) {
      const auto i = static_cast<Eigen::Index>(std::lround((ws - 5.0) / 15.0 * T / 0.25));
      const Vector trim = surrogate().trim(ws, fowt::kNominalPlant).xi_o;
      const Vector err = (abs.values.row(i).transpose() - trim).cwiseQuotient(range).cwiseAbs();
      // Velocity states have a near-zero range; the displacement and speed states carry the check.
      CHECK(err(1) < 0.02);
      CHECK(err(3) < 0.02);
      CHECK(err(4) < 0.02);
    }
  }

  TEST_CASE("leave-none-out validation has zero error") {
    const auto samples = affine_samples({3, 5, 8, 12, 14});
    const auto lpv = LpvModel::build(samples);
    const auto report = validate(lpv, samples);
    CHECK(report.pass);
    CHECK(report.max_hinf == 0.0);
  }

  TEST_CASE("alternate split keeps even indices for training") {
    const auto [train, held] = alternate_split(affine_samples({3, 4, 5, 6, 7}));
    REQUIRE(train.size() == 3);
    REQUIRE(held.size() == 2);
    CHECK(train[1].op.w == 5.0);
    CHECK(held[0].op.w == 4.0);
  }

  TEST_CASE("affine family held-out error is negligible") {
    const auto [train, held] = alternate_split(affine_samples({3, 4, 5, 6, 7, 8, 9, 10, 11}));
    const auto report = validate(LpvModel::build(train), held);
    CHECK(report.pass);
    CHECK(report.max_hinf < 1e-10);
  }
}

TEST_SUITE("plant family") {
  TEST_CASE("nodes are reproduced and midpoints stay close to direct linearization") {
    const std::vector<double> winds{6, 9, 12, 15, 18};
    const auto fam = build_surrogate_family(surrogate(), {40, 60}, {8, 16}, winds);
    const auto node = fam.at({60.0, 8.0});
    for (double w : winds) CHECK(node.eval(w).model.A == fam.node(1, 0).eval(w).model.A);
    CHECK(fam.contains({50, 12}));
    CHECK_FALSE(fam.contains({70, 12}));
    CHECK_THROWS_AS(fam.at({70.0, 12.0}), DomainError);
    const auto direct = surrogate().linearize(12.0, {50.0, 12.0}).model;
    const auto mid = fam.eval({50.0, 12.0}, 12.0).model;
    CHECK(max_abs(mid.A - direct.A) / max_abs(direct.A) < 0.05);
  }

  TEST_CASE("save and load round trip") {
    const auto fam = build_surrogate_family(surrogate(), {40, 60}, {8, 16}, {6, 9, 12, 15});
    const auto dir = std::filesystem::temp_directory_path() / "ccd_unit_family";
    std::filesystem::remove_all(dir);
    fam.save(dir);
    const auto back = PlantLpvFamily::load(dir);
    CHECK(back.cs_axis() == fam.cs_axis());
    CHECK(back.eval({45, 10}, 10.0).model.A == fam.eval({45, 10}, 10.0).model.A);
    std::filesystem::remove_all(dir);
  }
}
