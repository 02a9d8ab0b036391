#include "ccd/surrogate.hpp"

#include "ccd/model_io.hpp"
#include "ccd/parallel.hpp"

#include <Eigen/LU>
#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <set>

namespace ccd::fowt {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw IoError(fmt::format("{}: unknown key '{}'", where, key));
}

}  // namespace

bool PlantBounds::contains(const PlantDesign& x, double tol) const {
  return x.c_s >= lower.c_s - tol && x.c_s <= upper.c_s + tol && x.c_d >= lower.c_d - tol &&
         x.c_d <= upper.c_d + tol;
}

void PlantBounds::require(const PlantDesign& x) const {
  if (!contains(x))
    throw DomainError(fmt::format("plant design [{}, {}] outside bounds [{}, {}]..[{}, {}]", x.c_s,
                                  x.c_d, lower.c_s, lower.c_d, upper.c_s, upper.c_d));
}

double PowerCoefficientSurface::operator()(double tsr, double beta) const {
  const double b = beta * kRadToDeg;
  const double l = tsr * lambda_scale;
  const double inv_li = 1.0 / (l + c7 * b) - c8 / (b * b * b + 1.0);
  return scale * (c1 * (c2 * inv_li - c3 * b - c4) * std::exp(-c5 * inv_li) + c6 * l);
}

double ThrustCoefficientSurface::operator()(double tsr, double beta) const {
  return max * (1.0 - std::exp(-tsr / lambda_scale)) * std::exp(-pitch_decay * beta);
}

SurrogateParams SurrogateParams::reference() { return SurrogateParams{}; }

SurrogateParams SurrogateParams::from_json(const nlohmann::json& j) {
  SurrogateParams p;
  try {
    reject_unknown(j,
                   {"schema_version", "description", "rotor_radius", "air_density",
                    "drivetrain_inertia", "pitch_inertia", "pitch_stiffness", "pitch_damping",
                    "tower", "hub_lever_arm", "generator_efficiency", "rated_speed",
                    "rated_torque", "rated_wind", "wind_range", "power_coefficient",
                    "thrust_coefficient", "plant_bounds"},
                   "surrogate params");
    if (j.value("schema_version", 1) != 1) throw IoError("unsupported surrogate schema version");
    p.rotor_radius = j.at("rotor_radius").get<double>();
    p.air_density = j.at("air_density").get<double>();
    p.drivetrain_inertia = j.at("drivetrain_inertia").get<double>();
    p.pitch_inertia = {j.at("pitch_inertia").at("base").get<double>(),
                       j.at("pitch_inertia").at("slope").get<double>()};
    p.pitch_stiffness = {j.at("pitch_stiffness").at("base").get<double>(),
                         j.at("pitch_stiffness").at("slope").get<double>()};
    p.pitch_damping = j.at("pitch_damping").get<double>();
    const auto& tower = j.at("tower");
    reject_unknown(tower, {"mass", "stiffness", "damping"}, "tower");
    p.tower_mass = tower.at("mass").get<double>();
    p.tower_stiffness = tower.at("stiffness").get<double>();
    p.tower_damping = tower.at("damping").get<double>();
    p.hub_lever_arm = j.at("hub_lever_arm").get<double>();
    p.generator_efficiency = j.at("generator_efficiency").get<double>();
    p.rated_speed = j.at("rated_speed").get<double>();
    p.rated_torque = j.at("rated_torque").get<double>();
    p.rated_wind = j.at("rated_wind").get<double>();
    if (j.contains("wind_range")) {
      p.wind_min = j.at("wind_range").at(0).get<double>();
      p.wind_max = j.at("wind_range").at(1).get<double>();
    }
    const auto& cp = j.at("power_coefficient");
    reject_unknown(cp, {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "lambda_scale", "scale"},
                   "power_coefficient");
    p.cp = {cp.at("c1").get<double>(), cp.at("c2").get<double>(), cp.at("c3").get<double>(),
            cp.at("c4").get<double>(), cp.at("c5").get<double>(), cp.at("c6").get<double>(),
            cp.at("c7").get<double>(), cp.at("c8").get<double>(),
            cp.at("lambda_scale").get<double>(), cp.at("scale").get<double>()};
    const auto& ct = j.at("thrust_coefficient");
    reject_unknown(ct, {"max", "lambda_scale", "pitch_decay"}, "thrust_coefficient");
    p.ct = {ct.at("max").get<double>(), ct.at("lambda_scale").get<double>(),
            ct.at("pitch_decay").get<double>()};
    if (j.contains("plant_bounds")) {
      const auto& b = j.at("plant_bounds");
      p.bounds.lower = {b.at("lower").at(0).get<double>(), b.at("lower").at(1).get<double>()};
      p.bounds.upper = {b.at("upper").at(0).get<double>(), b.at("upper").at(1).get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed surrogate params: ") + e.what());
  }
  return p;
}

SurrogateParams SurrogateParams::load(const std::filesystem::path& path) {
  return from_json(io::read_json(path));
}

nlohmann::json SurrogateParams::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["rotor_radius"] = rotor_radius;
  j["air_density"] = air_density;
  j["drivetrain_inertia"] = drivetrain_inertia;
  j["pitch_inertia"] = {{"base", pitch_inertia.base}, {"slope", pitch_inertia.slope}};
  j["pitch_stiffness"] = {{"base", pitch_stiffness.base}, {"slope", pitch_stiffness.slope}};
  j["pitch_damping"] = pitch_damping;
  j["tower"] = {{"mass", tower_mass}, {"stiffness", tower_stiffness}, {"damping", tower_damping}};
  j["hub_lever_arm"] = hub_lever_arm;
  j["generator_efficiency"] = generator_efficiency;
  j["rated_speed"] = rated_speed;
  j["rated_torque"] = rated_torque;
  j["rated_wind"] = rated_wind;
  j["wind_range"] = {wind_min, wind_max};
  j["power_coefficient"] = {{"c1", cp.c1}, {"c2", cp.c2}, {"c3", cp.c3},
                            {"c4", cp.c4}, {"c5", cp.c5}, {"c6", cp.c6},
                            {"c7", cp.c7}, {"c8", cp.c8}, {"lambda_scale", cp.lambda_scale},
                            {"scale", cp.scale}};
  j["thrust_coefficient"] = {
      {"max", ct.max}, {"lambda_scale", ct.lambda_scale}, {"pitch_decay", ct.pitch_decay}};
  j["plant_bounds"] = {{"lower", {bounds.lower.c_s, bounds.lower.c_d}},
                       {"upper", {bounds.upper.c_s, bounds.upper.c_d}}};
  return j;
}

Surrogate::Surrogate(SurrogateParams params) : params_(std::move(params)) {
  // Golden-section search for the Cp peak at zero pitch.
  double lo = 2.0, hi = 16.0;
  constexpr double ratio = 0.6180339887498949;
  auto f = [&](double l) { return params_.cp(l, 0.0); };
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double a = hi - ratio * (hi - lo);
    const double b = lo + ratio * (hi - lo);
    if (f(a) < f(b))
      lo = a;
    else
      hi = b;
  }
  tsr_opt_ = 0.5 * (lo + hi);
  torque_gain_ = params_.rated_torque / (params_.rated_speed * params_.rated_speed);

  // Torque balance with tau_g = gain * omega^2 at steady state holds where
  // Cp(tsr, 0) / tsr^3 = gain / (0.5 rho pi R^5); Newton from the Cp peak.
  const double R = params_.rotor_radius;
  const double target = torque_gain_ / (0.5 * params_.air_density * std::numbers::pi * std::pow(R, 5));
  auto g = [&](double l) { return params_.cp(l, 0.0) / (l * l * l) - target; };
  double l = tsr_opt_;
  for (int it = 0; it < 100; ++it) {
    const double h = 1e-6 * l;
    const double slope = (g(l + h) - g(l - h)) / (2.0 * h);
    const double step = g(l) / slope;
    l -= step;
    if (std::abs(step) < 1e-14 * l) break;
  }
  tsr_track_ = l;
  rated_wind_ = params_.rated_speed * R / tsr_track_;
  if (std::abs(rated_wind_ - params_.rated_wind) > 0.01 * params_.rated_wind)
    throw DomainError(fmt::format(
        "aero calibration puts rated wind at {:.4f} m/s, inconsistent with nominal {:.4f} m/s",
        rated_wind_, params_.rated_wind));
}

void Surrogate::check_envelope(double omega, double v, double beta) const {
  if (!(omega > 0.0))
    throw DomainError(fmt::format("generator speed {} rad/s outside modeled envelope", omega));
  if (!(v > 0.0)) throw DomainError(fmt::format("relative wind {} m/s outside modeled envelope", v));
  // Small negative pitch is tolerated so finite differences can straddle beta = 0.
  if (beta < -1e-3 || beta > 0.5 * std::numbers::pi)
    throw DomainError(fmt::format("blade pitch {} rad outside [0, pi/2]", beta));
}

double Surrogate::aero_thrust(double v, double omega, double beta) const {
  const double R = params_.rotor_radius;
  const double q = 0.5 * params_.air_density * std::numbers::pi * R * R * v * v;
  return q * params_.ct(omega * R / v, beta);
}

double Surrogate::aero_torque(double v, double omega, double beta) const {
  const double R = params_.rotor_radius;
  const double q = 0.5 * params_.air_density * std::numbers::pi * R * R * v * v;
  return q * v * params_.cp(omega * R / v, beta) / omega;
}

Vec5 Surrogate::dynamics(const Vec5& xi, const Vec2& u, double w, const PlantDesign& x_p) const {
  const double pitch_rate = xi(0);
  const double pitch = xi(1);
  const double tower_rate = xi(2);
  const double tower = xi(3);
  const double omega = xi(4);
  const double v = w - params_.hub_lever_arm * pitch_rate - tower_rate;
  check_envelope(omega, v, u(1));

  const double thrust = aero_thrust(v, omega, u(1));
  const double torque = aero_torque(v, omega, u(1));
  Vec5 dx;
  dx(0) = (thrust * params_.hub_lever_arm - params_.pitch_stiffness(x_p) * pitch -
           params_.pitch_damping * pitch_rate) /
          params_.pitch_inertia(x_p);
  dx(1) = pitch_rate;
  dx(2) = (thrust - params_.tower_stiffness * tower - params_.tower_damping * tower_rate) /
          params_.tower_mass;
  dx(3) = tower_rate;
  dx(4) = (torque - u(0)) / params_.drivetrain_inertia;
  return dx;
}

Vector Surrogate::outputs(const Vec5& xi, const Vec2& u, double w, const PlantDesign& /*x_p*/) const {
  const double v = w - params_.hub_lever_arm * xi(0) - xi(2);
  check_envelope(xi(4), v, u(1));
  Vector y(5);
  y(0) = params_.generator_efficiency * u(0) * xi(4);
  y(1) = (params_.tower_stiffness * xi(3) + params_.tower_damping * xi(2)) / 1000.0;
  y(2) = u(0) / 1000.0;
  y(3) = xi(4);
  y(4) = xi(1);
  return y;
}

namespace {

struct NewtonResult {
  Vec5 y;
  double residual;
  bool converged;
};

// Damped Newton with central-difference Jacobian on a 5x5 square system.
template <typename F>
NewtonResult damped_newton(F&& residual, Vec5 y, const Vec5& scale) {
  Vec5 r = residual(y);
  double norm = r.cwiseAbs().maxCoeff();
  for (int it = 0; it < 100; ++it) {
    if (norm <= 1e-13) return {y, norm, true};
    Eigen::Matrix<double, 5, 5> J;
    for (int j = 0; j < 5; ++j) {
      const double h = std::max(1e-7 * std::abs(y(j)), 1e-9 * scale(j));
      Vec5 yp = y, ym = y;
      yp(j) += h;
      ym(j) -= h;
      J.col(j) = (residual(yp) - residual(ym)) / (2.0 * h);
    }
    const Vec5 step = J.partialPivLu().solve(-r);
    double alpha = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Vec5 trial = y + alpha * step;
      Vec5 rt;
      try {
        rt = residual(trial);
      } catch (const DomainError&) {
        alpha *= 0.5;
        continue;
      }
      const double nt = rt.cwiseAbs().maxCoeff();
      if (nt < norm || (nt <= norm && ls == 0)) {
        y = trial;
        r = rt;
        norm = nt;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  return {y, norm, norm <= 1e-9};
}

}  // namespace

lti::OperatingPoint Surrogate::trim(double w, const PlantDesign& x_p) const {
  constexpr double tol = 1e-9;
  if (w < params_.wind_min - tol || w > params_.wind_max + tol)
    throw DomainError(fmt::format("trim wind speed {} m/s outside [{}, {}]", w, params_.wind_min,
                                  params_.wind_max));
  if (x_p.c_s <= 0.0 || x_p.c_d <= 0.0) throw DomainError("plant dimensions must be positive");

  const double R = params_.rotor_radius;
  const double K = params_.pitch_stiffness(x_p);
  const bool below_rated = w < rated_wind_;

  Vec5 guess;
  Vec2 u;
  if (below_rated) {
    const double omega = tsr_track_ * w / R;
    const double thrust = aero_thrust(w, omega, 0.0);
    guess << 0.0, thrust * params_.hub_lever_arm / K, 0.0, thrust / params_.tower_stiffness, omega;
  } else {
    // Bracket the pitch that balances rated torque, then refine jointly.
    const double omega = params_.rated_speed;
    double lo = 0.0, hi = 1.2;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (aero_torque(w, omega, mid) > params_.rated_torque)
        lo = mid;
      else
        hi = mid;
    }
    const double beta = 0.5 * (lo + hi);
    const double thrust = aero_thrust(w, omega, beta);
    guess << 0.0, thrust * params_.hub_lever_arm / K, 0.0, thrust / params_.tower_stiffness, beta;
  }

  auto assemble = [&](const Vec5& y, Vec5& xi, Vec2& uu) {
    xi << y(0), y(1), y(2), y(3), below_rated ? y(4) : params_.rated_speed;
    if (below_rated)
      uu << torque_gain_ * y(4) * y(4), 0.0;
    else
      uu << params_.rated_torque, y(4);
  };
  auto residual = [&](const Vec5& y) {
    Vec5 xi;
    Vec2 uu;
    assemble(y, xi, uu);
    return dynamics(xi, uu, w, x_p);
  };
  Vec5 scale;
  scale << 1e-3, 1e-2, 1e-2, 0.1, below_rated ? 0.1 : 0.01;
  const auto result = damped_newton(residual, guess, scale);
  if (!result.converged)
    throw TrimError(fmt::format("trim failed at w = {} m/s (residual {:.3e})", w, result.residual),
                    result.residual);

  Vec5 xi;
  assemble(result.y, xi, u);
  lti::OperatingPoint op;
  op.w = w;
  op.xi_o = xi;
  op.u_o = u;
  op.x_p = x_p.as_vector();
  return op;
}

Linearization Surrogate::linearize(double w, const PlantDesign& x_p, double relative_step) const {
  return linearize_at(trim(w, x_p), relative_step);
}

Linearization Surrogate::linearize_at(const lti::OperatingPoint& op, double relative_step) const {
  const PlantDesign x_p = PlantDesign::from(op.x_p);
  const Vec5 xi0 = op.xi_o;
  const Vec2 u0 = op.u_o;
  const double w = op.w;

  Linearization lin;
  lin.op = op;
  auto& m = lin.model;
  m.A.resize(5, 5);
  m.B.resize(5, 2);
  m.C.resize(5, 5);
  m.D.resize(5, 2);
  m.g = outputs(xi0, u0, w, x_p);
  m.labels = {lti::state_labels(), lti::input_labels(), lti::output_labels()};

  for (int j = 0; j < 5; ++j) {
    const double h = std::max(relative_step * std::abs(xi0(j)), 1e-8);
    Vec5 xp = xi0, xm = xi0;
    xp(j) += h;
    xm(j) -= h;
    m.A.col(j) = (dynamics(xp, u0, w, x_p) - dynamics(xm, u0, w, x_p)) / (2.0 * h);
    m.C.col(j) = (outputs(xp, u0, w, x_p) - outputs(xm, u0, w, x_p)) / (2.0 * h);
  }
  for (int j = 0; j < 2; ++j) {
    const double h = std::max(relative_step * std::abs(u0(j)), 1e-8);
    Vec2 up = u0, um = u0;
    up(j) += h;
    um(j) -= h;
    m.B.col(j) = (dynamics(xi0, up, w, x_p) - dynamics(xi0, um, w, x_p)) / (2.0 * h);
    m.D.col(j) = (outputs(xi0, up, w, x_p) - outputs(xi0, um, w, x_p)) / (2.0 * h);
  }
  return lin;
}

lti::Trajectory Surrogate::simulate(const lti::Trajectory& wind, const lti::Trajectory& u,
                                    const Vector& xi0, const PlantDesign& x_p,
                                    const std::vector<double>& grid) const {
  if (wind.channels() != 1) throw DimensionError("wind trajectory must have one channel");
  if (u.channels() != 2) throw DimensionError("input trajectory must have [tau_g, beta]");
  if (xi0.size() != 5) throw DimensionError("initial state must have five entries");
  auto rhs = [&](double t, const Vector& x) -> Vector {
    const Vec5 xi = x;
    const Vec2 uu = u.sample(t);
    return dynamics(xi, uu, wind.sample(t, 0), x_p);
  };
  return lti::Trajectory(grid, lti::integrate_rk4(rhs, xi0, grid), lti::state_labels());
}

std::vector<Linearization> linearize_range(const Surrogate& surrogate, const std::vector<double>& ws,
                                           const PlantDesign& x_p, Execution execution) {
  std::vector<Linearization> out(ws.size());
  parallel_for(
      ws.size(), [&](std::size_t i) { out[i] = surrogate.linearize(ws[i], x_p); }, execution);
  return out;
}

std::vector<double> default_wind_samples() {
  std::vector<double> ws;
  for (int w = 3; w <= 25; ++w) ws.push_back(w);
  return ws;
}

}  // namespace ccd::fowt
