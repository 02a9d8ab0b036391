#pragma once

// Five-state nonlinear floating-turbine model with explicit plant-design dependence.
//
// States  xi = [Theta_p_dot, Theta_p, delta_T_dot, delta_T, omega_g]
// Inputs  u  = [tau_g, beta]
// Outputs y  = [P (W), F_s (kN), M_s (kNm), omega_g (rad/s), Theta_p (rad)]
//
// The rotor is direct drive, so omega_g is also the rotor speed. M_s is the generator torque
// reaction (the model carries no side-to-side states) and stands in for the tower-base
// side-to-side moment.

#include "ccd/lti.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace ccd::fowt {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec2 = Eigen::Matrix<double, 2, 1>;

/// Semisubmersible design: outer-column spacing and outer-column diameter [m].
struct PlantDesign {
  double c_s = 51.75;
  double c_d = 12.50;

  Eigen::Vector2d as_vector() const { return {c_s, c_d}; }
  static PlantDesign from(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
  bool operator==(const PlantDesign&) const = default;
};

inline constexpr PlantDesign kNominalPlant{51.75, 12.50};

struct PlantBounds {
  PlantDesign lower{36.0, 6.0};
  PlantDesign upper{78.0, 24.0};

  bool contains(const PlantDesign& x, double tol = 1e-9) const;
  void require(const PlantDesign& x) const;
};

/// Exponential power-coefficient family in the tip-speed ratio and blade pitch (degrees inside).
/// c8 = 0 drops the cubic pitch term, which otherwise collapses Cp over the first two degrees.
struct PowerCoefficientSurface {
  double c1 = 0.5176, c2 = 116.0, c3 = 0.5, c4 = 5.0, c5 = 21.0, c6 = 0.0068, c7 = 0.16,
         c8 = 0.0;
  double lambda_scale = 1.3040588825672363;
  double scale = 0.9376003948414965;

  double operator()(double tsr, double beta) const;
};

/// Ct = max * (1 - exp(-tsr / lambda_scale)) * exp(-pitch_decay * beta).
struct ThrustCoefficientSurface {
  double max = 1.26285595;
  double lambda_scale = 8.0;
  double pitch_decay = 6.94169349;

  double operator()(double tsr, double beta) const;
};

/// Law a + b * c_s^2 * c_d^2.
struct ColumnScalingLaw {
  double base = 0.0;
  double slope = 0.0;

  double operator()(const PlantDesign& x) const { return base + slope * x.c_s * x.c_s * x.c_d * x.c_d; }
};

struct SurrogateParams {
  double rotor_radius = 120.0;           // m
  double air_density = 1.225;            // kg/m^3
  double drivetrain_inertia = 3.2e8;     // kg m^2
  ColumnScalingLaw pitch_inertia{2.736e10, 1.2585e5};
  ColumnScalingLaw pitch_stiffness{1.2e9, 5520.0};
  double pitch_damping = 2.0e9;          // N m s / rad
  double tower_mass = 1.0e6;             // kg
  double tower_stiffness = 9.87e6;       // N/m
  double tower_damping = 6.3e4;          // N s/m
  double hub_lever_arm = 150.0;          // m
  double generator_efficiency = 0.965;
  double rated_speed = 0.785;            // rad/s
  double rated_torque = 19.8e6;          // N m
  double rated_wind = 10.6;              // m/s, nominal; trim switches at the derived value
  double wind_min = 3.0;
  double wind_max = 25.0;
  PowerCoefficientSurface cp;
  ThrustCoefficientSurface ct;
  PlantBounds bounds;

  /// The committed reference calibration (identical to data/iea15_surrogate.json).
  static SurrogateParams reference();
  static SurrogateParams from_json(const nlohmann::json& j);
  static SurrogateParams load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct Linearization {
  lti::StateSpaceModel model;
  lti::OperatingPoint op;
};

class Surrogate {
 public:
  explicit Surrogate(SurrogateParams params = SurrogateParams::reference());

  const SurrogateParams& params() const { return params_; }

  Vec5 dynamics(const Vec5& xi, const Vec2& u, double w, const PlantDesign& x_p) const;
  Vector outputs(const Vec5& xi, const Vec2& u, double w, const PlantDesign& x_p) const;

  /// Stationary point; residual of dynamics at the result is below 1e-9.
  lti::OperatingPoint trim(double w, const PlantDesign& x_p) const;

  /// Central-difference Jacobians about trim(w, x_p); `relative_step` per variable, floor 1e-8.
  Linearization linearize(double w, const PlantDesign& x_p, double relative_step = 1e-6) const;
  Linearization linearize_at(const lti::OperatingPoint& op, double relative_step = 1e-6) const;

  /// RK4 over `grid`; wind has one channel, u has [tau_g, beta]. Returns absolute states.
  lti::Trajectory simulate(const lti::Trajectory& wind, const lti::Trajectory& u, const Vector& xi0,
                           const PlantDesign& x_p, const std::vector<double>& grid) const;

  double power_coefficient(double tsr, double beta) const { return params_.cp(tsr, beta); }
  double thrust_coefficient(double tsr, double beta) const { return params_.ct(tsr, beta); }
  double aero_thrust(double v, double omega, double beta) const;
  double aero_torque(double v, double omega, double beta) const;

  /// Tip-speed ratio maximizing Cp at zero pitch.
  double optimal_tsr() const { return tsr_opt_; }
  /// Below-rated torque law tau_g = gain * omega_g^2, meeting rated torque at rated speed.
  double torque_gain() const { return torque_gain_; }
  /// Tip-speed ratio tracked by the torque law.
  double tracking_tsr() const { return tsr_track_; }
  /// Wind speed where the torque law reaches rated speed.
  double rated_wind() const { return rated_wind_; }

 private:
  void check_envelope(double omega, double v, double beta) const;

  SurrogateParams params_;
  double tsr_opt_ = 0.0;
  double torque_gain_ = 0.0;
  double tsr_track_ = 0.0;
  double rated_wind_ = 0.0;
};

/// Trim points at each wind speed (e.g. integer speeds 3..25 for the default sample set).
std::vector<Linearization> linearize_range(const Surrogate& surrogate, const std::vector<double>& ws,
                                           const PlantDesign& x_p,
                                           Execution execution = Execution::parallel);

std::vector<double> default_wind_samples();

}  // namespace ccd::fowt
