#pragma once

// Weibull-weighted energy, separable capital cost and levelized cost of energy.

#include "ccd/surrogate.hpp"

#include <json.hpp>

#include <filesystem>
#include <limits>

namespace ccd::design {

struct Weibull {
  double shape = 2.0;
  double scale = 11.28;  // m/s

  double pdf(double w) const;
};

/// C_capital(x_p) = F_s C_s(c_s) + F_d C_d(c_d) in $/kW.
///   C_s = base * spar_fraction + increase * spar_share * (c_s - cs_lo) / (cs_hi - cs_lo)
///   C_d = base * (1 - spar_fraction) + increase * (1 - spar_share) * (c_d^2 - cd_lo^2) / (cd_hi^2 - cd_lo^2)
/// Column cost grows with the square of its diameter, the pontoon cost with its length.
struct CostModel {
  double base = 4740.7;      // $/kW at the lower plant bounds
  double increase = 666.5;   // $/kW from lower to upper bounds
  double spar_fraction = 0.5;
  double spar_share = 0.75;
  fowt::PlantBounds bounds;
  double opex = 0.0;         // $/kW/yr
  double fixed_charge_rate = 0.056;
  double wake_loss = 0.15;
  double rating = 15e6;      // W
  Weibull weibull;
  Eigen::Vector2d factor{1.0, 1.0};

  double spar_cost(double c_s) const;
  double column_cost(double c_d) const;
  double capital(const fowt::PlantDesign& x_p) const;
  /// r_fc * C_capital + C_opex in $/MW/yr.
  double annual_cost(const fowt::PlantDesign& x_p) const;

  CostModel with_factor(const Eigen::Vector2d& f) const;

  void validate() const;
  static CostModel from_json(const nlohmann::json& j);
  static CostModel load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

inline constexpr double kHoursPerYear = 8760.0;
inline constexpr double kInfiniteLcoe = std::numeric_limits<double>::infinity();

/// Weibull density times the width of each mean's cell (midpoints, outer cells reach 3 and 25 m/s),
/// normalized to unit sum.
std::vector<double> aep_weights(const std::vector<double>& means, const Weibull& weibull, double w_lo = 3.0,
                                double w_hi = 25.0);

/// Normalized energy E_n in hours: (1 - f_wl) * 8760 * sum_j weight_j * P_j / rating.
/// Pass 0 for infeasible cases.
double normalized_aep(const std::vector<double>& mean_powers, const std::vector<double>& weights,
                      const CostModel& cost);

/// $/MWh; kInfiniteLcoe when energy is zero.
double lcoe(const fowt::PlantDesign& x_p, double energy, const CostModel& cost);

/// Opex making `lcoe(x_p, energy)` equal `target`.
double calibrate_opex(const CostModel& cost, const fowt::PlantDesign& x_p, double energy, double target);

}  // namespace ccd::design
