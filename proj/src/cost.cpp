#include "ccd/cost.hpp"

#include "ccd/model_io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <set>

namespace ccd::design {

double Weibull::pdf(double w) const {
  if (w < 0.0) throw DomainError("Weibull density needs a non-negative wind speed");
  return shape / scale * std::pow(w / scale, shape - 1.0) * std::exp(-std::pow(w / scale, shape));
}

double CostModel::spar_cost(double c_s) const {
  return base * spar_fraction + increase * spar_share * (c_s - bounds.lower.c_s) / (bounds.upper.c_s - bounds.lower.c_s);
}

double CostModel::column_cost(double c_d) const {
  const double lo = bounds.lower.c_d * bounds.lower.c_d, hi = bounds.upper.c_d * bounds.upper.c_d;
  return base * (1.0 - spar_fraction) + increase * (1.0 - spar_share) * (c_d * c_d - lo) / (hi - lo);
}

double CostModel::capital(const fowt::PlantDesign& x) const {
  return factor(0) * spar_cost(x.c_s) + factor(1) * column_cost(x.c_d);
}

double CostModel::annual_cost(const fowt::PlantDesign& x) const {
  return 1000.0 * (fixed_charge_rate * capital(x) + opex);
}

CostModel CostModel::with_factor(const Eigen::Vector2d& f) const {
  CostModel c = *this;
  c.factor = f;
  return c;
}

void CostModel::validate() const {
  if (!(base > 0.0) || !(increase > 0.0)) throw DomainError("cost base and increase must be positive");
  if (spar_fraction < 0.0 || spar_fraction > 1.0 || spar_share < 0.0 || spar_share > 1.0)
    throw DomainError("cost fractions must lie in [0, 1]");
  if (opex < 0.0 || fixed_charge_rate <= 0.0 || wake_loss < 0.0 || wake_loss >= 1.0 || !(rating > 0.0))
    throw DomainError("invalid cost rates");
  if (!(weibull.shape > 0.0) || !(weibull.scale > 0.0)) throw DomainError("Weibull parameters must be positive");
  if ((factor.array() <= 0.0).any()) throw DomainError("cost factors must be positive");
}

CostModel CostModel::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"schema_version", "description", "base", "increase", "spar_fraction",
                                           "spar_share", "plant_bounds", "opex", "fixed_charge_rate",
                                           "wake_loss", "rating", "weibull", "factor"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw IoError("unknown cost model key '" + key + "'");
  CostModel c;
  try {
    if (j.value("schema_version", 1) != 1) throw IoError("unsupported cost model schema version");
    c.base = j.at("base").get<double>();
    c.increase = j.at("increase").get<double>();
    c.spar_fraction = j.at("spar_fraction").get<double>();
    c.spar_share = j.at("spar_share").get<double>();
    c.opex = j.at("opex").get<double>();
    c.fixed_charge_rate = j.value("fixed_charge_rate", c.fixed_charge_rate);
    c.wake_loss = j.value("wake_loss", c.wake_loss);
    c.rating = j.value("rating", c.rating);
    if (j.contains("plant_bounds")) {
      const auto lo = j.at("plant_bounds").at("lower").get<std::vector<double>>();
      const auto hi = j.at("plant_bounds").at("upper").get<std::vector<double>>();
      if (lo.size() != 2 || hi.size() != 2) throw IoError("plant bounds need two entries");
      c.bounds = {{lo[0], lo[1]}, {hi[0], hi[1]}};
    }
    if (j.contains("weibull")) {
      c.weibull.shape = j.at("weibull").at("shape").get<double>();
      c.weibull.scale = j.at("weibull").at("scale").get<double>();
    }
    if (j.contains("factor")) {
      const auto f = j.at("factor").get<std::vector<double>>();
      if (f.size() != 2) throw IoError("cost factor needs two entries");
      c.factor = {f[0], f[1]};
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("malformed cost model: {}", e.what()));
  }
  c.validate();
  return c;
}

CostModel CostModel::load(const std::filesystem::path& path) { return from_json(io::read_json(path)); }

nlohmann::json CostModel::to_json() const {
  return {{"schema_version", 1},
          {"base", base},
          {"increase", increase},
          {"spar_fraction", spar_fraction},
          {"spar_share", spar_share},
          {"plant_bounds",
           {{"lower", {bounds.lower.c_s, bounds.lower.c_d}}, {"upper", {bounds.upper.c_s, bounds.upper.c_d}}}},
          {"opex", opex},
          {"fixed_charge_rate", fixed_charge_rate},
          {"wake_loss", wake_loss},
          {"rating", rating},
          {"weibull", {{"shape", weibull.shape}, {"scale", weibull.scale}}},
          {"factor", {factor(0), factor(1)}}};
}

std::vector<double> aep_weights(const std::vector<double>& means, const Weibull& weibull, double w_lo, double w_hi) {
  if (means.empty()) throw DomainError("no wind cases");
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (means[i] < w_lo || means[i] > w_hi) throw DomainError(fmt::format("case mean {} outside the AEP range", means[i]));
    if (i > 0 && !(means[i] > means[i - 1])) throw DomainError("case means must be strictly increasing");
  }
  std::vector<double> w(means.size());
  double total = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double left = i == 0 ? w_lo : 0.5 * (means[i - 1] + means[i]);
    const double right = i + 1 == means.size() ? w_hi : 0.5 * (means[i] + means[i + 1]);
    w[i] = weibull.pdf(means[i]) * (right - left);
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

double normalized_aep(const std::vector<double>& powers, const std::vector<double>& weights, const CostModel& cost) {
  if (powers.size() != weights.size()) throw DimensionError("one power per wind case expected");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] >= 0.0)) throw DomainError("case powers must be non-negative");
    num += weights[i] * (powers[i] / cost.rating);
    den += weights[i];
  }
  return (1.0 - cost.wake_loss) * kHoursPerYear * (num / den);
}

double lcoe(const fowt::PlantDesign& x_p, double energy, const CostModel& cost) {
  if (!(energy > 0.0)) return kInfiniteLcoe;
  return cost.annual_cost(x_p) / energy;
}

double calibrate_opex(const CostModel& cost, const fowt::PlantDesign& x_p, double energy, double target) {
  if (!(energy > 0.0)) throw DomainError("calibration needs positive energy");
  const double opex = target * energy / 1000.0 - cost.fixed_charge_rate * cost.capital(x_p);
  if (opex < 0.0) throw DomainError(fmt::format("target LCOE {} is below the capital cost alone", target));
  return opex;
}

}  // namespace ccd::design
