// Sets the cost model's opex so the nominal design reaches a target LCOE under a sweep
// configuration's cases, mesh and pitch limit.

#include "ccd/model_io.hpp"
#include "ccd/sweep.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

using namespace ccd;

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the operating cost against a target LCOE at the nominal design"};
  std::string config_path, out;
  double target = 89.30, level = 6.0;
  app.add_option("--config", config_path, "sweep config JSON")->required();
  app.add_option("--target", target, "target LCOE [$/MWh]");
  app.add_option("--level", level, "pitch limit [deg]");
  app.add_option("--out", out, "cost model JSON to write")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = design::SweepConfig::load(config_path);
    config.cs_axis = {fowt::kNominalPlant.c_s};
    config.cd_axis = {fowt::kNominalPlant.c_d};
    config.levels_deg = {level};
    const auto family = design::build_family(config);
    const auto result = design::run_sweep(config, family);
    const double energy = result.energy(0, 0, 0);
    auto cost = config.cost;
    cost.opex = design::calibrate_opex(cost, fowt::kNominalPlant, energy, target);
    io::write_json(out, cost.to_json());
    fmt::print("E_n {:.6g} h, {} infeasible cases, opex {:.6g} $/kW/yr, LCOE {:.4f} $/MWh\n", energy,
               result.infeasible(0, 0, 0), cost.opex, design::lcoe(fowt::kNominalPlant, energy, cost));
  } catch (const IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return 4;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
