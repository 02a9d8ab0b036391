#pragma once

// Plant-design sweep: every (grid cell, pitch limit, wind case) control subproblem, then energy,
// cost and LCOE maps per pitch limit.

#include "ccd/cost.hpp"
#include "ccd/dtqp.hpp"
#include "ccd/plant_family.hpp"
#include "ccd/wind.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>

namespace ccd::design {

struct SweepConfig {
  std::vector<double> cs_axis, cd_axis;
  /// LPV family nodes; the evaluation grid must lie inside their hull.
  std::vector<double> family_cs, family_cd;
  lpv::PlantInterpolation interpolation = lpv::PlantInterpolation::bilinear;
  std::vector<double> levels_deg{3, 4, 5, 6, 7};
  std::vector<double> case_means = default_case_means();
  std::uint64_t seed = 1;
  int mesh = 500;
  WindOptions wind;
  double omega_max = dtqp::kOmegaMax1;
  CostModel cost;
  std::vector<Eigen::Vector2d> corners{{0.8, 0.8}, {1.2, 0.8}, {0.8, 1.2}, {1.2, 1.2}};
  /// Pitch limit used for the cost-factor study.
  double corner_level_deg = 6.0;
  fowt::SurrogateParams surrogate = fowt::SurrogateParams::reference();

  void validate() const;
  /// Unknown keys are rejected; relative paths resolve against `base_dir`.
  static SweepConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static SweepConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct RunOptions {
  Execution execution = Execution::parallel;
  int workers = 0;
  /// Per-solve result cache; empty disables it.
  std::filesystem::path cache_dir;
};

struct SolveRecord {
  qp::Status status = qp::Status::numerical_error;
  double mean_power = 0.0;  // W, zero unless optimal
  double objective = 0.0;
  double max_violation = 0.0;
  double theta_active = 0.0;
  int iterations = 0;

  bool optimal() const { return status == qp::Status::optimal; }
};

struct Optimum {
  std::size_t i = 0, j = 0;
  fowt::PlantDesign x_p;
  double lcoe = kInfiniteLcoe;
  double energy = 0.0;
};

struct CornerResult {
  Eigen::Vector2d factor;
  Optimum optimum;
};

class SweepResult {
 public:
  SweepResult() = default;
  SweepResult(SweepConfig config, std::vector<SolveRecord> solves);

  const SweepConfig& config() const { return config_; }
  std::size_t n_cs() const { return config_.cs_axis.size(); }
  std::size_t n_cd() const { return config_.cd_axis.size(); }
  std::size_t n_levels() const { return config_.levels_deg.size(); }
  std::size_t n_cases() const { return config_.case_means.size(); }
  std::size_t flat(std::size_t level, std::size_t i, std::size_t j, std::size_t c) const;

  const SolveRecord& solve(std::size_t level, std::size_t i, std::size_t j, std::size_t c) const;
  const std::vector<SolveRecord>& solves() const { return solves_; }
  const std::vector<double>& weights() const { return weights_; }

  double energy(std::size_t level, std::size_t i, std::size_t j) const;
  int infeasible(std::size_t level, std::size_t i, std::size_t j) const;
  /// Non-optimal (cell, case) pairs at one level.
  int infeasible_pairs(std::size_t level) const;
  double lcoe(std::size_t level, std::size_t i, std::size_t j, const CostModel& cost) const;
  Optimum optimum(std::size_t level, const CostModel& cost) const;
  Optimum optimum(std::size_t level) const { return optimum(level, config_.cost); }
  std::size_t level_index(double deg) const;

  /// LCOE optima under each cost factor, reusing the stored energies.
  std::vector<CornerResult> cost_sensitivity(std::size_t level, const std::vector<Eigen::Vector2d>& corners) const;

  double seconds = 0.0;
  int cache_hits = 0;

 private:
  SweepConfig config_;
  std::vector<SolveRecord> solves_;
  std::vector<double> weights_;
  std::vector<double> energy_;
};

/// LPV family for the configuration's surrogate and family nodes.
lpv::PlantLpvFamily build_family(const SweepConfig& config, Execution execution = Execution::parallel);

/// Stable digest of everything a family's subproblems depend on.
std::string family_fingerprint(const lpv::PlantLpvFamily& family);

SweepResult run_sweep(const SweepConfig& config, const lpv::PlantLpvFamily& family, const RunOptions& options = {});

/// sweep.csv, cases.csv, summary.json, heatmap_*.csv and the config echo.
void write_sweep(const SweepResult& result, const std::filesystem::path& dir);
/// Rebuilds a result from a directory written by write_sweep.
SweepResult read_sweep(const std::filesystem::path& dir);

std::string sweep_csv(const SweepResult& result);
std::string cases_csv(const SweepResult& result);
nlohmann::json sweep_summary(const SweepResult& result);
/// Human-readable optima per level and the cost-factor study.
std::string report_text(const SweepResult& result);

}  // namespace ccd::design
