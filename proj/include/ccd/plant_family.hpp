#pragma once

// LPV models on a full-factorial (c_s, c_d) grid. A design between nodes gets its own LpvModel
// whose samples are interpolated from the surrounding nodes at every sample wind speed.

#include "ccd/lpv.hpp"
#include "ccd/surrogate.hpp"

namespace ccd::lpv {

enum class PlantInterpolation { bilinear, pchip };

class PlantLpvFamily {
 public:
  PlantLpvFamily() = default;

  /// `nodes[i * cd_axis.size() + j]` holds the samples at (cs_axis[i], cd_axis[j]).
  static PlantLpvFamily build(std::vector<double> cs_axis, std::vector<double> cd_axis,
                              std::vector<std::vector<Sample>> nodes, const BuildOptions& options = {},
                              PlantInterpolation method = PlantInterpolation::bilinear);

  const std::vector<double>& cs_axis() const { return cs_; }
  const std::vector<double>& cd_axis() const { return cd_; }
  const LpvModel& node(std::size_t i, std::size_t j) const { return nodes_[i * cd_.size() + j]; }
  const std::vector<double>& winds() const { return nodes_.front().winds(); }
  PlantInterpolation method() const { return method_; }
  const SparsityMasks& mask() const { return nodes_.front().mask(); }

  bool contains(const fowt::PlantDesign& x_p, double tol = 1e-9) const;

  /// LPV model at an arbitrary design inside the grid hull.
  LpvModel at(const fowt::PlantDesign& x_p) const;
  Evaluation eval(const fowt::PlantDesign& x_p, double w, bool allow_extrapolation = false) const;

  void save(const std::filesystem::path& dir) const;
  static PlantLpvFamily load(const std::filesystem::path& dir);

 private:
  std::vector<double> cs_, cd_;
  std::vector<LpvModel> nodes_;
  PlantInterpolation method_ = PlantInterpolation::bilinear;
};

/// Linearize the surrogate at every (node, w) and assemble the family.
PlantLpvFamily build_surrogate_family(const fowt::Surrogate& surrogate, const std::vector<double>& cs_axis,
                                      const std::vector<double>& cd_axis, const std::vector<double>& winds,
                                      Execution execution = Execution::parallel,
                                      PlantInterpolation method = PlantInterpolation::bilinear);

/// Samples of the surrogate at one design over the given wind speeds.
std::vector<Sample> surrogate_samples(const fowt::Surrogate& surrogate, const fowt::PlantDesign& x_p,
                                      const std::vector<double>& winds,
                                      Execution execution = Execution::parallel);

}  // namespace ccd::lpv
