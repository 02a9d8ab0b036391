#pragma once

// Continuous-in-w model family built from sampled linearizations.
//
//   dxi_D/dt = A(w) xi_D + B(w) u_D - dxi_o/dw * dw/dt
//   y        = g(w) + C(w) xi_D + D(w) u_D
//   xi       = xi_D + xi_o(w),  u = u_D + u_o(w)
//
// Each entry that is nonzero in any sample gets its own PCHIP interpolant in w. Operating
// points are interpolated the same way and their derivative comes from the interpolant.

#include "ccd/lti.hpp"
#include "ccd/pchip.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>

namespace ccd::lpv {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct Sample {
  lti::StateSpaceModel model;
  lti::OperatingPoint op;
};

struct SparsityMasks {
  BoolMatrix A, B, C, D;

  static SparsityMasks of(const lti::StateSpaceModel& m, double threshold);
  SparsityMasks united(const SparsityMasks& other) const;
  /// Entries set in exactly one of the two masks.
  int mismatches(const SparsityMasks& other) const;
  int nonzeros() const;
  bool operator==(const SparsityMasks& other) const;
};

struct BuildOptions {
  double zero_threshold = 1e-12;
  /// How far outside [min W, max W] evaluation may go when extrapolation is enabled.
  double max_extrapolation = 2.0;
};

struct Evaluation {
  lti::StateSpaceModel model;
  lti::OperatingPoint op;
  Vector dxi_dw;
};

class LpvModel {
 public:
  LpvModel() = default;

  /// Needs >= 4 samples with strictly increasing w and shared structure.
  static LpvModel build(std::vector<Sample> samples, const BuildOptions& options = {});
  /// As build(), but interpolates over a caller-supplied mask (superset of the sample masks).
  static LpvModel build_with_mask(std::vector<Sample> samples, const SparsityMasks& mask,
                                  const BuildOptions& options = {});

  Evaluation eval(double w, bool allow_extrapolation = false) const;

  /// Packed channel layout: [mask entries of A, B, C, D (column-major), g, xi_o, u_o].
  void eval_packed(double w, Vector& values, Vector& slopes, bool allow_extrapolation = false) const;
  Evaluation unpack(const Vector& values, const Vector& slopes, double w) const;
  int packed_size() const { return interp_.channels(); }

  const std::vector<double>& winds() const { return winds_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const SparsityMasks& mask() const { return mask_; }
  /// Per sample, entries whose zero pattern differs from the union mask.
  const std::vector<int>& sparsity_mismatches() const { return mismatches_; }
  const BuildOptions& options() const { return options_; }
  int states() const { return static_cast<int>(mask_.A.rows()); }
  int inputs() const { return static_cast<int>(mask_.B.cols()); }
  int outputs() const { return static_cast<int>(mask_.C.rows()); }
  const lti::Labels& labels() const { return samples_.front().model.labels; }

  /// Directory of per-sample JSON models plus manifest.json.
  void save(const std::filesystem::path& dir) const;
  static LpvModel load(const std::filesystem::path& dir);

 private:
  void check_range(double w, bool allow_extrapolation) const;

  std::vector<double> winds_;
  std::vector<Sample> samples_;
  SparsityMasks mask_;
  std::vector<int> mismatches_;
  BuildOptions options_;
  Pchip interp_;
};

/// Node-wise derivative of a sampled signal (central differences, one-sided at the ends).
lti::Trajectory rate_of(const lti::Trajectory& signal);

/// Relative-state response under a time-varying wind; add xi_o(w(t)) for absolute states.
lti::Trajectory simulate_lpv(const LpvModel& lpv, const lti::Trajectory& wind,
                             const lti::Trajectory& u_delta, const Vector& xi_delta0,
                             const std::vector<double>& grid);

/// Absolute states xi_D(t) + xi_o(w(t)).
lti::Trajectory lpv_absolute_states(const LpvModel& lpv, const lti::Trajectory& relative,
                                    const lti::Trajectory& wind);

// ---- validation ----

struct HeldOutRecord {
  double w = 0.0;
  bool structure_ok = true;
  int sparsity_mismatch = 0;
  double stationarity = 0.0;
  double rel_error_A = 0.0, rel_error_B = 0.0, rel_error_C = 0.0, rel_error_D = 0.0;
  double hinf = 0.0;
  double hinf_reference = 0.0;
  double hinf_omega = 0.0;
  double max_eig_deviation = 0.0;
  bool pass = true;
};

struct TimeDomainRecord {
  std::vector<std::string> channels;
  std::vector<double> rms_lpv;
  std::vector<double> rms_lti;
  double w_avg = 0.0;
};

struct ValidationOptions {
  /// Held-out H-infinity error must not exceed this fraction of the held-out model's norm.
  double relative_tolerance = 0.05;
  /// Output/input channels compared in the frequency domain (empty = all).
  std::vector<std::string> hinf_outputs{"omega_g", "Theta_p"};
  std::vector<std::string> hinf_inputs;
  std::vector<double> omega_grid = lti::default_frequency_grid();
  Execution execution = Execution::parallel;
  /// Transition region flagged in the report.
  double transition_lo = 8.0;
  double transition_hi = 12.0;
};

/// Residual of the true dynamics at an interpolated operating point.
using StationarityFn = std::function<double(const lti::OperatingPoint&)>;

/// Runs the time-domain comparison.
using TimeDomainFn = std::function<TimeDomainRecord(const LpvModel&)>;

struct ValidationReport {
  bool structure_ok = true;
  int training_sparsity_mismatch = 0;
  double training_stationarity = 0.0;
  std::vector<HeldOutRecord> heldout;
  std::optional<TimeDomainRecord> time_domain;
  double max_hinf = 0.0;
  double w_max_hinf = 0.0;
  bool peak_in_transition = false;
  bool pass = true;
};

ValidationReport validate(const LpvModel& lpv, const std::vector<Sample>& heldout,
                          const ValidationOptions& options = {},
                          const StationarityFn& stationarity = {},
                          const TimeDomainFn& time_domain = {});

/// Restrict a model to the frequency-domain channels named in `options`.
lti::StateSpaceModel hinf_channels(const lti::StateSpaceModel& m, const ValidationOptions& options);

nlohmann::json report_to_json(const ValidationReport& report);
/// One row per held-out wind speed.
std::string report_csv(const ValidationReport& report);

/// Split sorted samples into (training, held-out): even indices train, odd indices are held out.
std::pair<std::vector<Sample>, std::vector<Sample>> alternate_split(const std::vector<Sample>& all);

}  // namespace ccd::lpv
