#pragma once

// Synthetic load cases: slow ramps plus band-limited noise around each mean wind speed. The noise
// is a sum of harmonics of 1/t_final with random phases and a first-order low-pass spectrum.

#include "ccd/lti.hpp"

#include <cstdint>

namespace ccd::design {

struct WindOptions {
  double t_final = 600.0;   // s
  double dt = 0.25;         // s
  double ramp_fast = 0.10;  // amplitudes as fractions of the mean
  double ramp_slow = 0.05;
  double period_fast = 150.0;  // s
  double period_slow = 400.0;  // s
  double noise = 0.03;         // standard deviation, fraction of the mean
  double noise_time = 20.0;    // s, first-order filter time constant shaping the spectrum
  double noise_cutoff = 0.05;  // Hz, no noise content above this
  double w_min = 1.0;
  double w_max = 27.0;

  void validate() const;
};

struct WindCase {
  int id = 0;  // 1-based
  double mean = 0.0;
  lti::Trajectory profile;
};

/// Eleven means over [3, 25] with case 7 at 14 m/s.
std::vector<double> default_case_means();

/// Deterministic in (seed, id); profiles are shifted so their time average equals the mean
/// before clipping to [w_min, w_max].
std::vector<WindCase> generate_wind_cases(const std::vector<double>& means, std::uint64_t seed,
                                          const WindOptions& options = {});
WindCase generate_wind_case(int id, double mean, std::uint64_t seed, const WindOptions& options = {});

/// Single-channel CSV "t,w".
std::string wind_csv(const lti::Trajectory& profile);
lti::Trajectory wind_from_csv(const std::string& text);

}  // namespace ccd::design
