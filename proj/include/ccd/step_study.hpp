#pragma once

// Step-like wind scenario comparing the nonlinear surrogate, the LPV model and a single LTI
// model linearized at the time-averaged wind speed, all driven by trim-scheduled inputs.

#include "ccd/lpv.hpp"
#include "ccd/surrogate.hpp"

namespace ccd::study {

struct StepWindScenario {
  double t_final = 600.0;
  double dt = 0.025;
  /// Wind speed held on each segment [m/s]; segments end at `switch_times`.
  std::vector<double> levels{8.0, 11.0, 14.0, 16.0};
  std::vector<double> switch_times{100.0, 250.0, 400.0};
  /// Duration of the linear ramp between levels [s].
  double ramp = 2.0;
  /// Spacing of the wind/input schedule [s].
  double schedule_step = 0.25;
};

lti::Trajectory step_wind(const StepWindScenario& s);

/// Trapezoidal time average of a one-channel signal.
double time_average(const lti::Trajectory& signal);

struct TimeDomainComparison {
  lti::Trajectory wind;
  lti::Trajectory inputs;
  lti::Trajectory nonlinear;
  lti::Trajectory lpv;
  lti::Trajectory lti;
  lpv::TimeDomainRecord record;
};

TimeDomainComparison compare_time_domain(const fowt::Surrogate& surrogate, const lpv::LpvModel& model,
                                         const fowt::PlantDesign& x_p,
                                         const StepWindScenario& scenario = {},
                                         const std::vector<std::string>& channels = {"Theta_p", "omega_g"});

}  // namespace ccd::study
