#include "ccd/step_study.hpp"

#include <cmath>

namespace ccd::study {

lti::Trajectory step_wind(const StepWindScenario& s) {
  if (s.levels.size() != s.switch_times.size() + 1)
    throw DomainError("step wind needs one more level than switch times");
  const auto grid = lti::uniform_grid(0.0, s.t_final, s.schedule_step);
  Matrix w(static_cast<Eigen::Index>(grid.size()), 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    double v = s.levels.front();
    for (std::size_t k = 0; k < s.switch_times.size(); ++k) {
      const double frac = std::clamp((t - s.switch_times[k]) / s.ramp, 0.0, 1.0);
      v += frac * (s.levels[k + 1] - s.levels[k]);
    }
    w(static_cast<Eigen::Index>(i), 0) = v;
  }
  return {grid, w, {"w"}};
}

double time_average(const lti::Trajectory& signal) {
  double area = 0.0;
  for (std::size_t i = 1; i < signal.size(); ++i)
    area += 0.5 * (signal.t[i] - signal.t[i - 1]) *
            (signal.values(static_cast<Eigen::Index>(i), 0) + signal.values(static_cast<Eigen::Index>(i - 1), 0));
  return area / (signal.end() - signal.start());
}

namespace {

double rms_difference(const lti::Trajectory& a, const lti::Trajectory& b, int channel) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values(static_cast<Eigen::Index>(i), channel) - b.values(static_cast<Eigen::Index>(i), channel);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

}  // namespace

TimeDomainComparison compare_time_domain(const fowt::Surrogate& surrogate, const lpv::LpvModel& model,
                                         const fowt::PlantDesign& x_p, const StepWindScenario& scenario,
                                         const std::vector<std::string>& channels) {
  TimeDomainComparison out;
  out.wind = step_wind(scenario);
  const auto& sched = out.wind.t;
  Matrix u(static_cast<Eigen::Index>(sched.size()), 2);
  for (std::size_t i = 0; i < sched.size(); ++i)
    u.row(static_cast<Eigen::Index>(i)) =
        surrogate.trim(out.wind.values(static_cast<Eigen::Index>(i), 0), x_p).u_o.transpose();
  out.inputs = lti::Trajectory(sched, u, lti::input_labels());

  const auto grid = lti::uniform_grid(0.0, scenario.t_final, scenario.dt);
  const double w0 = out.wind.values(0, 0);
  const Vector xi0 = surrogate.trim(w0, x_p).xi_o;
  out.nonlinear = surrogate.simulate(out.wind, out.inputs, xi0, x_p, grid);

  // LPV: inputs and states relative to the interpolated operating points along w(t).
  Matrix u_lpv = u;
  for (std::size_t i = 0; i < sched.size(); ++i)
    u_lpv.row(static_cast<Eigen::Index>(i)) -=
        model.eval(out.wind.values(static_cast<Eigen::Index>(i), 0)).op.u_o.transpose();
  const lti::Trajectory u_delta(sched, u_lpv, lti::input_labels());
  const auto rel = lpv::simulate_lpv(model, out.wind, u_delta, xi0 - model.eval(w0).op.xi_o, grid);
  out.lpv = lpv::lpv_absolute_states(model, rel, out.wind);

  // Single LTI model at the time-averaged wind speed.
  const double w_avg = time_average(out.wind);
  const auto lin = surrogate.linearize(w_avg, x_p);
  Matrix u_lti = u;
  u_lti.rowwise() -= lin.op.u_o.transpose();
  const auto rel_lti = lti::simulate_lti(lin.model, lin.op, lti::Trajectory(sched, u_lti, lti::input_labels()),
                                         xi0 - lin.op.xi_o, grid);
  out.lti = lti::to_absolute(rel_lti, lin.op.xi_o);

  out.record.w_avg = w_avg;
  for (const auto& name : channels) {
    const int c = out.nonlinear.channel(name);
    out.record.channels.push_back(name);
    out.record.rms_lpv.push_back(rms_difference(out.lpv, out.nonlinear, c));
    out.record.rms_lti.push_back(rms_difference(out.lti, out.nonlinear, c));
  }
  return out;
}

}  // namespace ccd::study
