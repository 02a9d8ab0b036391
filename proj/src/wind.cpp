#include "ccd/wind.hpp"

#include "ccd/model_io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace ccd::design {

void WindOptions::validate() const {
  if (!(t_final > 0.0) || !(dt > 0.0) || dt > t_final) throw DomainError("wind horizon and step must be positive");
  if (ramp_fast < 0.0 || ramp_slow < 0.0 || noise < 0.0) throw DomainError("wind amplitudes must be non-negative");
  if (!(period_fast > 0.0) || !(period_slow > 0.0) || !(noise_time > 0.0) || noise_cutoff < 0.0)
    throw DomainError("wind periods and filter time must be positive");
  if (!(w_max > w_min)) throw DomainError("wind clip range is empty");
}

std::vector<double> default_case_means() { return {4, 6, 8, 9, 10, 12, 14, 16, 18, 20, 24}; }

WindCase generate_wind_case(int id, double mean, std::uint64_t seed, const WindOptions& o) {
  o.validate();
  if (!(mean > 0.0)) throw DomainError("mean wind speed must be positive");
  const auto grid = lti::uniform_grid(0.0, o.t_final, o.dt);
  const auto n = static_cast<Eigen::Index>(grid.size());

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const int harmonics = static_cast<int>(std::floor(o.noise_cutoff * o.t_final));
  std::vector<double> amp(static_cast<std::size_t>(std::max(harmonics, 0))), phi(amp.size());
  double power = 0.0;
  for (std::size_t k = 0; k < amp.size(); ++k) {
    const double f = static_cast<double>(k + 1) / o.t_final;
    amp[k] = 1.0 / std::sqrt(1.0 + std::pow(2 * std::numbers::pi * f * o.noise_time, 2));
    phi[k] = phase(rng);
    power += 0.5 * amp[k] * amp[k];
  }
  const double gain = power > 0.0 ? o.noise * mean / std::sqrt(power) : 0.0;

  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = grid[static_cast<std::size_t>(i)];
    double e = 0.0;
    for (std::size_t k = 0; k < amp.size(); ++k)
      e += amp[k] * std::sin(2 * std::numbers::pi * static_cast<double>(k + 1) * t / o.t_final + phi[k]);
    w(i) = mean * (1.0 + o.ramp_fast * std::sin(2 * std::numbers::pi * t / o.period_fast) +
                   o.ramp_slow * std::sin(2 * std::numbers::pi * t / o.period_slow)) +
           gain * e;
  }
  // Remove the sampled mean error, then clip.
  double avg = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    avg += 0.5 * (w(i) + w(i + 1)) * (grid[static_cast<std::size_t>(i + 1)] - grid[static_cast<std::size_t>(i)]);
  avg /= grid.back() - grid.front();
  w.array() += mean - avg;
  w = w.cwiseMax(o.w_min).cwiseMin(o.w_max);
  return {id, mean, lti::Trajectory(grid, w, {"w"})};
}

std::vector<WindCase> generate_wind_cases(const std::vector<double>& means, std::uint64_t seed,
                                          const WindOptions& options) {
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (means[i] < 3.0 || means[i] > 25.0) throw DomainError(fmt::format("case mean {} outside [3, 25]", means[i]));
    if (i > 0 && !(means[i] > means[i - 1])) throw DomainError("case means must be strictly increasing");
  }
  std::vector<WindCase> out;
  for (std::size_t i = 0; i < means.size(); ++i)
    out.push_back(generate_wind_case(static_cast<int>(i + 1), means[i], seed, options));
  return out;
}

std::string wind_csv(const lti::Trajectory& p) {
  std::string out = "t,w\n";
  for (std::size_t i = 0; i < p.size(); ++i)
    out += io::format_double(p.t[i]) + "," + io::format_double(p.values(static_cast<Eigen::Index>(i), 0)) + "\n";
  return out;
}

lti::Trajectory wind_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> t, w;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.find_first_not_of("0123456789.-+eE, \r") != std::string::npos) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("wind CSV rows need two columns");
    try {
      t.push_back(std::stod(line.substr(0, comma)));
      w.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw IoError("malformed wind CSV row: " + line);
    }
  }
  if (t.size() < 2) throw IoError("wind CSV needs at least two rows");
  lti::Trajectory out(t, Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size())), {"w"});
  out.validate();
  return out;
}

}  // namespace ccd::design
