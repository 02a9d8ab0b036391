#include "ccd/sweep.hpp"

#include "ccd/model_io.hpp"
#include "ccd/parallel.hpp"

#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace ccd::design {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw IoError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw IoError(fmt::format("unknown key '{}' in {}", key, where));
}

// Explicit axes ("c_s": [...]) or counts over the plant bounds ("n_cs": n).
std::pair<std::vector<double>, std::vector<double>> read_axes(const json& j, const fowt::PlantBounds& b,
                                                              const std::string& where) {
  reject_unknown(j, {"c_s", "c_d", "n_cs", "n_cd", "interpolation"}, where);
  auto axis = [&](const char* list, const char* count, double lo, double hi) {
    if (j.contains(list)) return j.at(list).get<std::vector<double>>();
    const auto n = j.at(count).get<int>();
    if (n < 2) throw IoError(fmt::format("{}.{} must be at least 2", where, count));
    return lti::linspace(lo, hi, static_cast<std::size_t>(n));
  };
  return {axis("c_s", "n_cs", b.lower.c_s, b.upper.c_s), axis("c_d", "n_cd", b.lower.c_d, b.upper.c_d)};
}

WindOptions read_wind(const json& j) {
  reject_unknown(j, {"t_final", "dt", "ramp_fast", "ramp_slow", "period_fast", "period_slow", "noise", "noise_time",
                     "noise_cutoff", "w_min", "w_max"},
                 "wind");
  WindOptions o;
  o.t_final = j.value("t_final", o.t_final);
  o.dt = j.value("dt", o.dt);
  o.ramp_fast = j.value("ramp_fast", o.ramp_fast);
  o.ramp_slow = j.value("ramp_slow", o.ramp_slow);
  o.period_fast = j.value("period_fast", o.period_fast);
  o.period_slow = j.value("period_slow", o.period_slow);
  o.noise = j.value("noise", o.noise);
  o.noise_time = j.value("noise_time", o.noise_time);
  o.noise_cutoff = j.value("noise_cutoff", o.noise_cutoff);
  o.w_min = j.value("w_min", o.w_min);
  o.w_max = j.value("w_max", o.w_max);
  return o;
}

json wind_json(const WindOptions& o) {
  return {{"t_final", o.t_final},         {"dt", o.dt},
          {"ramp_fast", o.ramp_fast},     {"ramp_slow", o.ramp_slow},
          {"period_fast", o.period_fast}, {"period_slow", o.period_slow},
          {"noise", o.noise},             {"noise_time", o.noise_time},
          {"noise_cutoff", o.noise_cutoff}, {"w_min", o.w_min},
          {"w_max", o.w_max}};
}

const char* interpolation_name(lpv::PlantInterpolation m) {
  return m == lpv::PlantInterpolation::bilinear ? "bilinear" : "pchip";
}

qp::Status status_from(const std::string& s) {
  for (auto st : {qp::Status::optimal, qp::Status::infeasible, qp::Status::max_iter, qp::Status::numerical_error})
    if (s == qp::to_string(st)) return st;
  throw IoError("unknown solve status '" + s + "'");
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

json record_json(const SolveRecord& r) {
  return {{"status", qp::to_string(r.status)}, {"mean_power", r.mean_power},     {"objective", r.objective},
          {"max_violation", r.max_violation},  {"theta_active", r.theta_active}, {"iterations", r.iterations}};
}

SolveRecord record_from(const json& j) {
  SolveRecord r;
  r.status = status_from(j.at("status").get<std::string>());
  r.mean_power = j.at("mean_power").get<double>();
  r.objective = j.at("objective").get<double>();
  r.max_violation = j.at("max_violation").get<double>();
  r.theta_active = j.at("theta_active").get<double>();
  r.iterations = j.at("iterations").get<int>();
  return r;
}

std::optional<SolveRecord> cache_read(const std::filesystem::path& file) {
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return std::nullopt;
  try {
    return record_from(io::read_json(file));
  } catch (const std::exception&) {
    return std::nullopt;  // damaged entry: solve again
  }
}

void cache_write(const std::filesystem::path& file, const SolveRecord& r) {
  auto tmp = file;
  tmp += fmt::format(".{}.tmp", omp_get_thread_num());
  io::write_json(tmp, record_json(r));
  std::filesystem::rename(tmp, file);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

void SweepConfig::validate() const {
  auto check_axis = [](const std::vector<double>& a, const char* name) {
    if (a.empty()) throw DomainError(fmt::format("{} axis is empty", name));
    for (std::size_t i = 1; i < a.size(); ++i)
      if (!(a[i] > a[i - 1])) throw DomainError(fmt::format("{} axis must be strictly increasing", name));
  };
  check_axis(cs_axis, "c_s");
  check_axis(cd_axis, "c_d");
  check_axis(family_cs, "family c_s");
  check_axis(family_cd, "family c_d");
  if (family_cs.size() < 2 || family_cd.size() < 2) throw DomainError("family needs two nodes per axis");
  if (cs_axis.front() < family_cs.front() || cs_axis.back() > family_cs.back() ||
      cd_axis.front() < family_cd.front() || cd_axis.back() > family_cd.back())
    throw DomainError("sweep grid extends beyond the LPV family nodes");
  for (const double c : cs_axis)
    for (const double d : cd_axis) cost.bounds.require({c, d});
  if (levels_deg.empty()) throw DomainError("no pitch limit levels");
  for (const double l : levels_deg)
    if (!(l > 0.0 && l < 90.0)) throw DomainError(fmt::format("pitch limit {} deg out of range", l));
  if (case_means.empty()) throw DomainError("no wind cases");
  if (mesh < 2) throw DomainError("mesh needs at least two points");
  if (!(omega_max > 0.0)) throw DomainError("omega_max must be positive");
  wind.validate();
  cost.validate();
  for (const auto& c : corners)
    if ((c.array() <= 0.0).any()) throw DomainError("cost factors must be positive");
}

SweepConfig SweepConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"schema_version", "description", "grid", "family", "levels_deg", "case_means", "seed", "mesh", "wind",
                  "omega_max", "cost_model", "corners", "corner_level_deg", "surrogate"},
                 "sweep config");
  SweepConfig c;
  try {
    if (j.value("schema_version", 1) != 1) throw IoError("unsupported sweep config schema version");
    if (j.contains("cost_model")) {
      const auto& cm = j.at("cost_model");
      c.cost = cm.is_string() ? CostModel::load(base_dir / cm.get<std::string>()) : CostModel::from_json(cm);
    }
    if (j.contains("surrogate")) {
      const auto& s = j.at("surrogate");
      c.surrogate = s.is_string() ? fowt::SurrogateParams::load(base_dir / s.get<std::string>())
                                  : fowt::SurrogateParams::from_json(s);
    }
    std::tie(c.cs_axis, c.cd_axis) = read_axes(j.at("grid"), c.cost.bounds, "grid");
    const json fam = j.value("family", json{{"n_cs", 7}, {"n_cd", 7}});
    std::tie(c.family_cs, c.family_cd) = read_axes(fam, c.cost.bounds, "family");
    const auto method = fam.value("interpolation", std::string("bilinear"));
    if (method != "bilinear" && method != "pchip") throw IoError("family.interpolation must be bilinear or pchip");
    c.interpolation = method == "pchip" ? lpv::PlantInterpolation::pchip : lpv::PlantInterpolation::bilinear;
    c.levels_deg = j.value("levels_deg", c.levels_deg);
    c.case_means = j.value("case_means", c.case_means);
    c.seed = j.value("seed", c.seed);
    c.mesh = j.value("mesh", c.mesh);
    if (j.contains("wind")) c.wind = read_wind(j.at("wind"));
    c.omega_max = j.value("omega_max", c.omega_max);
    if (j.contains("corners")) {
      c.corners.clear();
      for (const auto& f : j.at("corners")) {
        const auto v = f.get<std::vector<double>>();
        if (v.size() != 2) throw IoError("each cost corner needs two factors");
        c.corners.emplace_back(v[0], v[1]);
      }
    }
    c.corner_level_deg = j.value("corner_level_deg", c.corner_level_deg);
  } catch (const json::exception& e) {
    throw IoError(fmt::format("malformed sweep config: {}", e.what()));
  }
  c.validate();
  return c;
}

SweepConfig SweepConfig::load(const std::filesystem::path& path) {
  return from_json(io::read_json(path), path.parent_path());
}

json SweepConfig::to_json() const {
  json corners_json = json::array();
  for (const auto& c : corners) corners_json.push_back({c(0), c(1)});
  return {{"schema_version", 1},
          {"grid", {{"c_s", cs_axis}, {"c_d", cd_axis}}},
          {"family", {{"c_s", family_cs}, {"c_d", family_cd}, {"interpolation", interpolation_name(interpolation)}}},
          {"levels_deg", levels_deg},
          {"case_means", case_means},
          {"seed", seed},
          {"mesh", mesh},
          {"wind", wind_json(wind)},
          {"omega_max", omega_max},
          {"cost_model", cost.to_json()},
          {"corners", corners_json},
          {"corner_level_deg", corner_level_deg},
          {"surrogate", surrogate.to_json()}};
}

SweepResult::SweepResult(SweepConfig config, std::vector<SolveRecord> solves)
    : config_(std::move(config)), solves_(std::move(solves)) {
  if (solves_.size() != n_levels() * n_cs() * n_cd() * n_cases())
    throw DimensionError("sweep result size does not match its configuration");
  weights_ = aep_weights(config_.case_means, config_.cost.weibull);
  energy_.resize(n_levels() * n_cs() * n_cd());
  std::vector<double> powers(n_cases());
  for (std::size_t l = 0; l < n_levels(); ++l)
    for (std::size_t i = 0; i < n_cs(); ++i)
      for (std::size_t j = 0; j < n_cd(); ++j) {
        for (std::size_t c = 0; c < n_cases(); ++c) {
          const auto& r = solve(l, i, j, c);
          powers[c] = r.optimal() ? std::max(r.mean_power, 0.0) : 0.0;
        }
        energy_[(l * n_cs() + i) * n_cd() + j] = normalized_aep(powers, weights_, config_.cost);
      }
}

std::size_t SweepResult::flat(std::size_t level, std::size_t i, std::size_t j, std::size_t c) const {
  return ((level * n_cs() + i) * n_cd() + j) * n_cases() + c;
}

const SolveRecord& SweepResult::solve(std::size_t level, std::size_t i, std::size_t j, std::size_t c) const {
  return solves_.at(flat(level, i, j, c));
}

double SweepResult::energy(std::size_t level, std::size_t i, std::size_t j) const {
  return energy_.at((level * n_cs() + i) * n_cd() + j);
}

int SweepResult::infeasible(std::size_t level, std::size_t i, std::size_t j) const {
  int n = 0;
  for (std::size_t c = 0; c < n_cases(); ++c) n += solve(level, i, j, c).optimal() ? 0 : 1;
  return n;
}

int SweepResult::infeasible_pairs(std::size_t level) const {
  int n = 0;
  for (std::size_t i = 0; i < n_cs(); ++i)
    for (std::size_t j = 0; j < n_cd(); ++j) n += infeasible(level, i, j);
  return n;
}

double SweepResult::lcoe(std::size_t level, std::size_t i, std::size_t j, const CostModel& cost) const {
  return design::lcoe({config_.cs_axis[i], config_.cd_axis[j]}, energy(level, i, j), cost);
}

Optimum SweepResult::optimum(std::size_t level, const CostModel& cost) const {
  Optimum best;
  for (std::size_t i = 0; i < n_cs(); ++i)
    for (std::size_t j = 0; j < n_cd(); ++j) {
      const double v = lcoe(level, i, j, cost);
      if (v < best.lcoe) best = {i, j, {config_.cs_axis[i], config_.cd_axis[j]}, v, energy(level, i, j)};
    }
  return best;
}

std::size_t SweepResult::level_index(double deg) const {
  for (std::size_t l = 0; l < n_levels(); ++l)
    if (std::abs(config_.levels_deg[l] - deg) < 1e-9) return l;
  throw DomainError(fmt::format("pitch limit {} deg is not a sweep level", deg));
}

std::vector<CornerResult> SweepResult::cost_sensitivity(std::size_t level,
                                                        const std::vector<Eigen::Vector2d>& corners) const {
  std::vector<CornerResult> out;
  for (const auto& f : corners) out.push_back({f, optimum(level, config_.cost.with_factor(f))});
  return out;
}

lpv::PlantLpvFamily build_family(const SweepConfig& config, Execution execution) {
  const fowt::Surrogate surrogate(config.surrogate);
  return lpv::build_surrogate_family(surrogate, config.family_cs, config.family_cd, fowt::default_wind_samples(),
                                     execution, config.interpolation);
}

std::string family_fingerprint(const lpv::PlantLpvFamily& family) {
  std::string text = fmt::format("{}|{}|{}|", fmt::join(family.cs_axis(), ","), fmt::join(family.cd_axis(), ","),
                                 interpolation_name(family.method()));
  for (std::size_t i = 0; i < family.cs_axis().size(); ++i)
    for (std::size_t j = 0; j < family.cd_axis().size(); ++j)
      for (const auto& s : family.node(i, j).samples()) text += io::model_to_json(s.model, s.op).dump();
  return io::content_hash(text);
}

SweepResult run_sweep(const SweepConfig& config, const lpv::PlantLpvFamily& family, const RunOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto cases = generate_wind_cases(config.case_means, config.seed, config.wind);
  std::vector<std::string> case_hash;
  for (const auto& c : cases) case_hash.push_back(io::content_hash(wind_csv(c.profile)));
  const auto fingerprint = family_fingerprint(family);
  if (!options.cache_dir.empty()) std::filesystem::create_directories(options.cache_dir);

  const std::size_t nl = config.levels_deg.size(), ni = config.cs_axis.size(), nj = config.cd_axis.size(),
                    nc = cases.size();
  std::vector<SolveRecord> records(nl * ni * nj * nc);
  std::atomic<int> hits{0};
  const double efficiency = config.surrogate.generator_efficiency;

  parallel_for(
      records.size(),
      [&](std::size_t k) {
        const std::size_t c = k % nc, j = (k / nc) % nj, i = (k / (nc * nj)) % ni, l = k / (nc * nj * ni);
        const fowt::PlantDesign x_p{config.cs_axis[i], config.cd_axis[j]};
        dtqp::OcProblem p;
        p.wind = cases[c].profile;
        p.mesh = config.mesh;
        p.limits.theta_max = radians(config.levels_deg[l]);
        p.limits.omega_max = config.omega_max;
        p.efficiency = efficiency;

        std::filesystem::path entry;
        if (!options.cache_dir.empty()) {
          const auto key = fmt::format("{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}", fingerprint, x_p.c_s, x_p.c_d,
                                       case_hash[c], p.limits.theta_max, p.limits.omega_max, p.limits.tau_max,
                                       p.limits.beta_max, p.limits.shear_max, p.limits.moment_max, p.mesh,
                                       p.weights.power, p.efficiency, p.solver.tolerance);
          entry = options.cache_dir / (io::content_hash(key) + ".json");
          if (auto hit = cache_read(entry)) {
            records[k] = *hit;
            ++hits;
            return;
          }
        }
        SolveRecord r;
        try {
          p.lpv = std::make_shared<const lpv::LpvModel>(family.at(x_p));
          const auto sol = dtqp::solve_ocp(p);
          r.status = sol.status;
          r.mean_power = sol.mean_power;
          r.objective = sol.objective;
          r.max_violation = sol.max_violation;
          r.theta_active = sol.active_fraction.at("theta_max");
          r.iterations = sol.iterations;
        } catch (const Error&) {
          r.status = qp::Status::numerical_error;
        }
        records[k] = r;
        if (!entry.empty()) cache_write(entry, r);
      },
      options.execution, options.workers);

  SweepResult result(config, std::move(records));
  result.cache_hits = hits.load();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string sweep_csv(const SweepResult& r) {
  const auto& cfg = r.config();
  std::string out = "c_s,c_d,level_deg,E_n,C_n,LCOE,n_infeasible\n";
  for (std::size_t l = 0; l < r.n_levels(); ++l)
    for (std::size_t i = 0; i < r.n_cs(); ++i)
      for (std::size_t j = 0; j < r.n_cd(); ++j) {
        const fowt::PlantDesign x{cfg.cs_axis[i], cfg.cd_axis[j]};
        out += fmt::format("{},{},{},{},{},{},{}\n", io::format_double(x.c_s), io::format_double(x.c_d),
                           io::format_double(cfg.levels_deg[l]), io::format_double(r.energy(l, i, j)),
                           io::format_double(cfg.cost.annual_cost(x)), io::format_double(r.lcoe(l, i, j, cfg.cost)),
                           r.infeasible(l, i, j));
      }
  return out;
}

std::string cases_csv(const SweepResult& r) {
  const auto& cfg = r.config();
  std::string out = "level_deg,c_s,c_d,case,mean_wind,status,mean_power,objective,max_violation,theta_active,iterations\n";
  for (std::size_t l = 0; l < r.n_levels(); ++l)
    for (std::size_t i = 0; i < r.n_cs(); ++i)
      for (std::size_t j = 0; j < r.n_cd(); ++j)
        for (std::size_t c = 0; c < r.n_cases(); ++c) {
          const auto& s = r.solve(l, i, j, c);
          out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", io::format_double(cfg.levels_deg[l]),
                             io::format_double(cfg.cs_axis[i]), io::format_double(cfg.cd_axis[j]), c + 1,
                             io::format_double(cfg.case_means[c]), qp::to_string(s.status),
                             io::format_double(s.mean_power), io::format_double(s.objective),
                             io::format_double(s.max_violation), io::format_double(s.theta_active), s.iterations);
        }
  return out;
}

namespace {

json optimum_json(const Optimum& o) {
  return {{"c_s", o.x_p.c_s}, {"c_d", o.x_p.c_d}, {"lcoe", std::isfinite(o.lcoe) ? json(o.lcoe) : json(nullptr)},
          {"E_n", o.energy}};
}

}  // namespace

json sweep_summary(const SweepResult& r) {
  const auto& cfg = r.config();
  json levels = json::array();
  for (std::size_t l = 0; l < r.n_levels(); ++l) {
    std::map<std::string, int> census;
    for (std::size_t i = 0; i < r.n_cs(); ++i)
      for (std::size_t j = 0; j < r.n_cd(); ++j)
        for (std::size_t c = 0; c < r.n_cases(); ++c) ++census[qp::to_string(r.solve(l, i, j, c).status)];
    levels.push_back({{"level_deg", cfg.levels_deg[l]},
                      {"optimum", optimum_json(r.optimum(l))},
                      {"infeasible_pairs", r.infeasible_pairs(l)},
                      {"status_census", census}});
  }
  json corners = json::array();
  if (std::any_of(cfg.levels_deg.begin(), cfg.levels_deg.end(),
                  [&](double d) { return std::abs(d - cfg.corner_level_deg) < 1e-9; }))
    for (const auto& c : r.cost_sensitivity(r.level_index(cfg.corner_level_deg), cfg.corners))
      corners.push_back({{"factor", {c.factor(0), c.factor(1)}}, {"optimum", optimum_json(c.optimum)}});
  return {{"levels", levels},
          {"corner_level_deg", cfg.corner_level_deg},
          {"cost_sensitivity", corners},
          {"solves", r.solves().size()},
          {"cache_hits", r.cache_hits},
          {"seconds", r.seconds},
          {"aep_weights", r.weights()}};
}

void write_sweep(const SweepResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = r.config();
  io::write_text(dir / "sweep.csv", sweep_csv(r));
  io::write_text(dir / "cases.csv", cases_csv(r));
  io::write_json(dir / "summary.json", sweep_summary(r));
  io::write_json(dir / "config.json", cfg.to_json());

  std::string lcoe = "level_deg,c_s,c_d,LCOE\n", aep = "level_deg,c_s,c_d,E_n\n",
              power = "level_deg,case,c_s,c_d,mean_power\n";
  for (std::size_t l = 0; l < r.n_levels(); ++l)
    for (std::size_t i = 0; i < r.n_cs(); ++i)
      for (std::size_t j = 0; j < r.n_cd(); ++j) {
        const auto prefix = fmt::format("{},{},{}", io::format_double(cfg.levels_deg[l]),
                                        io::format_double(cfg.cs_axis[i]), io::format_double(cfg.cd_axis[j]));
        lcoe += prefix + "," + io::format_double(r.lcoe(l, i, j, cfg.cost)) + "\n";
        aep += prefix + "," + io::format_double(r.energy(l, i, j)) + "\n";
        for (std::size_t c = 0; c < r.n_cases(); ++c)
          power += fmt::format("{},{},{},{},{}\n", io::format_double(cfg.levels_deg[l]), c + 1,
                               io::format_double(cfg.cs_axis[i]), io::format_double(cfg.cd_axis[j]),
                               io::format_double(r.solve(l, i, j, c).mean_power));
      }
  io::write_text(dir / "heatmap_lcoe.csv", lcoe);
  io::write_text(dir / "heatmap_aep.csv", aep);
  io::write_text(dir / "heatmap_power.csv", power);
}

SweepResult read_sweep(const std::filesystem::path& dir) {
  auto cfg = SweepConfig::from_json(io::read_json(dir / "config.json"), dir);
  const auto text = io::read_text(dir / "cases.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<SolveRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw IoError("cases.csv rows need 11 columns: " + line);
    SolveRecord s;
    try {
      s.status = status_from(f[5]);
      s.mean_power = std::stod(f[6]);
      s.objective = std::stod(f[7]);
      s.max_violation = std::stod(f[8]);
      s.theta_active = std::stod(f[9]);
      s.iterations = std::stoi(f[10]);
    } catch (const std::invalid_argument&) {
      throw IoError("malformed cases.csv row: " + line);
    }
    records.push_back(s);
  }
  try {
    return SweepResult(std::move(cfg), std::move(records));
  } catch (const DimensionError& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
}

std::string report_text(const SweepResult& r) {
  const auto& cfg = r.config();
  const auto pairs = r.n_cs() * r.n_cd() * r.n_cases();
  std::string out = fmt::format("grid {}x{}, {} cases, mesh {}\n", r.n_cs(), r.n_cd(), r.n_cases(), cfg.mesh);
  for (std::size_t l = 0; l < r.n_levels(); ++l) {
    const auto o = r.optimum(l);
    out += fmt::format("Theta_p,max {:>4} deg: LCOE {:.2f} $/MWh at c_s={:.2f} c_d={:.2f} (E_n {:.1f} h), "
                       "infeasible {}/{}\n",
                       cfg.levels_deg[l], o.lcoe, o.x_p.c_s, o.x_p.c_d, o.energy, r.infeasible_pairs(l), pairs);
  }
  bool has_level = false;
  for (const double d : cfg.levels_deg) has_level |= std::abs(d - cfg.corner_level_deg) < 1e-9;
  if (has_level) {
    out += fmt::format("cost factors at {} deg:\n", cfg.corner_level_deg);
    for (const auto& c : r.cost_sensitivity(r.level_index(cfg.corner_level_deg), cfg.corners))
      out += fmt::format("  F=[{:.1f},{:.1f}]: LCOE {:.2f} $/MWh at c_s={:.2f} c_d={:.2f}\n", c.factor(0), c.factor(1),
                         c.optimum.lcoe, c.optimum.x_p.c_s, c.optimum.x_p.c_d);
  }
  return out;
}

}  // namespace ccd::design
