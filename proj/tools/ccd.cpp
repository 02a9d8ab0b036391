// Command-line front end: trim, lpv-build, lpv-validate, oc-solve, sweep, report.
//
// Exit codes: 0 ok, 1 usage, 2 validation failure, 3 infeasible, 4 I/O error.

#include "ccd/dtqp.hpp"
#include "ccd/model_io.hpp"
#include "ccd/plant_family.hpp"
#include "ccd/sweep.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <iostream>
#include <numbers>

namespace fs = std::filesystem;
using namespace ccd;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kInfeasible = 3, kIo = 4 };

struct UsageError : Error {
  using Error::Error;
};

fowt::Surrogate make_surrogate(const std::string& params) {
  return fowt::Surrogate(params.empty() ? fowt::SurrogateParams::reference() : fowt::SurrogateParams::load(params));
}

fowt::PlantDesign plant_from(const std::vector<double>& v, const fowt::Surrogate& s) {
  if (v.size() != 2) throw UsageError("--plant takes two values: c_s c_d");
  const fowt::PlantDesign x{v[0], v[1]};
  if (!s.params().bounds.contains(x))
    throw UsageError(fmt::format("plant [{}, {}] is outside the design bounds", x.c_s, x.c_d));
  return x;
}

// ---- trim ----

struct TrimArgs {
  std::vector<double> range{3.0, 25.0};
  double step = 1.0;
  std::vector<double> plant{fowt::kNominalPlant.c_s, fowt::kNominalPlant.c_d};
  std::string params;
  std::string out;
};

int cmd_trim(const TrimArgs& a) {
  const auto s = make_surrogate(a.params);
  const auto x_p = plant_from(a.plant, s);
  if (a.range.size() != 2 || !(a.range[1] >= a.range[0]) || !(a.step > 0.0))
    throw UsageError("--wind-range needs lo <= hi and --step > 0");
  const auto winds = lti::uniform_grid(a.range[0], a.range[1], a.step);
  fs::create_directories(a.out);
  std::string table = "w,Theta_p_dot,Theta_p,delta_T_dot,delta_T,omega_g,tau_g,beta,P\n";
  int failures = 0;
  for (const double w : winds) {
    try {
      const auto lin = s.linearize(w, x_p);
      io::write_json(fs::path(a.out) / fmt::format("model_w{:05.2f}.json", w), io::model_to_json(lin.model, lin.op));
      const auto& xo = lin.op.xi_o;
      const auto& uo = lin.op.u_o;
      table += io::format_double(w);
      for (Eigen::Index k = 0; k < xo.size(); ++k) table += "," + io::format_double(xo(k));
      for (Eigen::Index k = 0; k < uo.size(); ++k) table += "," + io::format_double(uo(k));
      table += "," + io::format_double(s.params().generator_efficiency * uo(0) * xo(4)) + "\n";
    } catch (const Error& e) {
      ++failures;
      fmt::print(stderr, "trim failed at w = {}: {}\n", w, e.what());
    }
  }
  io::write_text(fs::path(a.out) / "trim.csv", table);
  fmt::print("{} of {} operating points written to {}\n", winds.size() - failures, winds.size(), a.out);
  return failures == 0 ? kOk : kValidation;
}

// ---- lpv-build / lpv-validate ----

std::vector<lpv::Sample> read_models(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + ": no such model directory");
  std::vector<lpv::Sample> samples;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (p.extension() != ".json" || p.filename() == "manifest.json" || p.filename().string().rfind("model_", 0) != 0)
      continue;
    auto doc = io::model_from_json(io::read_json(p));
    samples.push_back({std::move(doc.model), std::move(doc.op)});
  }
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.op.w < b.op.w; });
  if (samples.empty()) throw IoError(dir.string() + ": no model_*.json files");
  return samples;
}

struct LpvArgs {
  std::string models;
  std::string split = "alternate";
  std::string out;
  double epsilon = 0.05;
  std::vector<int> family_grid;
  std::string params;
};

std::pair<std::vector<lpv::Sample>, std::vector<lpv::Sample>> split_samples(const std::vector<lpv::Sample>& all,
                                                                            const std::string& split) {
  if (split == "none") return {all, all};
  return lpv::alternate_split(all);
}

int cmd_lpv_build(const LpvArgs& a) {
  if (!a.family_grid.empty()) {
    if (a.family_grid.size() != 2 || a.family_grid[0] < 2 || a.family_grid[1] < 2)
      throw UsageError("--family-grid takes two node counts >= 2");
    const auto s = make_surrogate(a.params);
    const auto& b = s.params().bounds;
    const auto family = lpv::build_surrogate_family(
        s, lti::linspace(b.lower.c_s, b.upper.c_s, static_cast<std::size_t>(a.family_grid[0])),
        lti::linspace(b.lower.c_d, b.upper.c_d, static_cast<std::size_t>(a.family_grid[1])),
        fowt::default_wind_samples());
    family.save(a.out);
    fmt::print("plant family with {}x{} nodes written to {}\n", a.family_grid[0], a.family_grid[1], a.out);
    return kOk;
  }
  if (a.models.empty()) throw UsageError("lpv-build needs --models or --family-grid");
  const auto [train, held] = split_samples(read_models(a.models), a.split);
  const auto model = lpv::LpvModel::build(train);
  model.save(a.out);
  fmt::print("LPV model from {} samples written to {}\n", train.size(), a.out);
  return kOk;
}

int cmd_lpv_validate(const LpvArgs& a) {
  const auto [train, held] = split_samples(read_models(a.models), a.split);
  const auto model = lpv::LpvModel::build(train);
  lpv::ValidationOptions opts;
  opts.relative_tolerance = a.epsilon;
  const auto report = lpv::validate(model, held, opts);
  fs::create_directories(a.out);
  model.save(fs::path(a.out) / "lpv");
  io::write_json(fs::path(a.out) / "report.json", lpv::report_to_json(report));
  io::write_text(fs::path(a.out) / "report.csv", lpv::report_csv(report));
  fmt::print("held-out samples {}, max H-inf error {:.4g} at w = {}, {}\n", report.heldout.size(), report.max_hinf,
             report.w_max_hinf, report.pass ? "pass" : "FAIL");
  return report.pass ? kOk : kValidation;
}

// ---- oc-solve ----

struct OcArgs {
  std::string problem;
  std::string lpv;
  std::vector<double> plant;
  int case_id = 7;
  std::uint64_t seed = 1;
  std::string wind;
  double theta_max = 6.0;
  double omega_max = dtqp::kOmegaMax1;
  int mesh = 2500;
  std::string out;
};

std::shared_ptr<const lpv::LpvModel> load_lpv(const fs::path& dir, const std::vector<double>& plant) {
  const auto kind = io::read_json(dir / "manifest.json").value("kind", std::string());
  if (kind == "plant_family") {
    const auto family = lpv::PlantLpvFamily::load(dir);
    const fowt::PlantDesign x = plant.size() == 2 ? fowt::PlantDesign{plant[0], plant[1]} : fowt::kNominalPlant;
    if (!family.contains(x)) throw UsageError("--plant is outside the family grid");
    return std::make_shared<const lpv::LpvModel>(family.at(x));
  }
  if (kind != "lpv") throw IoError(dir.string() + ": manifest is neither an LPV model nor a plant family");
  if (!plant.empty()) throw UsageError("--plant only applies to plant-family manifests");
  return std::make_shared<const lpv::LpvModel>(lpv::LpvModel::load(dir));
}

int cmd_oc_solve(OcArgs a, const CLI::App& sub) {
  fs::path base;
  if (!a.problem.empty()) {
    const auto j = io::read_json(a.problem);
    base = fs::path(a.problem).parent_path();
    static const std::set<std::string> known{"lpv", "plant", "wind", "case", "seed", "theta_max_deg", "omega_max", "mesh"};
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw IoError(fmt::format("unknown key '{}' in {}", key, a.problem));
    try {
      auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && sub.count(flag) == 0) field = j.at(key).get<std::decay_t<decltype(field)>>();
      };
      take("lpv", "--lpv", a.lpv);
      take("plant", "--plant", a.plant);
      take("wind", "--wind", a.wind);
      take("case", "--case", a.case_id);
      take("seed", "--seed", a.seed);
      take("theta_max_deg", "--theta-max", a.theta_max);
      take("omega_max", "--omega-max", a.omega_max);
      take("mesh", "--N", a.mesh);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(fmt::format("{}: {}", a.problem, e.what()));
    }
    if (sub.count("--lpv") == 0 && !a.lpv.empty() && fs::path(a.lpv).is_relative()) a.lpv = (base / a.lpv).string();
    if (sub.count("--wind") == 0 && !a.wind.empty() && fs::path(a.wind).is_relative()) a.wind = (base / a.wind).string();
  }
  if (a.lpv.empty()) throw UsageError("oc-solve needs --lpv (or a problem file naming one)");
  if (a.out.empty()) throw UsageError("oc-solve needs --out");

  dtqp::OcProblem p;
  p.lpv = load_lpv(a.lpv, a.plant);
  if (!a.wind.empty()) {
    p.wind = design::wind_from_csv(io::read_text(a.wind));
  } else {
    const auto means = design::default_case_means();
    if (a.case_id < 1 || a.case_id > static_cast<int>(means.size()))
      throw UsageError(fmt::format("--case must be in 1..{}", means.size()));
    p.wind = design::generate_wind_case(a.case_id, means[static_cast<std::size_t>(a.case_id - 1)], a.seed).profile;
  }
  p.mesh = a.mesh;
  p.limits.theta_max = a.theta_max * std::numbers::pi / 180.0;
  p.limits.omega_max = a.omega_max;
  const auto sol = dtqp::solve_ocp(p);
  fs::create_directories(a.out);
  io::write_text(fs::path(a.out) / "solution.csv", dtqp::solution_csv(sol));
  io::write_json(fs::path(a.out) / "summary.json", dtqp::solution_summary(sol));
  fmt::print("{}: objective {:.8g}, mean power {:.6g} MW, {} iterations\n", qp::to_string(sol.status), sol.objective,
             sol.mean_power / 1e6, sol.iterations);
  if (sol.status == qp::Status::infeasible) return kInfeasible;
  return sol.optimal() ? kOk : kValidation;
}

// ---- sweep / report ----

struct SweepArgs {
  std::string config;
  std::string out;
  std::string family;
  int workers = 0;
  std::string cache;
  bool serial = false;
};

int cmd_sweep(SweepArgs a, const CLI::App& sub) {
  if (sub.count("--workers") == 0)
    if (const char* env = std::getenv("CCD_WORKERS")) {
      try {
        a.workers = std::stoi(env);
      } catch (const std::exception&) {
        throw UsageError("CCD_WORKERS must be an integer");
      }
    }
  if (sub.count("--cache") == 0)
    if (const char* env = std::getenv("CCD_CACHE_DIR")) a.cache = env;
  if (a.workers < 0) throw UsageError("--workers must be non-negative");
  const auto config = design::SweepConfig::load(a.config);
  const auto family = a.family.empty() ? design::build_family(config) : lpv::PlantLpvFamily::load(a.family);
  design::RunOptions run;
  run.execution = a.serial ? Execution::serial : Execution::parallel;
  run.workers = a.workers;
  run.cache_dir = a.cache;
  const auto result = design::run_sweep(config, family, run);
  design::write_sweep(result, a.out);
  fmt::print("{}{} solves in {:.1f} s ({} cached), results in {}\n", design::report_text(result),
             result.solves().size(), result.seconds, result.cache_hits, a.out);
  return kOk;
}

int cmd_report(const std::string& dir, const std::string& format) {
  const auto result = design::read_sweep(dir);
  if (format == "csv") std::cout << design::sweep_csv(result);
  else if (format == "json") std::cout << design::sweep_summary(result).dump(2) << "\n";
  else std::cout << design::report_text(result);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Control co-design toolkit for a floating wind turbine surrogate"};
  app.require_subcommand(1);

  TrimArgs trim;
  auto* t = app.add_subcommand("trim", "Operating points and linearizations over a wind range");
  t->add_option("--wind-range", trim.range, "lo hi [m/s]")->expected(2);
  t->add_option("--step", trim.step, "wind spacing [m/s]");
  t->add_option("--plant", trim.plant, "c_s c_d")->expected(2);
  t->add_option("--params", trim.params, "surrogate parameter JSON");
  t->add_option("--out", trim.out, "output directory")->required();

  LpvArgs build, check;
  auto* b = app.add_subcommand("lpv-build", "Build an LPV model (or a plant family) and write its manifest");
  b->add_option("--models", build.models, "directory of model_*.json files");
  b->add_option("--split", build.split, "training split")->check(CLI::IsMember({"alternate", "none"}));
  b->add_option("--family-grid", build.family_grid, "build a surrogate plant family with n_cs n_cd nodes")->expected(2);
  b->add_option("--params", build.params, "surrogate parameter JSON (family builds)");
  b->add_option("--out", build.out, "output directory")->required();

  auto* v = app.add_subcommand("lpv-validate", "Held-out validation of an LPV model");
  v->add_option("--models", check.models, "directory of model_*.json files")->required();
  v->add_option("--split", check.split, "training split")->check(CLI::IsMember({"alternate", "none"}));
  v->add_option("--epsilon", check.epsilon, "relative H-inf tolerance");
  v->add_option("--out", check.out, "output directory")->required();

  OcArgs oc;
  auto* o = app.add_subcommand("oc-solve", "Solve one control subproblem");
  o->add_option("--problem", oc.problem, "problem JSON (flags override its fields)");
  o->add_option("--lpv", oc.lpv, "LPV or plant-family manifest directory");
  o->add_option("--plant", oc.plant, "c_s c_d (plant families)")->expected(2);
  o->add_option("--case", oc.case_id, "wind case id");
  o->add_option("--seed", oc.seed, "wind seed");
  o->add_option("--wind", oc.wind, "wind CSV (t,w) instead of a generated case");
  o->add_option("--theta-max", oc.theta_max, "platform pitch limit [deg]");
  o->add_option("--omega-max", oc.omega_max, "generator speed limit [rad/s]");
  o->add_option("--N", oc.mesh, "mesh points");
  o->add_option("--out", oc.out, "output directory");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Plant-design sweep");
  s->add_option("--config", sw.config, "sweep config JSON")->required();
  s->add_option("--out", sw.out, "output directory")->required();
  s->add_option("--family", sw.family, "prebuilt plant-family directory");
  s->add_option("--workers", sw.workers, "worker threads (env CCD_WORKERS)");
  s->add_option("--cache", sw.cache, "solve cache directory (env CCD_CACHE_DIR)");
  s->add_flag("--serial", sw.serial, "serial reference path");

  std::string report_dir, report_format = "text";
  auto* r = app.add_subcommand("report", "Optima and cost-factor study of a finished sweep");
  r->add_option("--sweep", report_dir, "sweep output directory")->required();
  r->add_option("--format", report_format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*t) return cmd_trim(trim);
    if (*b) return cmd_lpv_build(build);
    if (*v) return cmd_lpv_validate(check);
    if (*o) return cmd_oc_solve(oc, *o);
    if (*s) return cmd_sweep(sw, *s);
    if (*r) return cmd_report(report_dir, report_format);
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const DomainError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "failed: {}\n", e.what());
    return kValidation;
  }
  return kUsage;
}
