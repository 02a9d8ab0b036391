#include "ccd/cost.hpp"
#include "ccd/model_io.hpp"
#include "ccd/sweep.hpp"
#include "ccd/wind.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace ccd;
using namespace ccd::design;

namespace fs = std::filesystem;

namespace {

double mean_of(const lti::Trajectory& p) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) s += 0.5 * (p.values(i, 0) + p.values(i + 1, 0)) * (p.t[i + 1] - p.t[i]);
  return s / (p.end() - p.start());
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("wind") {
  TEST_CASE("default cases") {
    const auto means = default_case_means();
    CHECK(means.size() == 11);
    CHECK(means[6] == 14.0);
    CHECK(means.front() == 4.0);
    CHECK(means.back() == 24.0);
  }

  TEST_CASE("profiles hold their mean and stay inside the clip range") {
    for (const auto& c : generate_wind_cases(default_case_means(), 1)) {
      CHECK(c.profile.size() == 2401);
      CHECK(std::abs(mean_of(c.profile) - c.mean) / c.mean < 0.02);
      CHECK(c.profile.values.minCoeff() >= 1.0);
      CHECK(c.profile.values.maxCoeff() <= 27.0);
    }
  }

  TEST_CASE("zero fluctuation gives a constant profile") {
    WindOptions o;
    o.ramp_fast = o.ramp_slow = o.noise = 0.0;
    const auto c = generate_wind_case(3, 9.0, 5, o);
    CHECK((c.profile.values.array() - 9.0).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("seeded determinism") {
    const auto a = generate_wind_case(7, 14.0, 42);
    const auto b = generate_wind_case(7, 14.0, 42);
    const auto c = generate_wind_case(7, 14.0, 43);
    CHECK(a.profile.values == b.profile.values);
    CHECK(a.profile.values != c.profile.values);
    CHECK(generate_wind_case(8, 14.0, 42).profile.values != a.profile.values);
  }

  TEST_CASE("CSV round trip is exact") {
    const auto a = generate_wind_case(2, 6.0, 1).profile;
    const auto b = wind_from_csv(wind_csv(a));
    CHECK(b.t == a.t);
    CHECK(b.values == a.values);
  }
}

TEST_SUITE("cost") {
  TEST_CASE("Weibull density") {
    const Weibull wb;
    CHECK(wb.pdf(0.0) == 0.0);
    CHECK(wb.pdf(11.28) == doctest::Approx(2.0 / 11.28 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(wb.pdf(11.28) == doctest::Approx(0.06523).epsilon(1e-4));
    double total = 0.0;
    for (double w = 0.0; w < 200.0; w += 0.001) total += 0.0005 * (wb.pdf(w) + wb.pdf(w + 0.001));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("AEP weights for a three-case toy") {
    const Weibull wb;
    const auto w = aep_weights({5, 10, 15}, wb);
    const double raw[3] = {wb.pdf(5) * 4.5, wb.pdf(10) * 5.0, wb.pdf(15) * 12.5};
    const double sum = raw[0] + raw[1] + raw[2];
    for (int k = 0; k < 3; ++k) CHECK(w[static_cast<std::size_t>(k)] == doctest::Approx(raw[k] / sum).epsilon(1e-14));
  }

  TEST_CASE("all-rated energy bound and linearity") {
    const CostModel cost;
    const auto means = default_case_means();
    const auto w = aep_weights(means, cost.weibull);
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normalized_aep(std::vector<double>(11, 15e6), w, cost) == 0.85 * 8760.0);
    CHECK(normalized_aep(std::vector<double>(11, 15e6), w, cost) == doctest::Approx(7446.0).epsilon(1e-12));
    CHECK(normalized_aep(std::vector<double>(11, 0.0), w, cost) == 0.0);
    std::vector<double> p(11, 0.0);
    p[4] = 9e6;
    CHECK(normalized_aep(p, w, cost) == doctest::Approx(0.85 * 8760.0 * w[4] * 0.6).epsilon(1e-14));
    std::vector<double> a(11), b(11), ab(11);
    for (std::size_t k = 0; k < 11; ++k) {
      a[k] = 1e6 * static_cast<double>(k);
      b[k] = 15e6 - a[k];
      ab[k] = 2.0 * a[k] + 0.5 * b[k];
    }
    CHECK(normalized_aep(ab, w, cost) ==
          doctest::Approx(2.0 * normalized_aep(a, w, cost) + 0.5 * normalized_aep(b, w, cost)).epsilon(1e-12));
  }

  TEST_CASE("capital cost endpoints and monotonicity") {
    const CostModel cost;
    CHECK(cost.capital({36, 6}) == doctest::Approx(4740.7).epsilon(1e-14));
    CHECK(cost.capital({78, 24}) == doctest::Approx(5407.2).epsilon(1e-14));
    const auto cs = lti::linspace(36, 78, 60), cd = lti::linspace(6, 24, 60);
    for (std::size_t i = 0; i < 60; ++i)
      for (std::size_t j = 0; j < 60; ++j) {
        if (i) CHECK(cost.capital({cs[i], cd[j]}) > cost.capital({cs[i - 1], cd[j]}));
        if (j) CHECK(cost.capital({cs[i], cd[j]}) > cost.capital({cs[i], cd[j - 1]}));
      }
    const auto doubled = cost.with_factor({2.0, 2.0});
    CHECK(doubled.capital({50, 10}) == doctest::Approx(2.0 * cost.capital({50, 10})));
  }

  TEST_CASE("LCOE and opex calibration") {
    CostModel cost;
    cost.opex = 100.0;
    const fowt::PlantDesign x{51.75, 12.5};
    CHECK(lcoe(x, 0.0, cost) == kInfiniteLcoe);
    const double l = lcoe(x, 4000.0, cost);
    CHECK(l == doctest::Approx(1000.0 * (0.056 * cost.capital(x) + 100.0) / 4000.0));
    CostModel more = cost;
    more.opex = 200.0;
    CHECK(lcoe(x, 4000.0, more) > l);
    cost.opex = calibrate_opex(cost, x, 4000.0, 89.3);
    CHECK(lcoe(x, 4000.0, cost) == doctest::Approx(89.3).epsilon(1e-12));
  }

  TEST_CASE("cost model file is strict") {
    const auto cost = CostModel::load(CCD_DATA_DIR "/cost_model.json");
    CHECK(cost.base == 4740.7);
    auto j = cost.to_json();
    CHECK(CostModel::from_json(j).to_json() == j);
    j["bogus"] = true;
    CHECK_THROWS_AS(CostModel::from_json(j), IoError);
  }
}

TEST_SUITE("sweep") {
  TEST_CASE("smoke sweep: counts, determinism, persistence and caching") {
    const auto config = SweepConfig::load(CCD_CONFIG_DIR "/sweep_smoke.json");
    const auto family = build_family(config);
    RunOptions serial;
    serial.execution = Execution::serial;
    const auto a = run_sweep(config, family, serial);
    CHECK(a.solves().size() == 8);
    const auto b = run_sweep(config, family);
    CHECK(sweep_csv(a) == sweep_csv(b));
    CHECK(cases_csv(a) == cases_csv(b));

    const auto dir = scratch("ccd_unit_sweep");
    write_sweep(a, dir);
    for (const char* f : {"sweep.csv", "cases.csv", "summary.json", "config.json", "heatmap_lcoe.csv"})
      CHECK(fs::exists(dir / f));
    const auto back = read_sweep(dir);
    CHECK(sweep_csv(back) == sweep_csv(a));
    CHECK(cases_csv(back) == cases_csv(a));

    RunOptions cached;
    cached.cache_dir = dir / "cache";
    const auto first = run_sweep(config, family, cached);
    CHECK(first.cache_hits == 0);
    const auto second = run_sweep(config, family, cached);
    CHECK(second.cache_hits == 8);
    CHECK(cases_csv(second) == cases_csv(a));
    fs::remove_all(dir);
  }

  TEST_CASE("config rejects unknown keys") {
    auto j = io::read_json(CCD_CONFIG_DIR "/sweep_smoke.json");
    j["unknown_setting"] = 3;
    CHECK_THROWS_AS(SweepConfig::from_json(j, CCD_CONFIG_DIR), IoError);
  }
}
