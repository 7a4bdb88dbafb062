#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "roadozone/error.hpp"
#include "roadozone/pipeline.hpp"
#include "support.hpp"

using namespace roadozone;
using roadozone::testing::read_file;
using roadozone::testing::scratch_dir;

namespace {

ScenarioConfig short_run(double horizon_s = 120.0) {
  ScenarioConfig cfg;
  cfg.name = "short";
  cfg.grid = RoadGrid::uniform(3.0, 100, 1.5, horizon_s);
  cfg.output.plots = false;
  cfg.output.traffic_dump_every_s = 30.0;
  return cfg;
}

ScenarioConfig with_dispersion(double horizon_s) {
  ScenarioConfig cfg = short_run(horizon_s);
  DispersionConfig d;
  d.mode = DispersionConfig::Mode::horizontal;
  d.length_m = 100.0;
  d.width_m = 100.0;
  d.dx_m = 10.0;
  d.dy_m = 10.0;
  d.dz_m = 10.0;
  d.wind_x_kmh = -1.0;
  d.wind_y_kmh = 0.2;
  d.horizon_s = horizon_s;
  d.probe_m = 20.0;
  cfg.dispersion = d;
  cfg.output.snapshot_every_s = 30.0;
  return cfg;
}

}  // namespace

TEST_CASE("emission series has one sample per time level") {
  const ScenarioConfig cfg = short_run();
  const EmissionSeries s = run_traffic_emissions(validate_config(cfg).cfg);
  const std::size_t steps = validate_config(cfg).cfg.grid.num_steps();
  CHECK(s.t_s.size() == steps + 1);
  CHECK(s.total_g_h.size() == steps + 1);
  CHECK(s.t_s.back() == doctest::Approx(120.0));
  for (std::size_t n = 0; n < s.t_s.size(); ++n) {
    double sum = 0.0;
    for (double v : s.cell_rate_g_h[n]) sum += v;
    CHECK(sum == doctest::Approx(s.total_g_h[n]));
  }
}

TEST_CASE("runs are deterministic byte for byte") {
  const ScenarioConfig cfg = with_dispersion(60.0);
  RunOptions a, b;
  a.out_dir = scratch_dir("det_a");
  b.out_dir = scratch_dir("det_b");
  const auto ra = run_pipeline(cfg, a);
  const auto rb = run_pipeline(cfg, b);
  const auto fa = ra.artifacts.files();
  const auto fb = rb.artifacts.files();
  REQUIRE(fa.size() == fb.size());
  for (std::size_t k = 0; k < fa.size(); ++k) {
    if (std::filesystem::path(fa[k]).extension() != ".csv") continue;
    CAPTURE(fa[k]);
    CHECK(read_file(fa[k]) == read_file(fb[k]));
  }
  std::size_t snapshots = 0;
  for (const auto& e : std::filesystem::directory_iterator(ra.artifacts.dispersion_dir)) snapshots += e.is_regular_file();
  CHECK(snapshots >= 5 * 3);
}

TEST_CASE("disabling a stage disables its dependents") {
  const ScenarioConfig cfg = with_dispersion(60.0);
  RunOptions o;
  o.disabled = {"emissions"};
  const auto r = run_pipeline(cfg, o);
  CHECK(r.stages_run == std::vector<std::string>{"traffic"});
  CHECK(r.chem_totals_g_km3.empty());
  CHECK_FALSE(r.dispersion.has_value());

  o.disabled = {"chemistry"};
  const auto r2 = run_pipeline(cfg, o);
  CHECK(r2.chem_totals_g_km3.empty());
  CHECK(r2.dispersion.has_value());

  o.disabled = {"warp_drive"};
  CHECK_THROWS_AS(run_pipeline(cfg, o), StageError);
}

TEST_CASE("disabling chemistry leaves emissions untouched") {
  const ScenarioConfig cfg = short_run();
  const auto full = run_pipeline(cfg);
  RunOptions o;
  o.disabled = {"chemistry"};
  const auto partial = run_pipeline(cfg, o);
  CHECK(full.emissions.total_g_h == partial.emissions.total_g_h);
  CHECK_FALSE(full.chem_totals_g_km3.empty());
}

TEST_CASE("invalid configs surface as config-stage errors") {
  ScenarioConfig cfg = short_run();
  cfg.grid.horizon_s = -5.0;
  try {
    run_pipeline(cfg);
    FAIL("expected a StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
  }
}

TEST_CASE("emission series of a light run is periodic after the transient") {
  ScenarioConfig cfg = short_run(1800.0);
  cfg.right = RightBc::traffic_light;
  cfg.light = TrafficLightPolicy::from_ratio(300.0, 1.5);
  const auto s = run_traffic_emissions(validate_config(cfg).cfg);
  CHECK(periodicity_gap(s.t_s, s.total_g_h, 300.0, 900.0) <= 0.02);
  const double m = asymptotic_mean(s.t_s, s.total_g_h, cfg.light, 1800.0);
  CHECK(m > 0.0);
}

TEST_CASE("asymptotic mean windows") {
  std::vector<double> t, y;
  for (int k = 0; k <= 1800; ++k) {
    t.push_back(k);
    y.push_back(k < 900 ? 0.0 : 4.0);
  }
  CHECK(asymptotic_mean(t, y, std::nullopt, 1800.0) == doctest::Approx(4.0));
  const auto light = TrafficLightPolicy::from_ratio(300.0, 1.5);
  CHECK(asymptotic_mean(t, y, light, 1800.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(asymptotic_mean(t, y, light, 600.0), DomainError);
  std::vector<double> saw(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) saw[k] = std::fmod(t[k], 300.0);
  CHECK(periodicity_gap(t, saw, 300.0, 0.0) <= 1e-9);
  CHECK(periodicity_gap(t, y, 300.0, 600.0) > 0.5);
}

TEST_CASE("sweeps keep row order and a no-light baseline") {
  ScenarioConfig base = short_run(1200.0);
  base.chemistry.enabled = false;
  const SweepTable tab = sweep_fixed_ratio(1.5, {300.0, 150.0}, base);
  REQUIRE(tab.rows.size() == 2);
  CHECK(tab.rows[0].cycle_s == 300.0);
  CHECK(tab.rows[1].cycle_s == 150.0);
  CHECK(tab.rows[0].ratio == doctest::Approx(1.5));
  CHECK(tab.rows[0].red_s == doctest::Approx(120.0));
  CHECK(tab.series.size() == 2);
  CHECK(tab.baseline_peak_g_h > 0.0);
  for (const auto& r : tab.rows) CHECK(r.peak_g_h >= tab.baseline_peak_g_h * 0.99);

  const SweepTable rt = sweep_fixed_cycle(300.0, {4.0, 1.0}, base);
  REQUIRE(rt.rows.size() == 2);
  CHECK(rt.rows[0].red_s == doctest::Approx(60.0));
  CHECK(rt.rows[1].red_s == doctest::Approx(150.0));

  const std::string dir = scratch_dir("sweep");
  write_sweep_csv(dir + "/s.csv", tab);
  const std::string text = read_file(dir + "/s.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("dispersion comparison requires matching grids") {
  const ScenarioConfig a = with_dispersion(60.0);
  ScenarioConfig b = a;
  b.dispersion->dx_m = 5.0;
  CHECK_THROWS(compare_dispersion(a, b));
  ScenarioConfig c = a;
  c.right = RightBc::traffic_light;
  c.light = TrafficLightPolicy{};
  const auto cmp = compare_dispersion(a, c);
  CHECK(cmp.m1 > 0.0);
  CHECK(cmp.increase == doctest::Approx((cmp.m2 - cmp.m1) / cmp.m1));
  CHECK_THROWS_AS(compare_dispersion(a, c, 900.0), DomainError);
}

TEST_CASE("number formatting is stable") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(1.5) == "1.5");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-20) == "1e-20");
}
