#include <filesystem>
#include <string>

#include "doctest.h"
#include "roadozone/config.hpp"
#include "roadozone/error.hpp"
#include "support.hpp"

using namespace roadozone;

namespace {

std::string field_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

std::string with(const std::string& section_json) {
  return "{" + section_json + "}";
}

}  // namespace

TEST_CASE("shipped configs load, validate and round-trip") {
  for (const auto& entry : std::filesystem::directory_iterator(std::string(ROADOZONE_SOURCE_DIR) + "/configs")) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const ScenarioConfig cfg = load_config(entry.path().string());
    CHECK_NOTHROW(validate_config(cfg));
    const std::string once = serialize_config(cfg);
    CHECK(serialize_config(parse_config(once)) == once);
    CHECK(normalize_json(testing::read_file(entry.path().string())) == once);
  }
}

TEST_CASE("defaults reproduce the reference scenario") {
  const ValidatedConfig v = validate_config(parse_config("{}"));
  CHECK(v.cfg.flux.v_max == 70.0);
  CHECK(v.cfg.flux.rho_max == 133.0);
  CHECK(v.cfg.flux.rho_f == 19.0);
  CHECK(v.cfg.grid.num_cells == 100);
  CHECK(v.requested_dt_s == 1.5);
  CHECK(v.dt_clamped);
  CHECK(v.cfg.grid.dt_s == doctest::Approx(0.03 / 140.0 * 3600.0));
  CHECK_FALSE(v.warnings.empty());
  const auto w = sample_segments(v.cfg.initial_w, v.cfg.grid, "initial.w_vehh");
  CHECK(w[0] == 2327.5);
  CHECK(w[66] == 2327.5);
  CHECK(w[67] == 1140.0);
  CHECK(w[99] == 1140.0);
}

TEST_CASE("a step inside the CFL bound is kept") {
  const ValidatedConfig v = validate_config(parse_config(R"({"grid": {"dt_s": 0.5}})"));
  CHECK_FALSE(v.dt_clamped);
  CHECK(v.cfg.grid.dt_s == 0.5);
}

TEST_CASE("validation errors name the offending field") {
  CHECK(field_of(with(R"("grid": {"num_cells": 2})")) == "grid.num_cells");
  CHECK(field_of(with(R"("grid": {"horizon_s": -1})")) == "grid.horizon_s");
  CHECK(field_of(with(R"("flux": {"rho_f_vehkm": 200})")) .rfind("flux", 0) == 0);
  CHECK(field_of(with(R"("initial": {"rho_vehkm": 500})")) == "initial.rho_vehkm");
  CHECK(field_of(with(R"("initial": {"w_vehh": 10})")) == "initial.w_vehh");
  CHECK(field_of(with(R"("boundary": {"right": "wormhole"})")) == "boundary.right");
  CHECK(field_of(with(R"("boundary": {"right": "traffic_light"})")) == "light");
  CHECK(field_of(with(R"("light": {"cycle_s": 100, "red_s": 200})")) == "light.red_s");
  CHECK(field_of(with(R"("emission": {"table": "nope"})")) == "emission.table");
  CHECK(field_of(with(R"("emission": {"acceleration": "magic"})")) == "emission.acceleration");
  CHECK(field_of(with(R"("chemistry": {"p_no2": 1.5})")) == "chemistry.p_no2");
  CHECK(field_of(with(R"("chemistry": {"rtol": 0})")) == "chemistry.rtol");
  CHECK(field_of(with(R"("grid": {"bogus": 1})")) == "grid.bogus");
  CHECK(field_of(with(R"("grid": {"dt_s": "fast"})")) == "grid.dt_s");
  CHECK(field_of(with(R"("dispersion": {"bc_mode": "x"})")) == "dispersion.bc_mode");
  CHECK(field_of(with(R"("dispersion": {"source_volume": "x"})")) == "dispersion.source_volume");
  CHECK(field_of(with(R"("dispersion": {"mode": "vertical", "probe_m": 5.0})")) == "dispersion.probe_m");
  CHECK(field_of(with(R"("dispersion": {"length_m": 5000.0, "dx_m": 5.0, "horizon_s": 1800.0})")) == "dispersion.length_m");
  CHECK(field_of(with(R"("dispersion": {"horizon_s": 99999})")) == "dispersion.horizon_s");
  CHECK(field_of("{ not json") == "");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("segments must cover every cell") {
  const RoadGrid g = RoadGrid::uniform(3.0, 100, 0.7, 10.0);
  CHECK_THROWS_AS(sample_segments({{0.0, 1.0, 5.0}}, g, "initial.rho_vehkm"), ConfigError);
  const auto v = sample_segments({{0.0, 1.5, 1.0}, {1.5, 3.0, 2.0}}, g, "x");
  CHECK(v[49] == 1.0);
  CHECK(v[50] == 2.0);
}

TEST_CASE("traffic light schedule") {
  const TrafficLightPolicy p = TrafficLightPolicy::from_ratio(300.0, 1.5);
  CHECK(p.red_s == doctest::Approx(120.0));
  CHECK(p.ratio() == doctest::Approx(1.5));
  CHECK(p.is_green(0.0));
  CHECK(p.is_green(179.9));
  CHECK_FALSE(p.is_green(180.0));
  CHECK_FALSE(p.is_green(299.9));
  CHECK(p.is_green(300.0));
  ScenarioConfig cfg;
  cfg.right = RightBc::traffic_light;
  cfg.light = p;
  CHECK(cfg.boundary_at(10.0).right.kind == RightBoundary::Kind::free_outflow);
  CHECK(cfg.boundary_at(200.0).right.kind == RightBoundary::Kind::closed);
  CHECK_THROWS_AS(TrafficLightPolicy::from_ratio(300.0, -1.0), ConfigError);
}

TEST_CASE("unit conversions invert") {
  CHECK(units::ms_to_kmh(units::kmh_to_ms(63.0)) == doctest::Approx(63.0).epsilon(1e-15));
  CHECK(units::km2h_to_m2s(3.6e-3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(units::kmh2_to_ms2(12960.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(units::hours(5400.0) == 1.5);
}
