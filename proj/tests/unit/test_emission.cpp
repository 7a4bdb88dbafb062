#include <cmath>
#include <random>

#include "doctest.h"
#include "roadozone/emission.hpp"
#include "roadozone/error.hpp"
#include "roadozone/units.hpp"

using namespace roadozone;

TEST_CASE("point values from the coefficient table") {
  const auto c = EmissionCoefficients::petrol_car_nox();
  CHECK(emission_rate_single(0.0, 0.0, c) == doctest::Approx(6.19e-4).epsilon(1e-15));
  CHECK(emission_rate_single(20.0, -1.0, c) == doctest::Approx(2.17e-4).epsilon(1e-15));
  const double hand = 6.19e-4 + 8e-5 * 10 + (-4.03e-6) * 100 + (-4.13e-4) * 1 + 3.80e-4 * 1 + 1.77e-4 * 10;
  CHECK(std::abs(emission_rate_single(10.0, 1.0, c) - hand) <= 1e-15);
  CHECK(std::abs(hand - 2.753e-3) <= 1e-15);
  CHECK(c.e0 == 0.0);
  for (std::size_t k = 1; k < 6; ++k) CHECK(c.decelerating.f[k] == 0.0);
}

TEST_CASE("regime selection follows the a >= -0.5 test") {
  const auto c = EmissionCoefficients::petrol_car_nox();
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> uv(0.0, 40.0), ua(-4.0, 3.0);
  bool ok = true;
  for (int k = 0; k < 1000000; ++k) {
    const double v = uv(rng), a = ua(rng);
    const auto& row = a >= -0.5 ? c.accelerating : c.decelerating;
    ok = ok && &c.row_for(a) == &row;
  }
  CHECK(ok);
}

TEST_CASE("rate equals the clipped polynomial exactly") {
  const auto c = EmissionCoefficients::petrol_car_nox();
  std::mt19937 rng(22);
  std::uniform_real_distribution<double> uv(0.0, 40.0), ua(-3.0, 3.0);
  for (int k = 0; k < 10000; ++k) {
    const double v = uv(rng), a = ua(rng);
    const auto& f = c.row_for(a).f;
    const double poly = f[0] + f[1] * v + f[2] * v * v + f[3] * a + f[4] * a * a + f[5] * v * a;
    CHECK(std::abs(emission_rate_single(v, a, c) - std::max(c.e0, poly)) <= 1e-15);
  }
}

TEST_CASE("unknown coefficient table is rejected") {
  CHECK_THROWS_AS(EmissionCoefficients::named("diesel_truck_pm"), ConfigError);
}

TEST_CASE("emission field") {
  const auto c = EmissionCoefficients::petrol_car_nox();
  const RoadGrid grid = RoadGrid::uniform(3.0, 100, 0.7, 1800.0);
  const double vol = std::pow(grid.dx_km, 3);

  SUBCASE("empty road emits nothing") {
    const TrafficState s = TrafficState::from_density_property(std::vector<double>(100, 0.0),
                                                               std::vector<double>(100, 1500.0), 0.0);
    KinematicsField k{std::vector<double>(100, 70.0), std::vector<double>(100, 0.0)};
    const auto e = emission_field(s, k, grid, 1.0, c, vol);
    CHECK(e.total == 0.0);
    for (double r : e.rate_per_cell) CHECK(r == 0.0);
  }
  SUBCASE("one stationary vehicle emits f1") {
    const RoadGrid g1 = RoadGrid::uniform(0.09, 3, 0.7, 10.0);
    std::vector<double> rho(3, 0.0);
    rho[1] = 1.0 / g1.dx_km;
    const TrafficState s = TrafficState::from_density_property(rho, std::vector<double>(3, 1500.0), 0.0);
    KinematicsField k{std::vector<double>(3, 0.0), std::vector<double>(3, 0.0)};
    const auto e = emission_field(s, k, g1, 1.0, c, 1.0);
    CHECK(e.rate_per_cell[1] == doctest::Approx(6.19e-4 * 3600.0).epsilon(1e-12));
  }
  SUBCASE("uniform scenario state equals N E(v, 0) in every cell") {
    const FluxModel fm;
    const TrafficState s = TrafficState::from_density_property(std::vector<double>(100, 52.0),
                                                               std::vector<double>(100, fm.w_r), 0.0);
    const auto kin = kinematics(s, fm, grid.dx_km);
    const auto e = emission_field(s, kin, grid, 1.0, c, vol);
    const double v_ms = fm.v_max * (1.0 - 52.0 / fm.rho_max) / 3.6;
    const double per_vehicle = 6.19e-4 + 8e-5 * v_ms - 4.03e-6 * v_ms * v_ms;
    const double expect = 52.0 * 0.03 * per_vehicle * 3600.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(e.rate_per_cell[i] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(e.source_concentration_rate[i] == doctest::Approx(expect / vol).epsilon(1e-12));
      sum += e.rate_per_cell[i];
    }
    CHECK(e.total == doctest::Approx(sum).epsilon(1e-12));
  }
  SUBCASE("homogeneous of degree one in rho") {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> ur(0.0, 60.0), uv(0.0, 70.0), ua(-2.0, 2.0);
    std::vector<double> rho(100), rho2(100);
    KinematicsField k{std::vector<double>(100), std::vector<double>(100)};
    for (std::size_t i = 0; i < 100; ++i) {
      rho[i] = ur(rng);
      rho2[i] = 2.0 * rho[i];
      k.v[i] = uv(rng);
      k.a[i] = ua(rng);
    }
    const std::vector<double> w(100, 1500.0);
    const auto e1 = emission_field(TrafficState::from_density_property(rho, w), k, grid, 1.0, c, vol);
    const auto e2 = emission_field(TrafficState::from_density_property(rho2, w), k, grid, 1.0, c, vol);
    for (std::size_t i = 0; i < 100; ++i) CHECK(e2.rate_per_cell[i] == doctest::Approx(2.0 * e1.rate_per_cell[i]));
  }
}

TEST_CASE("total emission series") {
  EmissionField a, b;
  a.rate_per_cell = {1.0, 2.0, 3.0};
  a.total = 6.0;
  b.rate_per_cell = {0.0, 5.0, 0.0};
  b.total = 5.0;
  const std::vector<EmissionField> fields{a, b};
  const auto s = total_emission_timeseries(fields);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == 6.0);
  CHECK(s[1] == 5.0);
  CHECK(total_emission_timeseries(std::vector<EmissionField>{}).empty());
}

TEST_CASE("correction factor and relative error") {
  const std::vector<double> t{1.0, 4.0, 2.0, 8.0};
  std::vector<double> half(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) half[k] = 0.5 * t[k];
  CHECK(fit_correction_factor(t, t) == doctest::Approx(1.0));
  CHECK(fit_correction_factor(t, half) == doctest::Approx(2.0));
  CHECK(relative_l1_error(t, half, 2.0) == doctest::Approx(0.0));
  const std::vector<double> zero(t.size(), 0.0);
  CHECK(relative_l1_error(t, zero, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS(fit_correction_factor(t, zero));
  CHECK_THROWS(relative_l1_error(zero, t, 1.0));
}
