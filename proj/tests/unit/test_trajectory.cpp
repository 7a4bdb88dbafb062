#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "roadozone/error.hpp"
#include "roadozone/trajectory.hpp"
#include "support.hpp"

using namespace roadozone;
using roadozone::testing::synthetic_trajectories;

TEST_CASE("CSV round trip and NGSIM column adapter") {
  const TrajectorySet t = synthetic_trajectories();
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::istringstream is(os.str());
  const TrajectorySet back = read_trajectory_csv(is, t.frame_dt_s);
  REQUIRE(back.records.size() == t.records.size());
  for (std::size_t k = 0; k < t.records.size(); k += 97) {
    CHECK(back.records[k].vehicle_id == t.records[k].vehicle_id);
    CHECK(back.records[k].frame == t.records[k].frame);
    CHECK(back.records[k].x_m == doctest::Approx(t.records[k].x_m).epsilon(1e-9));
  }

  std::istringstream ngsim(
      "Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc\n"
      "2,11,100,10,1\n"
      "1,10,50,20,0\n"
      "1,11,52,20,0\n");
  const TrajectorySet n = read_trajectory_csv(ngsim, 0.1);
  REQUIRE(n.records.size() == 3);
  CHECK(n.records[0].frame == 10);
  CHECK(n.records[1].vehicle_id == 1);
  CHECK(n.records[2].vehicle_id == 2);
  CHECK(n.records[2].x_m == doctest::Approx(30.48));
  CHECK(n.records[2].v_ms == doctest::Approx(3.048));
  CHECK(n.records[2].t_s == doctest::Approx(1.1));

  std::istringstream bad("vehicle_id,frame,x_m\n1,1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), ConfigError);
}

TEST_CASE("filtering trims time and space") {
  const TrajectorySet t = synthetic_trajectories();
  const TrajectorySet f = filter_trajectories(t, 100.0, 500.0, 10.0);
  for (const auto& r : f.records) {
    CHECK((r.x_m >= 100.0 && r.x_m <= 500.0));
    CHECK((r.t_s >= 10.0 - 1e-9 && r.t_s <= 110.0 + 1e-9));
  }
  CHECK(f.a_m == 100.0);
  CHECK(f.b_m == 500.0);
}

TEST_CASE("aggregation conserves samples and counts distinct vehicles") {
  const TrajectorySet t = synthetic_trajectories();
  const AggregateGrid g = aggregate_cells(t, 30.0, 30.0);
  std::size_t samples = 0;
  for (const auto& c : g.cells) samples += c.samples;
  CHECK(samples == t.records.size());
  CHECK(g.nx == 20);
  // Independent count of vehicles in one cell.
  const std::size_t i = 5, n = 2;
  std::set<long> ids;
  for (const auto& r : t.records) {
    if (std::floor(r.x_m / 30.0) == static_cast<double>(i) && std::floor((r.t_s - g.t0_s) / 30.0 + 1e-9) == n) {
      ids.insert(r.vehicle_id);
    }
  }
  CHECK(g.at(i, n).vehicles == ids.size());
  CHECK(g.at(i, n).density_vehkm == doctest::Approx(static_cast<double>(ids.size()) / 0.03));
  CHECK(g.at(i, n).flow_vehh == doctest::Approx(g.at(i, n).density_vehkm * g.at(i, n).mean_speed_kmh));
}

TEST_CASE("kernel estimate integrates to the vehicle count and is translation invariant") {
  const std::vector<double> x{300.0, 320.0, 350.0, 410.0};
  const std::vector<double> v{10.0, 12.0, 8.0, 15.0};
  std::vector<double> grid;
  for (double s = 0.25; s < 1000.0; s += 0.5) grid.push_back(s);
  const auto k = kde_fields(x, v, 20.0, 0.0, 1000.0, grid, 70.0);
  double count = 0.0;
  for (double r : k.rho_vehkm) count += r * 0.5 / 1000.0;
  CHECK(count == doctest::Approx(4.0).epsilon(1e-6));

  std::vector<double> xs = x, gs = grid;
  for (auto& a : xs) a += 100.0;
  for (auto& a : gs) a += 100.0;
  const auto shifted = kde_fields(xs, v, 20.0, 100.0, 1100.0, gs, 70.0);
  for (std::size_t j = 0; j < grid.size(); j += 50) {
    CHECK(shifted.rho_vehkm[j] == doctest::Approx(k.rho_vehkm[j]).epsilon(1e-10));
    CHECK(shifted.v_kmh[j] == doctest::Approx(k.v_kmh[j]).epsilon(1e-10));
  }
  // Mass near a wall is kept by reflection.
  const std::vector<double> wall{1.0};
  const auto r = kde_fields(wall, std::vector<double>{5.0}, 20.0, 0.0, 1000.0, grid, 70.0);
  double m = 0.0;
  for (double d : r.rho_vehkm) m += d * 0.5 / 1000.0;
  CHECK(m == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(kde_fields(x, v, 0.0, 0.0, 1.0, grid, 70.0), DomainError);
}

TEST_CASE("initial w reproduces the observed speed when unclamped") {
  const FluxModel fm = make_flux_model(65.0, 110.0, 800.0);
  std::vector<double> rho{5.0, 150.0, 400.0, 700.0}, v{64.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 1; i < 4; ++i) v[i] = velocity_eval(rho[i], 0.5 * (fm.w_l + fm.w_r), fm);
  std::size_t clamped = 99;
  const auto w = initial_w_from_fields(rho, v, fm, &clamped);
  CHECK(w[0] == fm.w_r);
  for (std::size_t i = 1; i < 4; ++i) CHECK(std::abs(velocity_eval(rho[i], w[i], fm) - v[i]) <= 1e-9);
  CHECK(clamped == 0);
}

TEST_CASE("calibration recovers a model that covers its own synthetic diagram") {
  const FluxModel truth = make_flux_model(65.0, 110.0, 800.0);
  AggregateGrid g;
  g.nx = 1;
  for (double rho = 5.0; rho < 790.0; rho += 5.0) {
    CellAggregate c;
    c.samples = 1;
    c.density_vehkm = rho;
    const double w = rho <= truth.rho_f ? truth.w_r : truth.w_l + (truth.w_r - truth.w_l) * std::fmod(rho, 7.0) / 7.0;
    c.flow_vehh = flux_eval(rho, w, truth);
    c.mean_speed_kmh = c.flow_vehh / rho;
    g.cells.push_back(c);
  }
  g.nt = g.cells.size();
  CHECK(envelope_coverage(g, truth, 0.10) == doctest::Approx(1.0));
  CalibrationOptions opt;
  opt.coverage_target = 0.99;
  const CalibrationResult res = calibrate_flux_model(g, 6, 0.0075, opt);
  CHECK(res.model.rho_max == doctest::Approx(800.0));
  CHECK(res.feasible);
  CHECK(res.coverage >= 0.99);
  CHECK(res.points == g.cells.size());
  CHECK(std::abs(res.model.v_max - 65.0) <= 5.0);
}

TEST_CASE("ground truth sums per frame") {
  TrajectorySet t;
  t.records = {{1, 0, 0.0, 1.0, 0.0, 0.0}, {2, 0, 0.0, 2.0, 0.0, 0.0}, {1, 1, 0.1, 1.0, 0.0, 0.0}};
  const auto c = EmissionCoefficients::petrol_car_nox();
  const auto e = ground_truth_emissions(t, c);
  REQUIRE(e.size() == 2);
  CHECK(e[0] == doctest::Approx(2 * 6.19e-4 * 3600.0));
  CHECK(e[1] == doctest::Approx(6.19e-4 * 3600.0));
}

TEST_CASE("emission validation on synthetic trajectories") {
  const TrajectorySet t = synthetic_trajectories();
  EmissionValidationOptions opt;
  opt.flux = make_flux_model(75.0, 20.0, 133.0);
  const auto res = validate_emissions(t, EmissionCoefficients::petrol_car_nox(), opt);
  CHECK(res.t_s.size() == t.frames().size());
  CHECK(res.e_true_g_h.size() == res.e_mod_g_h.size());
  CHECK(res.r > 0.0);
  CHECK(std::isfinite(res.error));
  CHECK(res.error < 1.0);
}
