#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "roadozone/cgarz.hpp"
#include "roadozone/error.hpp"
#include "roadozone/units.hpp"

using namespace roadozone;

namespace {

constexpr double kDx = 0.03;

// Scalar Godunov flux for a concave flux q: min/max formula.
double scalar_godunov(double ul, double ur, const std::function<double(double)>& q) {
  constexpr int kN = 20000;
  double out;
  if (ul <= ur) {
    out = q(ul);
    for (int k = 0; k <= kN; ++k) out = std::min(out, q(ul + (ur - ul) * k / kN));
  } else {
    out = q(ur);
    for (int k = 0; k <= kN; ++k) out = std::max(out, q(ur + (ul - ur) * k / kN));
  }
  return out;
}

TrafficState random_state(std::mt19937& rng, std::size_t n, const FluxModel& fm) {
  std::uniform_real_distribution<double> ur(0.0, fm.rho_max), uw(fm.w_l, fm.w_r);
  std::vector<double> rho(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    rho[i] = ur(rng);
    w[i] = uw(rng);
  }
  return TrafficState::from_density_property(rho, w, 0.0);
}

}  // namespace

TEST_CASE("Riemann flux of equal states is the exact flux") {
  const FluxModel fm;
  for (double rho : {0.0, 10.0, 19.0, 52.0, 100.0, 133.0}) {
    for (double w : {fm.w_l, 1800.0, fm.w_r}) {
      const auto sol = riemann_flux({rho, w}, {rho, w}, fm);
      CHECK(sol.flux_rho == doctest::Approx(flux_eval(rho, w, fm)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Riemann intermediate state carries the left w and matches speeds") {
  const FluxModel fm;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> ur(1.0, fm.rho_max), uw(fm.w_l, fm.w_r);
  for (int k = 0; k < 500; ++k) {
    const CellState l{ur(rng), uw(rng)}, r{ur(rng), uw(rng)};
    const auto sol = riemann_flux(l, r, fm);
    CHECK(sol.intermediate_w == l.w);
    const double target = std::min(velocity_eval(r.rho, r.w, fm), velocity_eval(0.0, l.w, fm));
    CHECK(velocity_eval(sol.intermediate_rho, sol.intermediate_w, fm) == doctest::Approx(target).epsilon(1e-10));
    CHECK(sol.flux_y == doctest::Approx(l.w * sol.flux_rho).epsilon(1e-12));
  }
}

TEST_CASE("free-flow Riemann flux equals the scalar Greenshields Godunov flux") {
  const FluxModel fm;
  const double w = 1500.0;
  auto q = [&](double rho) { return fm.greenshields(rho); };
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> ur(0.0, fm.rho_f);
  for (int k = 0; k < 200; ++k) {
    const double a = ur(rng), b = ur(rng);
    const auto sol = riemann_flux({a, w}, {b, w}, fm);
    CHECK(sol.flux_rho == doctest::Approx(scalar_godunov(a, b, q)).epsilon(1e-6));
  }
}

TEST_CASE("vacuum on the left gives zero flux") {
  const FluxModel fm;
  const auto sol = riemann_flux({0.0, fm.w_l}, {80.0, fm.w_r}, fm);
  CHECK(sol.flux_rho == 0.0);
  CHECK(std::isfinite(sol.flux_y));
}

TEST_CASE("uniform state with Neumann ends is stationary") {
  const FluxModel fm;
  const TrafficState s = TrafficState::from_density_property(std::vector<double>(50, 52.0),
                                                             std::vector<double>(50, 1700.0), 0.0);
  BoundaryPolicy bc;
  bc.left.kind = LeftBoundary::Kind::neumann;
  bc.right.kind = RightBoundary::Kind::neumann;
  const TrafficState n = step_2ctm(s, bc, fm, kDx, 0.7);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(n.rho[i] == doctest::Approx(52.0).epsilon(1e-14));
    CHECK(n.w[i] == doctest::Approx(1700.0).epsilon(1e-14));
  }
  CHECK(n.time_s == doctest::Approx(0.7));
}

TEST_CASE("CFL breach is a hard error") {
  const FluxModel fm;
  CHECK(cfl_bound_s(kDx, fm) == doctest::Approx(0.03 / 140.0 * 3600.0).epsilon(1e-14));
  const TrafficState s = TrafficState::from_density_property({10, 20, 30}, {1500, 1500, 1500}, 0.0);
  CHECK_THROWS_AS(step_2ctm(s, {}, fm, kDx, 1.5), DomainError);
}

TEST_CASE("positivity and boundedness over randomized closed-road runs") {
  const FluxModel fm;
  std::mt19937 rng(17);
  BoundaryPolicy bc;
  bc.left.kind = LeftBoundary::Kind::closed;
  bc.right.kind = RightBoundary::Kind::closed;
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    TrafficState s = random_state(rng, 12, fm);
    for (int k = 0; k < 20; ++k) {
      s = step_2ctm(s, bc, fm, kDx, cfl_bound_s(kDx, fm));
      for (double r : s.rho) ok = ok && r >= 0.0 && r <= fm.rho_max;
    }
  }
  CHECK(ok);
}

TEST_CASE("constant w stays constant") {
  const FluxModel fm;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ur(0.0, fm.rho_max);
  std::vector<double> rho(60);
  for (auto& r : rho) r = ur(rng);
  TrafficState s = TrafficState::from_density_property(rho, std::vector<double>(60, 1811.0), 0.0);
  BoundaryPolicy bc;
  bc.left = {LeftBoundary::Kind::dirichlet_density, 52.0};
  bc.right.kind = RightBoundary::Kind::free_outflow;
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    s = step_2ctm(s, bc, fm, kDx, 0.75);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.rho[i] > 0.0) worst = std::max(worst, std::abs(s.w[i] - 1811.0) / 1811.0);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("red light stops the outflow") {
  const FluxModel fm;
  const TrafficState s = TrafficState::from_density_property(std::vector<double>(10, 60.0),
                                                             std::vector<double>(10, 1700.0), 0.0);
  BoundaryPolicy bc;
  bc.right.kind = RightBoundary::Kind::closed;
  bc.left.kind = LeftBoundary::Kind::neumann;
  const auto f = interface_fluxes(s, bc, fm);
  CHECK(f.rho.size() == 11);
  CHECK(f.rho.back() == 0.0);
  bc.right.kind = RightBoundary::Kind::free_outflow;
  CHECK(interface_fluxes(s, bc, fm).rho.back() == doctest::Approx(supply_demand(60.0, 1700.0, fm).demand));
}

TEST_CASE("analytic acceleration") {
  const FluxModel fm;
  SUBCASE("uniform state has zero acceleration") {
    const TrafficState s = TrafficState::from_density_property(std::vector<double>(8, 52.0),
                                                               std::vector<double>(8, 1700.0), 0.0);
    for (double a : acceleration_analytic(s, fm, kDx)) CHECK(a == 0.0);
  }
  SUBCASE("interior cells match -V_rho rho dv/(2dx) with a finite-difference V_rho") {
    std::vector<double> rho(10);
    for (std::size_t i = 0; i < 10; ++i) rho[i] = 40.0 + 3.0 * static_cast<double>(i);
    const TrafficState s = TrafficState::from_density_property(rho, std::vector<double>(10, 1700.0), 0.0);
    const auto a = acceleration_analytic(s, fm, kDx);
    const auto v = velocities(s, fm);
    for (std::size_t i = 1; i + 1 < 10; ++i) {
      const double h = 1e-5;
      const double v_rho = (velocity_eval(rho[i] + h, 1700.0, fm) - velocity_eval(rho[i] - h, 1700.0, fm)) / (2 * h);
      const double expect_kmh2 = -v_rho * rho[i] * (v[i + 1] - v[i - 1]) / (2 * kDx);
      CHECK(a[i] == doctest::Approx(units::kmh2_to_ms2(expect_kmh2)).epsilon(1e-6));
    }
  }
}

TEST_CASE("analytic and discrete acceleration agree on a smooth profile as dx shrinks") {
  const FluxModel fm;
  auto gap = [&](std::size_t n) {
    const double dx = 3.0 / static_cast<double>(n);
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) * dx;
      rho[i] = 60.0 + 25.0 * std::sin(2.0 * M_PI * x / 3.0);
    }
    const TrafficState s = TrafficState::from_density_property(rho, std::vector<double>(n, 1700.0), 0.0);
    BoundaryPolicy bc;
    bc.left.kind = LeftBoundary::Kind::neumann;
    bc.right.kind = RightBoundary::Kind::neumann;
    const double dt = 0.25 * cfl_bound_s(dx, fm);
    const TrafficState next = step_2ctm(s, bc, fm, dx, dt);
    const auto aa = acceleration_analytic(s, fm, dx);
    const auto ad = acceleration_discrete(velocities(s, fm), velocities(next, fm), dt, dx);
    double e = 0.0;
    for (std::size_t i = n / 10; i < n - n / 10; ++i) e = std::max(e, std::abs(aa[i] - ad[i]));
    return e;
  };
  const double coarse = gap(100), fine = gap(400);
  CHECK(fine < coarse);
}

TEST_CASE("discrete acceleration") {
  const std::vector<double> v(6, 50.0), v2(6, 53.6);
  for (double a : acceleration_discrete(v, v, 0.5, kDx)) CHECK(a == 0.0);
  for (double a : acceleration_discrete(v, v2, 0.5, kDx)) CHECK(a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS(acceleration_discrete(v, std::vector<double>(5, 1.0), 0.5, kDx));
}

TEST_CASE("kinematics speeds stay within [0, Vmax]") {
  const FluxModel fm;
  std::mt19937 rng(9);
  const TrafficState s = random_state(rng, 40, fm);
  const auto k = kinematics(s, fm, kDx);
  for (double v : k.v) CHECK((v >= 0.0 && v <= fm.v_max));
}
