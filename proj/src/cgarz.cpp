#include "roadozone/cgarz.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roadozone/error.hpp"
#include "roadozone/grid.hpp"
#include "roadozone/units.hpp"

namespace roadozone {
namespace {

// Densities below this fraction of rho_max are treated as vacuum when recovering w = y / rho.
constexpr double kVacuumFraction = 1e-12;

}  // namespace

std::size_t RoadGrid::num_steps() const {
  const double n = horizon_s / dt_s;
  const auto whole = static_cast<std::size_t>(std::floor(n + 1e-9));
  return n - static_cast<double>(whole) > 1e-9 ? whole + 1 : whole;
}

TrafficState TrafficState::from_density_property(std::vector<double> rho, std::vector<double> w, double time_s) {
  if (rho.size() != w.size()) throw DomainError("TrafficState: rho and w sizes differ");
  TrafficState s;
  s.y.resize(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) s.y[i] = rho[i] * w[i];
  s.rho = std::move(rho);
  s.w = std::move(w);
  s.time_s = time_s;
  return s;
}

RiemannSolution riemann_flux(const CellState& left, const CellState& right, const FluxModel& fm) {
  RiemannSolution sol;
  if (left.rho <= kVacuumFraction * fm.rho_max) {
    // Vacuum sends nothing; w* taken from the right state to keep the record finite.
    sol.intermediate_w = right.w;
    sol.intermediate_rho = invert_velocity(velocity_eval(right.rho, right.w, fm), right.w, fm);
    return sol;
  }
  // w is a 1-Riemann invariant and V is a 2-Riemann invariant; V(0, w) = Vmax for CGARZ.
  const double v_star = std::min(velocity_eval(right.rho, right.w, fm), fm.v_max);
  sol.intermediate_w = left.w;
  sol.intermediate_rho = invert_velocity(v_star, left.w, fm);

  const double demand = supply_demand(left.rho, left.w, fm).demand;
  const double supply = supply_demand(sol.intermediate_rho, sol.intermediate_w, fm).supply;
  sol.flux_rho = std::min(demand, supply);
  sol.flux_y = left.w * sol.flux_rho;
  return sol;
}

double cfl_bound_s(double dx_km, const FluxModel& fm) {
  return dx_km / (2.0 * fm.v_max) * units::kSecondsPerHour;
}

InterfaceFluxes interface_fluxes(const TrafficState& state, const BoundaryPolicy& bc, const FluxModel& fm) {
  const std::size_t n = state.size();
  InterfaceFluxes f;
  f.rho.assign(n + 1, 0.0);
  f.y.assign(n + 1, 0.0);
  if (n == 0) return f;

  auto cell = [&](std::size_t i) { return CellState{state.rho[i], state.w[i]}; };

  for (std::size_t k = 1; k < n; ++k) {
    const RiemannSolution r = riemann_flux(cell(k - 1), cell(k), fm);
    f.rho[k] = r.flux_rho;
    f.y[k] = r.flux_y;
  }

  switch (bc.left.kind) {
    case LeftBoundary::Kind::dirichlet_density: {
      // The ghost carries the prescribed density and the first interior w.
      const RiemannSolution r = riemann_flux({bc.left.rho, state.w[0]}, cell(0), fm);
      f.rho[0] = r.flux_rho;
      f.y[0] = r.flux_y;
      break;
    }
    case LeftBoundary::Kind::neumann: {
      const RiemannSolution r = riemann_flux(cell(0), cell(0), fm);
      f.rho[0] = r.flux_rho;
      f.y[0] = r.flux_y;
      break;
    }
    case LeftBoundary::Kind::closed:
      break;
  }

  switch (bc.right.kind) {
    case RightBoundary::Kind::neumann: {
      const RiemannSolution r = riemann_flux(cell(n - 1), cell(n - 1), fm);
      f.rho[n] = r.flux_rho;
      f.y[n] = r.flux_y;
      break;
    }
    case RightBoundary::Kind::free_outflow: {
      const double d = supply_demand(state.rho[n - 1], state.w[n - 1], fm).demand;
      f.rho[n] = d;
      f.y[n] = state.w[n - 1] * d;
      break;
    }
    case RightBoundary::Kind::closed:
      break;
  }
  return f;
}

TrafficState step_2ctm(const TrafficState& state, const BoundaryPolicy& bc, const FluxModel& fm, double dx_km,
                       double dt_s) {
  const double bound = cfl_bound_s(dx_km, fm);
  if (!(dt_s > 0.0) || dt_s > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step_2ctm: dt=" << dt_s << " s violates the CFL bound " << bound << " s";
    throw DomainError(os.str());
  }

  const InterfaceFluxes f = interface_fluxes(state, bc, fm);
  const double ratio = units::hours(dt_s) / dx_km;
  const std::size_t n = state.size();

  TrafficState next;
  next.rho.resize(n);
  next.y.resize(n);
  next.w.resize(n);
  next.time_s = state.time_s + dt_s;

  const double vacuum = kVacuumFraction * fm.rho_max;
  for (std::size_t i = 0; i < n; ++i) {
    double rho = state.rho[i] - ratio * (f.rho[i + 1] - f.rho[i]);
    double y = state.y[i] - ratio * (f.y[i + 1] - f.y[i]);
    rho = std::clamp(rho, 0.0, fm.rho_max);  // only roundoff can leave the range
    double w = state.w[i];
    if (rho > vacuum) {
      w = y / rho;
      if (w < fm.w_l || w > fm.w_r) {
        w = std::clamp(w, fm.w_l, fm.w_r);
        y = rho * w;
      }
    } else {
      y = rho * w;
    }
    next.rho[i] = rho;
    next.y[i] = y;
    next.w[i] = w;
  }
  return next;
}

std::vector<double> velocities(const TrafficState& state, const FluxModel& fm) {
  std::vector<double> v(state.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = velocity_eval(state.rho[i], state.w[i], fm);
  return v;
}

std::vector<double> acceleration_analytic(const TrafficState& state, const FluxModel& fm, double dx_km) {
  const std::size_t n = state.size();
  std::vector<double> a(n, 0.0);
  if (n < 2) return a;
  const std::vector<double> v = velocities(state, fm);
  for (std::size_t i = 0; i < n; ++i) {
    double dvdx;  // (km/h) / km
    if (i == 0) {
      dvdx = (v[1] - v[0]) / dx_km;
    } else if (i == n - 1) {
      dvdx = (v[n - 1] - v[n - 2]) / dx_km;
    } else {
      dvdx = (v[i + 1] - v[i - 1]) / (2.0 * dx_km);
    }
    const double a_kmh2 = -velocity_drho(state.rho[i], state.w[i], fm) * state.rho[i] * dvdx;
    a[i] = units::kmh2_to_ms2(a_kmh2);
  }
  return a;
}

std::vector<double> acceleration_discrete(std::span<const double> v_now, std::span<const double> v_next, double dt_s,
                                          double dx_km) {
  if (v_now.size() != v_next.size()) throw DomainError("acceleration_discrete: speed fields differ in length");
  const std::size_t n = v_now.size();
  const double dx_m = dx_km * units::kMetersPerKm;
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double now = units::kmh_to_ms(v_now[i]);
    const double next = units::kmh_to_ms(v_next[i]);
    const double downstream = i + 1 < n ? units::kmh_to_ms(v_next[i + 1]) : next;
    a[i] = (next - now) / dt_s + now * (downstream - next) / dx_m;
  }
  return a;
}

KinematicsField kinematics(const TrafficState& state, const FluxModel& fm, double dx_km) {
  return {velocities(state, fm), acceleration_analytic(state, fm, dx_km)};
}

}  // namespace roadozone
