#pragma once

#include <span>
#include <vector>

#include "roadozone/flux_model.hpp"

namespace roadozone {

/// Conserved traffic variables on the road grid.
///
/// `y` is the total property rho * w. `w` is kept alongside so vacuum cells
/// (rho == 0) retain the last advected property instead of evaluating 0/0.
struct TrafficState {
  std::vector<double> rho;  ///< veh/km
  std::vector<double> y;    ///< veh/km * flux units
  std::vector<double> w;    ///< flux units
  double time_s = 0.0;

  std::size_t size() const { return rho.size(); }

  static TrafficState from_density_property(std::vector<double> rho, std::vector<double> w, double time_s = 0.0);
};

struct CellState {
  double rho = 0.0;
  double w = 0.0;
};

struct RiemannSolution {
  double intermediate_rho = 0.0;
  double intermediate_w = 0.0;
  double flux_rho = 0.0;  ///< veh/h
  double flux_y = 0.0;
};

/// Godunov interface flux between two constant states (2CTM supply/demand rule).
RiemannSolution riemann_flux(const CellState& left, const CellState& right, const FluxModel& fm);

struct LeftBoundary {
  enum class Kind { dirichlet_density, neumann, closed };
  Kind kind = Kind::dirichlet_density;
  double rho = 0.0;  ///< inflow density for dirichlet_density
};

struct RightBoundary {
  /// neumann copies the last cell into a ghost; free_outflow discharges the
  /// last cell's demand; closed imposes zero flux (red light).
  enum class Kind { neumann, free_outflow, closed };
  Kind kind = Kind::free_outflow;
};

struct BoundaryPolicy {
  LeftBoundary left;
  RightBoundary right;
};

/// Largest stable step, dx / (2 Vmax), in seconds.
double cfl_bound_s(double dx_km, const FluxModel& fm);

/// One conservative 2CTM update. Throws DomainError if dt breaks the CFL bound.
TrafficState step_2ctm(const TrafficState& state, const BoundaryPolicy& bc, const FluxModel& fm, double dx_km,
                       double dt_s);

/// Interface fluxes used by step_2ctm: size N+1, entry k sits between cells k-1 and k.
struct InterfaceFluxes {
  std::vector<double> rho;
  std::vector<double> y;
};
InterfaceFluxes interface_fluxes(const TrafficState& state, const BoundaryPolicy& bc, const FluxModel& fm);

std::vector<double> velocities(const TrafficState& state, const FluxModel& fm);

struct KinematicsField {
  std::vector<double> v;  ///< km/h
  std::vector<double> a;  ///< m/s^2
};

/// a_i = -V_rho(rho_i, w_i) rho_i (v_{i+1} - v_{i-1}) / (2 dx), one-sided at the ends. Returns m/s^2.
std::vector<double> acceleration_analytic(const TrafficState& state, const FluxModel& fm, double dx_km);

/// a_i = (v_i^{n+1} - v_i^n)/dt + v_i^n (v_{i+1}^{n+1} - v_i^{n+1})/dx with speeds in km/h. Returns m/s^2.
std::vector<double> acceleration_discrete(std::span<const double> v_now, std::span<const double> v_next, double dt_s,
                                          double dx_km);

KinematicsField kinematics(const TrafficState& state, const FluxModel& fm, double dx_km);

}  // namespace roadozone
