#pragma once

// Collapsed generalized Aw-Rascle-Zhang flux family.
//
// Free flow (rho <= rho_f) follows the Greenshields flux and does not depend on
// the driver property w. In congestion the flux is the convex combination
// (1 - lambda(w)) f(rho) + lambda(w) g(rho) of the straight line f joining
// (rho_f, Q_f(rho_f)) to (rho_max, 0) and the Greenshields parabola g.
//
// Units: density veh/km, speed km/h, flux veh/h. w carries flux units.

namespace roadozone {

struct FluxModel {
  double v_max = 70.0;     ///< km/h
  double rho_f = 19.0;     ///< veh/km, free-flow threshold
  double rho_max = 133.0;  ///< veh/km
  double w_l = 1140.0;     ///< lower bound of w
  double w_r = 2327.5;     ///< upper bound of w

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  /// Lower congested envelope f(rho) = rho_f Vmax (1 - rho/rho_max).
  double lower_envelope(double rho) const;
  /// Greenshields flux g(rho) = rho Vmax (1 - rho/rho_max).
  double greenshields(double rho) const;
  /// Speed at the free-flow threshold, V(rho_f, w) for every w.
  double threshold_speed() const;
};

/// Builds a model with w_L = f(rho_f) and w_R = g(rho_c), rho_c = rho_max / 2.
FluxModel make_flux_model(double v_max, double rho_f, double rho_max);

/// lambda(w) = (w - w_L) / (w_R - w_L), clamped to [0, 1].
double lambda_interp(double w, const FluxModel& fm);

/// Q(rho, w). Throws DomainError when rho is outside [0, rho_max].
double flux_eval(double rho, double w, const FluxModel& fm);

/// V(rho, w) = Q / rho, with the limit Vmax at rho = 0.
double velocity_eval(double rho, double w, const FluxModel& fm);

/// dV/drho (km/h per veh/km). The congested formula is used for rho > rho_f.
double velocity_drho(double rho, double w, const FluxModel& fm);

/// dQ/drho; at rho_f the free-flow (left) derivative is returned.
double flux_drho(double rho, double w, const FluxModel& fm);

/// Unique density with V(rho, w) = v_target, closed form on both branches.
double invert_velocity(double v_target, double w, const FluxModel& fm);

/// Density at which Q(., w) attains its maximum.
double critical_density(double w, const FluxModel& fm);

/// Qmax(w) = Q(critical_density(w), w).
double max_flux(double w, const FluxModel& fm);

struct SupplyDemand {
  double supply = 0.0;  ///< veh/h
  double demand = 0.0;  ///< veh/h
};

SupplyDemand supply_demand(double rho, double w, const FluxModel& fm);

/// w such that V(rho, w) = v; free-flow and vacuum cells return w_R.
/// `clamped` is set when no exact solution exists inside [w_L, w_R].
double solve_property(double rho, double v, const FluxModel& fm, bool* clamped = nullptr);

}  // namespace roadozone
