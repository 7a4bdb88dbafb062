#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadozone/flux_model.hpp"
#include "roadozone/trajectory.hpp"

namespace roadozone::testing {

/// Exact self-similar solution of a Riemann problem whose two states share w and lie on the
/// congested branch, so that only the 1-wave (shock or rarefaction) appears.
class CongestedRiemann {
 public:
  CongestedRiemann(double rho_l, double rho_r, double w, FluxModel fm);
  /// Density at similarity coordinate xi = x / t (km/h).
  double rho(double xi) const;
  bool is_shock() const { return rho_l_ < rho_r_; }

 private:
  double dq(double rho) const;
  double inverse_dq(double slope) const;
  double rho_l_, rho_r_, w_;
  FluxModel fm_;
};

struct RiemannRun {
  double dx_m = 0.0;
  double l1_error = 0.0;  ///< veh/km * km
};

/// Runs the 2CTM scheme on [0, length] with the discontinuity at the midpoint and returns the L1 error
/// against the exact solution at time t_end.
RiemannRun riemann_l1_error(double rho_l, double rho_r, double w_l, double w_r, const FluxModel& fm, double dx_m,
                            double length_km, double t_end_s, double dt_fraction = 0.9);

struct SyntheticTrafficOptions {
  double road_m = 600.0;
  double duration_s = 120.0;
  double frame_dt_s = 0.1;
  double headway_s = 2.0;
  double v_free_ms = 20.0;
  double v_slow_ms = 4.0;
  double wave_start_m = 450.0;
  double wave_speed_ms = -4.0;
  double wave_width_m = 60.0;
  std::uint32_t seed = 7;
};

/// Deterministic single-lane trajectories passing through a travelling slow-down zone.
TrajectorySet synthetic_trajectories(const SyntheticTrafficOptions& opt = {});

/// Fresh empty directory under the system temp path.
std::string scratch_dir(const std::string& name);

/// Whole file as bytes; empty when unreadable.
std::string read_file(const std::string& path);

}  // namespace roadozone::testing
