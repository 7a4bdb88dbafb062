#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "roadozone/cgarz.hpp"
#include "roadozone/grid.hpp"

namespace roadozone {

/// Polynomial emission coefficients f1..f6 for one acceleration regime.
/// Units: f1 g/s, f2 g/m, f3 g s/m^2, f4 g s/m, f5 g s^3/m^2, f6 g s^2/m^2.
struct EmissionRow {
  std::array<double, 6> f{};
};

struct EmissionCoefficients {
  EmissionRow accelerating;  ///< used when a >= accel_threshold
  EmissionRow decelerating;  ///< used when a < accel_threshold
  double e0 = 0.0;           ///< g/s lower bound
  double accel_threshold = -0.5;  ///< m/s^2

  /// NOx coefficients for a petrol car.
  static EmissionCoefficients petrol_car_nox();
  /// Looks up a named table row; currently "petrol_car_nox".
  static EmissionCoefficients named(const std::string& name);

  const EmissionRow& row_for(double a_ms2) const { return a_ms2 >= accel_threshold ? accelerating : decelerating; }
};

/// Instantaneous single-vehicle rate max{E0, f1 + f2 v + f3 v^2 + f4 a + f5 a^2 + f6 v a} in g/s.
/// Speed in m/s, acceleration in m/s^2.
double emission_rate_single(double v_ms, double a_ms2, const EmissionCoefficients& coeffs);

struct EmissionField {
  std::vector<double> rate_per_cell;              ///< g/h
  double total = 0.0;                             ///< g/h
  std::vector<double> source_concentration_rate;  ///< g/(km^3 h)
};

/// Cell-homogenised emissions: N_i = rho_i dx lanes vehicles all at (v_i, a_i).
/// `kin.v` is in km/h, `kin.a` in m/s^2. `cell_volume_km3` divides the rate into a source term.
EmissionField emission_field(const TrafficState& state, const KinematicsField& kin, const RoadGrid& grid, double lanes,
                             const EmissionCoefficients& coeffs, double cell_volume_km3);

/// E_mod(t^n) = sum_i E_i^n for each field.
std::vector<double> total_emission_timeseries(std::span<const EmissionField> fields);

/// Least-squares factor through the origin: <e_true, e_mod> / <e_mod, e_mod>.
double fit_correction_factor(std::span<const double> e_true, std::span<const double> e_mod);

/// ||e_true - r e_mod||_1 / ||e_true||_1.
double relative_l1_error(std::span<const double> e_true, std::span<const double> e_mod, double r);

}  // namespace roadozone
