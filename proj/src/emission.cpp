#include "roadozone/emission.hpp"

#include <algorithm>
#include <cmath>

#include "roadozone/error.hpp"
#include "roadozone/units.hpp"

namespace roadozone {

EmissionCoefficients EmissionCoefficients::petrol_car_nox() {
  EmissionCoefficients c;
  c.accelerating.f = {6.19e-04, 8e-05, -4.03e-06, -4.13e-04, 3.80e-04, 1.77e-04};
  c.decelerating.f = {2.17e-04, 0.0, 0.0, 0.0, 0.0, 0.0};
  c.e0 = 0.0;
  c.accel_threshold = -0.5;
  return c;
}

EmissionCoefficients EmissionCoefficients::named(const std::string& name) {
  if (name == "petrol_car_nox") return petrol_car_nox();
  throw ConfigError("emission.table", "unknown emission table '" + name + "'");
}

double emission_rate_single(double v_ms, double a_ms2, const EmissionCoefficients& coeffs) {
  const auto& f = coeffs.row_for(a_ms2).f;
  const double poly = f[0] + f[1] * v_ms + f[2] * v_ms * v_ms + f[3] * a_ms2 + f[4] * a_ms2 * a_ms2 + f[5] * v_ms * a_ms2;
  return std::max(coeffs.e0, poly);
}

EmissionField emission_field(const TrafficState& state, const KinematicsField& kin, const RoadGrid& grid, double lanes,
                             const EmissionCoefficients& coeffs, double cell_volume_km3) {
  const std::size_t n = state.size();
  if (kin.v.size() != n || kin.a.size() != n) throw DomainError("emission_field: kinematics size mismatch");
  if (!(cell_volume_km3 > 0.0)) throw DomainError("emission_field: cell volume must be positive");

  EmissionField out;
  out.rate_per_cell.resize(n);
  out.source_concentration_rate.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vehicles = state.rho[i] * grid.dx_km * lanes;
    const double per_vehicle = emission_rate_single(units::kmh_to_ms(kin.v[i]), kin.a[i], coeffs);
    const double rate = vehicles * per_vehicle * units::kSecondsPerHour;
    out.rate_per_cell[i] = rate;
    out.source_concentration_rate[i] = rate / cell_volume_km3;
    out.total += rate;
  }
  return out;
}

std::vector<double> total_emission_timeseries(std::span<const EmissionField> fields) {
  std::vector<double> series;
  series.reserve(fields.size());
  for (const auto& f : fields) {
    double sum = 0.0;
    for (double r : f.rate_per_cell) sum += r;
    series.push_back(sum);
  }
  return series;
}

double fit_correction_factor(std::span<const double> e_true, std::span<const double> e_mod) {
  if (e_true.size() != e_mod.size()) throw DomainError("fit_correction_factor: series lengths differ");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < e_true.size(); ++k) {
    num += e_true[k] * e_mod[k];
    den += e_mod[k] * e_mod[k];
  }
  if (!(den > 0.0)) throw DomainError("fit_correction_factor: modelled series is identically zero");
  return num / den;
}

double relative_l1_error(std::span<const double> e_true, std::span<const double> e_mod, double r) {
  if (e_true.size() != e_mod.size()) throw DomainError("relative_l1_error: series lengths differ");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < e_true.size(); ++k) {
    num += std::abs(e_true[k] - r * e_mod[k]);
    den += std::abs(e_true[k]);
  }
  if (!(den > 0.0)) throw DomainError("relative_l1_error: ground-truth series has zero norm");
  return num / den;
}

}  // namespace roadozone
