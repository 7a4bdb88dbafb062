#include "roadozone/flux_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roadozone/error.hpp"
#include "roadozone/log.hpp"

namespace roadozone {
namespace {

constexpr double kRhoSlack = 1e-12;  // relative roundoff tolerated at the density bounds

double checked_density(double rho, const FluxModel& fm) {
  const double slack = kRhoSlack * fm.rho_max;
  if (!(rho >= -slack && rho <= fm.rho_max + slack)) {
    std::ostringstream os;
    os << "density " << rho << " outside [0, " << fm.rho_max << "]";
    throw DomainError(os.str());
  }
  return std::clamp(rho, 0.0, fm.rho_max);
}

double congested_flux(double rho, double lambda, const FluxModel& fm) {
  return (1.0 - lambda) * fm.lower_envelope(rho) + lambda * fm.greenshields(rho);
}

}  // namespace

void FluxModel::validate() const {
  if (!(v_max > 0.0)) throw ConfigError("flux.v_max_kmh", "must be positive");
  if (!(rho_max > 0.0)) throw ConfigError("flux.rho_max_vehkm", "must be positive");
  if (!(rho_f > 0.0 && rho_f < rho_max)) throw ConfigError("flux.rho_f_vehkm", "requires 0 < rho_f < rho_max");
  if (!(w_l < w_r)) throw ConfigError("flux.w_l", "requires w_l < w_r");
}

double FluxModel::lower_envelope(double rho) const { return rho_f * v_max * (1.0 - rho / rho_max); }

double FluxModel::greenshields(double rho) const { return rho * v_max * (1.0 - rho / rho_max); }

double FluxModel::threshold_speed() const { return v_max * (1.0 - rho_f / rho_max); }

FluxModel make_flux_model(double v_max, double rho_f, double rho_max) {
  FluxModel fm{v_max, rho_f, rho_max, 0.0, 0.0};
  fm.w_l = fm.lower_envelope(rho_f);
  fm.w_r = fm.greenshields(0.5 * rho_max);
  return fm;
}

double lambda_interp(double w, const FluxModel& fm) {
  const double lambda = (w - fm.w_l) / (fm.w_r - fm.w_l);
  if (lambda < 0.0 || lambda > 1.0) {
    if (log::threshold() <= log::Level::debug) {
      std::ostringstream os;
      os << "lambda_interp: w=" << w << " outside [" << fm.w_l << ", " << fm.w_r << "], clamped";
      log::debug(os.str());
    }
    return std::clamp(lambda, 0.0, 1.0);
  }
  return lambda;
}

double flux_eval(double rho, double w, const FluxModel& fm) {
  rho = checked_density(rho, fm);
  if (rho <= fm.rho_f) return fm.greenshields(rho);
  return congested_flux(rho, lambda_interp(w, fm), fm);
}

double velocity_eval(double rho, double w, const FluxModel& fm) {
  if (rho < -kRhoSlack * fm.rho_max) throw DomainError("velocity_eval: negative density");
  rho = checked_density(rho, fm);
  if (rho <= fm.rho_f) return fm.v_max * (1.0 - rho / fm.rho_max);
  const double lambda = lambda_interp(w, fm);
  // Q_c / rho written without the division so V(rho_max) is exactly zero.
  return (1.0 - lambda) * fm.rho_f * fm.v_max * (1.0 / rho - 1.0 / fm.rho_max) +
         lambda * fm.v_max * (1.0 - rho / fm.rho_max);
}

double velocity_drho(double rho, double w, const FluxModel& fm) {
  rho = checked_density(rho, fm);
  if (rho <= fm.rho_f) return -fm.v_max / fm.rho_max;
  const double lambda = lambda_interp(w, fm);
  return -(1.0 - lambda) * fm.rho_f * fm.v_max / (rho * rho) - lambda * fm.v_max / fm.rho_max;
}

double flux_drho(double rho, double w, const FluxModel& fm) {
  rho = checked_density(rho, fm);
  if (rho <= fm.rho_f) return fm.v_max * (1.0 - 2.0 * rho / fm.rho_max);
  const double lambda = lambda_interp(w, fm);
  return -(1.0 - lambda) * fm.rho_f * fm.v_max / fm.rho_max + lambda * fm.v_max * (1.0 - 2.0 * rho / fm.rho_max);
}

double invert_velocity(double v_target, double w, const FluxModel& fm) {
  const double v = std::clamp(v_target, 0.0, fm.v_max);
  if (v >= fm.threshold_speed()) return fm.rho_max * (1.0 - v / fm.v_max);

  const double lambda = lambda_interp(w, fm);
  const double vr = fm.v_max / fm.rho_max;
  double rho;
  if (lambda <= 1e-14) {
    // Congested branch is the straight line f: V = rho_f Vmax (1/rho - 1/rho_max).
    rho = fm.rho_f * fm.v_max / (fm.rho_f * vr + v);
  } else {
    // rho V = Q_c(rho) rearranged to a rho^2 + b rho + c = 0 with a < 0 <= c.
    const double a = -lambda * vr;
    const double b = lambda * fm.v_max - (1.0 - lambda) * fm.rho_f * vr - v;
    const double c = (1.0 - lambda) * fm.rho_f * fm.v_max;
    const double sq = std::sqrt(b * b - 4.0 * a * c);
    const double q = -0.5 * (b + std::copysign(sq, b));
    const double r1 = q / a;
    const double r2 = q != 0.0 ? c / q : r1;
    rho = std::max(r1, r2);
  }
  return std::clamp(rho, fm.rho_f, fm.rho_max);
}

double critical_density(double w, const FluxModel& fm) {
  const double free_candidate = std::min(0.5 * fm.rho_max, fm.rho_f);
  const double lambda = lambda_interp(w, fm);
  if (lambda <= 0.0) return fm.rho_f <= 0.5 * fm.rho_max ? fm.rho_f : free_candidate;

  const double stationary = 0.5 * fm.rho_max - fm.rho_f * (1.0 - lambda) / (2.0 * lambda);
  const double congested_candidate = std::clamp(stationary, fm.rho_f, fm.rho_max);
  const double q_cong = congested_flux(congested_candidate, lambda, fm);
  const double q_free = fm.greenshields(free_candidate);
  return q_cong >= q_free ? congested_candidate : free_candidate;
}

double max_flux(double w, const FluxModel& fm) { return flux_eval(critical_density(w, fm), w, fm); }

SupplyDemand supply_demand(double rho, double w, const FluxModel& fm) {
  const double rho_cr = critical_density(w, fm);
  const double q = flux_eval(rho, w, fm);
  const double q_max = flux_eval(rho_cr, w, fm);
  if (rho <= rho_cr) return {q_max, q};
  return {q, q_max};
}

double solve_property(double rho, double v, const FluxModel& fm, bool* clamped) {
  if (clamped != nullptr) *clamped = false;
  if (rho <= fm.rho_f) return fm.w_r;
  rho = checked_density(rho, fm);
  const double lower = fm.lower_envelope(rho);
  const double upper = fm.greenshields(rho);
  if (upper - lower <= 1e-12 * fm.w_r) return fm.w_r;  // rho_max: V = 0 for every w
  double lambda = (v * rho - lower) / (upper - lower);
  if (lambda < 0.0 || lambda > 1.0) {
    if (clamped != nullptr) *clamped = true;
    lambda = std::clamp(lambda, 0.0, 1.0);
  }
  return fm.w_l + lambda * (fm.w_r - fm.w_l);
}

}  // namespace roadozone
