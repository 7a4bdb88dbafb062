#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "roadozone/cgarz.hpp"
#include "roadozone/units.hpp"

namespace roadozone::testing {

CongestedRiemann::CongestedRiemann(double rho_l, double rho_r, double w, FluxModel fm)
    : rho_l_(rho_l), rho_r_(rho_r), w_(w), fm_(fm) {}

// Q(rho) = (1 - lam) f + lam g, with f linear and g quadratic; Q' is affine in rho.
double CongestedRiemann::dq(double rho) const {
  const double lam = lambda_interp(w_, fm_);
  const double df = -fm_.rho_f * fm_.v_max / fm_.rho_max;
  const double dg = fm_.v_max * (1.0 - 2.0 * rho / fm_.rho_max);
  return (1.0 - lam) * df + lam * dg;
}

double CongestedRiemann::inverse_dq(double slope) const {
  const double lam = lambda_interp(w_, fm_);
  const double df = -fm_.rho_f * fm_.v_max / fm_.rho_max;
  return fm_.rho_max / 2.0 * (1.0 - (slope - (1.0 - lam) * df) / (lam * fm_.v_max));
}

double CongestedRiemann::rho(double xi) const {
  if (is_shock()) {
    const double s = (flux_eval(rho_r_, w_, fm_) - flux_eval(rho_l_, w_, fm_)) / (rho_r_ - rho_l_);
    return xi < s ? rho_l_ : rho_r_;
  }
  const double a = dq(rho_l_);
  const double b = dq(rho_r_);
  if (xi <= a) return rho_l_;
  if (xi >= b) return rho_r_;
  return inverse_dq(xi);
}

RiemannRun riemann_l1_error(double rho_l, double rho_r, double w_l, double w_r, const FluxModel& fm, double dx_m,
                            double length_km, double t_end_s, double dt_fraction) {
  const double dx_km = dx_m / units::kMetersPerKm;
  const auto n = static_cast<std::size_t>(std::llround(length_km / dx_km));
  const double x0 = static_cast<double>(n / 2) * dx_km;
  std::vector<double> rho(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = (static_cast<double>(i) + 0.5) * dx_km < x0;
    rho[i] = left ? rho_l : rho_r;
    w[i] = left ? w_l : w_r;
  }
  TrafficState s = TrafficState::from_density_property(rho, w, 0.0);
  BoundaryPolicy bc;
  bc.left.kind = LeftBoundary::Kind::neumann;
  bc.right.kind = RightBoundary::Kind::neumann;
  const double dt_max = dt_fraction * cfl_bound_s(dx_km, fm);
  const auto steps = static_cast<std::size_t>(std::ceil(t_end_s / dt_max));
  const double dt = t_end_s / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) s = step_2ctm(s, bc, fm, dx_km, dt);

  const CongestedRiemann exact(rho_l, rho_r, w_l, fm);
  const double t_h = units::hours(t_end_s);
  // Exact cell averages by midpoint sub-sampling.
  constexpr int kSub = 64;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double avg = 0.0;
    for (int q = 0; q < kSub; ++q) {
      const double x = (static_cast<double>(i) + (q + 0.5) / kSub) * dx_km;
      avg += exact.rho((x - x0) / t_h);
    }
    err += std::abs(s.rho[i] - avg / kSub) * dx_km;
  }
  return {dx_m, err};
}

TrajectorySet synthetic_trajectories(const SyntheticTrafficOptions& opt) {
  std::mt19937 rng(opt.seed);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  auto speed = [&](double x, double t) {
    const double centre = opt.wave_start_m + opt.wave_speed_ms * t;
    const double z = (x - centre) / opt.wave_width_m;
    return opt.v_free_ms - (opt.v_free_ms - opt.v_slow_ms) * std::exp(-z * z);
  };

  struct Vehicle {
    long id;
    double x;
  };
  std::vector<Vehicle> active;
  long next_id = 1;
  // Vehicles already on the road at t = 0.
  for (double x = opt.road_m - 1.0; x > 0.0; x -= opt.v_free_ms * opt.headway_s * (1.0 + jitter(rng))) {
    active.push_back({next_id++, x});
  }
  double next_entry = opt.headway_s * (1.0 + jitter(rng));

  TrajectorySet traj;
  traj.a_m = 0.0;
  traj.b_m = opt.road_m;
  traj.lane_count = 1;
  traj.frame_dt_s = opt.frame_dt_s;
  const auto frames = static_cast<long>(std::llround(opt.duration_s / opt.frame_dt_s));
  for (long f = 0; f <= frames; ++f) {
    const double t = static_cast<double>(f) * opt.frame_dt_s;
    if (t >= next_entry) {
      active.push_back({next_id++, 0.0});
      next_entry += opt.headway_s * (1.0 + jitter(rng));
    }
    std::sort(active.begin(), active.end(), [](const Vehicle& a, const Vehicle& b) { return a.id < b.id; });
    std::vector<Vehicle> keep;
    for (const auto& v : active) {
      const double u = speed(v.x, t);
      const double u_next = speed(v.x + u * opt.frame_dt_s, t + opt.frame_dt_s);
      traj.records.push_back({v.id, f, t, v.x, u, (u_next - u) / opt.frame_dt_s});
      const double x_new = v.x + u * opt.frame_dt_s;
      if (x_new < opt.road_m) keep.push_back({v.id, x_new});
    }
    active = std::move(keep);
  }
  return traj;
}

std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("roadozone_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace roadozone::testing
