#include "roadozone/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "roadozone/cgarz.hpp"
#include "roadozone/error.hpp"
#include "roadozone/log.hpp"
#include "roadozone/units.hpp"

namespace roadozone {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t\r\"");
    const auto e = cur.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_number(const std::string& s, std::size_t line_no, const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    std::ostringstream os;
    os << "line " << line_no << ": column '" << column << "' is not numeric ('" << s << "')";
    throw ConfigError("trajectory", os.str());
  }
}

void sort_records(std::vector<TrajectoryRecord>& r) {
  std::sort(r.begin(), r.end(), [](const TrajectoryRecord& a, const TrajectoryRecord& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.vehicle_id < b.vehicle_id;
  });
}

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

void TrajectorySet::validate() const {
  std::unordered_map<long, long> last_frame;
  for (const auto& r : records) {
    auto it = last_frame.find(r.vehicle_id);
    if (it != last_frame.end() && r.frame <= it->second) {
      std::ostringstream os;
      os << "vehicle " << r.vehicle_id << ": frames are not strictly increasing at frame " << r.frame;
      throw DomainError(os.str());
    }
    last_frame[r.vehicle_id] = r.frame;
    if (r.x_m < a_m - 1e-9 || r.x_m > b_m + 1e-9) {
      std::ostringstream os;
      os << "vehicle " << r.vehicle_id << " at x = " << r.x_m << " m is outside [" << a_m << ", " << b_m << "]";
      throw DomainError(os.str());
    }
  }
}

std::vector<long> TrajectorySet::frames() const {
  std::vector<long> f;
  for (const auto& r : records) {
    if (f.empty() || f.back() != r.frame) f.push_back(r.frame);
  }
  return f;
}

TrajectorySet read_trajectory_csv(std::istream& in, double frame_dt_s) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory", "empty trajectory file");
  const auto header = split_fields(line);
  auto find = [&](std::initializer_list<const char*> names) -> long {
    for (const char* n : names) {
      for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == n) return static_cast<long>(k);
      }
    }
    return -1;
  };

  struct Columns {
    long id, frame, x, v, a, lane;
  } col{};
  double length_scale = 1.0;
  if (find({"vehicle_id"}) >= 0) {
    col = {find({"vehicle_id"}), find({"frame"}), find({"x_m"}), find({"v_ms"}), find({"a_ms2"}), find({"lane"})};
  } else if (find({"Vehicle_ID"}) >= 0) {
    col = {find({"Vehicle_ID"}), find({"Frame_ID"}), find({"Local_Y"}), find({"v_Vel", "v_vel"}),
           find({"v_Acc", "v_acc"}), find({"Lane_ID", "Lane_Identification"})};
    length_scale = units::kMetersPerFoot;
  } else {
    throw ConfigError("trajectory", "unrecognised header; expected vehicle_id,frame,x_m,v_ms,a_ms2");
  }
  const std::pair<long, const char*> required[] = {
      {col.id, "vehicle_id"}, {col.frame, "frame"}, {col.x, "x_m"}, {col.v, "v_ms"}, {col.a, "a_ms2"}};
  for (const auto& [idx, name] : required) {
    if (idx < 0) throw ConfigError("trajectory", std::string("missing column '") + name + "'");
  }

  TrajectorySet set;
  set.frame_dt_s = frame_dt_s;
  std::size_t line_no = 1;
  long max_lane = 0;
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_fields(line);
    const long need = std::max({col.id, col.frame, col.x, col.v, col.a});
    if (static_cast<long>(f.size()) <= need) {
      std::ostringstream os;
      os << "line " << line_no << ": expected at least " << need + 1 << " fields";
      throw ConfigError("trajectory", os.str());
    }
    TrajectoryRecord r;
    r.vehicle_id = static_cast<long>(to_number(f[col.id], line_no, "vehicle_id"));
    r.frame = static_cast<long>(to_number(f[col.frame], line_no, "frame"));
    r.t_s = static_cast<double>(r.frame) * frame_dt_s;
    r.x_m = to_number(f[col.x], line_no, "x") * length_scale;
    r.v_ms = to_number(f[col.v], line_no, "v") * length_scale;
    r.a_ms2 = to_number(f[col.a], line_no, "a") * length_scale;
    if (col.lane >= 0 && col.lane < static_cast<long>(f.size()) && !f[col.lane].empty()) {
      max_lane = std::max(max_lane, static_cast<long>(to_number(f[col.lane], line_no, "lane")));
    }
    xmin = std::min(xmin, r.x_m);
    xmax = std::max(xmax, r.x_m);
    set.records.push_back(r);
  }
  sort_records(set.records);
  if (!set.records.empty()) {
    set.a_m = xmin;
    set.b_m = xmax;
  }
  set.lane_count = max_lane > 0 ? static_cast<int>(max_lane) : 1;
  set.validate();
  return set;
}

TrajectorySet read_trajectory_file(const std::string& path, double frame_dt_s) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trajectory", "cannot open '" + path + "'");
  return read_trajectory_csv(in, frame_dt_s);
}

void write_trajectory_csv(std::ostream& out, const TrajectorySet& traj) {
  out << "vehicle_id,frame,x_m,v_ms,a_ms2\n";
  char buf[160];
  for (const auto& r : traj.records) {
    std::snprintf(buf, sizeof buf, "%ld,%ld,%.10g,%.10g,%.10g\n", r.vehicle_id, r.frame, r.x_m, r.v_ms, r.a_ms2);
    out << buf;
  }
}

TrajectorySet filter_trajectories(const TrajectorySet& traj, double a_m, double b_m, double trim_s) {
  if (!(b_m > a_m)) throw DomainError("filter_trajectories: empty road extent");
  TrajectorySet out;
  out.a_m = a_m;
  out.b_m = b_m;
  out.lane_count = traj.lane_count;
  out.frame_dt_s = traj.frame_dt_s;
  if (traj.records.empty()) return out;
  const double t_lo = traj.records.front().t_s + trim_s;
  const double t_hi = traj.records.back().t_s - trim_s;
  for (const auto& r : traj.records) {
    if (r.t_s < t_lo - 1e-9 || r.t_s > t_hi + 1e-9) continue;
    if (r.x_m < a_m || r.x_m > b_m) continue;
    out.records.push_back(r);
  }
  return out;
}

AggregateGrid aggregate_cells(const TrajectorySet& traj, double cell_dx_m, double cell_dt_s) {
  if (!(cell_dx_m > 0.0 && cell_dt_s > 0.0)) throw DomainError("aggregate_cells: cell size must be positive");
  AggregateGrid g;
  g.cell_dx_m = cell_dx_m;
  g.cell_dt_s = cell_dt_s;
  if (traj.records.empty()) return g;

  g.x0_m = traj.a_m;
  g.t0_s = traj.records.front().t_s;
  const double t_end = traj.records.back().t_s;
  g.nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((traj.b_m - traj.a_m) / cell_dx_m - 1e-9)));
  g.nt = static_cast<std::size_t>(std::floor((t_end - g.t0_s) / cell_dt_s + 1e-9)) + 1;
  g.cells.assign(g.nx * g.nt, {});

  std::vector<double> speed_sum(g.cells.size(), 0.0);
  std::vector<std::pair<std::size_t, long>> presence;
  presence.reserve(traj.records.size());
  for (const auto& r : traj.records) {
    auto i = static_cast<std::size_t>(std::max(0.0, std::floor((r.x_m - g.x0_m) / cell_dx_m)));
    auto n = static_cast<std::size_t>(std::max(0.0, std::floor((r.t_s - g.t0_s) / cell_dt_s + 1e-9)));
    i = std::min(i, g.nx - 1);
    n = std::min(n, g.nt - 1);
    const std::size_t c = n * g.nx + i;
    g.cells[c].samples += 1;
    speed_sum[c] += r.v_ms;
    presence.emplace_back(c, r.vehicle_id);
  }
  std::sort(presence.begin(), presence.end());
  presence.erase(std::unique(presence.begin(), presence.end()), presence.end());
  for (const auto& [c, id] : presence) g.cells[c].vehicles += 1;

  const double len_km = cell_dx_m / units::kMetersPerKm;
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    auto& cell = g.cells[c];
    if (cell.samples == 0) continue;
    cell.density_vehkm = static_cast<double>(cell.vehicles) / len_km;
    cell.mean_speed_kmh = units::ms_to_kmh(speed_sum[c] / static_cast<double>(cell.samples));
    cell.flow_vehh = cell.density_vehkm * cell.mean_speed_kmh;
  }
  return g;
}

KdeFields kde_fields(std::span<const double> x_m, std::span<const double> v_ms, double h_m, double a_m, double b_m,
                     std::span<const double> x_eval_m, double v_free_kmh) {
  if (!(h_m > 0.0)) throw DomainError("kde_fields: bandwidth h must be positive");
  if (x_m.size() != v_ms.size()) throw DomainError("kde_fields: positions and speeds differ in length");
  KdeFields out;
  out.rho_vehkm.assign(x_eval_m.size(), 0.0);
  out.v_kmh.assign(x_eval_m.size(), v_free_kmh);
  for (std::size_t k = 0; k < x_eval_m.size(); ++k) {
    const double x = x_eval_m[k];
    double ksum = 0.0;
    double vsum = 0.0;
    for (std::size_t i = 0; i < x_m.size(); ++i) {
      const double xi = x_m[i];
      const double kern = phi((x - xi) / h_m) + phi((x - (2.0 * a_m - xi)) / h_m) + phi((x - (2.0 * b_m - xi)) / h_m);
      ksum += kern;
      vsum += v_ms[i] * kern;
    }
    out.rho_vehkm[k] = ksum / h_m * units::kMetersPerKm;
    if (ksum > 0.0) out.v_kmh[k] = units::ms_to_kmh(vsum / ksum);
  }
  return out;
}

std::vector<double> initial_w_from_fields(std::span<const double> rho0, std::span<const double> v0_kmh,
                                          const FluxModel& fm, std::size_t* clamped_count) {
  if (rho0.size() != v0_kmh.size()) throw DomainError("initial_w_from_fields: field lengths differ");
  std::vector<double> w(rho0.size());
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < rho0.size(); ++i) {
    const double rho = std::clamp(rho0[i], 0.0, fm.rho_max);
    const double v = std::clamp(v0_kmh[i], 0.0, fm.v_max);
    bool c = false;
    w[i] = solve_property(rho, v, fm, &c);
    if (c) ++clamped;
  }
  if (clamped > 0) {
    std::ostringstream os;
    os << "initial_w_from_fields: " << clamped << " cell(s) clamped to [w_L, w_R]";
    log::warn(os.str());
  }
  if (clamped_count) *clamped_count = clamped;
  return w;
}

double envelope_coverage(const AggregateGrid& cells, const FluxModel& fm, double free_band) {
  std::size_t n = 0;
  std::size_t inside = 0;
  for (const auto& c : cells.cells) {
    if (c.samples == 0) continue;
    ++n;
    const double rho = c.density_vehkm;
    const double q = c.flow_vehh;
    if (rho > fm.rho_max) continue;
    if (rho <= fm.rho_f) {
      const double qf = fm.greenshields(rho);
      if (std::abs(q - qf) <= free_band * qf + 1e-9) ++inside;
    } else {
      const double lo = fm.lower_envelope(rho);
      const double hi = fm.greenshields(rho);
      if (q >= lo * (1.0 - 1e-12) - 1e-9 && q <= hi * (1.0 + 1e-12) + 1e-9) ++inside;
    }
  }
  return n == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(n);
}

CalibrationResult calibrate_flux_model(const AggregateGrid& cells, int lanes, double veh_len_km,
                                       const CalibrationOptions& options) {
  if (lanes <= 0 || !(veh_len_km > 0.0)) throw DomainError("calibrate_flux_model: lanes and vehicle length must be positive");
  const double rho_max = static_cast<double>(lanes) / veh_len_km;
  std::size_t points = 0;
  for (const auto& c : cells.cells) points += c.samples > 0 ? 1 : 0;
  if (points == 0) throw DomainError("calibrate_flux_model: no populated cells");

  CalibrationResult best_feasible;
  CalibrationResult best_any;
  best_any.coverage = -1.0;
  const auto nv = static_cast<long>(std::floor((options.v_max_max - options.v_max_min) / options.v_max_step + 1e-9));
  for (long iv = 0; iv <= nv; ++iv) {
    const double vmax = options.v_max_min + static_cast<double>(iv) * options.v_max_step;
    for (double rf = options.rho_f_step; rf < rho_max / 2.0; rf += options.rho_f_step) {
      const FluxModel fm = make_flux_model(vmax, rf, rho_max);
      const double cov = envelope_coverage(cells, fm, options.free_band);
      const double area = vmax * std::pow(rho_max - rf, 3) / (6.0 * rho_max);
      CalibrationResult cand{fm, cov, area, points, cov >= options.coverage_target};
      if (cand.feasible && (!best_feasible.feasible || area < best_feasible.envelope_area)) best_feasible = cand;
      if (cov > best_any.coverage || (cov == best_any.coverage && area < best_any.envelope_area)) best_any = cand;
    }
  }
  if (best_feasible.feasible) return best_feasible;
  std::ostringstream os;
  os << "calibrate_flux_model: no candidate reaches " << options.coverage_target * 100.0
     << "% coverage; best is " << best_any.coverage * 100.0 << "%";
  log::warn(os.str());
  return best_any;
}

std::vector<double> ground_truth_emissions(const TrajectorySet& traj, const EmissionCoefficients& coeffs) {
  std::vector<double> out;
  long frame = std::numeric_limits<long>::min();
  for (const auto& r : traj.records) {
    if (r.frame != frame) {
      out.push_back(0.0);
      frame = r.frame;
    }
    out.back() += emission_rate_single(std::max(0.0, r.v_ms), r.a_ms2, coeffs) * units::kSecondsPerHour;
  }
  return out;
}

EmissionValidation validate_emissions(const TrajectorySet& traj, const EmissionCoefficients& coeffs,
                                      const EmissionValidationOptions& options) {
  if (traj.records.empty()) throw DomainError("validate_emissions: empty trajectory set");
  const FluxModel& fm = options.flux;
  fm.validate();

  EmissionValidation out;
  out.e_true_g_h = ground_truth_emissions(traj, coeffs);
  const auto frames = traj.frames();

  const double length_km = (traj.b_m - traj.a_m) / units::kMetersPerKm;
  const auto ncell =
      std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(length_km * units::kMetersPerKm / options.dx_m)));
  const double duration = traj.frame_dt_s * static_cast<double>(frames.size() - 1);
  const RoadGrid grid = RoadGrid::uniform(length_km, ncell, traj.frame_dt_s, std::max(duration, traj.frame_dt_s));
  if (grid.dt_s > cfl_bound_s(grid.dx_km, fm) * (1.0 + 1e-12)) {
    throw ConfigError("emission_validation.dx_m", "frame step violates the CFL bound on this grid; use a coarser dx");
  }

  std::vector<double> xs, vs, centres(ncell);
  for (std::size_t i = 0; i < ncell; ++i) centres[i] = traj.a_m + grid.x_center_km(i) * units::kMetersPerKm;
  for (const auto& r : traj.records) {
    if (r.frame != frames.front()) break;
    xs.push_back(r.x_m);
    vs.push_back(r.v_ms);
  }
  const KdeFields kde = kde_fields(xs, vs, options.kde_h_m, traj.a_m, traj.b_m, centres, fm.v_max);
  std::vector<double> rho0(ncell);
  for (std::size_t i = 0; i < ncell; ++i) rho0[i] = std::clamp(kde.rho_vehkm[i], 0.0, fm.rho_max);
  auto w0 = initial_w_from_fields(rho0, kde.v_kmh, fm);
  TrafficState state = TrafficState::from_density_property(rho0, w0, 0.0);

  BoundaryPolicy bc;
  bc.left.kind = LeftBoundary::Kind::neumann;
  bc.right.kind = RightBoundary::Kind::free_outflow;

  const double cell_volume = 1.0;
  for (std::size_t n = 0; n < frames.size(); ++n) {
    TrafficState next = n + 1 < frames.size() ? step_2ctm(state, bc, fm, grid.dx_km, grid.dt_s) : state;
    KinematicsField kin;
    kin.v = velocities(state, fm);
    if (options.discrete_acceleration && n + 1 < frames.size()) {
      kin.a = acceleration_discrete(kin.v, velocities(next, fm), grid.dt_s, grid.dx_km);
    } else {
      kin.a = acceleration_analytic(state, fm, grid.dx_km);
    }
    out.t_s.push_back(static_cast<double>(frames[n]) * traj.frame_dt_s);
    out.e_mod_g_h.push_back(emission_field(state, kin, grid, 1.0, coeffs, cell_volume).total);
    state = std::move(next);
  }
  out.r = fit_correction_factor(out.e_true_g_h, out.e_mod_g_h);
  out.error = relative_l1_error(out.e_true_g_h, out.e_mod_g_h, out.r);
  return out;
}

}  // namespace roadozone
