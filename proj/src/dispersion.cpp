#include "roadozone/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roadozone/error.hpp"

namespace roadozone {
namespace {

std::size_t cells_along(double extent, double step, const char* field) {
  if (!(extent > 0.0 && step > 0.0)) throw ConfigError(field, "extent and spacing must be positive");
  const double ratio = extent / step;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError(field, "grid spacing must divide the domain exactly");
  }
  return static_cast<std::size_t>(n);
}

}  // namespace

std::size_t DispersionConfig::nx() const { return cells_along(length_m, dx_m, "dispersion.dx_m"); }
std::size_t DispersionConfig::ny() const { return cells_along(width_m, dy_m, "dispersion.dy_m"); }

double DispersionConfig::cell_volume_km3() const {
  return dx_m * dy_m * dz_m / units::kM3PerKm3;
}

std::size_t DispersionConfig::line_source_row() const {
  const std::size_t n = ny();
  if (source_row < 0) return n / 2;
  if (static_cast<std::size_t>(source_row) >= n) throw ConfigError("dispersion.source_row", "outside the grid");
  return static_cast<std::size_t>(source_row);
}

std::size_t DispersionConfig::probe_row() const {
  const std::size_t n = ny();
  if (mode == Mode::vertical) {
    const double h = probe_m - source_height_m;
    if (h < -1e-12 || h > width_m * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "probe height " << probe_m << " m lies outside [" << source_height_m << ", "
         << source_height_m + width_m << "] m";
      throw DomainError(os.str());
    }
    const auto row = static_cast<std::size_t>(std::floor(std::max(0.0, h) / dy_m + 1e-9));
    return std::min(row, n - 1);
  }
  const long row = static_cast<long>(line_source_row()) + std::lround(probe_m / dy_m);
  if (row < 0 || row >= static_cast<long>(n)) {
    std::ostringstream os;
    os << "probe offset " << probe_m << " m maps to row " << row << ", outside [0, " << n << ")";
    throw DomainError(os.str());
  }
  return static_cast<std::size_t>(row);
}

void DispersionConfig::validate() const {
  const std::size_t x = nx();
  const std::size_t y = ny();
  if (x < 1 || y < 1) throw ConfigError("dispersion", "grid must have at least one cell per direction");
  if (!(dz_m > 0.0)) throw ConfigError("dispersion.dz_m", "must be positive");
  if (!(mu_km2_per_h > 0.0)) throw ConfigError("dispersion.mu_km2_per_h", "must be positive");
  if (dt_s < 0.0) throw ConfigError("dispersion.dt_s", "must be non-negative");
  if (!(horizon_s > 0.0)) throw ConfigError("dispersion.horizon_s", "must be positive");
  if (bc_mode == BcMode::rate && !(t_ref_s > 0.0)) throw ConfigError("dispersion.t_ref_s", "must be positive");
  if (!(o2_background >= 0.0)) throw ConfigError("dispersion.o2_background_molecules_cm3", "must be non-negative");
  if (mode == Mode::horizontal) line_source_row();
  try {
    probe_row();
  } catch (const DomainError& e) {
    throw ConfigError("dispersion.probe_m", e.what());
  }
}

double Field2D::row_mean(std::size_t j) const {
  if (j >= ny) throw DomainError("Field2D::row_mean: row outside the grid");
  double s = 0.0;
  for (std::size_t i = 0; i < nx; ++i) s += values[j * nx + i];
  return s / static_cast<double>(nx);
}

double Field2D::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

TransportOperator build_diffusion_operator(const DispersionConfig& cfg, double dt_s, bool dirichlet_bottom) {
  if (!(dt_s > 0.0)) throw DomainError("build_diffusion_operator: dt must be positive");
  TransportOperator op;
  op.nx = cfg.nx();
  op.ny = cfg.ny();
  op.dt_s = dt_s;
  const std::size_t n = op.nx * op.ny;
  op.diag.assign(n, 0.0);
  op.west.assign(n, 0.0);
  op.east.assign(n, 0.0);
  op.south.assign(n, 0.0);
  op.north.assign(n, 0.0);
  op.dirichlet.assign(n, 0);

  const double mu = units::km2h_to_m2s(cfg.mu_km2_per_h);
  const double ax = mu / (cfg.dx_m * cfg.dx_m);
  const double ay = mu / (cfg.dy_m * cfg.dy_m);
  const bool wind = cfg.mode == DispersionConfig::Mode::horizontal;
  const double cx = wind ? units::kmh_to_ms(cfg.wind_x_kmh) : 0.0;
  const double cy = wind ? units::kmh_to_ms(cfg.wind_y_kmh) : 0.0;

  for (std::size_t j = 0; j < op.ny; ++j) {
    for (std::size_t i = 0; i < op.nx; ++i) {
      const std::size_t c = j * op.nx + i;
      if (i > 0) op.west[c] += ax;
      if (i + 1 < op.nx) op.east[c] += ax;
      if (j > 0) op.south[c] += ay;
      if (j + 1 < op.ny) op.north[c] += ay;
      // Upwind differences; the zero-gradient ghost at the inflow face contributes nothing.
      if (cx > 0.0 && i > 0) op.west[c] += cx / cfg.dx_m;
      if (cx < 0.0 && i + 1 < op.nx) op.east[c] += -cx / cfg.dx_m;
      if (cy > 0.0 && j > 0) op.south[c] += cy / cfg.dy_m;
      if (cy < 0.0 && j + 1 < op.ny) op.north[c] += -cy / cfg.dy_m;
      op.diag[c] = -(op.west[c] + op.east[c] + op.south[c] + op.north[c]);
      if (dirichlet_bottom && j == 0) op.dirichlet[c] = 1;
    }
  }
  return op;
}

BandedMatrix TransportOperator::assemble() const {
  BandedMatrix a(nx * ny, bandwidth());
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t c = j * nx + i;
      const std::size_t r = unknown(i, j);
      if (dirichlet[c]) {
        a.at(r, r) = 1.0;
        continue;
      }
      a.at(r, r) = 1.0 - dt_s * diag[c];
      if (i > 0) a.at(r, unknown(i - 1, j)) = -dt_s * west[c];
      if (i + 1 < nx) a.at(r, unknown(i + 1, j)) = -dt_s * east[c];
      if (j > 0) a.at(r, unknown(i, j - 1)) = -dt_s * south[c];
      if (j + 1 < ny) a.at(r, unknown(i, j + 1)) = -dt_s * north[c];
    }
  }
  return a;
}

std::vector<double> TransportOperator::apply_spatial(const Field2D& u) const {
  if (u.nx != nx || u.ny != ny) throw DomainError("TransportOperator::apply_spatial: field shape mismatch");
  std::vector<double> out(nx * ny, 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t c = j * nx + i;
      double s = diag[c] * u(i, j);
      if (i > 0) s += west[c] * u(i - 1, j);
      if (i + 1 < nx) s += east[c] * u(i + 1, j);
      if (j > 0) s += south[c] * u(i, j - 1);
      if (j + 1 < ny) s += north[c] * u(i, j + 1);
      out[c] = s;
    }
  }
  return out;
}

std::vector<double> couple_traffic_source(std::span<const double> traffic_rates_g_h, double traffic_dx_km,
                                          double road_offset_km, std::size_t nx, double dx_km,
                                          double cell_volume_km3) {
  if (!(traffic_dx_km > 0.0 && dx_km > 0.0 && cell_volume_km3 > 0.0) || nx == 0) {
    throw DomainError("couple_traffic_source: spacings and volume must be positive");
  }
  const double road_len = traffic_dx_km * static_cast<double>(traffic_rates_g_h.size());
  const double seg_len = dx_km * static_cast<double>(nx);
  const double tol = 1e-9 * std::max(road_len, seg_len);
  if (road_offset_km < -tol || road_offset_km + seg_len > road_len + tol) {
    std::ostringstream os;
    os << "couple_traffic_source: dispersion extent [" << road_offset_km << ", " << road_offset_km + seg_len
       << "] km is not inside the road [0, " << road_len << "] km";
    throw DomainError(os.str());
  }

  std::vector<double> out(nx, 0.0);
  for (std::size_t k = 0; k < nx; ++k) {
    const double a = road_offset_km + dx_km * static_cast<double>(k);
    const double b = a + dx_km;
    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(a / traffic_dx_km)));
    double mass = 0.0;
    for (std::size_t i = first; i < traffic_rates_g_h.size(); ++i) {
      const double ca = traffic_dx_km * static_cast<double>(i);
      if (ca >= b) break;
      const double overlap = std::min(b, ca + traffic_dx_km) - std::max(a, ca);
      if (overlap > 0.0) mass += traffic_rates_g_h[i] * overlap / traffic_dx_km;
    }
    out[k] = mass / cell_volume_km3;
  }
  return out;
}

DispersionSolver::DispersionSolver(DispersionConfig cfg, double dt_s, RateConstants k, ChemIntegratorOptions chem,
                                   UnitContext units)
    : cfg_(std::move(cfg)), dt_s_(dt_s), k_(k), chem_(chem), units_(units) {
  cfg_.validate();
  if (!(dt_s_ > 0.0)) throw ConfigError("dispersion.dt_s", "effective PDE step must be positive");
  chem_.freeze_o2 = cfg_.freeze_o2;
  neumann_op_ = build_diffusion_operator(cfg_, dt_s_, false);
  neumann_lu_ = neumann_op_.assemble();
  neumann_lu_.factor();
  if (cfg_.mode == DispersionConfig::Mode::vertical) {
    dirichlet_op_ = build_diffusion_operator(cfg_, dt_s_, true);
    dirichlet_lu_ = dirichlet_op_.assemble();
    dirichlet_lu_.factor();
  }
  h_cache_.assign(cfg_.nx() * cfg_.ny(), 0.0);
}

SpeciesFields DispersionSolver::initial_fields() const {
  SpeciesFields f;
  const std::size_t nx = cfg_.nx();
  const std::size_t ny = cfg_.ny();
  for (auto& s : f.species) s = Field2D(nx, ny, 0.0);
  f[Species::O2] = Field2D(nx, ny, units_.to_g_per_km3(cfg_.o2_background, Species::O2));
  return f;
}

void DispersionSolver::reaction_substep(SpeciesFields& f, long step_index) {
  if (!cfg_.reaction) return;
  const std::size_t n = cfg_.nx() * cfg_.ny();
  for (std::size_t c = 0; c < n; ++c) {
    ChemVector psi;
    for (std::size_t s = 0; s < kNumSpecies; ++s) {
      psi[s] = units_.to_molecules_per_cm3(std::max(0.0, f.species[s].values[c]), static_cast<Species>(s));
    }
    if (psi[index(Species::O)] == 0.0 && psi[index(Species::O3)] == 0.0 && psi[index(Species::NO)] == 0.0 &&
        psi[index(Species::NO2)] == 0.0) {
      continue;
    }
    if (cfg_.freeze_o2) psi[index(Species::O2)] = cfg_.o2_background;
    try {
      react(psi, NoxSource{}, dt_s_, chem_, k_, h_cache_[c]);
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "reaction substep at step " << step_index << ", cell " << c << ": " << e.what();
      throw NumericalError(os.str());
    }
    for (std::size_t s = 0; s < kNumSpecies; ++s) {
      if (cfg_.freeze_o2 && s == index(Species::O2)) continue;
      f.species[s].values[c] = units_.to_g_per_km3(psi[s], static_cast<Species>(s));
    }
  }
}

void DispersionSolver::transport_species(Field2D& u, bool dirichlet_bottom, std::span<const double> dirichlet_values,
                                         std::span<const double> line_source) const {
  const TransportOperator& op = dirichlet_bottom ? dirichlet_op_ : neumann_op_;
  const BandedMatrix& lu = dirichlet_bottom ? dirichlet_lu_ : neumann_lu_;
  if (dirichlet_bottom && cfg_.mode != DispersionConfig::Mode::vertical) {
    throw DomainError("transport_species: Dirichlet bottom only exists in vertical mode");
  }
  std::vector<double> b(op.nx * op.ny);
  for (std::size_t j = 0; j < op.ny; ++j) {
    for (std::size_t i = 0; i < op.nx; ++i) b[op.unknown(i, j)] = u(i, j);
  }
  if (dirichlet_bottom) {
    if (dirichlet_values.size() != op.nx) throw DomainError("transport_species: Dirichlet row has wrong length");
    for (std::size_t i = 0; i < op.nx; ++i) b[op.unknown(i, 0)] = dirichlet_values[i];
  }
  if (!line_source.empty()) {
    if (line_source.size() != op.nx) throw DomainError("transport_species: line source has wrong length");
    const std::size_t row = cfg_.line_source_row();
    const double dt_h = units::hours(dt_s_);
    for (std::size_t i = 0; i < op.nx; ++i) b[op.unknown(i, row)] += dt_h * line_source[i];
  }
  lu.solve(b);
  for (std::size_t j = 0; j < op.ny; ++j) {
    for (std::size_t i = 0; i < op.nx; ++i) {
      const double v = b[op.unknown(i, j)];
      if (!std::isfinite(v)) throw NumericalError("transport_species: non-finite solution");
      u(i, j) = std::max(0.0, v);
    }
  }
}

void DispersionSolver::step_vertical(SpeciesFields& f, std::span<const double> source, long step_index) {
  const std::size_t nx = cfg_.nx();
  if (source.size() != nx) throw DomainError("step_vertical: source length must equal nx");
  reaction_substep(f, step_index);

  // Source is in g/km^3/h. verbatim_seconds multiplies it by the bare step length in seconds.
  double mult_h = units::hours(cfg_.t_ref_s);
  if (cfg_.bc_mode == DispersionConfig::BcMode::verbatim) mult_h = units::hours(dt_s_);
  if (cfg_.bc_mode == DispersionConfig::BcMode::verbatim_seconds) mult_h = dt_s_;
  std::vector<double> no(nx), no2(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    no[i] = (1.0 - k_.p) * source[i] * mult_h;
    no2[i] = k_.p * source[i] * mult_h;
  }
  try {
    for (std::size_t s = 0; s < kNumSpecies; ++s) {
      const auto sp = static_cast<Species>(s);
      if (sp == Species::O2 && cfg_.freeze_o2) continue;
      if (sp == Species::NO) {
        transport_species(f.species[s], true, no, {});
      } else if (sp == Species::NO2) {
        transport_species(f.species[s], true, no2, {});
      } else {
        transport_species(f.species[s], false, {}, {});
      }
    }
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "transport at step " << step_index << ": " << e.what();
    throw NumericalError(os.str());
  }
  f.time_s += dt_s_;
}

void DispersionSolver::step_horizontal(SpeciesFields& f, std::span<const double> source, long step_index) {
  const std::size_t nx = cfg_.nx();
  if (source.size() != nx) throw DomainError("step_horizontal: source length must equal nx");
  reaction_substep(f, step_index);

  std::vector<double> no(nx), no2(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    no[i] = (1.0 - k_.p) * source[i];
    no2[i] = k_.p * source[i];
  }
  try {
    for (std::size_t s = 0; s < kNumSpecies; ++s) {
      const auto sp = static_cast<Species>(s);
      if (sp == Species::O2 && cfg_.freeze_o2) continue;
      if (sp == Species::NO) {
        transport_species(f.species[s], false, {}, no);
      } else if (sp == Species::NO2) {
        transport_species(f.species[s], false, {}, no2);
      } else {
        transport_species(f.species[s], false, {}, {});
      }
    }
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "transport at step " << step_index << ": " << e.what();
    throw NumericalError(os.str());
  }
  f.time_s += dt_s_;
}

void DispersionSolver::step(SpeciesFields& f, std::span<const double> source, long step_index) {
  if (cfg_.mode == DispersionConfig::Mode::vertical) {
    step_vertical(f, source, step_index);
  } else {
    step_horizontal(f, source, step_index);
  }
}

DispersionRun run_dispersion(DispersionSolver& solver, const std::function<std::vector<double>(double)>& source_at,
                             double snapshot_every_s, const std::function<void(const SpeciesFields&)>& on_snapshot) {
  const auto& cfg = solver.config();
  const double dt = solver.dt_s();
  const auto steps = static_cast<long>(std::llround(cfg.horizon_s / dt));
  const std::size_t probe = cfg.probe_row();

  DispersionRun run;
  SpeciesFields f = solver.initial_fields();
  run.probe_t_s.push_back(0.0);
  run.probe_o3_mean.push_back(f[Species::O3].row_mean(probe));
  if (on_snapshot) on_snapshot(f);
  double next_snapshot = snapshot_every_s;

  for (long n = 0; n < steps; ++n) {
    const double t_new = static_cast<double>(n + 1) * dt;
    const std::vector<double> src = source_at(t_new);
    solver.step(f, src, n + 1);
    f.time_s = t_new;
    run.probe_t_s.push_back(t_new);
    run.probe_o3_mean.push_back(f[Species::O3].row_mean(probe));
    const bool due = snapshot_every_s > 0.0 && t_new >= next_snapshot - 1e-9;
    if (on_snapshot && (due || n + 1 == steps)) {
      on_snapshot(f);
      while (snapshot_every_s > 0.0 && next_snapshot <= t_new + 1e-9) next_snapshot += snapshot_every_s;
    }
  }
  run.final_fields = std::move(f);
  return run;
}

}  // namespace roadozone
