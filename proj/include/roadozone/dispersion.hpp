#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "roadozone/banded.hpp"
#include "roadozone/chemistry.hpp"
#include "roadozone/units.hpp"

namespace roadozone {

/// Two-dimensional reaction-advection-diffusion setup.
///
/// Vertical mode: x runs along the road, y is height above the exhaust; the bottom row carries
/// Dirichlet NO/NO2 values. Horizontal mode: x along the road, y across it; the road is a line
/// source on `source_row`. The PDE is solved in metres and seconds.
struct DispersionConfig {
  enum class Mode { vertical, horizontal };
  enum class BcMode { verbatim, verbatim_seconds, rate };
  enum class SourceVolume { cell, road_box };

  Mode mode = Mode::vertical;
  double length_m = 500.0;  ///< extent along x
  double width_m = 0.5;     ///< extent along y (height in vertical mode)
  double dx_m = 5.0;
  double dy_m = 0.02;
  double dz_m = 0.02;
  double mu_km2_per_h = 1e-8;
  double wind_x_kmh = 0.0;
  double wind_y_kmh = 0.0;
  double dt_s = 0.0;  ///< 0 selects the traffic step
  double horizon_s = 14400.0;
  BcMode bc_mode = BcMode::verbatim;
  double t_ref_s = 1.0;  ///< Dirichlet multiplier in rate mode
  /// cell: emission over the dispersion cell dx dy dz; road_box: over the traffic cell cube, as in the box model.
  SourceVolume source_volume = SourceVolume::cell;
  double o2_background = 5.02e18;  ///< molecule/cm^3
  bool freeze_o2 = true;
  bool reaction = true;
  double road_offset_km = -1.0;  ///< start of the covered road segment; negative means "end of road"
  double source_height_m = 0.5;
  long source_row = -1;  ///< horizontal line-source row; negative means ny/2
  double probe_m = 1.0;  ///< height above ground (vertical) or distance from the road (horizontal)

  std::size_t nx() const;
  std::size_t ny() const;
  double cell_volume_km3() const;
  std::size_t line_source_row() const;
  /// Row index sampled by the probe. Throws DomainError if it falls outside the grid.
  std::size_t probe_row() const;
  void validate() const;
};

/// Concentration field values(i, j) with i along x and j along y. g/km^3.
struct Field2D {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  Field2D() = default;
  Field2D(std::size_t nx_, std::size_t ny_, double fill = 0.0) : nx(nx_), ny(ny_), values(nx_ * ny_, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[j * nx + i]; }
  double operator()(std::size_t i, std::size_t j) const { return values[j * nx + i]; }
  double row_mean(std::size_t j) const;
  double sum() const;
};

struct SpeciesFields {
  std::array<Field2D, kNumSpecies> species;
  double time_s = 0.0;

  Field2D& operator[](Species s) { return species[index(s)]; }
  const Field2D& operator[](Species s) const { return species[index(s)]; }
};

/// Spatial operator M = mu Lap_h - C . grad_upwind on a cell-centred grid with zero-flux faces.
/// Coefficients are per cell, in 1/s. The implicit system is I - dt M, with identity rows on
/// Dirichlet cells.
struct TransportOperator {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double dt_s = 0.0;
  std::vector<double> diag, west, east, south, north;
  std::vector<std::uint8_t> dirichlet;

  /// Unknown index; the shorter grid dimension varies fastest to keep the band narrow.
  std::size_t unknown(std::size_t i, std::size_t j) const { return nx <= ny ? j * nx + i : i * ny + j; }
  std::size_t bandwidth() const { return nx <= ny ? nx : ny; }

  BandedMatrix assemble() const;
  /// M u on the natural (i, j) layout, ignoring Dirichlet flags.
  std::vector<double> apply_spatial(const Field2D& u) const;
};

TransportOperator build_diffusion_operator(const DispersionConfig& cfg, double dt_s, bool dirichlet_bottom);

/// Conservatively resamples per-cell traffic emissions (g/h) onto the dispersion x-grid and divides by the
/// dispersion cell volume, giving g/(km^3 h). Throws DomainError when the extents do not overlap.
std::vector<double> couple_traffic_source(std::span<const double> traffic_rates_g_h, double traffic_dx_km,
                                          double road_offset_km, std::size_t nx, double dx_km,
                                          double cell_volume_km3);

class DispersionSolver {
 public:
  DispersionSolver(DispersionConfig cfg, double dt_s, RateConstants k, ChemIntegratorOptions chem = {},
                   UnitContext units = {});

  const DispersionConfig& config() const { return cfg_; }
  double dt_s() const { return dt_s_; }
  const TransportOperator& neumann_operator() const { return neumann_op_; }
  const TransportOperator& dirichlet_operator() const { return dirichlet_op_; }

  /// Zero fields with O2 at the background level (g/km^3).
  SpeciesFields initial_fields() const;

  /// One Lie-split step. `source` is the NOx concentration rate per x-cell, g/(km^3 h), sampled at the
  /// new time level. Errors carry `step_index`.
  void step_vertical(SpeciesFields& f, std::span<const double> source, long step_index = -1);
  void step_horizontal(SpeciesFields& f, std::span<const double> source, long step_index = -1);
  void step(SpeciesFields& f, std::span<const double> source, long step_index = -1);

  void reaction_substep(SpeciesFields& f, long step_index = -1);
  /// Implicit transport for one species. `dirichlet_values` (vertical bottom row) and `line_source`
  /// (horizontal, g/(km^3 h)) may be empty.
  void transport_species(Field2D& u, bool dirichlet_bottom, std::span<const double> dirichlet_values,
                         std::span<const double> line_source) const;

 private:
  DispersionConfig cfg_;
  double dt_s_;
  RateConstants k_;
  ChemIntegratorOptions chem_;
  UnitContext units_;
  TransportOperator neumann_op_;
  TransportOperator dirichlet_op_;
  BandedMatrix neumann_lu_;
  BandedMatrix dirichlet_lu_;
  std::vector<double> h_cache_;
};

struct DispersionRun {
  SpeciesFields final_fields;
  std::vector<double> probe_t_s;
  std::vector<double> probe_o3_mean;  ///< row mean of O3 at the probe row, g/km^3
};

/// Integrates from zero initial data to cfg.horizon_s. `source_at(t)` returns the per-x source at time t.
/// `on_snapshot` is called at t = 0 and every `snapshot_every_s` (0 disables).
DispersionRun run_dispersion(DispersionSolver& solver, const std::function<std::vector<double>(double)>& source_at,
                             double snapshot_every_s = 0.0,
                             const std::function<void(const SpeciesFields&)>& on_snapshot = {});

}  // namespace roadozone
