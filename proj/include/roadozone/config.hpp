#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roadozone/cgarz.hpp"
#include "roadozone/chemistry.hpp"
#include "roadozone/dispersion.hpp"
#include "roadozone/flux_model.hpp"
#include "roadozone/grid.hpp"
#include "roadozone/units.hpp"

namespace roadozone {

/// Constant value on [from_km, to_km).
struct Segment {
  double from_km = 0.0;
  double to_km = 0.0;
  double value = 0.0;
};

/// Samples piecewise-constant segments at the cell centres of `grid`. The last segment is closed on the right.
/// Throws ConfigError (with `field`) if a centre is not covered.
std::vector<double> sample_segments(const std::vector<Segment>& segments, const RoadGrid& grid, const std::string& field);

struct TrafficLightPolicy {
  double cycle_s = 300.0;
  double red_s = 120.0;
  double phase_offset_s = 0.0;

  double green_s() const { return cycle_s - red_s; }
  double ratio() const { return green_s() / red_s; }
  /// Green for the first t_g seconds of every cycle (shifted by the offset).
  bool is_green(double t_s) const;
  void validate() const;

  /// Light with cycle tc and green/red ratio r.
  static TrafficLightPolicy from_ratio(double cycle_s, double r, double phase_offset_s = 0.0);
};

enum class RightBc { neumann, free_outflow, closed, traffic_light };

struct EmissionSettings {
  enum class Acceleration { analytic, discrete };
  std::string table = "petrol_car_nox";
  double lanes = 1.0;
  Acceleration acceleration = Acceleration::analytic;
};

struct ChemistrySettings {
  bool enabled = true;
  RateConstants k;
  double o2_molecules_cm3 = 5.02e18;
  double rtol = 1e-6;
  double atol_molecules_cm3 = 1.0;
  double initial_nox_window_s = 1.0;
};

struct OutputSettings {
  std::string dir = "out";
  double snapshot_every_s = 600.0;
  double traffic_dump_every_s = 10.0;
  bool plots = true;
};

struct ScenarioConfig {
  std::string name = "scenario";
  RoadGrid grid;
  FluxModel flux;
  std::vector<Segment> initial_rho{{0.0, 3.0, 52.0}};
  std::vector<Segment> initial_w{{0.0, 2.0, 2327.5}, {2.0, 3.0, 1140.0}};
  LeftBoundary::Kind left = LeftBoundary::Kind::dirichlet_density;
  double left_rho_vehkm = 52.0;
  RightBc right = RightBc::free_outflow;
  std::optional<TrafficLightPolicy> light;
  EmissionSettings emission;
  ChemistrySettings chemistry;
  std::optional<DispersionConfig> dispersion;
  OutputSettings output;
  UnitContext units;

  /// Boundary policy in force at time t (the light toggles the right boundary).
  BoundaryPolicy boundary_at(double t_s) const;
};

struct ValidatedConfig {
  ScenarioConfig cfg;
  double requested_dt_s = 0.0;
  bool dt_clamped = false;
  std::vector<std::string> warnings;
};

/// Checks every invariant, reporting the first violation as ConfigError with a dotted field path.
/// A traffic step above the CFL bound is clamped to it and recorded as a warning.
ValidatedConfig validate_config(ScenarioConfig cfg);

ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);
/// Canonical JSON text (two-space indent, sorted keys).
std::string serialize_config(const ScenarioConfig& cfg);
/// Re-indents JSON text into the same canonical form used by serialize_config.
std::string normalize_json(const std::string& json_text);

std::string to_string(RightBc bc);
std::string to_string(LeftBoundary::Kind kind);

}  // namespace roadozone
