#pragma once

#include <array>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "roadozone/config.hpp"
#include "roadozone/dispersion.hpp"
#include "roadozone/emission.hpp"

namespace roadozone {

inline constexpr std::array<const char*, 4> kStages = {"traffic", "emissions", "chemistry", "dispersion"};

struct RunOptions {
  std::string out_dir;               ///< empty keeps everything in memory
  std::set<std::string> disabled;    ///< stage names; disabling a stage also disables its dependents
  double snapshot_every_s = -1.0;    ///< negative uses the config value
  std::optional<bool> plots;         ///< overrides output.plots
};

struct RunArtifacts {
  std::string out_dir;
  std::string traffic;
  std::string emissions_total;
  std::string emissions_cells;
  std::string chemistry_cells;
  std::string chemistry_totals;
  std::string dispersion_dir;
  std::string dispersion_probe;
  std::string metadata;
  std::vector<std::string> plots;

  /// Every non-empty path above.
  std::vector<std::string> files() const;
};

/// Emission totals and per-cell rates on the traffic time grid.
struct EmissionSeries {
  std::vector<double> t_s;
  std::vector<double> total_g_h;
  std::vector<std::vector<double>> cell_rate_g_h;  ///< [time][cell]
};

struct PipelineResult {
  ValidatedConfig config;
  RunArtifacts artifacts;
  std::vector<std::string> stages_run;
  EmissionSeries emissions;
  std::vector<double> chem_t_s;
  std::vector<ChemVector> chem_totals_g_km3;  ///< road totals per time
  std::optional<DispersionRun> dispersion;
  double dispersion_dt_s = 0.0;
};

/// Callback receiving each traffic time level with its kinematics and emissions.
using TrafficObserver =
    std::function<void(std::size_t n, const TrafficState&, const KinematicsField&, const EmissionField&)>;

/// Traffic and emission stages: one sample per time level t^0..t^N on the (possibly clamped) grid.
EmissionSeries run_traffic_emissions(const ScenarioConfig& cfg, const TrafficObserver& observe = {});

/// Runs the enabled stages in order and, when `options.out_dir` is set, writes CSVs, snapshots, plots and a
/// metadata sidecar. Stage failures are rethrown as StageError tagged with stage and step.
PipelineResult run_pipeline(const ScenarioConfig& cfg, const RunOptions& options = {});

/// Mean of `series` over the last three complete light cycles, or over the last `fallback_window_s`
/// seconds when there is no light.
double asymptotic_mean(std::span<const double> t_s, std::span<const double> series,
                       const std::optional<TrafficLightPolicy>& light, double horizon_s,
                       double fallback_window_s = 900.0);

/// Largest relative L1 gap between consecutive full periods starting at `start_s`, comparing each cycle with
/// the next by linear interpolation.
double periodicity_gap(std::span<const double> t_s, std::span<const double> series, double period_s, double start_s);

struct SweepRow {
  double cycle_s = 0.0;
  double red_s = 0.0;
  double ratio = 0.0;
  double peak_g_h = 0.0;
  double asymptotic_mean_g_h = 0.0;
  ChemVector final_totals_g_km3{};
  ChemVector variation_g_km3{};  ///< final totals minus the no-light baseline
  bool has_chemistry = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double baseline_peak_g_h = 0.0;
  double baseline_asymptotic_mean_g_h = 0.0;
  ChemVector baseline_final_totals_g_km3{};
  std::vector<EmissionSeries> series;  ///< one per row, same order
};

/// One run per cycle length at fixed green/red ratio r, plus a no-light baseline.
SweepTable sweep_fixed_ratio(double r, const std::vector<double>& cycle_list_s, const ScenarioConfig& base);
/// One run per ratio at fixed cycle length.
SweepTable sweep_fixed_cycle(double cycle_s, const std::vector<double>& ratio_list, const ScenarioConfig& base);

void write_sweep_csv(const std::string& path, const SweepTable& table);

struct DispersionComparison {
  double m1 = 0.0;  ///< no-light final probe-row mean O3, g/km^3
  double m2 = 0.0;  ///< light final probe-row mean O3, g/km^3
  double increase = 0.0;  ///< (m2 - m1) / m1
  std::size_t probe_row = 0;
};

/// Runs both scenarios through dispersion and compares the final ozone row means at the probe.
/// `probe_m` overrides the configured probe. Throws DomainError when the probe is outside the grid.
DispersionComparison compare_dispersion(const ScenarioConfig& cfg_nolight, const ScenarioConfig& cfg_light,
                                        std::optional<double> probe_m = std::nullopt,
                                        const RunOptions& options = {});

/// Text form of a double used in every CSV artifact.
std::string format_number(double v);

}  // namespace roadozone
