#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roadozone/error.hpp"
#include "roadozone/log.hpp"
#include "roadozone/pipeline.hpp"
#include "roadozone/trajectory.hpp"
#include "roadozone/version.hpp"

namespace fs = std::filesystem;
using namespace roadozone;

namespace {

struct CommonFlags {
  std::string out_dir;
  double snapshot_every = -1.0;
  std::vector<std::string> disabled;
  bool no_plots = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--out-dir", f.out_dir, "Directory for result artifacts");
  cmd->add_option("--snapshot-every", f.snapshot_every, "Dispersion snapshot interval in seconds (0 = final only)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--disable", f.disabled, "Stage to skip (traffic, emissions, chemistry, dispersion); repeatable");
  cmd->add_flag("--no-plots", f.no_plots, "Skip SVG plots");
}

RunOptions to_options(const CommonFlags& f) {
  RunOptions o;
  o.out_dir = f.out_dir;
  o.disabled.insert(f.disabled.begin(), f.disabled.end());
  o.snapshot_every_s = f.snapshot_every;
  if (f.no_plots) o.plots = false;
  return o;
}

ScenarioConfig load(const std::string& path) {
  try {
    return load_config(path);
  } catch (const ConfigError& e) {
    throw StageError("config", -1, e.what());
  }
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void write_series_csv(const std::string& path, const SweepTable& table) {
  std::ofstream out(path, std::ios::binary);
  out << "t_s";
  for (const auto& r : table.rows) out << ",tc" << format_number(r.cycle_s) << "_tr" << format_number(r.red_s);
  out << '\n';
  if (table.series.empty()) return;
  const auto& t = table.series.front().t_s;
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << format_number(t[k]);
    for (const auto& s : table.series) out << ',' << (k < s.total_g_h.size() ? format_number(s.total_g_h[k]) : "");
    out << '\n';
  }
}

void print_sweep(const SweepTable& table) {
  std::printf("%10s %10s %8s %14s %14s %14s\n", "tc_s", "tr_s", "r", "peak_g/h", "asym_g/h", "dO3_g/km3");
  std::printf("%10s %10s %8s %14.6g %14.6g %14s\n", "none", "-", "-", table.baseline_peak_g_h,
              table.baseline_asymptotic_mean_g_h, "0");
  for (const auto& r : table.rows) {
    std::printf("%10.6g %10.6g %8.4g %14.6g %14.6g %14.6g\n", r.cycle_s, r.red_s, r.ratio, r.peak_g_h,
                r.asymptotic_mean_g_h, r.variation_g_km3[index(Species::O3)]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Road traffic emission, ozone chemistry and dispersion simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  // simulate
  CommonFlags sim_flags;
  std::string sim_config;
  auto* sim = app.add_subcommand("simulate", "Run the pipeline for one scenario");
  sim->add_option("config", sim_config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  add_common(sim, sim_flags);

  // sweep-tc
  CommonFlags stc_flags;
  std::string stc_config;
  double stc_ratio = 1.5;
  std::vector<double> stc_cycles_min{7.5, 5.0, 2.5};
  auto* stc = app.add_subcommand("sweep-tc", "Vary the light cycle at a fixed green/red ratio");
  stc->add_option("config", stc_config, "Base scenario JSON")->required()->check(CLI::ExistingFile);
  stc->add_option("--ratio", stc_ratio, "Green/red ratio r")->capture_default_str();
  stc->add_option("--cycles-min", stc_cycles_min, "Cycle lengths in minutes")->delimiter(',')->capture_default_str();
  stc->add_option("--out-dir", stc_flags.out_dir, "Directory for the sweep table");

  // sweep-r
  CommonFlags sr_flags;
  std::string sr_config;
  double sr_cycle_min = 5.0;
  std::vector<double> sr_ratios{4.0, 1.5, 2.0 / 3.0};
  auto* sr = app.add_subcommand("sweep-r", "Vary the green/red ratio at a fixed cycle");
  sr->add_option("config", sr_config, "Base scenario JSON")->required()->check(CLI::ExistingFile);
  sr->add_option("--cycle-min", sr_cycle_min, "Cycle length in minutes")->capture_default_str();
  sr->add_option("--ratios", sr_ratios, "Green/red ratios")->delimiter(',')->capture_default_str();
  sr->add_option("--out-dir", sr_flags.out_dir, "Directory for the sweep table");

  // compare-dispersion
  CommonFlags cd_flags;
  std::string cd_nolight, cd_light;
  double cd_probe = -1.0;
  auto* cd = app.add_subcommand("compare-dispersion", "Compare final probe-row ozone with and without the light");
  cd->add_option("nolight", cd_nolight, "Scenario without light")->required()->check(CLI::ExistingFile);
  cd->add_option("light", cd_light, "Scenario with light")->required()->check(CLI::ExistingFile);
  cd->add_option("--probe-m", cd_probe, "Probe height (vertical) or offset from the road (horizontal), m");
  add_common(cd, cd_flags);

  // calibrate
  std::string cal_traj, cal_out;
  int cal_lanes = 0;
  double cal_veh_len_m = 7.5;
  double cal_cell_m = 30.0, cal_cell_s = 30.0;
  double cal_frame_dt = 0.1;
  auto* cal = app.add_subcommand("calibrate", "Fit the flux envelope to trajectory data");
  cal->add_option("trajectories", cal_traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  cal->add_option("--lanes", cal_lanes, "Lane count (default: from data)");
  cal->add_option("--vehicle-length-m", cal_veh_len_m, "Effective vehicle length")->capture_default_str();
  cal->add_option("--cell-m", cal_cell_m, "Aggregation cell length")->capture_default_str();
  cal->add_option("--cell-s", cal_cell_s, "Aggregation time window")->capture_default_str();
  cal->add_option("--frame-dt", cal_frame_dt, "Seconds per frame")->capture_default_str();
  cal->add_option("--out-dir", cal_out, "Directory for calibration.json");

  // validate-emissions
  std::string ve_traj, ve_out, ve_table = "petrol_car_nox";
  double ve_frame_dt = 0.1;
  bool ve_discrete = false;
  auto* ve = app.add_subcommand("validate-emissions", "Compare modelled and trajectory-based road emissions");
  ve->add_option("trajectories", ve_traj, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  ve->add_option("--table", ve_table, "Emission coefficient table")->capture_default_str();
  ve->add_option("--frame-dt", ve_frame_dt, "Seconds per frame")->capture_default_str();
  ve->add_flag("--discrete-acceleration", ve_discrete, "Use the time-difference acceleration");
  ve->add_option("--out-dir", ve_out, "Directory for the series CSV");

  CLI11_PARSE(app, argc, argv);
  if (verbose) log::set_threshold(log::Level::info);

  try {
    if (sim->parsed()) {
      const PipelineResult r = run_pipeline(load(sim_config), to_options(sim_flags));
      std::cout << "stages:";
      for (const auto& s : r.stages_run) std::cout << ' ' << s;
      std::cout << '\n';
      if (r.config.dt_clamped) std::cout << "dt clamped to " << format_number(r.config.cfg.grid.dt_s) << " s\n";
      if (r.dispersion) {
        std::cout << "final probe-row O3 mean: " << format_number(r.dispersion->probe_o3_mean.back()) << " g/km^3\n";
      }
      for (const auto& f : r.artifacts.files()) std::cout << "wrote " << f << '\n';
    } else if (stc->parsed() || sr->parsed()) {
      const bool by_tc = stc->parsed();
      const ScenarioConfig base = load(by_tc ? stc_config : sr_config);
      SweepTable table;
      std::vector<double> secs;
      if (by_tc) {
        for (double m : stc_cycles_min) secs.push_back(m * 60.0);
        table = sweep_fixed_ratio(stc_ratio, secs, base);
      } else {
        table = sweep_fixed_cycle(sr_cycle_min * 60.0, sr_ratios, base);
      }
      print_sweep(table);
      const std::string& dir = by_tc ? stc_flags.out_dir : sr_flags.out_dir;
      if (!dir.empty()) {
        const std::string stem = by_tc ? "sweep_tc" : "sweep_r";
        write_sweep_csv(out_path(dir, stem + ".csv"), table);
        write_series_csv(out_path(dir, stem + "_emissions.csv"), table);
      }
    } else if (cd->parsed()) {
      std::optional<double> probe;
      if (cd_probe >= 0.0) probe = cd_probe;
      const DispersionComparison c = compare_dispersion(load(cd_nolight), load(cd_light), probe, to_options(cd_flags));
      std::printf("probe row %zu\nM1 = %.6g g/km^3\nM2 = %.6g g/km^3\nincrease = %.2f%%\n", c.probe_row, c.m1, c.m2,
                  100.0 * c.increase);
    } else if (cal->parsed()) {
      TrajectorySet traj = read_trajectory_file(cal_traj, cal_frame_dt);
      const int lanes = cal_lanes > 0 ? cal_lanes : traj.lane_count;
      const AggregateGrid cells = aggregate_cells(traj, cal_cell_m, cal_cell_s);
      const CalibrationResult c = calibrate_flux_model(cells, lanes, cal_veh_len_m / 1000.0);
      nlohmann::json j;
      j["v_max_kmh"] = c.model.v_max;
      j["rho_f_vehkm"] = c.model.rho_f;
      j["rho_max_vehkm"] = c.model.rho_max;
      j["w_l_vehh"] = c.model.w_l;
      j["w_r_vehh"] = c.model.w_r;
      j["coverage"] = c.coverage;
      j["envelope_area"] = c.envelope_area;
      j["points"] = c.points;
      j["feasible"] = c.feasible;
      std::cout << j.dump(2) << '\n';
      if (!cal_out.empty()) std::ofstream(out_path(cal_out, "calibration.json"), std::ios::binary) << j.dump(2) << '\n';
    } else if (ve->parsed()) {
      const TrajectorySet traj = read_trajectory_file(ve_traj, ve_frame_dt);
      EmissionValidationOptions opts;
      opts.discrete_acceleration = ve_discrete;
      const EmissionValidation v = validate_emissions(traj, EmissionCoefficients::named(ve_table), opts);
      std::printf("r = %.6g\nrelative L1 error = %.6g\n", v.r, v.error);
      if (!ve_out.empty()) {
        std::ofstream out(out_path(ve_out, "emission_validation.csv"), std::ios::binary);
        out << "t_s,e_true_g_per_h,e_model_g_per_h\n";
        for (std::size_t k = 0; k < v.t_s.size(); ++k) {
          out << format_number(v.t_s[k]) << ',' << format_number(v.e_true_g_h[k]) << ','
              << format_number(v.e_mod_g_h[k]) << '\n';
        }
      }
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: [config] " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
