#include "roadozone/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "roadozone/emission.hpp"
#include "roadozone/error.hpp"
#include "roadozone/log.hpp"
#include "roadozone/svg_plot.hpp"
#include "roadozone/version.hpp"

namespace roadozone {

namespace fs = std::filesystem;

namespace {

class CsvFile {
 public:
  CsvFile() = default;
  void open(const std::string& path, const std::string& header) {
    out_.open(path, std::ios::binary);
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
    out_ << header << '\n';
  }
  bool is_open() const { return out_.is_open(); }
  template <class... T>
  void row(const T&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }
  std::ofstream& stream() { return out_; }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  std::ofstream out_;
};

/// Emits true at n == 0, at the last level and whenever t crosses the next multiple of `every`.
class Cadence {
 public:
  explicit Cadence(double every) : every_(every), next_(every) {}
  bool due(std::size_t n, double t, bool last) {
    if (n == 0 || last) return true;
    if (every_ <= 0.0) return false;
    if (t >= next_ - 1e-9) {
      while (next_ <= t + 1e-9) next_ += every_;
      return true;
    }
    return false;
  }

 private:
  double every_;
  double next_;
};

bool stage_enabled(const std::set<std::string>& disabled, const std::string& stage) {
  // traffic -> emissions -> {chemistry, dispersion}
  if (disabled.count("traffic")) return false;
  if (stage == "traffic") return true;
  if (disabled.count("emissions")) return false;
  if (stage == "emissions") return true;
  return !disabled.count(stage);
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> RunArtifacts::files() const {
  std::vector<std::string> out;
  for (const auto* p : {&traffic, &emissions_total, &emissions_cells, &chemistry_cells, &chemistry_totals,
                        &dispersion_probe, &metadata}) {
    if (!p->empty()) out.push_back(*p);
  }
  for (const auto& p : plots) out.push_back(p);
  return out;
}

EmissionSeries run_traffic_emissions(const ScenarioConfig& cfg, const TrafficObserver& observe) {
  const RoadGrid& grid = cfg.grid;
  const auto rho0 = sample_segments(cfg.initial_rho, grid, "initial.rho_vehkm");
  const auto w0 = sample_segments(cfg.initial_w, grid, "initial.w_vehh");
  TrafficState cur = TrafficState::from_density_property(rho0, w0, 0.0);
  const EmissionCoefficients coeffs = EmissionCoefficients::named(cfg.emission.table);
  const double volume = grid.dx_km * grid.dx_km * grid.dx_km;
  const bool discrete = cfg.emission.acceleration == EmissionSettings::Acceleration::discrete;
  const std::size_t steps = grid.num_steps();

  EmissionSeries out;
  out.t_s.reserve(steps + 1);
  out.total_g_h.reserve(steps + 1);
  out.cell_rate_g_h.reserve(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    TrafficState next;
    double dt_n = 0.0;
    try {
      if (n < steps) {
        dt_n = std::min(grid.dt_s, grid.horizon_s - cur.time_s);
        if (n + 1 == steps) dt_n = grid.horizon_s - cur.time_s;
        next = step_2ctm(cur, cfg.boundary_at(cur.time_s), cfg.flux, grid.dx_km, dt_n);
      }
    } catch (const std::exception& e) {
      throw StageError("traffic", static_cast<long>(n + 1), e.what());
    }
    KinematicsField kin;
    EmissionField field;
    try {
      kin.v = velocities(cur, cfg.flux);
      if (discrete && n < steps) {
        kin.a = acceleration_discrete(kin.v, velocities(next, cfg.flux), dt_n, grid.dx_km);
      } else {
        kin.a = acceleration_analytic(cur, cfg.flux, grid.dx_km);
      }
      field = emission_field(cur, kin, grid, cfg.emission.lanes, coeffs, volume);
    } catch (const std::exception& e) {
      throw StageError("emissions", static_cast<long>(n), e.what());
    }
    out.t_s.push_back(cur.time_s);
    out.total_g_h.push_back(field.total);
    out.cell_rate_g_h.push_back(field.rate_per_cell);
    if (observe) observe(n, cur, kin, field);
    if (n < steps) cur = std::move(next);
  }
  return out;
}

PipelineResult run_pipeline(const ScenarioConfig& raw_cfg, const RunOptions& options) {
  PipelineResult result;
  try {
    result.config = validate_config(raw_cfg);
  } catch (const ConfigError& e) {
    throw StageError("config", -1, e.what());
  }
  ScenarioConfig& cfg = result.config.cfg;
  if (!options.out_dir.empty()) cfg.output.dir = options.out_dir;
  for (const auto& d : options.disabled) {
    if (std::find_if(kStages.begin(), kStages.end(), [&](const char* s) { return d == s; }) == kStages.end()) {
      throw StageError("config", -1, "unknown stage '" + d + "' in --disable");
    }
  }
  const bool write = !options.out_dir.empty();
  const bool plots = write && options.plots.value_or(cfg.output.plots);
  const double snapshot_every = options.snapshot_every_s >= 0.0 ? options.snapshot_every_s : cfg.output.snapshot_every_s;

  const bool run_traffic = stage_enabled(options.disabled, "traffic");
  const bool run_emissions = stage_enabled(options.disabled, "emissions");
  const bool run_chemistry = cfg.chemistry.enabled && stage_enabled(options.disabled, "chemistry");
  const bool do_dispersion = cfg.dispersion.has_value() && stage_enabled(options.disabled, "dispersion");

  fs::path dir(options.out_dir);
  RunArtifacts& art = result.artifacts;
  if (write) {
    fs::create_directories(dir);
    art.out_dir = dir.string();
  }

  // Stage 1-2: traffic and emissions.
  std::vector<double> dump_t;
  std::vector<std::vector<double>> dump_rho;
  if (run_traffic) {
    CsvFile traffic_csv, cells_csv, total_csv;
    if (write) {
      art.traffic = join(dir, "traffic.csv");
      traffic_csv.open(art.traffic, "t_s,cell_index,x_km,rho_vehkm,w,v_kmh,a_ms2");
      if (run_emissions) {
        art.emissions_cells = join(dir, "emissions_cells.csv");
        art.emissions_total = join(dir, "emissions_total.csv");
        cells_csv.open(art.emissions_cells, "t_s,cell_index,rate_g_per_h,source_g_per_km3_h");
        total_csv.open(art.emissions_total, "t_s,total_g_per_h");
      }
    }
    Cadence cadence(cfg.output.traffic_dump_every_s);
    const std::size_t steps = cfg.grid.num_steps();
    auto observer = [&](std::size_t n, const TrafficState& s, const KinematicsField& kin, const EmissionField& e) {
      if (total_csv.is_open()) total_csv.row(s.time_s, e.total);
      if (!cadence.due(n, s.time_s, n == steps)) return;
      dump_t.push_back(s.time_s);
      dump_rho.push_back(s.rho);
      if (traffic_csv.is_open()) {
        for (std::size_t i = 0; i < s.size(); ++i) {
          traffic_csv.row(s.time_s, i, cfg.grid.x_center_km(i), s.rho[i], s.w[i], kin.v[i], kin.a[i]);
        }
      }
      if (cells_csv.is_open()) {
        for (std::size_t i = 0; i < s.size(); ++i) {
          cells_csv.row(s.time_s, i, e.rate_per_cell[i], e.source_concentration_rate[i]);
        }
      }
    };
    result.emissions = run_traffic_emissions(cfg, observer);
    result.stages_run.emplace_back("traffic");
    if (run_emissions) result.stages_run.emplace_back("emissions");
  }

  // Stage 3: roadside chemistry.
  if (run_chemistry && run_emissions) {
    const auto& em = result.emissions;
    const double volume = std::pow(cfg.grid.dx_km, 3);
    RoadsideChemistryInput input;
    input.times_s = em.t_s;
    input.store_cells = false;
    input.source_g_km3_h.resize(em.t_s.size());
    for (std::size_t n = 0; n < em.t_s.size(); ++n) {
      input.source_g_km3_h[n].resize(cfg.grid.num_cells);
      for (std::size_t c = 0; c < cfg.grid.num_cells; ++c) input.source_g_km3_h[n][c] = em.cell_rate_g_h[n][c] / volume;
    }
    for (std::size_t c = 0; c < cfg.grid.num_cells; ++c) {
      input.psi0.push_back(initial_roadside_state(em.cell_rate_g_h[0][c], volume, cfg.chemistry.o2_molecules_cm3,
                                                  cfg.chemistry.initial_nox_window_s, cfg.chemistry.k.p, cfg.units));
    }
    ChemIntegratorOptions opts;
    opts.rtol = cfg.chemistry.rtol;
    opts.atol = cfg.chemistry.atol_molecules_cm3;

    CsvFile cells_csv, totals_csv;
    if (write) {
      art.chemistry_cells = join(dir, "chemistry_cells.csv");
      art.chemistry_totals = join(dir, "chemistry_totals.csv");
      cells_csv.open(art.chemistry_cells, "t_s,cell_index,O,O2,O3,NO,NO2");
      totals_csv.open(art.chemistry_totals, "t_s,O,O2,O3,NO,NO2");
    }
    Cadence cadence(cfg.output.traffic_dump_every_s);
    auto observer = [&](std::size_t n, std::span<const ChemVector> cells) {
      if (!cells_csv.is_open()) return;
      if (!cadence.due(n, input.times_s[n], n + 1 == input.times_s.size())) return;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& p = cells[c];
        cells_csv.row(input.times_s[n], c, p[0], p[1], p[2], p[3], p[4]);
      }
    };
    RoadsideChemistry chem;
    try {
      chem = run_roadside_chemistry(input, cfg.chemistry.k, opts, cfg.units, observer);
    } catch (const std::exception& e) {
      throw StageError("chemistry", -1, e.what());
    }
    result.chem_t_s = chem.times_s;
    result.chem_totals_g_km3 = chem.totals_g_km3;
    if (totals_csv.is_open()) {
      for (std::size_t n = 0; n < chem.times_s.size(); ++n) {
        const auto& p = chem.totals_g_km3[n];
        totals_csv.row(chem.times_s[n], p[0], p[1], p[2], p[3], p[4]);
      }
    }
    result.stages_run.emplace_back("chemistry");
  }

  // Stage 4: dispersion.
  if (do_dispersion && run_emissions) {
    const DispersionConfig& d = *cfg.dispersion;
    const double dt_req = d.dt_s > 0.0 ? d.dt_s : cfg.grid.dt_s;
    const double steps = std::ceil(d.horizon_s / dt_req - 1e-9);
    const double dt = d.horizon_s / steps;
    result.dispersion_dt_s = dt;
    const double seg_km = d.length_m / units::kMetersPerKm;
    const double offset = d.road_offset_km >= 0.0 ? d.road_offset_km : cfg.grid.length_km - seg_km;
    const double dx_km = d.dx_m / units::kMetersPerKm;
    const auto& em = result.emissions;

    ChemIntegratorOptions opts;
    opts.rtol = cfg.chemistry.rtol;
    opts.atol = cfg.chemistry.atol_molecules_cm3;
    try {
      DispersionSolver solver(d, dt, cfg.chemistry.k, opts, cfg.units);
      const std::size_t nx = d.nx();
      const double volume = d.source_volume == DispersionConfig::SourceVolume::cell
                                ? d.cell_volume_km3()
                                : dx_km * cfg.grid.dx_km * cfg.grid.dx_km;
      auto source_at = [&](double t) {
        // Latest traffic sample at or before t.
        auto it = std::upper_bound(em.t_s.begin(), em.t_s.end(), t + 1e-9);
        const std::size_t n = it == em.t_s.begin() ? 0 : static_cast<std::size_t>(it - em.t_s.begin()) - 1;
        return couple_traffic_source(em.cell_rate_g_h[n], cfg.grid.dx_km, offset, nx, dx_km, volume);
      };
      fs::path sdir;
      if (write) {
        sdir = dir / "dispersion";
        fs::create_directories(sdir);
        art.dispersion_dir = sdir.string();
      }
      auto on_snapshot = [&](const SpeciesFields& f) {
        if (!write) return;
        for (std::size_t s = 0; s < kNumSpecies; ++s) {
          char name[64];
          std::snprintf(name, sizeof name, "%s_t%07ld.csv", kSpeciesNames[s], std::lround(f.time_s));
          std::ofstream out(sdir / name, std::ios::binary);
          const Field2D& fld = f.species[s];
          out << "# t_s=" << format_number(f.time_s) << " nx=" << fld.nx << " ny=" << fld.ny
              << " dx_m=" << format_number(d.dx_m) << " dy_m=" << format_number(d.dy_m) << '\n';
          for (std::size_t j = 0; j < fld.ny; ++j) {
            for (std::size_t i = 0; i < fld.nx; ++i) out << (i ? "," : "") << format_number(fld(i, j));
            out << '\n';
          }
        }
      };
      result.dispersion = run_dispersion(solver, source_at, snapshot_every, on_snapshot);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("dispersion", -1, e.what());
    }
    if (write) {
      art.dispersion_probe = join(dir, "dispersion_probe.csv");
      CsvFile probe;
      probe.open(art.dispersion_probe, "t_s,o3_probe_mean_g_per_km3");
      for (std::size_t k = 0; k < result.dispersion->probe_t_s.size(); ++k) {
        probe.row(result.dispersion->probe_t_s[k], result.dispersion->probe_o3_mean[k]);
      }
    }
    result.stages_run.emplace_back("dispersion");
  }

  if (plots) {
    auto add = [&](const std::string& name, const std::string& svg) {
      const std::string path = join(dir, name);
      plot::write_file(path, svg);
      art.plots.push_back(path);
    };
    if (!result.emissions.t_s.empty() && run_emissions) {
      std::vector<double> t_min(result.emissions.t_s.size());
      for (std::size_t k = 0; k < t_min.size(); ++k) t_min[k] = result.emissions.t_s[k] / 60.0;
      add("emissions_total.svg", plot::line_chart({{"total NOx", t_min, result.emissions.total_g_h, ""}},
                                                  {"Total emission rate", "t (min)", "g/h"}));
    }
    if (!dump_rho.empty()) {
      const std::size_t nx = dump_rho.front().size();
      std::vector<double> flat;
      for (const auto& r : dump_rho) flat.insert(flat.end(), r.begin(), r.end());
      add("traffic_density.svg", plot::heatmap(flat, nx, dump_rho.size(), cfg.grid.length_km, dump_t.back() / 60.0,
                                               {"Density (veh/km)", "x (km)", "t (min)"}));
    }
    if (!result.chem_totals_g_km3.empty()) {
      std::vector<double> t_min, o3;
      for (std::size_t k = 0; k < result.chem_t_s.size(); ++k) {
        t_min.push_back(result.chem_t_s[k] / 60.0);
        o3.push_back(result.chem_totals_g_km3[k][index(Species::O3)]);
      }
      add("chemistry_o3_total.svg",
          plot::line_chart({{"O3", t_min, o3, ""}}, {"Road total O3", "t (min)", "g/km^3"}));
    }
    if (result.dispersion) {
      const auto& f = result.dispersion->final_fields[Species::O3];
      const auto& d = *cfg.dispersion;
      add("dispersion_o3_final.svg", plot::heatmap(f.values, f.nx, f.ny, d.length_m, d.width_m,
                                                   {"O3 at final time (g/km^3)", "x (m)", "y (m)"}));
      std::vector<double> t_h;
      for (double t : result.dispersion->probe_t_s) t_h.push_back(t / 3600.0);
      add("dispersion_probe.svg", plot::line_chart({{"O3 probe row mean", t_h, result.dispersion->probe_o3_mean, ""}},
                                                   {"O3 at probe row", "t (h)", "g/km^3"}));
    }
  }

  if (write) {
    nlohmann::json meta;
    meta["name"] = cfg.name;
    meta["version"] = kVersion;
    meta["requested_dt_s"] = result.config.requested_dt_s;
    meta["effective_dt_s"] = cfg.grid.dt_s;
    meta["dt_clamped"] = result.config.dt_clamped;
    meta["cfl_bound_s"] = cfl_bound_s(cfg.grid.dx_km, cfg.flux);
    meta["traffic_steps"] = cfg.grid.num_steps();
    meta["warnings"] = result.config.warnings;
    meta["stages_run"] = result.stages_run;
    meta["stages_disabled"] = std::vector<std::string>(options.disabled.begin(), options.disabled.end());
    meta["seeds"] = nlohmann::json::array();
    if (result.dispersion) {
      meta["dispersion_dt_s"] = result.dispersion_dt_s;
      meta["dispersion_steps"] = result.dispersion->probe_t_s.size() - 1;
      meta["dispersion_probe_row"] = cfg.dispersion->probe_row();
      meta["dispersion_final_probe_o3_mean"] = result.dispersion->probe_o3_mean.back();
    }
    std::vector<std::string> files;
    for (const auto& f : art.files()) files.push_back(fs::path(f).filename().string());
    meta["outputs"] = files;
    meta["config"] = nlohmann::json::parse(serialize_config(cfg));
    art.metadata = join(dir, "metadata.json");
    std::ofstream out(art.metadata, std::ios::binary);
    out << meta.dump(2) << '\n';
  }
  return result;
}

double asymptotic_mean(std::span<const double> t_s, std::span<const double> series,
                       const std::optional<TrafficLightPolicy>& light, double horizon_s, double fallback_window_s) {
  if (t_s.size() != series.size() || t_s.empty()) throw DomainError("asymptotic_mean: empty or mismatched series");
  double lo = 0.0;
  double hi = horizon_s;
  if (light) {
    const double tc = light->cycle_s;
    const double cycles = std::floor((horizon_s + light->phase_offset_s) / tc + 1e-9);
    hi = cycles * tc - light->phase_offset_s;
    lo = hi - 3.0 * tc;
    if (lo < -1e-9) throw DomainError("asymptotic_mean: fewer than three complete cycles in the run");
  } else {
    lo = horizon_s - fallback_window_s;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < t_s.size(); ++k) {
    if (t_s[k] > lo + 1e-9 && t_s[k] <= hi + 1e-9) {
      sum += series[k];
      ++n;
    }
  }
  if (n == 0) throw DomainError("asymptotic_mean: averaging window holds no samples");
  return sum / static_cast<double>(n);
}

double periodicity_gap(std::span<const double> t_s, std::span<const double> series, double period_s, double start_s) {
  if (t_s.size() != series.size() || t_s.size() < 2) throw DomainError("periodicity_gap: series too short");
  auto interp = [&](double t) {
    auto it = std::lower_bound(t_s.begin(), t_s.end(), t);
    if (it == t_s.begin()) return series.front();
    if (it == t_s.end()) return series.back();
    const std::size_t k = static_cast<std::size_t>(it - t_s.begin());
    const double w = (t - t_s[k - 1]) / (t_s[k] - t_s[k - 1]);
    return (1.0 - w) * series[k - 1] + w * series[k];
  };
  const double t_end = t_s.back();
  double worst = 0.0;
  bool any = false;
  for (double c0 = start_s; c0 + 2.0 * period_s <= t_end + 1e-9; c0 += period_s) {
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < t_s.size(); ++k) {
      if (t_s[k] < c0 - 1e-9 || t_s[k] >= c0 + period_s - 1e-9) continue;
      const double a = series[k];
      const double b = interp(t_s[k] + period_s);
      diff += std::abs(b - a);
      norm += std::abs(a);
    }
    if (norm > 0.0) {
      worst = std::max(worst, diff / norm);
    } else if (diff > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
    any = true;
  }
  if (!any) throw DomainError("periodicity_gap: fewer than two complete periods after start");
  return worst;
}

namespace {

SweepRow summarize(const PipelineResult& r, const ScenarioConfig& cfg) {
  SweepRow row;
  if (cfg.light) {
    row.cycle_s = cfg.light->cycle_s;
    row.red_s = cfg.light->red_s;
    row.ratio = cfg.light->ratio();
  }
  const auto& e = r.emissions;
  row.peak_g_h = *std::max_element(e.total_g_h.begin(), e.total_g_h.end());
  row.asymptotic_mean_g_h = asymptotic_mean(e.t_s, e.total_g_h, cfg.light, r.config.cfg.grid.horizon_s);
  if (!r.chem_totals_g_km3.empty()) {
    row.final_totals_g_km3 = r.chem_totals_g_km3.back();
    row.has_chemistry = true;
  }
  return row;
}

SweepTable run_sweep(const std::vector<ScenarioConfig>& members, const ScenarioConfig& base) {
  RunOptions opts;
  opts.disabled = {"dispersion"};
  SweepTable table;

  ScenarioConfig baseline = base;
  baseline.right = RightBc::free_outflow;
  baseline.light.reset();
  const PipelineResult b = run_pipeline(baseline, opts);
  const SweepRow brow = summarize(b, baseline);
  table.baseline_peak_g_h = brow.peak_g_h;
  table.baseline_asymptotic_mean_g_h = brow.asymptotic_mean_g_h;
  table.baseline_final_totals_g_km3 = brow.final_totals_g_km3;

  std::vector<std::future<PipelineResult>> jobs;
  for (const auto& m : members) jobs.push_back(std::async(std::launch::async, [&m, &opts] { return run_pipeline(m, opts); }));
  for (std::size_t k = 0; k < members.size(); ++k) {
    const PipelineResult r = jobs[k].get();
    SweepRow row = summarize(r, members[k]);
    for (std::size_t s = 0; s < kNumSpecies; ++s) {
      row.variation_g_km3[s] = row.final_totals_g_km3[s] - table.baseline_final_totals_g_km3[s];
    }
    table.rows.push_back(row);
    table.series.push_back(r.emissions);
  }
  return table;
}

}  // namespace

SweepTable sweep_fixed_ratio(double r, const std::vector<double>& cycle_list_s, const ScenarioConfig& base) {
  if (!(r > 0.0)) throw ConfigError("sweep.ratio", "ratio must be positive");
  std::vector<ScenarioConfig> members;
  for (double tc : cycle_list_s) {
    ScenarioConfig c = base;
    c.right = RightBc::traffic_light;
    c.light = TrafficLightPolicy::from_ratio(tc, r, base.light ? base.light->phase_offset_s : 0.0);
    members.push_back(c);
  }
  return run_sweep(members, base);
}

SweepTable sweep_fixed_cycle(double cycle_s, const std::vector<double>& ratio_list, const ScenarioConfig& base) {
  if (!(cycle_s > 0.0)) throw ConfigError("sweep.cycle_s", "cycle must be positive");
  std::vector<ScenarioConfig> members;
  for (double r : ratio_list) {
    ScenarioConfig c = base;
    c.right = RightBc::traffic_light;
    c.light = TrafficLightPolicy::from_ratio(cycle_s, r, base.light ? base.light->phase_offset_s : 0.0);
    members.push_back(c);
  }
  return run_sweep(members, base);
}

void write_sweep_csv(const std::string& path, const SweepTable& table) {
  CsvFile csv;
  csv.open(path,
           "cycle_s,red_s,ratio,peak_g_per_h,asymptotic_mean_g_per_h,O_final,O2_final,O3_final,NO_final,NO2_final,"
           "dO,dO2,dO3,dNO,dNO2");
  csv.row(0.0, 0.0, 0.0, table.baseline_peak_g_h, table.baseline_asymptotic_mean_g_h,
          table.baseline_final_totals_g_km3[0], table.baseline_final_totals_g_km3[1],
          table.baseline_final_totals_g_km3[2], table.baseline_final_totals_g_km3[3],
          table.baseline_final_totals_g_km3[4], 0.0, 0.0, 0.0, 0.0, 0.0);
  for (const auto& r : table.rows) {
    csv.row(r.cycle_s, r.red_s, r.ratio, r.peak_g_h, r.asymptotic_mean_g_h, r.final_totals_g_km3[0],
            r.final_totals_g_km3[1], r.final_totals_g_km3[2], r.final_totals_g_km3[3], r.final_totals_g_km3[4],
            r.variation_g_km3[0], r.variation_g_km3[1], r.variation_g_km3[2], r.variation_g_km3[3],
            r.variation_g_km3[4]);
  }
}

DispersionComparison compare_dispersion(const ScenarioConfig& cfg_nolight, const ScenarioConfig& cfg_light,
                                        std::optional<double> probe_m, const RunOptions& options) {
  if (!cfg_nolight.dispersion || !cfg_light.dispersion) {
    throw ConfigError("dispersion", "both scenarios need a dispersion section");
  }
  ScenarioConfig a = cfg_nolight;
  ScenarioConfig b = cfg_light;
  if (probe_m) {
    a.dispersion->probe_m = *probe_m;
    b.dispersion->probe_m = *probe_m;
  }
  const auto& da = *a.dispersion;
  const auto& db = *b.dispersion;
  if (da.mode != db.mode || da.nx() != db.nx() || da.ny() != db.ny() || da.dx_m != db.dx_m || da.dy_m != db.dy_m) {
    throw ConfigError("dispersion", "scenarios must share the dispersion grid");
  }
  DispersionComparison cmp;
  cmp.probe_row = da.probe_row();

  RunOptions oa = options;
  RunOptions ob = options;
  oa.disabled.insert("chemistry");
  ob.disabled.insert("chemistry");
  if (!options.out_dir.empty()) {
    oa.out_dir = (fs::path(options.out_dir) / "nolight").string();
    ob.out_dir = (fs::path(options.out_dir) / "light").string();
  }
  const PipelineResult ra = run_pipeline(a, oa);
  const PipelineResult rb = run_pipeline(b, ob);
  cmp.m1 = ra.dispersion->final_fields[Species::O3].row_mean(cmp.probe_row);
  cmp.m2 = rb.dispersion->final_fields[Species::O3].row_mean(cmp.probe_row);
  cmp.increase = cmp.m1 != 0.0 ? (cmp.m2 - cmp.m1) / cmp.m1 : 0.0;
  if (!options.out_dir.empty()) {
    CsvFile csv;
    csv.open((fs::path(options.out_dir) / "comparison.csv").string(), "probe_row,m1_g_per_km3,m2_g_per_km3,increase");
    csv.row(cmp.probe_row, cmp.m1, cmp.m2, cmp.increase);
  }
  return cmp;
}

}  // namespace roadozone
