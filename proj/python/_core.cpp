#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "roadozone/cgarz.hpp"
#include "roadozone/chemistry.hpp"
#include "roadozone/config.hpp"
#include "roadozone/emission.hpp"
#include "roadozone/error.hpp"
#include "roadozone/flux_model.hpp"
#include "roadozone/pipeline.hpp"
#include "roadozone/trajectory.hpp"
#include "roadozone/version.hpp"

namespace py = pybind11;
using namespace roadozone;

namespace {

py::dict sweep_to_dict(const SweepTable& t) {
  py::list rows;
  for (const auto& r : t.rows) {
    py::dict d;
    d["cycle_s"] = r.cycle_s;
    d["red_s"] = r.red_s;
    d["ratio"] = r.ratio;
    d["peak_g_h"] = r.peak_g_h;
    d["asymptotic_mean_g_h"] = r.asymptotic_mean_g_h;
    d["final_totals_g_km3"] = r.final_totals_g_km3;
    d["variation_g_km3"] = r.variation_g_km3;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["baseline_peak_g_h"] = t.baseline_peak_g_h;
  out["baseline_asymptotic_mean_g_h"] = t.baseline_asymptotic_mean_g_h;
  out["baseline_final_totals_g_km3"] = t.baseline_final_totals_g_km3;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Traffic emission, ozone chemistry and dispersion core";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<FluxModel>(m, "FluxModel")
      .def(py::init<>())
      .def_readwrite("v_max", &FluxModel::v_max)
      .def_readwrite("rho_f", &FluxModel::rho_f)
      .def_readwrite("rho_max", &FluxModel::rho_max)
      .def_readwrite("w_l", &FluxModel::w_l)
      .def_readwrite("w_r", &FluxModel::w_r)
      .def("validate", &FluxModel::validate);
  m.def("make_flux_model", &make_flux_model, py::arg("v_max"), py::arg("rho_f"), py::arg("rho_max"));
  m.def("flux", &flux_eval, py::arg("rho"), py::arg("w"), py::arg("model"));
  m.def("velocity", &velocity_eval, py::arg("rho"), py::arg("w"), py::arg("model"));
  m.def("cfl_bound_s", &cfl_bound_s, py::arg("dx_km"), py::arg("model"));

  m.def(
      "step_2ctm",
      [](const std::vector<double>& rho, const std::vector<double>& w, const FluxModel& fm, double dx_km, double dt_s) {
        TrafficState s = TrafficState::from_density_property(rho, w, 0.0);
        BoundaryPolicy bc;
        bc.left.kind = LeftBoundary::Kind::closed;
        bc.right.kind = RightBoundary::Kind::closed;
        const TrafficState n = step_2ctm(s, bc, fm, dx_km, dt_s);
        return py::make_tuple(n.rho, n.w);
      },
      py::arg("rho"), py::arg("w"), py::arg("model"), py::arg("dx_km"), py::arg("dt_s"),
      "One 2CTM step on a closed road; returns (rho, w).");

  m.def(
      "emission_rate",
      [](double v_ms, double a_ms2, const std::string& table) {
        return emission_rate_single(v_ms, a_ms2, EmissionCoefficients::named(table));
      },
      py::arg("v_ms"), py::arg("a_ms2"), py::arg("table") = "petrol_car_nox", "Single-vehicle rate in g/s.");

  py::class_<RateConstants>(m, "RateConstants")
      .def(py::init<>())
      .def_readwrite("k1", &RateConstants::k1)
      .def_readwrite("k2", &RateConstants::k2)
      .def_readwrite("k3", &RateConstants::k3)
      .def_readwrite("p", &RateConstants::p);
  m.def(
      "chemistry_rhs",
      [](const ChemVector& psi, double s_no, double s_no2, const RateConstants& k) {
        return chemistry_rhs(psi, NoxSource{s_no, s_no2}, k);
      },
      py::arg("psi"), py::arg("s_no") = 0.0, py::arg("s_no2") = 0.0, py::arg("k") = RateConstants{});
  m.def(
      "integrate_chemistry",
      [](const ChemVector& psi0, double t1, double s_no, double s_no2, double rtol, const RateConstants& k) {
        PiecewiseSource src{{0.0}, {NoxSource{s_no, s_no2}}};
        ChemIntegratorOptions opt;
        opt.rtol = rtol;
        const ChemTrajectory tr = integrate_adaptive(psi0, src, 0.0, t1, opt, k);
        return py::make_tuple(tr.t, tr.psi);
      },
      py::arg("psi0"), py::arg("t1"), py::arg("s_no") = 0.0, py::arg("s_no2") = 0.0, py::arg("rtol") = 1e-6,
      py::arg("k") = RateConstants{}, "Adaptive Rosenbrock run in molecule/cm^3 and s; returns (t, psi).");

  m.def(
      "normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("text"), "Parses a scenario JSON and returns its canonical form.");

  m.def(
      "run_pipeline",
      [](const std::string& config_path, const std::string& out_dir, std::vector<std::string> disable,
         double snapshot_every_s, bool plots) {
        RunOptions opt;
        opt.out_dir = out_dir;
        opt.disabled.insert(disable.begin(), disable.end());
        opt.snapshot_every_s = snapshot_every_s;
        opt.plots = plots;
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(load_config(config_path), opt);
        }
        py::dict d;
        d["stages_run"] = r.stages_run;
        d["dt_s"] = r.config.cfg.grid.dt_s;
        d["dt_clamped"] = r.config.dt_clamped;
        d["t_s"] = r.emissions.t_s;
        d["total_emission_g_h"] = r.emissions.total_g_h;
        d["chem_t_s"] = r.chem_t_s;
        d["chem_totals_g_km3"] = r.chem_totals_g_km3;
        if (r.dispersion) {
          d["probe_t_s"] = r.dispersion->probe_t_s;
          d["probe_o3_mean"] = r.dispersion->probe_o3_mean;
        }
        d["files"] = r.artifacts.files();
        return d;
      },
      py::arg("config_path"), py::arg("out_dir") = "", py::arg("disable") = std::vector<std::string>{},
      py::arg("snapshot_every_s") = -1.0, py::arg("plots") = false);

  m.def(
      "sweep_fixed_ratio",
      [](const std::string& config_path, double r, std::vector<double> cycles_s) {
        const ScenarioConfig base = load_config(config_path);
        SweepTable t;
        {
          py::gil_scoped_release release;
          t = sweep_fixed_ratio(r, cycles_s, base);
        }
        return sweep_to_dict(t);
      },
      py::arg("config_path"), py::arg("r"), py::arg("cycles_s"));
  m.def(
      "sweep_fixed_cycle",
      [](const std::string& config_path, double cycle_s, std::vector<double> ratios) {
        const ScenarioConfig base = load_config(config_path);
        SweepTable t;
        {
          py::gil_scoped_release release;
          t = sweep_fixed_cycle(cycle_s, ratios, base);
        }
        return sweep_to_dict(t);
      },
      py::arg("config_path"), py::arg("cycle_s"), py::arg("ratios"));

  m.def(
      "compare_dispersion",
      [](const std::string& nolight, const std::string& light, std::optional<double> probe_m) {
        const ScenarioConfig a = load_config(nolight);
        const ScenarioConfig b = load_config(light);
        DispersionComparison c;
        {
          py::gil_scoped_release release;
          c = compare_dispersion(a, b, probe_m);
        }
        py::dict d;
        d["m1"] = c.m1;
        d["m2"] = c.m2;
        d["increase"] = c.increase;
        d["probe_row"] = c.probe_row;
        return d;
      },
      py::arg("nolight"), py::arg("light"), py::arg("probe_m") = std::nullopt);

  m.def(
      "validate_emissions",
      [](const std::string& path, double frame_dt_s) {
        const TrajectorySet traj = read_trajectory_file(path, frame_dt_s);
        const EmissionValidation v = validate_emissions(traj, EmissionCoefficients::petrol_car_nox());
        py::dict d;
        d["r"] = v.r;
        d["error"] = v.error;
        d["t_s"] = v.t_s;
        d["e_true_g_h"] = v.e_true_g_h;
        d["e_model_g_h"] = v.e_mod_g_h;
        return d;
      },
      py::arg("path"), py::arg("frame_dt_s") = 0.1);
}
