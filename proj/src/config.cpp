#include "roadozone/config.hpp"

#include <cmath>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "roadozone/emission.hpp"
#include "roadozone/error.hpp"
#include "roadozone/log.hpp"

namespace roadozone {

using nlohmann::json;

namespace {

/// Typed reader over one JSON object that tracks consumed keys so unknown ones can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json* raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(field(key), "expected a number");
    return v->get<double>();
  }

  long integer(const std::string& key, long fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v->get<long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = raw(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError(field(item.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<Segment> read_segments(const json* v, const std::string& path, std::vector<Segment> fallback) {
  if (!v) return fallback;
  if (v->is_number()) return {{0.0, std::numeric_limits<double>::infinity(), v->get<double>()}};
  if (!v->is_array()) throw ConfigError(path, "expected a number or a list of segments");
  std::vector<Segment> out;
  for (std::size_t k = 0; k < v->size(); ++k) {
    Section s(v->at(k), path + "[" + std::to_string(k) + "]");
    Segment seg;
    seg.from_km = s.number("from_km", 0.0);
    seg.to_km = s.number("to_km", 0.0);
    seg.value = s.number("value", 0.0);
    s.finish();
    out.push_back(seg);
  }
  return out;
}

json write_segments(const std::vector<Segment>& segs) {
  if (segs.size() == 1 && segs[0].from_km == 0.0 && std::isinf(segs[0].to_km)) return segs[0].value;
  json arr = json::array();
  for (const auto& s : segs) arr.push_back({{"from_km", s.from_km}, {"to_km", s.to_km}, {"value", s.value}});
  return arr;
}

LeftBoundary::Kind parse_left(const std::string& s, const std::string& field) {
  if (s == "dirichlet_density") return LeftBoundary::Kind::dirichlet_density;
  if (s == "neumann") return LeftBoundary::Kind::neumann;
  if (s == "closed") return LeftBoundary::Kind::closed;
  throw ConfigError(field, "unknown left boundary '" + s + "'");
}

RightBc parse_right(const std::string& s, const std::string& field) {
  if (s == "neumann") return RightBc::neumann;
  if (s == "free_outflow") return RightBc::free_outflow;
  if (s == "closed") return RightBc::closed;
  if (s == "traffic_light") return RightBc::traffic_light;
  throw ConfigError(field, "unknown right boundary '" + s + "'");
}

DispersionConfig parse_dispersion(const json& j) {
  Section s(j, "dispersion");
  DispersionConfig d;
  const std::string mode = s.text("mode", "vertical");
  if (mode == "vertical") {
    d.mode = DispersionConfig::Mode::vertical;
  } else if (mode == "horizontal") {
    d.mode = DispersionConfig::Mode::horizontal;
  } else {
    throw ConfigError("dispersion.mode", "expected 'vertical' or 'horizontal'");
  }
  d.length_m = s.number("length_m", d.length_m);
  d.width_m = s.number("width_m", d.width_m);
  d.dx_m = s.number("dx_m", d.dx_m);
  d.dy_m = s.number("dy_m", d.dy_m);
  d.dz_m = s.number("dz_m", d.dz_m);
  d.mu_km2_per_h = s.number("mu_km2_per_h", d.mu_km2_per_h);
  if (const json* w = s.raw("wind_kmh")) {
    Section ws(*w, "dispersion.wind_kmh");
    d.wind_x_kmh = ws.number("x", 0.0);
    d.wind_y_kmh = ws.number("y", 0.0);
    ws.finish();
  }
  d.dt_s = s.number("dt_s", d.dt_s);
  d.horizon_s = s.number("horizon_s", d.horizon_s);
  const std::string bc = s.text("bc_mode", "verbatim");
  if (bc == "verbatim") {
    d.bc_mode = DispersionConfig::BcMode::verbatim;
  } else if (bc == "verbatim_seconds") {
    d.bc_mode = DispersionConfig::BcMode::verbatim_seconds;
  } else if (bc == "rate") {
    d.bc_mode = DispersionConfig::BcMode::rate;
  } else {
    throw ConfigError("dispersion.bc_mode", "expected 'verbatim', 'verbatim_seconds' or 'rate'");
  }
  const std::string vol = s.text("source_volume", "cell");
  if (vol == "cell") {
    d.source_volume = DispersionConfig::SourceVolume::cell;
  } else if (vol == "road_box") {
    d.source_volume = DispersionConfig::SourceVolume::road_box;
  } else {
    throw ConfigError("dispersion.source_volume", "expected 'cell' or 'road_box'");
  }
  d.t_ref_s = s.number("t_ref_s", d.t_ref_s);
  d.o2_background = s.number("o2_background_molecules_cm3", d.o2_background);
  d.freeze_o2 = s.boolean("freeze_o2", d.freeze_o2);
  d.reaction = s.boolean("reaction", d.reaction);
  d.road_offset_km = s.number("road_offset_km", d.road_offset_km);
  d.source_height_m = s.number("source_height_m", d.source_height_m);
  d.source_row = s.integer("source_row", d.source_row);
  d.probe_m = s.number("probe_m", d.probe_m);
  s.finish();
  return d;
}

const char* bc_mode_name(DispersionConfig::BcMode m) {
  switch (m) {
    case DispersionConfig::BcMode::verbatim: return "verbatim";
    case DispersionConfig::BcMode::verbatim_seconds: return "verbatim_seconds";
    default: return "rate";
  }
}

json write_dispersion(const DispersionConfig& d) {
  return {{"mode", d.mode == DispersionConfig::Mode::vertical ? "vertical" : "horizontal"},
          {"length_m", d.length_m},
          {"width_m", d.width_m},
          {"dx_m", d.dx_m},
          {"dy_m", d.dy_m},
          {"dz_m", d.dz_m},
          {"mu_km2_per_h", d.mu_km2_per_h},
          {"wind_kmh", {{"x", d.wind_x_kmh}, {"y", d.wind_y_kmh}}},
          {"dt_s", d.dt_s},
          {"horizon_s", d.horizon_s},
          {"bc_mode", bc_mode_name(d.bc_mode)},
          {"source_volume", d.source_volume == DispersionConfig::SourceVolume::cell ? "cell" : "road_box"},
          {"t_ref_s", d.t_ref_s},
          {"o2_background_molecules_cm3", d.o2_background},
          {"freeze_o2", d.freeze_o2},
          {"reaction", d.reaction},
          {"road_offset_km", d.road_offset_km},
          {"source_height_m", d.source_height_m},
          {"source_row", d.source_row},
          {"probe_m", d.probe_m}};
}

ScenarioConfig parse_json(const json& root) {
  Section top(root, "");
  ScenarioConfig cfg;
  cfg.name = top.text("name", cfg.name);

  if (const json* g = top.raw("grid")) {
    Section s(*g, "grid");
    const double length = s.number("length_km", cfg.grid.length_km);
    const long cells = s.integer("num_cells", static_cast<long>(cfg.grid.num_cells));
    if (cells <= 0) throw ConfigError("grid.num_cells", "must be positive");
    const double dt = s.number("dt_s", cfg.grid.dt_s);
    const double horizon = s.number("horizon_s", cfg.grid.horizon_s);
    s.finish();
    cfg.grid = RoadGrid::uniform(length, static_cast<std::size_t>(cells), dt, horizon);
  }

  if (const json* f = top.raw("flux")) {
    Section s(*f, "flux");
    cfg.flux.v_max = s.number("v_max_kmh", cfg.flux.v_max);
    cfg.flux.rho_f = s.number("rho_f_vehkm", cfg.flux.rho_f);
    cfg.flux.rho_max = s.number("rho_max_vehkm", cfg.flux.rho_max);
    cfg.flux.w_l = s.number("w_l_vehh", cfg.flux.w_l);
    cfg.flux.w_r = s.number("w_r_vehh", cfg.flux.w_r);
    s.finish();
  }

  if (const json* i = top.raw("initial")) {
    Section s(*i, "initial");
    cfg.initial_rho = read_segments(s.raw("rho_vehkm"), "initial.rho_vehkm", cfg.initial_rho);
    cfg.initial_w = read_segments(s.raw("w_vehh"), "initial.w_vehh", cfg.initial_w);
    s.finish();
  }

  if (const json* b = top.raw("boundary")) {
    Section s(*b, "boundary");
    cfg.left = parse_left(s.text("left", to_string(cfg.left)), "boundary.left");
    cfg.left_rho_vehkm = s.number("left_rho_vehkm", cfg.left_rho_vehkm);
    cfg.right = parse_right(s.text("right", to_string(cfg.right)), "boundary.right");
    s.finish();
  }

  if (const json* l = top.raw("light"); l && !l->is_null()) {
    Section s(*l, "light");
    TrafficLightPolicy p;
    p.cycle_s = s.number("cycle_s", p.cycle_s);
    p.red_s = s.number("red_s", p.red_s);
    p.phase_offset_s = s.number("phase_offset_s", p.phase_offset_s);
    s.finish();
    cfg.light = p;
  }

  if (const json* e = top.raw("emission")) {
    Section s(*e, "emission");
    cfg.emission.table = s.text("table", cfg.emission.table);
    cfg.emission.lanes = s.number("lanes", cfg.emission.lanes);
    const std::string acc = s.text("acceleration", "analytic");
    if (acc == "analytic") {
      cfg.emission.acceleration = EmissionSettings::Acceleration::analytic;
    } else if (acc == "discrete") {
      cfg.emission.acceleration = EmissionSettings::Acceleration::discrete;
    } else {
      throw ConfigError("emission.acceleration", "expected 'analytic' or 'discrete'");
    }
    s.finish();
  }

  if (const json* c = top.raw("chemistry")) {
    Section s(*c, "chemistry");
    auto& ch = cfg.chemistry;
    ch.enabled = s.boolean("enabled", ch.enabled);
    ch.k.k1 = s.number("k1_per_s", ch.k.k1);
    ch.k.k2 = s.number("k2_cm6_per_molecule2_s", ch.k.k2);
    ch.k.k3 = s.number("k3_cm3_per_molecule_s", ch.k.k3);
    ch.k.p = s.number("p_no2", ch.k.p);
    ch.o2_molecules_cm3 = s.number("o2_molecules_cm3", ch.o2_molecules_cm3);
    ch.rtol = s.number("rtol", ch.rtol);
    ch.atol_molecules_cm3 = s.number("atol_molecules_cm3", ch.atol_molecules_cm3);
    ch.initial_nox_window_s = s.number("initial_nox_window_s", ch.initial_nox_window_s);
    s.finish();
  }

  if (const json* d = top.raw("dispersion"); d && !d->is_null()) cfg.dispersion = parse_dispersion(*d);

  if (const json* o = top.raw("output")) {
    Section s(*o, "output");
    cfg.output.dir = s.text("dir", cfg.output.dir);
    cfg.output.snapshot_every_s = s.number("snapshot_every_s", cfg.output.snapshot_every_s);
    cfg.output.traffic_dump_every_s = s.number("traffic_dump_every_s", cfg.output.traffic_dump_every_s);
    cfg.output.plots = s.boolean("plots", cfg.output.plots);
    s.finish();
  }

  top.finish();
  return cfg;
}

json to_json_value(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["grid"] = {{"length_km", cfg.grid.length_km},
               {"num_cells", cfg.grid.num_cells},
               {"dt_s", cfg.grid.dt_s},
               {"horizon_s", cfg.grid.horizon_s}};
  j["flux"] = {{"v_max_kmh", cfg.flux.v_max},
               {"rho_f_vehkm", cfg.flux.rho_f},
               {"rho_max_vehkm", cfg.flux.rho_max},
               {"w_l_vehh", cfg.flux.w_l},
               {"w_r_vehh", cfg.flux.w_r}};
  j["initial"] = {{"rho_vehkm", write_segments(cfg.initial_rho)}, {"w_vehh", write_segments(cfg.initial_w)}};
  j["boundary"] = {{"left", to_string(cfg.left)}, {"left_rho_vehkm", cfg.left_rho_vehkm}, {"right", to_string(cfg.right)}};
  if (cfg.light) {
    j["light"] = {{"cycle_s", cfg.light->cycle_s}, {"red_s", cfg.light->red_s}, {"phase_offset_s", cfg.light->phase_offset_s}};
  } else {
    j["light"] = nullptr;
  }
  j["emission"] = {{"table", cfg.emission.table},
                   {"lanes", cfg.emission.lanes},
                   {"acceleration",
                    cfg.emission.acceleration == EmissionSettings::Acceleration::analytic ? "analytic" : "discrete"}};
  const auto& ch = cfg.chemistry;
  j["chemistry"] = {{"enabled", ch.enabled},
                    {"k1_per_s", ch.k.k1},
                    {"k2_cm6_per_molecule2_s", ch.k.k2},
                    {"k3_cm3_per_molecule_s", ch.k.k3},
                    {"p_no2", ch.k.p},
                    {"o2_molecules_cm3", ch.o2_molecules_cm3},
                    {"rtol", ch.rtol},
                    {"atol_molecules_cm3", ch.atol_molecules_cm3},
                    {"initial_nox_window_s", ch.initial_nox_window_s}};
  j["dispersion"] = cfg.dispersion ? write_dispersion(*cfg.dispersion) : json(nullptr);
  j["output"] = {{"dir", cfg.output.dir},
                 {"snapshot_every_s", cfg.output.snapshot_every_s},
                 {"traffic_dump_every_s", cfg.output.traffic_dump_every_s},
                 {"plots", cfg.output.plots}};
  return j;
}

}  // namespace

std::vector<double> sample_segments(const std::vector<Segment>& segments, const RoadGrid& grid,
                                    const std::string& field) {
  std::vector<double> out(grid.num_cells);
  for (std::size_t i = 0; i < grid.num_cells; ++i) {
    const double x = grid.x_center_km(i);
    bool found = false;
    for (std::size_t k = 0; k < segments.size() && !found; ++k) {
      const auto& s = segments[k];
      const bool last = k + 1 == segments.size();
      if (x >= s.from_km && (x < s.to_km || (last && x <= s.to_km))) {
        out[i] = s.value;
        found = true;
      }
    }
    if (!found) {
      std::ostringstream os;
      os << "no segment covers x = " << x << " km";
      throw ConfigError(field, os.str());
    }
  }
  return out;
}

bool TrafficLightPolicy::is_green(double t_s) const {
  double phase = std::fmod(t_s + phase_offset_s, cycle_s);
  if (phase < 0.0) phase += cycle_s;
  return phase < green_s();
}

void TrafficLightPolicy::validate() const {
  if (!(cycle_s > 0.0)) throw ConfigError("light.cycle_s", "cycle must be positive");
  if (!(red_s > 0.0)) throw ConfigError("light.red_s", "red phase must be positive");
  if (!(red_s < cycle_s)) throw ConfigError("light.red_s", "red phase must be shorter than cycle");
}

TrafficLightPolicy TrafficLightPolicy::from_ratio(double cycle_s, double r, double phase_offset_s) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("light.ratio", "green/red ratio must be positive");
  TrafficLightPolicy p;
  p.cycle_s = cycle_s;
  p.red_s = cycle_s / (1.0 + r);
  p.phase_offset_s = phase_offset_s;
  p.validate();
  return p;
}

BoundaryPolicy ScenarioConfig::boundary_at(double t_s) const {
  BoundaryPolicy bc;
  bc.left.kind = left;
  bc.left.rho = left_rho_vehkm;
  switch (right) {
    case RightBc::neumann:
      bc.right.kind = RightBoundary::Kind::neumann;
      break;
    case RightBc::free_outflow:
      bc.right.kind = RightBoundary::Kind::free_outflow;
      break;
    case RightBc::closed:
      bc.right.kind = RightBoundary::Kind::closed;
      break;
    case RightBc::traffic_light:
      bc.right.kind = light && !light->is_green(t_s) ? RightBoundary::Kind::closed : RightBoundary::Kind::free_outflow;
      break;
  }
  return bc;
}

void RoadGrid::validate() const {
  if (!(length_km > 0.0)) throw ConfigError("grid.length_km", "must be positive");
  if (num_cells < 3) throw ConfigError("grid.num_cells", "at least 3 cells are required");
  if (std::abs(dx_km * static_cast<double>(num_cells) - length_km) > 1e-12 * length_km) {
    throw ConfigError("grid.dx_km", "dx * num_cells must equal the road length");
  }
  if (!(dt_s > 0.0)) throw ConfigError("grid.dt_s", "must be positive");
  if (!(horizon_s > 0.0)) throw ConfigError("grid.horizon_s", "must be positive");
}

ValidatedConfig validate_config(ScenarioConfig cfg) {
  ValidatedConfig out;
  cfg.grid.validate();
  cfg.flux.validate();
  cfg.units.validate();

  const auto rho0 = sample_segments(cfg.initial_rho, cfg.grid, "initial.rho_vehkm");
  const auto w0 = sample_segments(cfg.initial_w, cfg.grid, "initial.w_vehh");
  for (double r : rho0) {
    if (!(r >= 0.0 && r <= cfg.flux.rho_max)) throw ConfigError("initial.rho_vehkm", "density outside [0, rho_max]");
  }
  for (double w : w0) {
    if (!(w >= cfg.flux.w_l && w <= cfg.flux.w_r)) throw ConfigError("initial.w_vehh", "w outside [w_L, w_R]");
  }
  if (cfg.left == LeftBoundary::Kind::dirichlet_density &&
      !(cfg.left_rho_vehkm >= 0.0 && cfg.left_rho_vehkm <= cfg.flux.rho_max)) {
    throw ConfigError("boundary.left_rho_vehkm", "inflow density outside [0, rho_max]");
  }
  if (cfg.right == RightBc::traffic_light && !cfg.light) {
    throw ConfigError("light", "a traffic_light right boundary needs a light section");
  }
  if (cfg.light) cfg.light->validate();

  if (!(cfg.emission.lanes > 0.0)) throw ConfigError("emission.lanes", "must be positive");
  EmissionCoefficients::named(cfg.emission.table);

  cfg.chemistry.k.validate();
  if (!(cfg.chemistry.rtol > 0.0)) throw ConfigError("chemistry.rtol", "must be positive");
  if (!(cfg.chemistry.atol_molecules_cm3 > 0.0)) throw ConfigError("chemistry.atol_molecules_cm3", "must be positive");
  if (!(cfg.chemistry.o2_molecules_cm3 >= 0.0)) throw ConfigError("chemistry.o2_molecules_cm3", "must be non-negative");
  if (!(cfg.chemistry.initial_nox_window_s >= 0.0)) {
    throw ConfigError("chemistry.initial_nox_window_s", "must be non-negative");
  }

  if (cfg.dispersion) {
    auto& d = *cfg.dispersion;
    d.validate();
    if (d.horizon_s > cfg.grid.horizon_s * (1.0 + 1e-12)) {
      throw ConfigError("dispersion.horizon_s", "must not exceed the traffic horizon grid.horizon_s");
    }
    const double seg_km = d.length_m / units::kMetersPerKm;
    if (seg_km > cfg.grid.length_km * (1.0 + 1e-12)) {
      throw ConfigError("dispersion.length_m", "dispersion domain is longer than the road");
    }
    if (d.road_offset_km >= 0.0 && d.road_offset_km + seg_km > cfg.grid.length_km * (1.0 + 1e-12)) {
      throw ConfigError("dispersion.road_offset_km", "dispersion segment extends past the end of the road");
    }
    if (!cfg.chemistry.enabled && d.reaction) {
      out.warnings.push_back("dispersion.reaction is on while roadside chemistry is disabled");
    }
  }
  if (cfg.output.snapshot_every_s < 0.0) throw ConfigError("output.snapshot_every_s", "must be non-negative");
  if (cfg.output.traffic_dump_every_s < 0.0) throw ConfigError("output.traffic_dump_every_s", "must be non-negative");

  out.requested_dt_s = cfg.grid.dt_s;
  const double bound = cfl_bound_s(cfg.grid.dx_km, cfg.flux);
  if (cfg.grid.dt_s > bound) {
    std::ostringstream os;
    os << "grid.dt_s = " << cfg.grid.dt_s << " s exceeds the CFL bound dx/(2 Vmax) = " << bound
       << " s; clamped to the bound";
    out.warnings.push_back(os.str());
    log::warn(os.str());
    cfg.grid.dt_s = bound;
    out.dt_clamped = true;
  }
  out.cfg = std::move(cfg);
  return out;
}

ScenarioConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_json(root);
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& cfg) { return to_json_value(cfg).dump(2) + "\n"; }

std::string normalize_json(const std::string& json_text) { return json::parse(json_text).dump(2) + "\n"; }

std::string to_string(RightBc bc) {
  switch (bc) {
    case RightBc::neumann:
      return "neumann";
    case RightBc::free_outflow:
      return "free_outflow";
    case RightBc::closed:
      return "closed";
    case RightBc::traffic_light:
      return "traffic_light";
  }
  return "free_outflow";
}

std::string to_string(LeftBoundary::Kind kind) {
  switch (kind) {
    case LeftBoundary::Kind::dirichlet_density:
      return "dirichlet_density";
    case LeftBoundary::Kind::neumann:
      return "neumann";
    case LeftBoundary::Kind::closed:
      return "closed";
  }
  return "dirichlet_density";
}

}  // namespace roadozone
