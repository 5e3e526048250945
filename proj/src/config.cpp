#include "evatrap/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "evatrap/errors.hpp"

namespace evatrap {

namespace {

struct Unit {
  const char* dimension;
  double scale;
};

const std::map<std::string, Unit>& unit_table() {
  static const std::map<std::string, Unit> table{
      {"m", {"length", 1.0}},         {"mm", {"length", 1e-3}},       {"um", {"length", 1e-6}},
      {"μm", {"length", 1e-6}},       {"µm", {"length", 1e-6}},       {"nm", {"length", 1e-9}},
      {"W", {"power", 1.0}},          {"mW", {"power", 1e-3}},        {"uW", {"power", 1e-6}},
      {"μW", {"power", 1e-6}},        {"rad", {"angle", 1.0}},        {"deg", {"angle", constants::pi / 180.0}},
      {"pi", {"angle", constants::pi}}, {"/s", {"rate", 1.0}},        {"1/s", {"rate", 1.0}},
      {"s^-1", {"rate", 1.0}},        {"amu", {"mass", constants::amu}}, {"kg", {"mass", 1.0}},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Tracks which keys of a mapping were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_ + ": expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull();
  }
  YAML::Node get(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  void quantity(const std::string& key, const std::string& dim, double& out) {
    if (has(key)) out = parse_quantity(scalar(key), dim, key);
  }
  void quantity(const std::string& key, const std::string& dim, std::optional<double>& out) {
    if (has(key)) out = parse_quantity(scalar(key), dim, key);
  }
  void number(const std::string& key, double& out) { quantity(key, "none", out); }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    try {
      out = node_[key].as<int>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": expected an integer");
    }
  }
  void flag(const std::string& key, bool& out) {
    if (!has(key)) return;
    try {
      out = node_[key].as<bool>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": expected true or false");
    }
  }
  void text(const std::string& key, std::string& out) {
    if (has(key)) out = scalar(key);
  }
  std::vector<double> quantity_list(const std::string& key, const std::string& dim);

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  std::string scalar(const std::string& key) {
    const YAML::Node v = node_[key];
    if (!v.IsScalar()) throw ConfigError(where(key) + ": expected a scalar value");
    return v.as<std::string>();
  }
  double parse_quantity(const std::string& text, const std::string& dim, const std::string& key) {
    try {
      return evatrap::parse_quantity(text, dim);
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

// A list of quantities, or a {from, to, step} range.
std::vector<double> Section::quantity_list(const std::string& key, const std::string& dim) {
  const YAML::Node v = get(key);
  std::vector<double> out;
  if (v.IsSequence()) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].IsScalar()) throw ConfigError(where(key) + ": list entries must be scalars");
      out.push_back(parse_quantity(v[k].as<std::string>(), dim, key));
    }
    return out;
  }
  if (!v.IsMap()) throw ConfigError(where(key) + ": expected a list or a {from, to, step} range");
  Section r(v, where(key));
  double from = 0, to = 0, step = 0;
  if (!r.has("from") || !r.has("to") || !r.has("step"))
    throw ConfigError(where(key) + ": range needs from, to and step");
  r.quantity("from", dim, from);
  r.quantity("to", dim, to);
  r.quantity("step", dim, step);
  r.finish();
  if (!(step > 0.0) || to < from) throw ConfigError(where(key) + ": empty or reversed range");
  const int n = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
  for (int k = 0; k < n; ++k) out.push_back(from + k * step);
  return out;
}

std::vector<ExcitationSpec> parse_excitations(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path + ": expected a list of modes");
  std::vector<ExcitationSpec> out;
  for (std::size_t k = 0; k < node.size(); ++k) {
    Section s(node[k], path + "[" + std::to_string(k) + "]");
    ExcitationSpec e;
    if (!s.has("mode")) throw ConfigError(path + ": every entry needs a mode label");
    s.text("mode", e.label);
    if (!s.has("power")) throw ConfigError(path + ": every entry needs a power");
    s.quantity("power", "power", e.power);
    s.quantity("phase", "angle", e.phase);
    s.finish();
    out.push_back(e);
  }
  return out;
}

void parse_beam(Section& s, BeamSpec& beam) {
  s.quantity("wavelength", "length", beam.wavelength);
  if (s.has("modes")) beam.modes = parse_excitations(s.get("modes"), s.where("modes"));
  s.finish();
}

}  // namespace

double parse_quantity(const std::string& text, const std::string& dimension) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot read a number from '" + text + "'");
  }
  const std::string unit = trim(t.substr(used));
  if (dimension == "none") {
    if (!unit.empty()) throw ConfigError("'" + text + "' should be a plain number");
    return value;
  }
  if (unit.empty()) throw ConfigError("'" + text + "' is missing a unit (" + dimension + ")");
  const auto it = unit_table().find(unit);
  if (it == unit_table().end()) throw ConfigError("unknown unit '" + unit + "' in '" + text + "'");
  if (dimension != it->second.dimension)
    throw ConfigError("'" + text + "' is a " + it->second.dimension + ", expected a " + dimension);
  return value * it->second.scale;
}

void RunConfig::validate() const {
  geometry.validate();
  grid.build().validate();
  if (max_modes < 1) throw ConfigError("solver.max_modes must be at least 1");
  if (!(residual_limit > 0.0)) throw ConfigError("solver.residual_limit must be positive");
  atom.validate();
  surface.validate();
  region.validate();
  if (!(red.wavelength > 0.0) || !(blue.wavelength > 0.0)) throw ConfigError("beam wavelengths must be positive");
  for (const auto* beam : {&red, &blue})
    for (const auto& e : beam->modes)
      if (e.power < 0.0) throw ConfigError("mode power must be non-negative");
  for (double p : sweep_red_powers)
    if (p < 0.0) throw ConfigError("sweep powers must be non-negative");
  if (lattice.te01_fraction < 0.0 || lattice.te01_fraction > 1.0)
    throw ConfigError("lattice.te01_fraction must lie in [0, 1]");
  if (lattice.dump_stride < 1 || field_stride < 1 || bpm.snapshot_stride < 1)
    throw ConfigError("dump strides must be at least 1");
  if (!(bpm.step > 0.0) || !(bpm.dz > 0.0) || !(bpm.length > 0.0)) throw ConfigError("bpm steps must be positive");
  if (bpm.stations < 1) throw ConfigError("bpm.stations must be at least 1");
  mzi.device.validate();
  if (!(mzi.step > 0.0)) throw ConfigError("mzi.step must be positive");
  coupler.device.validate();
  if (!(coupler.supermode_step > 0.0)) throw ConfigError("coupler.supermode_step must be positive");
  for (double eps : surface_sensitivity)
    if (!(eps >= 1.0)) throw ConfigError("surface sensitivity permittivities must be at least 1");
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.what());
  }
  RunConfig cfg;
  cfg.source_text = yaml_text;
  if (!root || root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  Section top(root, "config");

  if (top.has("geometry")) {
    Section s(top.get("geometry"), "geometry");
    auto& g = cfg.geometry;
    s.quantity("core_width", "length", g.core_width);
    s.quantity("core_height", "length", g.core_height);
    s.number("core_index", g.core_index);
    s.number("substrate_index", g.substrate_index);
    s.number("clad_index", g.clad_index);
    s.quantity("substrate_step_height", "length", g.substrate_step_height);
    s.finish();
  }
  if (top.has("grid")) {
    Section s(top.get("grid"), "grid");
    s.quantity("width", "length", cfg.grid.width);
    s.quantity("height", "length", cfg.grid.height);
    s.quantity("step", "length", cfg.grid.step);
    s.finish();
  }
  if (top.has("solver")) {
    Section s(top.get("solver"), "solver");
    s.integer("max_modes", cfg.max_modes);
    s.number("residual_limit", cfg.residual_limit);
    s.quantity("mode_wavelength", "length", cfg.mode_wavelength);
    s.flag("convergence_check", cfg.convergence_check);
    s.integer("field_stride", cfg.field_stride);
    s.finish();
  }
  if (top.has("atom")) {
    Section s(top.get("atom"), "atom");
    auto& a = cfg.atom;
    s.text("name", a.name);
    s.quantity("mass", "mass", a.mass);
    s.quantity("d1_wavelength", "length", a.d1_wavelength);
    s.quantity("d2_wavelength", "length", a.d2_wavelength);
    s.quantity("gamma_d1", "rate", a.gamma_d1);
    s.quantity("gamma_d2", "rate", a.gamma_d2);
    s.number("c3_prefactor", a.c3_prefactor);
    s.finish();
  }
  if (top.has("red")) {
    Section s(top.get("red"), "red");
    parse_beam(s, cfg.red);
  }
  if (top.has("blue")) {
    Section s(top.get("blue"), "blue");
    parse_beam(s, cfg.blue);
  }
  if (top.has("surface")) {
    Section s(top.get("surface"), "surface");
    auto& sp = cfg.surface;
    s.number("permittivity", sp.permittivity);
    s.quantity("reference_wavelength", "length", sp.reference_wavelength);
    s.quantity("linewidth", "rate", sp.linewidth);
    s.number("casimir_switch", sp.casimir_switch);
    s.flag("enabled", sp.enabled);
    if (s.has("sensitivity")) cfg.surface_sensitivity = s.quantity_list("sensitivity", "none");
    s.finish();
  }
  top.flag("gravity", cfg.gravity);
  if (top.has("trap_region")) {
    Section s(top.get("trap_region"), "trap_region");
    auto& r = cfg.region;
    s.quantity("x_min", "length", r.x_min);
    s.quantity("x_max", "length", r.x_max);
    s.quantity("y_min", "length", r.y_min);
    s.quantity("y_max", "length", r.y_max);
    s.integer("z_stations", r.z_stations);
    s.quantity("mask_distance", "length", r.mask_distance);
    s.finish();
  }
  if (top.has("decay")) {
    Section s(top.get("decay"), "decay");
    if (s.has("wavelengths")) cfg.decay.wavelengths = s.quantity_list("wavelengths", "length");
    if (s.has("modes")) {
      cfg.decay.labels.clear();
      const YAML::Node m = s.get("modes");
      if (!m.IsSequence()) throw ConfigError("decay.modes: expected a list of labels");
      for (std::size_t k = 0; k < m.size(); ++k) cfg.decay.labels.push_back(m[k].as<std::string>());
    }
    s.integer("skip_cells", cfg.decay.window.skip_cells);
    s.quantity("extent", "length", cfg.decay.window.extent);
    s.finish();
  }
  if (top.has("sweep")) {
    Section s(top.get("sweep"), "sweep");
    if (s.has("red_powers")) cfg.sweep_red_powers = s.quantity_list("red_powers", "power");
    s.finish();
  }
  if (top.has("lattice")) {
    Section s(top.get("lattice"), "lattice");
    s.quantity("red_power", "power", cfg.lattice.red_power);
    s.number("te01_fraction", cfg.lattice.te01_fraction);
    s.quantity("relative_phase", "angle", cfg.lattice.relative_phase);
    s.integer("dump_stride", cfg.lattice.dump_stride);
    s.finish();
  }
  if (top.has("bpm")) {
    Section s(top.get("bpm"), "bpm");
    auto& b = cfg.bpm;
    s.quantity("wavelength", "length", b.wavelength);
    s.quantity("grid_step", "length", b.step);
    s.quantity("dz", "length", b.dz);
    s.quantity("length", "length", b.length);
    s.quantity("absorber_width", "length", b.absorber_width);
    s.number("absorber_strength", b.absorber_strength);
    s.integer("pade_order", b.pade_order);
    if (s.has("launch")) b.launch = parse_excitations(s.get("launch"), "bpm.launch");
    s.quantity("probe_x", "length", b.probe_x);
    s.quantity("probe_y", "length", b.probe_y);
    s.integer("stations", b.stations);
    s.integer("snapshot_stride", b.snapshot_stride);
    s.finish();
  }
  if (top.has("mzi")) {
    Section s(top.get("mzi"), "mzi");
    auto& d = cfg.mzi.device;
    s.quantity("modulator_length", "length", d.modulator_length);
    s.number("index_shift", d.index_shift);
    s.quantity("wavelength", "length", d.wavelength);
    s.quantity("phase", "angle", d.phase);
    s.flag("analytic_phase", d.analytic_phase);
    s.quantity("grid_step", "length", cfg.mzi.step);
    if (s.has("scan")) cfg.mzi.scan = s.quantity_list("scan", "none");
    s.finish();
  }
  if (top.has("coupler")) {
    Section s(top.get("coupler"), "coupler");
    s.quantity("gap", "length", cfg.coupler.device.gap);
    s.quantity("coupling_length", "length", cfg.coupler.device.coupling_length);
    s.flag("supermode_estimate", cfg.coupler.supermode_estimate);
    s.quantity("supermode_wavelength", "length", cfg.coupler.supermode_wavelength);
    s.quantity("supermode_grid_step", "length", cfg.coupler.supermode_step);
    s.finish();
  }
  if (top.has("chain")) {
    const YAML::Node c = top.get("chain");
    if (!c.IsSequence()) throw ConfigError("chain: expected a list of stages");
    for (std::size_t k = 0; k < c.size(); ++k) {
      Section s(c[k], "chain[" + std::to_string(k) + "]");
      std::string type;
      s.text("type", type);
      ChainStageSpec spec;
      if (type == "mzi") {
        spec.stage.kind = ChainStage::Kind::Mzi;
        std::optional<double> phase;
        s.quantity("phase", "angle", phase);
        double dn = 0.0;
        const bool has_dn = s.has("index_shift");
        s.number("index_shift", dn);
        if (phase.has_value() == has_dn)
          throw ConfigError("chain[" + std::to_string(k) + "]: an MZI stage needs exactly one of phase or index_shift");
        if (phase) spec.stage.theta = *phase;
        if (has_dn) spec.index_shift = dn;
      } else if (type == "coupler") {
        spec.stage.kind = ChainStage::Kind::Coupler;
        spec.stage.coupler = cfg.coupler.device;
        s.quantity("coupling_length", "length", spec.stage.coupler.coupling_length);
        s.quantity("length", "length", spec.stage.length);
      } else {
        throw ConfigError("chain[" + std::to_string(k) + "]: type must be mzi or coupler");
      }
      s.finish();
      cfg.chain.push_back(spec);
    }
  }
  if (top.has("transition")) {
    Section s(top.get("transition"), "transition");
    if (s.has("thetas")) cfg.transition.thetas = s.quantity_list("thetas", "angle");
    s.quantity("probe_standoff", "length", cfg.transition.probe_standoff);
    s.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace evatrap
