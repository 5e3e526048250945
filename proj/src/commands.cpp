#include "evatrap/commands.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "evatrap/bpm.hpp"
#include "evatrap/errors.hpp"
#include "evatrap/field.hpp"
#include "evatrap/mode_control.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/trap.hpp"

namespace evatrap {

namespace {

using Clock = std::chrono::steady_clock;
using ModePtr = std::shared_ptr<const GuidedMode>;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double uk(double joules) { return to_microkelvin(joules); }
double khz(double omega) { return omega / (2.0 * constants::pi) * 1e-3; }
double rel(double a, double b) { return b != 0.0 ? (a - b) / b : nan_value; }
std::string num(double v) { return format_number(v); }

// JSON has no NaN or infinity; map them to null.
Json jnum(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Polarization polarization_of(const std::string& label) {
  if (label.rfind("TE", 0) == 0) return Polarization::TE;
  if (label.rfind("TM", 0) == 0) return Polarization::TM;
  throw ConfigError("mode label '" + label + "' must start with TE or TM");
}

class ModeCache {
 public:
  ModeCache(const RunConfig& cfg, Json& timing) : cfg_(cfg), timing_(timing) {}

  const std::vector<ModePtr>& get(double wavelength, Polarization pol, double step) {
    const auto key = std::make_tuple(wavelength, static_cast<int>(pol), step);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    GridSpec g = cfg_.grid;
    g.step = step;
    SolverOptions opt;
    opt.max_modes = cfg_.max_modes;
    opt.residual_limit = cfg_.residual_limit;
    opt.window_low_index = std::max(cfg_.geometry.substrate_index, cfg_.geometry.clad_index);
    const auto t0 = Clock::now();
    auto modes = solve_modes(build_index_profile(cfg_.geometry, g.build()), wavelength, pol, opt);
    const double elapsed = seconds_since(t0);
    std::vector<ModePtr> out;
    double worst = 0.0;
    for (auto& m : modes) {
      worst = std::max(worst, m.residual);
      out.push_back(std::make_shared<const GuidedMode>(std::move(m)));
    }
    Json entry;
    entry["wavelength_nm"] = wavelength * 1e9;
    entry["polarization"] = to_string(pol);
    entry["grid_step_nm"] = step * 1e9;
    entry["modes"] = out.size();
    entry["max_residual"] = worst;
    solves_.push_back(entry);
    timing_["solves"].push_back({{"wavelength_nm", wavelength * 1e9},
                                 {"polarization", to_string(pol)},
                                 {"grid_step_nm", step * 1e9},
                                 {"seconds", elapsed}});
    return cache_.emplace(key, std::move(out)).first->second;
  }

  ModePtr find(double wavelength, const std::string& label, double step) {
    for (const auto& m : get(wavelength, polarization_of(label), step))
      if (m->label == label) return m;
    return nullptr;
  }

  ModePtr require(double wavelength, const std::string& label, double step) {
    auto m = find(wavelength, label, step);
    if (!m)
      throw DomainError(label + " is not guided at " + num(wavelength * 1e9) + " nm on a " + num(step * 1e9) +
                        " nm grid");
    return m;
  }

  const Json& solves() const { return solves_; }

 private:
  const RunConfig& cfg_;
  Json& timing_;
  std::map<std::tuple<double, int, double>, std::vector<ModePtr>> cache_;
  Json solves_ = Json::array();
};

struct Context {
  const RunConfig& cfg;
  OutputDir out;
  int threads;
  ModeCache& cache;
  Json& timing;

  double step() const { return cfg.grid.step; }
  double coarse() const { return 2.0 * cfg.grid.step; }
};

Beam make_beam(const BeamSpec& spec, Context& c, double step) {
  Beam b;
  b.wavelength = spec.wavelength;
  for (const auto& e : spec.modes) b.excitations.push_back({c.cache.require(spec.wavelength, e.label, step), e.power, e.phase});
  return b;
}

TwoColorConfig two_color(Context& c, double step) {
  TwoColorConfig tc;
  tc.red = make_beam(c.cfg.red, c, step);
  tc.blue = make_beam(c.cfg.blue, c, step);
  tc.atom = c.cfg.atom;
  tc.surface = c.cfg.surface;
  tc.include_gravity = c.cfg.gravity;
  tc.geometry = c.cfg.geometry;
  return tc;
}

Json trap_json(const TrapReport& r) {
  Json j;
  j["x_um"] = r.x * 1e6;
  j["y_um"] = r.y * 1e6;
  j["z_um"] = r.z * 1e6;
  j["standoff_um"] = r.standoff * 1e6;
  j["u_min_uK"] = uk(r.u_min);
  j["depth_uK"] = uk(r.depth);
  j["depth_saddle_uK"] = uk(r.depth_saddle);
  j["depth_transverse_uK"] = uk(r.depth_transverse);
  j["escape_route"] = r.escape_route;
  j["well_bottom_uK"] = uk(r.well_bottom);
  j["freq_kHz"] = {khz(r.omega[0]), khz(r.omega[1]), khz(r.omega[2])};
  j["freq_axis_fd_kHz"] = {khz(r.omega_axis_fd[0]), khz(r.omega_axis_fd[1]), khz(r.omega_axis_fd[2])};
  j["hessian_vs_fd"] = r.hessian_vs_fd;
  j["gradient_residual"] = r.gradient_residual;
  j["localization_nm"] = {r.localization[0] * 1e9, r.localization[1] * 1e9, r.localization[2] * 1e9};
  j["mode_spacing_uK"] = uk(r.mode_spacing);
  j["hbar_omega_y_uK"] = uk(constants::hbar * r.omega[1]);
  j["intensity_red_W_m2"] = r.intensity_red;
  j["intensity_blue_W_m2"] = r.intensity_blue;
  j["gamma_red_per_s"] = r.gamma_red;
  j["gamma_blue_per_s"] = r.gamma_blue;
  j["gamma_sc_per_s"] = r.gamma_sc;
  j["tau_coh_ms"] = jnum(r.tau_coh * 1e3);
  j["tau_coh_times_gamma"] = jnum(r.tau_coh * r.gamma_sc);
  j["tau_trap_s"] = jnum(r.tau_trap);
  j["tau_trap_alt_s"] = jnum(r.tau_trap_alt);
  j["valid"] = r.valid;
  j["note"] = r.note;
  return j;
}

// --- modes -----------------------------------------------------------------

double max_overlap(const std::vector<ModePtr>& modes) {
  double worst = 0.0;
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = a + 1; b < modes.size(); ++b) {
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t k = 0; k < modes[a]->field.size(); ++k) {
        ab += modes[a]->field[k] * modes[b]->field[k];
        aa += modes[a]->field[k] * modes[a]->field[k];
        bb += modes[b]->field[k] * modes[b]->field[k];
      }
      worst = std::max(worst, std::abs(ab) / std::sqrt(aa * bb));
    }
  return worst;
}

Json cmd_modes(Context& c) {
  const double lam = c.cfg.mode_wavelength;
  Table table({"label", "polarization", "beta_per_m", "n_eff", "decay_length_um", "decay_scalar_um", "confinement",
               "residual"});
  Json result;
  result["wavelength_nm"] = lam * 1e9;
  result["grid_step_nm"] = c.step() * 1e9;
  Json list = Json::array();
  std::vector<std::string> higher;
  for (const auto pol : {Polarization::TE, Polarization::TM}) {
    const auto t0 = Clock::now();
    const auto& modes = c.cache.get(lam, pol, c.step());
    c.timing[std::string("modes_solve_") + to_string(pol) + "_s"] = seconds_since(t0);
    for (const auto& m : modes) {
      double fit = nan_value;
      try {
        fit = decay_length(*m, c.cfg.geometry, std::nullopt, c.cfg.decay.window).length;
      } catch (const FitError&) {
      }
      table.add({m->label, to_string(pol), num(m->beta), num(m->effective_index()), num(fit * 1e6),
                 num(decay_length_scalar_estimate(*m) * 1e6), num(m->confinement), num(m->residual)});
      list.push_back({{"label", m->label},
                      {"beta_per_m", m->beta},
                      {"n_eff", m->effective_index()},
                      {"decay_length_um", jnum(fit * 1e6)},
                      {"residual", m->residual}});
      c.out.write_field("field_" + m->label + ".csv", m->grid, [&](std::size_t k) { return m->field[k]; },
                        c.cfg.field_stride, "E");
      if (pol == Polarization::TE && m->nodes_x + m->nodes_y > 1) higher.push_back(m->label);
    }
    result[std::string("orthogonality_") + to_string(pol)] = max_overlap(modes);
  }
  c.out.write("modes.csv", table);
  result["modes"] = list;
  result["higher_te_guided"] = higher;
  if (list.empty()) result["warning"] = "no guided modes in the window";

  if (c.cfg.convergence_check) {
    Json conv = Json::object();
    for (const auto& m : c.cache.get(lam, Polarization::TE, c.step()))
      if (auto coarse = c.cache.find(lam, m->label, c.coarse()))
        conv[m->label + "_beta_rel"] = rel(m->beta, coarse->beta);
    result["grid_convergence"] = conv;
  }
  return result;
}

// --- decay -----------------------------------------------------------------

Json cmd_decay(Context& c) {
  const auto& spec = c.cfg.decay;
  const auto grid = c.cfg.grid.build();
  const auto rows = dispersion_scan(c.cfg.geometry, grid, spec.wavelengths, spec.labels, c.threads, spec.window);
  Table table({"wavelength_nm", "label", "beta_per_m", "decay_length_um", "decay_scalar_um", "cut_off", "note"});
  std::map<double, std::map<std::string, double>> by_lambda;
  for (const auto& r : rows) {
    table.add({num(r.wavelength * 1e9), r.label, num(r.beta), num(r.decay_length * 1e6), num(r.decay_scalar * 1e6),
               r.cut_off ? "1" : "0", r.note});
    if (!r.cut_off) by_lambda[r.wavelength][r.label] = r.decay_length;
  }
  c.out.write("decay.csv", table);

  Json result;
  result["rows"] = rows.size();
  bool ordering = true;
  std::vector<std::string> violations;
  for (const auto& [lam, l] : by_lambda) {
    if (!l.count("TE01") || !l.count("TM00") || !l.count("TE00")) continue;
    if (!(l.at("TE01") > l.at("TM00") && l.at("TM00") > l.at("TE00"))) {
      ordering = false;
      violations.push_back(num(lam * 1e9) + " nm");
    }
  }
  result["ordering_te01_tm00_te00"] = ordering;
  result["ordering_violations"] = violations;

  if (!c.cfg.red.modes.empty() && !c.cfg.blue.modes.empty()) {
    const auto red = c.cache.require(c.cfg.red.wavelength, c.cfg.red.modes.front().label, c.step());
    const auto blue = c.cache.require(c.cfg.blue.wavelength, c.cfg.blue.modes.front().label, c.step());
    const double lr = decay_length(*red, c.cfg.geometry, std::nullopt, spec.window).length;
    const double lb = decay_length(*blue, c.cfg.geometry, std::nullopt, spec.window).length;
    result["red"] = {{"label", red->label}, {"wavelength_nm", red->wavelength * 1e9}, {"decay_length_um", lr * 1e6}};
    result["blue"] = {{"label", blue->label}, {"wavelength_nm", blue->wavelength * 1e9}, {"decay_length_um", lb * 1e6}};
    result["alpha_L"] = relative_decay_difference(lr, lb);
    if (c.cfg.convergence_check) {
      const auto rc = c.cache.require(c.cfg.red.wavelength, red->label, c.coarse());
      const auto bc = c.cache.require(c.cfg.blue.wavelength, blue->label, c.coarse());
      result["grid_convergence"] = {
          {"red_decay_rel", rel(lr, decay_length(*rc, c.cfg.geometry, std::nullopt, spec.window).length)},
          {"blue_decay_rel", rel(lb, decay_length(*bc, c.cfg.geometry, std::nullopt, spec.window).length)}};
    }
  }
  return result;
}

// --- guide -----------------------------------------------------------------

void write_potential_slice(OutputDir& out, const std::string& name, const PotentialMap& map, int k, int stride) {
  const auto& g = map.grid;
  Table t({"x_um", "y_um", "u_total_uK", "u_red_uK", "u_blue_uK", "u_surface_uK"});
  for (int j = 0; j < g.ny; j += stride)
    for (int i = 0; i < g.nx; i += stride) {
      const std::size_t cell = g.index(i, j);
      const std::size_t idx = map.index(i, j, k);
      t.add({num(g.x(i) * 1e6), num(g.y(j) * 1e6), num(uk(map.total[idx])), num(uk(map.red[idx])),
             num(uk(map.blue[idx])), num(uk(map.surface[cell]))});
    }
  out.write(name, t);
}

void write_vertical_profile(OutputDir& out, const std::string& name, const PotentialMap& map, int i, int k) {
  const auto& g = map.grid;
  Table t({"y_um", "u_total_uK", "u_red_uK", "u_blue_uK", "u_surface_uK"});
  for (int j = 0; j < g.ny; ++j) {
    const std::size_t idx = map.index(i, j, k);
    t.add({num(g.y(j) * 1e6), num(uk(map.total[idx])), num(uk(map.red[idx])), num(uk(map.blue[idx])),
           num(uk(map.surface[g.index(i, j)]))});
  }
  out.write(name, t);
}

Json cmd_guide(Context& c) {
  const TwoColorConfig tc = two_color(c, c.step());
  PotentialMap map;
  const auto t0 = Clock::now();
  const TrapReport r = analyze_trap(tc, c.cfg.region, c.threads, &map);
  c.timing["guide_trap_s"] = seconds_since(t0);
  write_potential_slice(c.out, "potential_xy.csv", map, 0, 1);
  write_vertical_profile(c.out, "potential_y.csv", map, map.grid.nearest_i(r.x), 0);

  Json result;
  result["red_power_mW"] = tc.red.power() * 1e3;
  result["blue_power_mW"] = tc.blue.power() * 1e3;
  result["trap"] = trap_json(r);
  result["lifetime_conventions"] = {{"tau_trap_s", jnum(r.tau_trap)},
                                    {"tau_trap_alt_s", jnum(r.tau_trap_alt)},
                                    {"ratio", jnum(r.tau_trap / r.tau_trap_alt)}};
  Json sens = Json::array();
  for (double eps : c.cfg.surface_sensitivity) {
    TwoColorConfig alt = tc;
    alt.surface.permittivity = eps;
    Json row{{"permittivity", eps}};
    try {
      const TrapReport a = analyze_trap(alt, c.cfg.region, c.threads);
      row["depth_uK"] = uk(a.depth);
      row["standoff_um"] = a.standoff * 1e6;
      row["depth_change_rel"] = rel(a.depth, r.depth);
    } catch (const NoTrapMinimum& e) {
      row["error"] = e.what();
    }
    sens.push_back(row);
  }
  result["surface_sensitivity"] = sens;
  if (c.cfg.convergence_check) {
    const TrapReport a = analyze_trap(two_color(c, c.coarse()), c.cfg.region, c.threads);
    result["grid_convergence"] = {{"coarse_step_nm", c.coarse() * 1e9},
                                  {"depth_rel", rel(r.depth, a.depth)},
                                  {"standoff_rel", rel(r.standoff, a.standoff)},
                                  {"freq_x_rel", rel(r.omega[0], a.omega[0])},
                                  {"freq_y_rel", rel(r.omega[1], a.omega[1])}};
  }
  return result;
}

// --- sweep -----------------------------------------------------------------

Json cmd_sweep(Context& c) {
  const TwoColorConfig tc = two_color(c, c.step());
  const SweepResult s = power_sweep(tc, c.cfg.sweep_red_powers, c.cfg.region, c.threads);
  Table table({"red_power_mW", "standoff_um", "depth_uK", "gamma_sc_per_s", "tau_coh_ms", "tau_trap_s",
               "tau_trap_alt_s", "freq_x_kHz", "freq_y_kHz", "valid", "note"});
  Json rows = Json::array();
  for (const auto& row : s.rows) {
    if (!row.report) {
      table.add({num(row.red_power * 1e3), "nan", "nan", "nan", "nan", "nan", "nan", "nan", "nan", "0", row.error});
      rows.push_back({{"red_power_mW", row.red_power * 1e3}, {"error", row.error}});
      continue;
    }
    const auto& r = *row.report;
    table.add({num(row.red_power * 1e3), num(r.standoff * 1e6), num(uk(r.depth)), num(r.gamma_sc),
               num(r.tau_coh * 1e3), num(r.tau_trap), num(r.tau_trap_alt), num(khz(r.omega[0])),
               num(khz(r.omega[1])), r.valid ? "1" : "0", r.note});
    Json j = trap_json(r);
    j["red_power_mW"] = row.red_power * 1e3;
    rows.push_back(j);
  }
  c.out.write("sweep.csv", table);
  return {{"rows", rows},
          {"standoff_decreasing", s.standoff_decreasing},
          {"depth_increasing", s.depth_increasing},
          {"diagnostics", s.diagnostics}};
}

// --- lattice ---------------------------------------------------------------

TwoColorConfig lattice_config(Context& c, double step, RedModes* modes = nullptr) {
  TwoColorConfig tc = two_color(c, step);
  const auto& l = c.cfg.lattice;
  const double lam = c.cfg.red.wavelength;
  const auto te00 = c.cache.require(lam, "TE00", step);
  const auto te01 = c.cache.require(lam, "TE01", step);
  if (modes) *modes = {te00, te01};
  tc.red.excitations.clear();
  const double p1 = l.red_power * l.te01_fraction;
  const double p0 = l.red_power - p1;
  if (p0 > 0.0) tc.red.excitations.push_back({te00, p0, l.relative_phase});
  if (p1 > 0.0) tc.red.excitations.push_back({te01, p1, 0.0});
  return tc;
}

Json cmd_lattice(Context& c) {
  RedModes modes;
  const TwoColorConfig tc = lattice_config(c, c.step(), &modes);
  PotentialMap map;
  const auto t0 = Clock::now();
  const LatticeReport lr = lattice_analysis(tc, c.cfg.region, c.threads, &map);
  c.timing["lattice_s"] = seconds_since(t0);

  const auto& g = map.grid;
  const int stride = c.cfg.lattice.dump_stride;
  Table stack({"k", "z_um", "x_um", "y_um", "u_total_uK"});
  for (int k = 0; k < map.nz(); ++k)
    for (int j = 0; j < g.ny; j += stride)
      for (int i = 0; i < g.nx; i += stride)
        stack.add({std::to_string(k), num(map.z[k] * 1e6), num(g.x(i) * 1e6), num(g.y(j) * 1e6),
                   num(uk(map.total[map.index(i, j, k)]))});
  c.out.write("lattice_stack.csv", stack);
  const int im = g.nearest_i(lr.site.x);
  const int jm = g.nearest_j(lr.site.y);
  Table yz({"z_um", "y_um", "u_total_uK"});
  Table xz({"z_um", "x_um", "u_total_uK"});
  for (int k = 0; k < map.nz(); ++k) {
    for (int j = 0; j < g.ny; ++j) yz.add({num(map.z[k] * 1e6), num(g.y(j) * 1e6), num(uk(map.total[map.index(im, j, k)]))});
    for (int i = 0; i < g.nx; ++i) xz.add({num(map.z[k] * 1e6), num(g.x(i) * 1e6), num(uk(map.total[map.index(i, jm, k)]))});
  }
  c.out.write("lattice_yz.csv", yz);
  c.out.write("lattice_xz.csv", xz);

  Json result;
  result["red_power_mW"] = c.cfg.lattice.red_power * 1e3;
  result["te01_fraction"] = c.cfg.lattice.te01_fraction;
  result["period_um"] = lr.period * 1e6;
  result["period_analytic_um"] = beat_period(modes.te00->beta, modes.te01->beta) * 1e6;
  result["z_stations"] = map.nz();
  result["degenerate"] = lr.degenerate;
  result["note"] = lr.note;
  result["site"] = trap_json(lr.site);
  Json sites = Json::array();
  for (double z : lr.site_z) sites.push_back(z * 1e6);
  result["site_z_um"] = sites;
  result["lifetime_conventions"] = {{"tau_trap_s", jnum(lr.site.tau_trap)},
                                    {"tau_trap_alt_s", jnum(lr.site.tau_trap_alt)},
                                    {"ratio", jnum(lr.site.tau_trap / lr.site.tau_trap_alt)}};

  if (!c.cfg.transition.thetas.empty()) {
    TwoColorConfig base = tc;
    base.red.excitations.clear();
    const auto rows = guide_lattice_transition(base, modes, c.cfg.lattice.red_power, c.cfg.coupler.device,
                                               c.cfg.transition.thetas, c.cfg.region, c.cfg.transition.probe_standoff,
                                               c.threads);
    Table t({"theta_pi", "p_te00", "p_te10", "p_te01", "corrugation_uK", "period_um", "standoff_um", "depth_uK",
             "note"});
    Json jt = Json::array();
    for (const auto& r : rows) {
      const double p = r.lattice ? r.lattice->period : nan_value;
      const double s = r.lattice ? r.lattice->site.standoff : nan_value;
      const double d = r.lattice ? r.lattice->site.depth : nan_value;
      t.add({num(r.theta / constants::pi), num(std::norm(r.state.te00)), num(std::norm(r.state.te10)),
             num(std::norm(r.state.te01)), num(uk(r.corrugation)), num(p * 1e6), num(s * 1e6), num(uk(d)), r.error});
      jt.push_back({{"theta_pi", r.theta / constants::pi},
                    {"corrugation_uK", uk(r.corrugation)},
                    {"depth_uK", jnum(uk(d))},
                    {"note", r.error}});
    }
    c.out.write("transition.csv", t);
    result["transition"] = jt;
  }
  if (c.cfg.convergence_check) {
    try {
      const LatticeReport a = lattice_analysis(lattice_config(c, c.coarse()), c.cfg.region, c.threads);
      result["grid_convergence"] = {{"coarse_step_nm", c.coarse() * 1e9},
                                    {"period_rel", rel(lr.period, a.period)},
                                    {"depth_rel", rel(lr.site.depth, a.site.depth)},
                                    {"standoff_rel", rel(lr.site.standoff, a.site.standoff)}};
    } catch (const NoTrapMinimum& e) {
      result["grid_convergence"] = {{"error", e.what()}};
    }
  }
  return result;
}

// --- bpm -------------------------------------------------------------------

Json cmd_bpm(Context& c) {
  const auto& spec = c.cfg.bpm;
  if (spec.launch.empty()) throw ConfigError("bpm.launch must list at least one mode");
  std::vector<ModeExcitation> launch;
  for (const auto& e : spec.launch) launch.push_back({c.cache.require(spec.wavelength, e.label, spec.step), e.power, e.phase});
  check_composable(launch);
  const auto& grid = launch.front().mode->grid;
  const double k0 = 2.0 * constants::pi / spec.wavelength;
  double beta_mean = 0.0;
  for (const auto& e : launch) beta_mean += e.mode->beta / static_cast<double>(launch.size());

  BpmRun run;
  run.launch = superpose(launch, 0.0);
  run.wavelength = spec.wavelength;
  run.dz = spec.dz;
  run.z_extent = spec.length;
  run.reference_index = beta_mean / k0;
  run.absorber_width = spec.absorber_width;
  run.absorber_strength = spec.absorber_strength;
  run.pade_order = spec.pade_order;
  for (int s = 0; s < spec.stations; ++s)
    run.stations.push_back(spec.stations == 1 ? spec.length : spec.length * s / (spec.stations - 1));
  run.probes = {{spec.probe_x, spec.probe_y}};
  run.projection = launch.front().mode->field;

  const auto t0 = Clock::now();
  const BpmResult res = bpm_propagate(run, build_index_profile(c.cfg.geometry, grid));
  c.timing["bpm_s"] = seconds_since(t0);

  Table trace({"z_um", "power_mW", "probe_intensity_W_m2", "overlap_re", "overlap_im"});
  const double p0 = res.power.front();
  double drift = 0.0;
  for (std::size_t k = 0; k < res.trace_z.size(); ++k) {
    trace.add({num(res.trace_z[k] * 1e6), num(res.power[k] * 1e3), num(res.probe_intensity[0][k]),
               num(res.projection[k].real()), num(res.projection[k].imag())});
    drift = std::max(drift, std::abs(res.power[k] / p0 - 1.0));
  }
  c.out.write("bpm_trace.csv", trace);
  for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
    const auto inten = res.snapshots[s].intensity_map();
    c.out.write_field("bpm_snapshot_" + std::to_string(s) + ".csv", grid, [&](std::size_t k) { return inten[k]; },
                      spec.snapshot_stride, "intensity_W_m2");
  }

  Json result;
  result["grid_step_nm"] = spec.step * 1e9;
  result["dz_um"] = spec.dz * 1e6;
  result["length_um"] = spec.length * 1e6;
  result["launch_power_mW"] = total_power(launch) * 1e3;
  result["power_drift"] = drift;
  const double beta_fit = phase_slope(res.trace_z, res.projection);
  result["beta_phase_slope_per_m"] = beta_fit;
  result["beta_phase_slope_rel"] = rel(beta_fit, launch.front().mode->beta);
  Json station = Json::array();
  for (double z : res.station_z) station.push_back(z * 1e6);
  result["station_z_um"] = station;

  std::vector<double> betas;
  for (const auto& e : launch)
    if (e.power > 0.0 && std::none_of(betas.begin(), betas.end(), [&](double b) { return b == e.mode->beta; }))
      betas.push_back(e.mode->beta);
  const auto& probe = res.probe_intensity[0];
  if (betas.size() >= 2) {
    const double period = beat_period(betas[0], betas[1]);
    double fit = nan_value;
    try {
      fit = fit_oscillation_period(res.trace_z, probe, 0.5 * period, 2.0 * period);
    } catch (const FitError& e) {
      result["fit_error"] = e.what();
    }
    result["period_analytic_um"] = period * 1e6;
    result["period_fit_um"] = jnum(fit * 1e6);
    result["period_fit_rel"] = jnum(rel(fit, period));
  } else {
    const auto [lo, hi] = std::minmax_element(probe.begin(), probe.end());
    result["stationarity"] = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
  }
  if (c.cfg.convergence_check) {
    Json conv = Json::object();
    for (const auto& e : launch)
      if (auto coarse = c.cache.find(spec.wavelength, e.mode->label, 2.0 * spec.step))
        conv[e.mode->label + "_beta_rel"] = rel(e.mode->beta, coarse->beta);
    result["grid_convergence"] = conv;
  }
  return result;
}

// --- mzi -------------------------------------------------------------------

Json cmd_mzi(Context& c) {
  const auto& spec = c.cfg.mzi;
  const auto& dev = spec.device;
  GridSpec gs = c.cfg.grid;
  gs.step = spec.step;
  const auto grid = gs.build();
  const auto te00 = c.cache.require(dev.wavelength, "TE00", spec.step);
  auto phase_for = [&](double dn, const ModePtr& base, const SimulationGrid& g) {
    MziDevice d = dev;
    d.index_shift = dn;
    return modulator_phase(d, c.cfg.geometry, g, base->beta, base->confinement);
  };

  Json result;
  const double theta = phase_for(dev.index_shift, te00, grid);
  const double theta_half = dev.phase ? *dev.phase / 2.0 : phase_for(0.5 * dev.index_shift, te00, grid);
  result["index_shift"] = dev.index_shift;
  result["modulator_length_um"] = dev.modulator_length * 1e6;
  result["wavelength_nm"] = dev.wavelength * 1e9;
  result["theta_pi"] = theta / constants::pi;
  result["theta_half_shift_pi"] = theta_half / constants::pi;
  result["theta_analytic_pi"] =
      2.0 * dev.index_shift * dev.modulator_length * te00->confinement / dev.wavelength;
  result["confinement"] = te00->confinement;
  const Eigen::Matrix2cd m = mzi_matrix(theta);
  result["unitarity_error"] = (m.adjoint() * m - Eigen::Matrix2cd::Identity()).norm();
  const ModeVector out = mzi_apply(theta, {});
  result["output"] = {{"p_te00", std::norm(out.c0)}, {"p_te10", std::norm(out.c1)}};

  std::vector<double> scan = spec.scan;
  if (scan.empty())
    for (int k = 0; k <= 8; ++k) scan.push_back(0.0025 * k);
  const auto rows = superposition_vs_dn(dev, c.cfg.geometry, grid, scan);
  Table pop({"index_shift", "theta_pi", "p_te00", "p_te10", "sum"});
  double worst_sum = 0.0;
  for (const auto& r : rows) {
    pop.add({num(r.index_shift), num(r.theta / constants::pi), num(r.p0), num(r.p1), num(r.p0 + r.p1)});
    worst_sum = std::max(worst_sum, std::abs(r.p0 + r.p1 - 1.0));
  }
  c.out.write("mzi_populations.csv", pop);
  result["population_sum_error"] = worst_sum;

  const auto& cd = c.cfg.coupler.device;
  Table cp({"z_um", "p_te10", "p_te01"});
  for (int k = 0; k <= 48; ++k) {
    const double z = 2.0 * cd.coupling_length * k / 48.0;
    const ModeVector o = coupler_apply(cd, z, {});
    cp.add({num(z * 1e6), num(std::norm(o.c0)), num(std::norm(o.c1))});
  }
  c.out.write("coupler.csv", cp);
  Json coupler{{"gap_um", cd.gap * 1e6},
               {"coupling_length_um", cd.coupling_length * 1e6},
               {"kappa_per_m", cd.kappa()},
               {"transfer_at_Lc", std::norm(coupler_apply(cd, cd.coupling_length, {}).c1)},
               {"transfer_at_half_Lc", std::norm(coupler_apply(cd, 0.5 * cd.coupling_length, {}).c1)}};
  if (c.cfg.coupler.supermode_estimate) {
    try {
      const auto t0 = Clock::now();
      const auto est = supermode_kappa(cd, c.cfg.geometry, c.cfg.coupler.supermode_wavelength, c.cfg.coupler.supermode_step);
      c.timing["supermode_s"] = seconds_since(t0);
      coupler["supermode_kappa_per_m"] = est.kappa;
      coupler["supermode_coupling_length_um"] = est.coupling_length * 1e6;
      coupler["supermode_kappa_ratio"] = est.kappa / cd.kappa();
    } catch (const Error& e) {
      coupler["supermode_error"] = e.what();
    }
  }
  result["coupler"] = coupler;

  std::vector<ChainStage> stages;
  if (c.cfg.chain.empty()) {
    ChainStage mzi;
    mzi.theta = theta;
    ChainStage cpl;
    cpl.kind = ChainStage::Kind::Coupler;
    cpl.coupler = cd;
    stages = {mzi, cpl};
  }
  for (const auto& s : c.cfg.chain) {
    ChainStage st = s.stage;
    if (s.index_shift) st.theta = phase_for(*s.index_shift, te00, grid);
    stages.push_back(st);
  }
  const auto steps = run_chain(stages);
  Table chain({"step", "stage", "p_te00", "p_te10", "p_te01", "norm"});
  Json jc = Json::array();
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k].state;
    chain.add({std::to_string(k), steps[k].name, num(std::norm(s.te00)), num(std::norm(s.te10)), num(std::norm(s.te01)),
               num(s.norm2())});
    jc.push_back({{"stage", steps[k].name},
                  {"p_te00", std::norm(s.te00)},
                  {"p_te10", std::norm(s.te10)},
                  {"p_te01", std::norm(s.te01)}});
  }
  c.out.write("chain.csv", chain);
  result["chain"] = jc;

  if (c.cfg.convergence_check && !dev.phase) {
    GridSpec cg = gs;
    cg.step = 2.0 * spec.step;
    const auto coarse = c.cache.require(dev.wavelength, "TE00", cg.step);
    result["grid_convergence"] = {{"theta_rel", rel(theta, phase_for(dev.index_shift, coarse, cg.build()))}};
  }
  return result;
}

// --- dispatch --------------------------------------------------------------

using Handler = Json (*)(Context&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h{
      {"modes", cmd_modes}, {"decay", cmd_decay},     {"guide", cmd_guide}, {"sweep", cmd_sweep},
      {"lattice", cmd_lattice}, {"bpm", cmd_bpm}, {"mzi", cmd_mzi},
  };
  return h;
}

Json cmd_reproduce(Context& c) {
  Json result;
  for (const auto& [name, fn] : handlers()) {
    Context sub{c.cfg, c.out.sub(name), c.threads, c.cache, c.timing};
    const auto t0 = Clock::now();
    result[name] = fn(sub);
    c.timing[name + "_s"] = seconds_since(t0);
  }
  return result;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& h : handlers()) n.push_back(h.first);
    n.push_back("reproduce");
    return n;
  }();
  return names;
}

Json run_command(const std::string& command, const RunConfig& config, const CommandOptions& options) {
  Handler fn = nullptr;
  for (const auto& [name, h] : handlers())
    if (name == command) fn = h;
  if (!fn && command != "reproduce") throw ConfigError("unknown command '" + command + "'");
  config.validate();

  Json timing = Json::object();
  ModeCache cache(config, timing);
  Context ctx{config, OutputDir(options.out_dir), std::max(options.threads, 1), cache, timing};
  Json report;
  report["command"] = command;
  report["config"] = config.source_text;
  report["grid_step_nm"] = config.grid.step * 1e9;
  report["threads"] = ctx.threads;
  const auto t0 = Clock::now();
  try {
    Json results = fn ? fn(ctx) : cmd_reproduce(ctx);
    results["solver"] = cache.solves();
    ctx.out.write("results.json", results);
    report["status"] = "ok";
    report["results"] = std::move(results);
  } catch (const std::exception& e) {
    report["status"] = "error";
    report["error"] = e.what();
    report["solver"] = cache.solves();
    timing["total_s"] = seconds_since(t0);
    report["timing"] = timing;
    ctx.out.write("run_report.json", report);
    throw;
  }
  timing["total_s"] = seconds_since(t0);
  report["timing"] = timing;
  report["output_hash"] = ctx.out.content_hash();
  report["files"] = ctx.out.files();
  ctx.out.write("run_report.json", report);
  return report;
}

}  // namespace evatrap
