#include "evatrap.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "evatrap/commands.hpp"
#include "evatrap/config.hpp"
#include "evatrap/errors.hpp"
#include "evatrap/mode_control.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/trap.hpp"

struct evatrap_config {
  evatrap::RunConfig cfg;
};

struct evatrap_mode_set {
  std::vector<evatrap::GuidedMode> modes;
};

namespace {

thread_local std::string last_error;

evatrap_status fail(evatrap_status s, const std::string& what) {
  last_error = what;
  return s;
}

template <class F>
evatrap_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return EVATRAP_OK;
  } catch (const evatrap::ConfigError& e) {
    return fail(EVATRAP_ERR_CONFIG, e.what());
  } catch (const evatrap::SolverError& e) {
    return fail(EVATRAP_ERR_SOLVER, e.what());
  } catch (const evatrap::NoTrapMinimum& e) {
    return fail(EVATRAP_ERR_NO_TRAP, e.what());
  } catch (const evatrap::DomainError& e) {
    return fail(EVATRAP_ERR_DOMAIN, e.what());
  } catch (const evatrap::FitError& e) {
    return fail(EVATRAP_ERR_FIT, e.what());
  } catch (const evatrap::CompositionError& e) {
    return fail(EVATRAP_ERR_COMPOSITION, e.what());
  } catch (const std::exception& e) {
    return fail(EVATRAP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(EVATRAP_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

evatrap::ModeVector read_pair(const double in[4]) { return {{in[0], in[1]}, {in[2], in[3]}}; }

void write_pair(const evatrap::ModeVector& v, double out[4]) {
  out[0] = v.c0.real();
  out[1] = v.c0.imag();
  out[2] = v.c1.real();
  out[3] = v.c1.imag();
}

}  // namespace

extern "C" {

const char* evatrap_version(void) { return "0.1.0"; }

const char* evatrap_last_error(void) { return last_error.c_str(); }

evatrap_status evatrap_config_load(const char* path, evatrap_config** out) {
  if (!path || !out) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new evatrap_config{evatrap::load_config(path)}; });
}

evatrap_status evatrap_config_parse(const char* yaml_text, evatrap_config** out) {
  if (!yaml_text || !out) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new evatrap_config{evatrap::parse_config(yaml_text)}; });
}

evatrap_status evatrap_config_set_grid_step(evatrap_config* config, double step) {
  if (!config) return fail(EVATRAP_ERR_ARGUMENT, "null config");
  return guarded([&] {
    evatrap::RunConfig next = config->cfg;
    next.grid.step = step;
    next.validate();
    config->cfg = next;
  });
}

void evatrap_config_free(evatrap_config* config) { delete config; }

size_t evatrap_command_count(void) { return evatrap::command_names().size(); }

const char* evatrap_command_name(size_t index) {
  const auto& names = evatrap::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

evatrap_status evatrap_run(const evatrap_config* config, const char* command, const char* out_dir, int threads,
                           char** report_json) {
  if (!config || !command || !out_dir) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  if (report_json) *report_json = nullptr;
  return guarded([&] {
    evatrap::CommandOptions opt;
    opt.out_dir = out_dir;
    opt.threads = threads;
    const auto report = evatrap::run_command(command, config->cfg, opt);
    if (report_json) *report_json = copy_string(report.dump(2));
  });
}

void evatrap_string_free(char* text) { std::free(text); }

evatrap_status evatrap_recoil_energy(const evatrap_config* config, double wavelength, double* joules) {
  if (!config || !joules) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    if (!(wavelength > 0.0)) throw evatrap::DomainError("wavelength must be positive");
    *joules = evatrap::recoil_energy(config->cfg.atom, wavelength);
  });
}

evatrap_status evatrap_dipole_potential(const evatrap_config* config, double intensity, double wavelength,
                                        double* joules) {
  if (!config || !joules) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  return guarded([&] { *joules = evatrap::dipole_potential(intensity, config->cfg.atom, wavelength); });
}

evatrap_status evatrap_scattering_rate(const evatrap_config* config, double intensity, double wavelength,
                                       double* rate) {
  if (!config || !rate) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  return guarded([&] { *rate = evatrap::scattering_rate(intensity, config->cfg.atom, wavelength); });
}

evatrap_status evatrap_surface_potential(const evatrap_config* config, double distance, double* joules) {
  if (!config || !joules) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  return guarded([&] { *joules = evatrap::surface_potential(distance, config->cfg.surface, config->cfg.atom); });
}

evatrap_status evatrap_modes_solve(const evatrap_config* config, double wavelength, evatrap_polarization polarization,
                                   evatrap_mode_set** out) {
  if (!config || !out) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto& c = config->cfg;
    const auto pol = polarization == EVATRAP_TM ? evatrap::Polarization::TM : evatrap::Polarization::TE;
    evatrap::SolverOptions opt;
    opt.max_modes = c.max_modes;
    opt.residual_limit = c.residual_limit;
    opt.window_low_index = std::max(c.geometry.substrate_index, c.geometry.clad_index);
    auto set = std::make_unique<evatrap_mode_set>();
    set->modes = evatrap::solve_modes(evatrap::build_index_profile(c.geometry, c.grid.build()), wavelength, pol, opt);
    *out = set.release();
  });
}

size_t evatrap_mode_set_size(const evatrap_mode_set* set) { return set ? set->modes.size() : 0; }

evatrap_status evatrap_mode_info(const evatrap_mode_set* set, size_t index, char* label, size_t label_size,
                                 double* beta, double* residual) {
  if (!set) return fail(EVATRAP_ERR_ARGUMENT, "null mode set");
  if (index >= set->modes.size()) return fail(EVATRAP_ERR_ARGUMENT, "mode index out of range");
  const auto& m = set->modes[index];
  if (label && label_size > 0) {
    const std::size_t n = std::min(label_size - 1, m.label.size());
    std::memcpy(label, m.label.data(), n);
    label[n] = '\0';
  }
  if (beta) *beta = m.beta;
  if (residual) *residual = m.residual;
  last_error.clear();
  return EVATRAP_OK;
}

void evatrap_mode_set_free(evatrap_mode_set* set) { delete set; }

evatrap_status evatrap_mzi_apply(double theta, const double in[4], double out[4]) {
  if (!in || !out) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  return guarded([&] { write_pair(evatrap::mzi_apply(theta, read_pair(in)), out); });
}

evatrap_status evatrap_coupler_apply(double coupling_length, double z, const double in[4], double out[4]) {
  if (!in || !out) return fail(EVATRAP_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    evatrap::CouplerDevice d;
    d.coupling_length = coupling_length;
    write_pair(evatrap::coupler_apply(d, z, read_pair(in)), out);
  });
}

}  // extern "C"
