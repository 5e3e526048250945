#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evatrap/grid.hpp"
#include "evatrap/mode_control.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/physics.hpp"
#include "evatrap/trap.hpp"

namespace evatrap {

/// Parses "865 nm", "1.5 mW", "0.5 pi", "38.1e6 /s" and similar into SI.
/// `dimension` is one of: length, power, angle, rate, mass, none.
double parse_quantity(const std::string& text, const std::string& dimension);

struct ExcitationSpec {
  std::string label;
  double power = 0.0;
  double phase = 0.0;
};

struct BeamSpec {
  double wavelength = 0.0;
  std::vector<ExcitationSpec> modes;
};

struct GridSpec {
  double width = 3.0e-6;
  double height = 3.0e-6;
  double step = 5.0e-9;

  SimulationGrid build() const { return SimulationGrid::centered(width, height, step); }
};

struct DecaySpec {
  std::vector<double> wavelengths{700e-9, 750e-9, 800e-9, 865e-9, 900e-9};
  std::vector<std::string> labels{"TE00", "TM00", "TE01"};
  DecayWindow window;
};

struct LatticeSpec {
  double red_power = 1.5e-3;
  double te01_fraction = 0.5;    // share of red power in TE01
  double relative_phase = 0.0;   // theta_0 - theta_1
  int dump_stride = 4;
};

struct BpmSpec {
  double wavelength = 865e-9;
  double step = 10e-9;  // transverse grid step of the BPM run
  double dz = 0.02e-6;
  double length = 6.0e-6;
  double absorber_width = 0.2e-6;
  double absorber_strength = 0.5;
  int pade_order = 2;
  std::vector<ExcitationSpec> launch{{"TE00", 0.5e-3, 0.0}, {"TE01", 0.5e-3, 0.0}};
  double probe_x = 0.0;
  double probe_y = 0.2e-6;
  int stations = 5;
  int snapshot_stride = 2;
};

struct MziSpec {
  MziDevice device;
  double step = 10e-9;
  std::vector<double> scan;  // index shifts for the population table
};

struct CouplerSpec {
  CouplerDevice device;
  bool supermode_estimate = true;
  double supermode_wavelength = 865e-9;
  double supermode_step = 10e-9;
};

struct ChainStageSpec {
  ChainStage stage;
  std::optional<double> index_shift;  // MZI phase from the modulator model
};

struct TransitionSpec {
  std::vector<double> thetas;
  double probe_standoff = 0.08e-6;
};

struct RunConfig {
  WaveguideGeometry geometry;
  GridSpec grid;
  int max_modes = 6;
  double residual_limit = 1e-6;
  AtomSpecies atom = rubidium87();
  BeamSpec red{865e-9, {{"TE01", 1.5e-3, 0.0}}};
  BeamSpec blue{700e-9, {{"TE00", 40e-3, 0.0}}};
  SurfaceParams surface;
  bool gravity = false;
  TrapRegion region;
  double mode_wavelength = 865e-9;  // wavelength for `modes`
  DecaySpec decay;
  std::vector<double> sweep_red_powers{0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3, 2.5e-3};
  LatticeSpec lattice;
  BpmSpec bpm;
  MziSpec mzi;
  CouplerSpec coupler;
  std::vector<ChainStageSpec> chain;
  TransitionSpec transition;
  bool convergence_check = true;  // repeat key solves on a grid twice as coarse
  int field_stride = 2;           // downsampling of mode field dumps
  std::vector<double> surface_sensitivity{2.1, 11.7};  // permittivities for the U_D sensitivity report

  std::string source_text;  // configuration as read, echoed into reports

  void validate() const;
};

/// Defaults reproduce the waveguide of the reference design. Unknown keys and
/// unit-less physical quantities are rejected with ConfigError.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

}  // namespace evatrap
