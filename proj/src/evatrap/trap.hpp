#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evatrap/field.hpp"
#include "evatrap/grid.hpp"
#include "evatrap/mode_control.hpp"
#include "evatrap/physics.hpp"

namespace evatrap {

/// Atom-surface interaction. The near-field coefficient is the energy
/// c3 hbar Gamma (c3 from the atom), applied to the rescaled distance
/// z = 2 pi l / reference_wavelength, and scaled by (eps - 1)/(eps + 1).
struct SurfaceParams {
  double permittivity = 11.7;
  double reference_wavelength = 780.241209686e-9;
  std::optional<double> linewidth;  // s^-1, defaults to the atom's D2 linewidth
  /// Beyond this rescaled distance the interpolation bracket is replaced by
  /// its matched z^-4 tail (the bracket has a pole near z = 15.8).
  double casimir_switch = 10.0;
  bool enabled = true;

  void validate() const;
};

/// Far-detuned dipole potential (J) for intensity I (W/m^2). Throws
/// ResonanceError within 2 pi x 1 THz of either line.
double dipole_potential(double intensity, const AtomSpecies& atom, double wavelength);

/// Photon scattering rate (s^-1) at intensity I.
double scattering_rate(double intensity, const AtomSpecies& atom, double wavelength);

/// Attractive surface potential (J) at distance l (m) from the dielectric.
double surface_potential(double distance, const SurfaceParams& surface, const AtomSpecies& atom);

double gravity_potential(double height, const AtomSpecies& atom);

struct Beam {
  double wavelength = 0.0;
  std::vector<ModeExcitation> excitations;

  double power() const { return total_power(excitations); }
};

struct TwoColorConfig {
  Beam red;
  Beam blue;
  AtomSpecies atom = rubidium87();
  SurfaceParams surface;
  bool include_gravity = false;
  WaveguideGeometry geometry;

  void validate() const;
};

/// Part of the mode grid on which the potential is built.
struct TrapRegion {
  double x_min = -0.6e-6;
  double x_max = 0.6e-6;
  double y_min = 0.0;
  double y_max = 0.9e-6;
  int z_stations = 50;          // per beat period
  double mask_distance = 0.0;   // cells closer than this to dielectric are excluded; 0 = one cell

  void validate() const;
};

/// Potential on a cropped transverse grid, either a single slice (guide) or a
/// stack of z stations covering one beat period, periodic in z.
struct PotentialMap {
  SimulationGrid grid;
  std::vector<double> z;
  double period = 0.0;  // 0 for a z-independent potential
  std::vector<double> total;    // J, NaN on masked cells
  std::vector<double> red;      // J
  std::vector<double> blue;     // J
  std::vector<double> surface;  // J, per transverse cell (z-independent), includes gravity when enabled
  std::vector<unsigned char> mask;  // per transverse cell, 1 = excluded

  int nz() const { return static_cast<int>(z.size()); }
  std::size_t cells() const { return grid.size(); }
  std::size_t index(int i, int j, int k) const { return static_cast<std::size_t>(k) * cells() + grid.index(i, j); }
  bool masked(int i, int j) const { return mask[grid.index(i, j)] != 0; }
  double dz() const { return period > 0.0 ? period / nz() : 0.0; }
};

/// U = U_red + U_blue + U_sur (+ m g y), built in parallel over z stations.
PotentialMap total_potential(const TwoColorConfig& config, const TrapRegion& region, int threads = 1);

/// Beat period of the red beam, 0 when it does not beat. Throws
/// CompositionError when more than two distinct propagation constants beat or
/// when the blue beam beats.
double red_beat_period(const TwoColorConfig& config);

struct TrapMinimum {
  int i = 0, j = 0, k = 0;  // grid node
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // refined (x, y, z)
  double u_node = 0.0;
  double u_min = 0.0;       // refined by the local quadratic model
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
  /// |g + H d| after the Newton step, relative to |H| times one cell.
  double gradient_residual = 0.0;
  bool clamped = false;
  bool profile_only = false;  // minimum of the centre-line profile only
};

/// Lowest local minimum above the core top (|x| <= w/2) where the optical
/// potential is attractive. Throws NoTrapMinimum when none exists.
TrapMinimum find_trap_minimum(const PotentialMap& map, const WaveguideGeometry& geometry);

struct EscapeBarrier {
  double level = 0.0;  // J, lowest escape saddle
  std::string route;   // "surface", "boundary" or "z"
};

/// Barrier along the vertical line through the minimum: the running maximum
/// of U towards the surface and towards the top of the region, whichever is lower.
double profile_barrier(const PotentialMap& map, const TrapMinimum& minimum);

/// Minimax flood fill from the minimum. With allow_z the atom also escapes by
/// travelling one full period along z (into the next site).
EscapeBarrier escape_barrier(const PotentialMap& map, const TrapMinimum& minimum, bool allow_z);

struct TrapReport {
  double x = 0.0, y = 0.0, z = 0.0;
  double standoff = 0.0;        // m above the core top
  double u_min = 0.0;           // J
  /// Primary depth: lowest barrier along the surface normal through the
  /// minimum (towards the surface or out to the region edge), minus u_min.
  double depth = 0.0;
  double profile_saddle = 0.0;  // J
  /// Flood-fill depths: lowest saddle over all escape paths in the slice or
  /// stack (including one period along z for lattices), and transverse only.
  double depth_saddle = 0.0;
  double depth_transverse = 0.0;
  double saddle = 0.0;          // J
  double well_bottom = 0.0;     // J, -u_min
  std::string escape_route;
  std::array<double, 3> omega{};          // rad/s along x, y, z
  std::array<double, 3> omega_axis_fd{};  // from the diagonal second differences
  std::array<double, 3> localization{};   // m
  double hessian_vs_fd = 0.0;   // max relative frequency mismatch over resolved axes
  double gradient_residual = 0.0;
  double intensity_red = 0.0;   // W/m^2 at the minimum
  double intensity_blue = 0.0;
  double gamma_red = 0.0;
  double gamma_blue = 0.0;
  double gamma_sc = 0.0;
  double tau_coh = 0.0;
  double tau_trap = 0.0;        // depth / (E_r^r G_r + E_r^b G_b)
  double tau_trap_alt = 0.0;    // with the extra factor 2 in the heating rate
  double mode_spacing = 0.0;    // J, hbar max(omega)
  bool valid = true;
  std::string note;
};

TrapReport trap_report(const TwoColorConfig& config, const PotentialMap& map, const TrapMinimum& minimum);

/// Builds the potential, locates the minimum and reports.
TrapReport analyze_trap(const TwoColorConfig& config, const TrapRegion& region, int threads = 1,
                        PotentialMap* map_out = nullptr);

/// Copy of the config with the red excitations rescaled to a total power,
/// keeping the split between modes. A zero-power template keeps equal split.
TwoColorConfig with_red_power(const TwoColorConfig& config, double power);

struct SweepRow {
  double red_power = 0.0;
  std::optional<TrapReport> report;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool standoff_decreasing = true;
  bool depth_increasing = true;
  std::string diagnostics;
};

SweepResult power_sweep(const TwoColorConfig& config, const std::vector<double>& red_powers,
                        const TrapRegion& region, int threads = 1);

struct LatticeReport {
  double period = 0.0;
  bool degenerate = false;  // single-mode red: no z modulation
  TrapReport site;
  std::vector<double> site_z;  // z of every site minimum inside one period
  std::string note;
};

LatticeReport lattice_analysis(const TwoColorConfig& config, const TrapRegion& region, int threads = 1,
                               PotentialMap* map_out = nullptr);

/// Red TE00 + TE01 excitations for a chain output state. TE10 content left
/// after the coupler is dropped and reported.
struct RedModes {
  std::shared_ptr<const GuidedMode> te00;
  std::shared_ptr<const GuidedMode> te01;
};

struct TransitionRow {
  double theta = 0.0;
  ChainState state;
  double corrugation = 0.0;  // J, max - min of U along z at the probe point
  std::optional<LatticeReport> lattice;
  std::string error;
};

/// For each MZI phase: TE00 -> MZI(theta) -> coupler(L_c), red excitation from
/// the output amplitudes, then lattice analysis. The corrugation is sampled at
/// (0, core top + probe_standoff).
std::vector<TransitionRow> guide_lattice_transition(const TwoColorConfig& base, const RedModes& modes,
                                                    double red_power, const CouplerDevice& coupler,
                                                    const std::vector<double>& thetas, const TrapRegion& region,
                                                    double probe_standoff, int threads = 1);

}  // namespace evatrap
