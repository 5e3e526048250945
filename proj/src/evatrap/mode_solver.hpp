#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evatrap/grid.hpp"

namespace evatrap {

enum class Polarization { TE, TM };

const char* to_string(Polarization p);

enum class BoundaryX { Dirichlet, Periodic };

/// A guided eigenmode: propagation constant plus a real transverse field,
/// scaled so that the integral of (1/2) eps0 c E^2 over the cross-section is 1 W.
struct GuidedMode {
  std::string label;  // e.g. "TE01": x-node count then y-node count
  Polarization polarization = Polarization::TE;
  int nodes_x = 0;
  int nodes_y = 0;
  double beta = 0.0;
  double wavelength = 0.0;
  SimulationGrid grid;
  std::vector<double> field;
  /// Power carried at unit amplitude scale (W); always 1 after normalisation.
  double power_normalization = 1.0;
  /// Relative eigen-residual of the discrete operator.
  double residual = 0.0;
  /// Fraction of (1/2) eps0 c E^2 inside the core.
  double confinement = 0.0;

  double k0() const;
  double effective_index() const { return beta / k0(); }
  double at(int i, int j) const { return field[grid.index(i, j)]; }
};

struct SolverOptions {
  int max_modes = 6;
  BoundaryX boundary_x = BoundaryX::Dirichlet;
  /// Lower edge of the guided window as an index; by default the largest
  /// index found on the outer boundary of the box.
  std::optional<double> window_low_index;
  int krylov_dim = 0;  // 0 selects automatically
  double residual_limit = 1e-6;
};

/// Discrete operator used by the solver, exposed for residual checks.
/// Returns (lap + n^2 k0^2) E for TE, or the semivectorial TM operator.
std::vector<double> apply_mode_operator(const IndexMap& map, double wavelength, Polarization pol,
                                        BoundaryX boundary_x, const std::vector<double>& field);

std::vector<GuidedMode> solve_modes(const IndexMap& map, double wavelength, Polarization pol,
                                    const SolverOptions& options = {});

/// Builds the index profile and solves; the guided window is (n_s k0, n_g k0).
std::vector<GuidedMode> solve_modes(const WaveguideGeometry& geometry, const SimulationGrid& grid,
                                    double wavelength, Polarization pol, int max_modes = 6);

const GuidedMode* find_mode(const std::vector<GuidedMode>& modes, const std::string& label);

struct DecayFit {
  double length = 0.0;
  double x_probe = 0.0;
  int samples = 0;
  double rms_log_residual = 0.0;
};

/// Least-squares fit of log|E| = a - d / L. Throws FitError when the samples
/// change sign, vanish or are not strictly decreasing.
DecayFit fit_exponential_decay(const std::vector<double>& distance, const std::vector<double>& value);

struct DecayWindow {
  int skip_cells = 2;
  double extent = 0.5e-6;
};

/// Decay length of |E| along a vertical ray above the core top. When no probe
/// is given the column with the largest |E| just above the core is used.
DecayFit decay_length(const GuidedMode& mode, const WaveguideGeometry& geometry,
                      std::optional<double> x_probe = std::nullopt, DecayWindow window = {});

/// 1 / sqrt(beta^2 - k0^2).
double decay_length_scalar_estimate(const GuidedMode& mode);
double decay_length_scalar_estimate(double beta, double wavelength);

double relative_decay_difference(double l_red, double l_blue);

struct DispersionRow {
  double wavelength = 0.0;
  std::string label;
  double beta = 0.0;
  double decay_length = 0.0;
  double decay_scalar = 0.0;
  bool cut_off = false;
  std::string note;
};

/// Solve + decay fit per wavelength for each requested label (e.g. TE00, TM00, TE01).
std::vector<DispersionRow> dispersion_scan(const WaveguideGeometry& geometry, const SimulationGrid& grid,
                                           std::vector<double> wavelengths,
                                           const std::vector<std::string>& labels, int threads = 1,
                                           DecayWindow window = {});

}  // namespace evatrap
