#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evatrap/grid.hpp"

namespace evatrap {

/// Amplitudes of the two modes an MZI or coupler acts on. For the MZI c0 is
/// TE00 and c1 is TE10; for the coupler c0 is TE10 and c1 is TE01.
struct ModeVector {
  std::complex<double> c0{1.0, 0.0};
  std::complex<double> c1{0.0, 0.0};

  double norm2() const { return std::norm(c0) + std::norm(c1); }
};

/// [[cos(t/2), i sin(t/2)], [i sin(t/2), cos(t/2)]]
Eigen::Matrix2cd mzi_matrix(double theta);

ModeVector transform(const Eigen::Matrix2cd& m, const ModeVector& v);

struct MziDevice {
  double modulator_length = 50e-6;
  double index_shift = 0.0;
  double wavelength = 1.06e-6;
  std::optional<double> phase;  // explicit theta overrides the modulator model
  bool analytic_phase = false;  // use 2 pi dn l Gamma / lambda instead of two eigen-solves

  void validate() const;
};

/// Reduces an angle to [0, 2 pi).
double reduce_phase(double theta);

/// theta = [beta(n_g + dn) - beta(n_g)] l for the fundamental mode of the arm
/// waveguide. Throws DomainError when the shifted guide no longer carries TE00.
double modulator_phase(const MziDevice& device, const WaveguideGeometry& geometry, const SimulationGrid& grid);

/// Same, reusing an already solved unshifted beta and confinement factor.
double modulator_phase(const MziDevice& device, const WaveguideGeometry& geometry, const SimulationGrid& grid,
                       double beta_unshifted, double confinement);

ModeVector mzi_apply(double theta, const ModeVector& input);

struct SuperpositionRow {
  double index_shift = 0.0;
  double theta = 0.0;
  double p0 = 0.0;  // |c0|^2 (TE00)
  double p1 = 0.0;  // |c1|^2 (TE10)
};

/// Populations after the MZI for a pure TE00 input, one row per index shift.
std::vector<SuperpositionRow> superposition_vs_dn(const MziDevice& base, const WaveguideGeometry& geometry,
                                                  const SimulationGrid& grid, const std::vector<double>& shifts);

struct CouplerDevice {
  double gap = 0.042e-6;
  double coupling_length = 24.38e-6;

  void validate() const;
  double kappa() const;
};

Eigen::Matrix2cd coupler_matrix(double kappa, double z);
ModeVector coupler_apply(const CouplerDevice& device, double z, const ModeVector& input);

struct SupermodeEstimate {
  double kappa = 0.0;
  double coupling_length = 0.0;
  std::vector<double> betas;  // first-order supermode family, descending
};

/// Order-of-magnitude coupling estimate from the supermodes of two identical
/// bare cores in cladding, the second displaced by (w + gap, h + gap) so the
/// facing corners are gap apart in both directions. kappa is half the spread
/// of the four first-order supermode propagation constants.
SupermodeEstimate supermode_kappa(const CouplerDevice& device, const WaveguideGeometry& geometry, double wavelength,
                                  double step);

/// Red-light state across the converter chain: amplitudes of TE00, TE10, TE01.
struct ChainState {
  std::complex<double> te00{1.0, 0.0};
  std::complex<double> te10{0.0, 0.0};
  std::complex<double> te01{0.0, 0.0};

  double norm2() const { return std::norm(te00) + std::norm(te10) + std::norm(te01); }
};

struct ChainStage {
  enum class Kind { Mzi, Coupler } kind = Kind::Mzi;
  double theta = 0.0;           // MZI phase (rad)
  CouplerDevice coupler;        // coupler parameters
  std::optional<double> length; // coupler interaction length; default L_c
};

struct ChainStep {
  std::string name;
  ChainState state;
};

/// Applies the stages in order; the MZI mixes (TE00, TE10), the coupler (TE10, TE01).
std::vector<ChainStep> run_chain(const std::vector<ChainStage>& stages, ChainState input = {});

}  // namespace evatrap
