#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "evatrap/grid.hpp"
#include "evatrap/mode_solver.hpp"

namespace evatrap {

using Complex = std::complex<double>;

/// Complex scalar field on a transverse grid, in units where the intensity is
/// (1/2) eps0 c |phi|^2.
struct FieldMap {
  SimulationGrid grid;
  std::vector<Complex> values;

  /// Integral of the intensity over the grid (W).
  double power() const;
  /// Bilinear interpolation between cell centres; DomainError outside the grid.
  Complex sample(double x, double y) const;
  std::vector<double> intensity_map() const;
};

/// One mode launched with a given power (W) and phase (rad). The complex
/// amplitude is sqrt(power) exp(i phase) against the 1 W mode normalisation.
struct ModeExcitation {
  std::shared_ptr<const GuidedMode> mode;
  double power = 0.0;
  double phase = 0.0;

  Complex amplitude() const { return std::polar(std::sqrt(power), phase); }
};

double intensity(Complex phi);
double intensity(const FieldMap& field, double x, double y);

/// phi(x, y, z) = sum_n C_n E_n(x, y) exp(i (beta_n z + theta_n)) on the shared grid.
FieldMap superpose(std::span<const ModeExcitation> excitations, double z);

/// Pointwise evaluation with bilinear interpolation of each mode field.
Complex superpose_at(std::span<const ModeExcitation> excitations, double x, double y, double z);
double intensity(std::span<const ModeExcitation> excitations, double x, double y, double z);

/// Throws CompositionError unless all excitations share one grid and wavelength.
void check_composable(std::span<const ModeExcitation> excitations);

double total_power(std::span<const ModeExcitation> excitations);

/// 2 pi / |beta0 - beta1|.
double beat_period(double beta0, double beta1);

/// Period of the dominant sinusoid in samples (z_k, v_k): least-squares fit of
/// a + b cos(2 pi z / P) + c sin(2 pi z / P) scanned over [period_min, period_max]
/// and refined by golden-section search.
double fit_oscillation_period(const std::vector<double>& z, const std::vector<double>& v, double period_min,
                              double period_max);

}  // namespace evatrap
