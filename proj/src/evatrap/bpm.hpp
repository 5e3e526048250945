#pragma once

#include <utility>
#include <vector>

#include "evatrap/field.hpp"
#include "evatrap/grid.hpp"

namespace evatrap {

/// Scalar wide-angle finite-difference beam propagation of the slowly varying
/// envelope psi, phi = psi exp(i n_ref k0 z). The one-way propagator
/// sqrt(k^2 + P) - k is replaced by its Pade (1,1) or (2,2) approximant and
/// stepped with a Crank-Nicolson (Cayley) scheme on the full transverse
/// operator P = lap + (n^2 - n_ref^2) k0^2.
struct BpmRun {
  FieldMap launch;
  double wavelength = 0.0;
  double dz = 0.0;
  double z_extent = 0.0;
  double reference_index = 0.0;
  double absorber_width = 0.0;     // m, graded layer inside every box edge
  double absorber_strength = 0.5;  // peak imaginary part added to n^2
  std::vector<double> stations;    // z positions of emitted snapshots
  std::vector<std::pair<double, double>> probes;  // (x, y) points traced every step
  std::vector<double> projection;  // optional real field; its complex overlap is traced
  double max_power_growth = 1e-3;  // per step, relative
  int pade_order = 2;              // 1 or 2

  void validate(const IndexMap& map) const;
};

struct BpmResult {
  std::vector<double> station_z;
  std::vector<FieldMap> snapshots;  // full field phi at each station
  std::vector<double> trace_z;
  std::vector<double> power;                        // W, per trace sample
  std::vector<std::vector<double>> probe_intensity;  // [probe][sample]
  std::vector<Complex> projection;                  // <projection, phi>, per sample
};

BpmResult bpm_propagate(const BpmRun& run, const IndexMap& map);

/// Effective propagation constant from the unwrapped phase slope of a traced overlap.
double phase_slope(const std::vector<double>& z, const std::vector<Complex>& overlap);

}  // namespace evatrap
