#pragma once

#include <cstddef>
#include <vector>

namespace evatrap {

/// Rectangular core rib on a pedestal of substrate material (same width as the
/// core, height substrate_step_height), which in turn sits on a half-space of
/// substrate. Vacuum everywhere else. The core centre is the origin; y points
/// away from the chip, x is lateral and z the propagation direction.
struct WaveguideGeometry {
  double core_width = 0.3e-6;
  double core_height = 0.3e-6;
  double core_index = 3.42;
  double substrate_index = 1.45;
  double clad_index = 1.0;
  double substrate_step_height = 1.0e-6;

  void validate() const;
  double core_top() const { return 0.5 * core_height; }
  /// Distance from (x, y) to the nearest dielectric boundary; zero inside dielectric.
  double distance_to_dielectric(double x, double y) const;
  bool is_dielectric(double x, double y) const;
};

/// Uniform cell-centred grid. Cell (i, j) sits at (x0 + i dx, y0 + j dy);
/// storage is row-major with x fastest.
struct SimulationGrid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;

  static SimulationGrid centered(double width, double height, double step);

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double x(int i) const { return x0 + i * dx; }
  double y(int j) const { return y0 + j * dy; }
  double x_max() const { return x(nx - 1); }
  double y_max() const { return y(ny - 1); }
  double cell_area() const { return dx * dy; }
  int nearest_i(double xv) const;
  int nearest_j(double yv) const;
  bool contains(double xv, double yv) const;
  /// Vacuum margin between the core top and the last cell row.
  double margin_above(const WaveguideGeometry& g) const { return y_max() - g.core_top(); }
  bool operator==(const SimulationGrid&) const = default;
};

struct IndexMap {
  SimulationGrid grid;
  std::vector<double> n;

  double at(int i, int j) const { return n[grid.index(i, j)]; }
  double max_index() const;
};

/// Piecewise-constant index sampled at cell centres.
IndexMap build_index_profile(const WaveguideGeometry& geometry, const SimulationGrid& grid);

/// Index profile with the core index shifted by delta_n (modulator arm).
IndexMap build_index_profile(const WaveguideGeometry& geometry, const SimulationGrid& grid,
                             double core_index_shift);

}  // namespace evatrap
