#include "evatrap/grid.hpp"

#include <algorithm>
#include <cmath>

#include "evatrap/errors.hpp"

namespace evatrap {

void WaveguideGeometry::validate() const {
  if (!(core_width > 0.0) || !(core_height > 0.0))
    throw ConfigError("core width and height must be positive");
  if (substrate_step_height < 0.0) throw ConfigError("substrate step height must be non-negative");
  if (!(clad_index >= 1.0)) throw ConfigError("clad index must be >= 1");
  if (!(substrate_index >= clad_index) || !(core_index >= substrate_index))
    throw ConfigError("indices must satisfy core >= substrate >= clad");
}

bool WaveguideGeometry::is_dielectric(double x, double y) const {
  const double top = 0.5 * core_height;
  const double pedestal_bottom = -top - substrate_step_height;
  if (y < pedestal_bottom) return true;
  return std::abs(x) < 0.5 * core_width && y < top;
}

double WaveguideGeometry::distance_to_dielectric(double x, double y) const {
  if (is_dielectric(x, y)) return 0.0;
  const double top = 0.5 * core_height;
  const double pedestal_bottom = -top - substrate_step_height;
  // Core plus pedestal form one rectangle; the substrate is a half-space.
  const double ddx = std::max(std::abs(x) - 0.5 * core_width, 0.0);
  const double ddy = std::max({pedestal_bottom - y, y - top, 0.0});
  const double to_rib = std::hypot(ddx, ddy);
  const double to_substrate = y - pedestal_bottom;
  return std::min(to_rib, to_substrate);
}

SimulationGrid SimulationGrid::centered(double width, double height, double step) {
  if (!(step > 0.0) || !(width > 0.0) || !(height > 0.0))
    throw ConfigError("grid extent and step must be positive");
  SimulationGrid g;
  g.nx = static_cast<int>(std::lround(width / step));
  g.ny = static_cast<int>(std::lround(height / step));
  g.dx = step;
  g.dy = step;
  g.x0 = -0.5 * (g.nx - 1) * step;
  g.y0 = -0.5 * (g.ny - 1) * step;
  g.validate();
  return g;
}

void SimulationGrid::validate() const {
  if (nx < 3 || ny < 3) throw ConfigError("grid needs at least 3 cells per axis");
  if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("grid spacing must be positive");
}

int SimulationGrid::nearest_i(double xv) const {
  return std::clamp(static_cast<int>(std::lround((xv - x0) / dx)), 0, nx - 1);
}

int SimulationGrid::nearest_j(double yv) const {
  return std::clamp(static_cast<int>(std::lround((yv - y0) / dy)), 0, ny - 1);
}

bool SimulationGrid::contains(double xv, double yv) const {
  const double tol = 1e-9;
  return xv >= x0 - tol * dx && xv <= x_max() + tol * dx && yv >= y0 - tol * dy &&
         yv <= y_max() + tol * dy;
}

double IndexMap::max_index() const { return *std::max_element(n.begin(), n.end()); }

IndexMap build_index_profile(const WaveguideGeometry& geometry, const SimulationGrid& grid) {
  return build_index_profile(geometry, grid, 0.0);
}

IndexMap build_index_profile(const WaveguideGeometry& geometry, const SimulationGrid& grid,
                             double core_index_shift) {
  geometry.validate();
  grid.validate();
  const double hw = 0.5 * geometry.core_width;
  const double hh = 0.5 * geometry.core_height;
  // The core must be resolved by at least one cell and sit strictly inside
  // the box with at least two vacuum cells to every side.
  if (geometry.core_width < grid.dx || geometry.core_height < grid.dy)
    throw ConfigError("core is smaller than one grid cell");
  if (grid.x0 + 2 * grid.dx > -hw || grid.x_max() - 2 * grid.dx < hw ||
      grid.y_max() - 2 * grid.dy < hh || grid.y0 + 2 * grid.dy > -hh)
    throw ConfigError("grid too small to contain the waveguide core");

  IndexMap map{grid, std::vector<double>(grid.size(), geometry.clad_index)};
  const double pedestal_bottom = -hh - geometry.substrate_step_height;
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      double n = geometry.clad_index;
      if (y < pedestal_bottom) {
        n = geometry.substrate_index;
      } else if (std::abs(x) < hw) {
        if (y < -hh)
          n = geometry.substrate_index;
        else if (y < hh)
          n = geometry.core_index + core_index_shift;
      }
      map.n[grid.index(i, j)] = n;
    }
  }
  return map;
}

}  // namespace evatrap
