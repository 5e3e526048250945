#include "evatrap/trap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "evatrap/errors.hpp"
#include "evatrap/parallel.hpp"

namespace evatrap {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();
constexpr double inf_value = std::numeric_limits<double>::infinity();

// Closest approach to a line for which the far-detuned expressions still hold.
constexpr double resonance_guard = 2.0 * constants::pi * 1.0e12;

void check_far_detuned(const AtomSpecies& atom, double wavelength) {
  if (min_detuning(atom, wavelength) < resonance_guard)
    throw ResonanceError("wavelength " + std::to_string(wavelength * 1e9) +
                         " nm is too close to an atomic line for the far-detuned dipole model");
}

double bracket(double z) {
  return 1.0 / (1.0 + 1.098 * z) - 0.00493 * z / (1.0 + 0.00987 * z * z * z - 0.00064 * z * z * z * z);
}

}  // namespace

void SurfaceParams::validate() const {
  if (!(permittivity >= 1.0)) throw ConfigError("surface permittivity must be at least 1");
  if (!(reference_wavelength > 0.0)) throw ConfigError("surface reference wavelength must be positive");
  if (linewidth && !(*linewidth > 0.0)) throw ConfigError("surface linewidth must be positive");
  if (!(casimir_switch > 0.0) || casimir_switch > 15.0)
    throw ConfigError("casimir switch must lie in (0, 15] to stay clear of the interpolation pole");
}

double dipole_potential(double intensity, const AtomSpecies& atom, double wavelength) {
  check_far_detuned(atom, wavelength);
  return dipole_prefactor(atom) * fine_structure_detuning_factor(atom, wavelength) * intensity;
}

double scattering_rate(double intensity, const AtomSpecies& atom, double wavelength) {
  check_far_detuned(atom, wavelength);
  return dipole_prefactor(atom) / constants::hbar * fine_structure_scattering_factor(atom, wavelength) * intensity;
}

double surface_potential(double distance, const SurfaceParams& surface, const AtomSpecies& atom) {
  if (!(distance > 0.0)) throw DomainError("surface distance must be positive");
  if (!surface.enabled) return 0.0;
  const double gamma = surface.linewidth.value_or(atom.gamma_d2);
  const double eps = surface.permittivity;
  const double c3 = atom.c3_prefactor * constants::hbar * gamma * (eps - 1.0) / (eps + 1.0);
  const double z = 2.0 * constants::pi * distance / surface.reference_wavelength;
  const double zs = surface.casimir_switch;
  if (z <= zs) return -bracket(z) * c3 / (z * z * z);
  const double r = zs / z;
  return -bracket(zs) * c3 / (zs * zs * zs) * r * r * r * r;
}

double gravity_potential(double height, const AtomSpecies& atom) { return atom.mass * constants::g * height; }

void TwoColorConfig::validate() const {
  atom.validate();
  surface.validate();
  geometry.validate();
  const double red_edge = std::max(atom.d1_wavelength, atom.d2_wavelength);
  const double blue_edge = std::min(atom.d1_wavelength, atom.d2_wavelength);
  if (!red.excitations.empty() && !(red.wavelength > red_edge))
    throw ConfigError("red light must be red-detuned from both atomic lines");
  if (!blue.excitations.empty() && !(blue.wavelength < blue_edge && blue.wavelength > 0.0))
    throw ConfigError("blue light must be blue-detuned from both atomic lines");
  const SimulationGrid* grid = nullptr;
  for (const Beam* b : {&red, &blue}) {
    check_composable(b->excitations);
    for (const auto& e : b->excitations) {
      if (std::abs(e.mode->wavelength - b->wavelength) > 1e-9 * b->wavelength)
        throw CompositionError("excitation mode wavelength differs from its beam wavelength");
      if (grid && !(*grid == e.mode->grid)) throw CompositionError("red and blue modes must share one grid");
      grid = &e.mode->grid;
    }
  }
}

void TrapRegion::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min)) throw ConfigError("trap region must have positive extent");
  if (z_stations < 4) throw ConfigError("lattice needs at least 4 z stations per period");
  if (mask_distance < 0.0) throw ConfigError("mask distance must be non-negative");
}

namespace {

std::vector<double> distinct_betas(const Beam& beam) {
  const double p = beam.power();
  std::vector<double> betas;
  for (const auto& e : beam.excitations) {
    if (!(e.power > 1e-12 * p)) continue;
    const double b = e.mode->beta;
    const bool seen = std::any_of(betas.begin(), betas.end(),
                                  [&](double v) { return std::abs(v - b) <= 1e-12 * std::abs(b); });
    if (!seen) betas.push_back(b);
  }
  return betas;
}

const SimulationGrid& mode_grid(const TwoColorConfig& config) {
  for (const Beam* b : {&config.red, &config.blue})
    if (!b->excitations.empty()) return b->excitations.front().mode->grid;
  throw ConfigError("trap configuration carries no light");
}

}  // namespace

double red_beat_period(const TwoColorConfig& config) {
  if (distinct_betas(config.blue).size() > 1)
    throw CompositionError("blue light with more than one propagation constant is not supported");
  const auto betas = distinct_betas(config.red);
  if (betas.size() <= 1) return 0.0;
  if (betas.size() > 2) throw CompositionError("red light beats between more than two propagation constants");
  return beat_period(betas[0], betas[1]);
}

PotentialMap total_potential(const TwoColorConfig& config, const TrapRegion& region, int threads) {
  config.validate();
  region.validate();
  const SimulationGrid& g = mode_grid(config);
  auto first_index = [](double lo, double origin, double step) {
    return static_cast<int>(std::ceil((lo - origin) / step - 1e-9));
  };
  auto last_index = [](double hi, double origin, double step) {
    return static_cast<int>(std::floor((hi - origin) / step + 1e-9));
  };
  const int i0 = std::max(0, first_index(region.x_min, g.x0, g.dx));
  const int i1 = std::min(g.nx - 1, last_index(region.x_max, g.x0, g.dx));
  const int j0 = std::max(0, first_index(region.y_min, g.y0, g.dy));
  const int j1 = std::min(g.ny - 1, last_index(region.y_max, g.y0, g.dy));
  if (i1 - i0 < 4 || j1 - j0 < 4) throw ConfigError("trap region covers fewer than 5 cells per axis");

  PotentialMap map;
  map.grid.nx = i1 - i0 + 1;
  map.grid.ny = j1 - j0 + 1;
  map.grid.dx = g.dx;
  map.grid.dy = g.dy;
  map.grid.x0 = g.x(i0);
  map.grid.y0 = g.y(j0);
  map.period = red_beat_period(config);
  const int nz = map.period > 0.0 ? region.z_stations : 1;
  for (int k = 0; k < nz; ++k) map.z.push_back(map.period * k / nz);

  const auto& geo = config.geometry;
  const double mask_distance = region.mask_distance > 0.0 ? region.mask_distance : std::max(g.dx, g.dy);
  const std::size_t cells = map.cells();
  map.mask.assign(cells, 0);
  map.surface.assign(cells, 0.0);
  for (int j = 0; j < map.grid.ny; ++j)
    for (int i = 0; i < map.grid.nx; ++i) {
      const double x = map.grid.x(i), y = map.grid.y(j);
      const std::size_t c = map.grid.index(i, j);
      const double l = geo.distance_to_dielectric(x, y);
      if (geo.is_dielectric(x, y) || l < mask_distance) {
        map.mask[c] = 1;
        map.surface[c] = nan_value;
        continue;
      }
      double u = surface_potential(l, config.surface, config.atom);
      if (config.include_gravity) u += gravity_potential(y - geo.core_top(), config.atom);
      map.surface[c] = u;
    }

  auto coefficient = [&](const Beam& b) {
    if (b.excitations.empty()) return 0.0;
    return dipole_potential(1.0, config.atom, b.wavelength);
  };
  const double k_red = coefficient(config.red);
  const double k_blue = coefficient(config.blue);

  map.total.assign(cells * nz, 0.0);
  map.red.assign(cells * nz, 0.0);
  map.blue.assign(cells * nz, 0.0);
  parallel_for(static_cast<std::size_t>(nz), threads, [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    const double z = map.z[kk];
    auto beam_intensity = [&](const Beam& b, std::vector<double>& out_u, double coef) {
      if (b.excitations.empty()) return;
      std::vector<Complex> phase;
      for (const auto& e : b.excitations) phase.push_back(e.amplitude() * std::polar(1.0, e.mode->beta * z));
      for (int j = 0; j < map.grid.ny; ++j)
        for (int i = 0; i < map.grid.nx; ++i) {
          Complex phi{0.0, 0.0};
          for (std::size_t n = 0; n < b.excitations.size(); ++n)
            phi += phase[n] * b.excitations[n].mode->at(i0 + i, j0 + j);
          out_u[map.index(i, j, k)] = coef * intensity(phi);
        }
    };
    beam_intensity(config.red, map.red, k_red);
    beam_intensity(config.blue, map.blue, k_blue);
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t idx = kk * cells + c;
      map.total[idx] = map.mask[c] ? nan_value : map.red[idx] + map.blue[idx] + map.surface[c];
    }
  });
  return map;
}

namespace {

struct Stencil {
  const PotentialMap& map;

  int wrap(int k) const {
    const int nz = map.nz();
    return ((k % nz) + nz) % nz;
  }
  double u(int i, int j, int k) const { return map.total[map.index(i, j, wrap(k))]; }
  bool usable(int i, int j) const {
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= map.grid.nx || b >= map.grid.ny || map.masked(a, b)) return false;
      }
    return true;
  }
};

// Central-difference gradient and Hessian at a grid node; z entries stay zero
// for a single slice.
void derivatives(const Stencil& s, int i, int j, int k, Eigen::Vector3d& grad, Eigen::Matrix3d& hess) {
  const auto& m = s.map;
  const double h[3] = {m.grid.dx, m.grid.dy, m.dz()};
  const int dims = m.nz() > 1 ? 3 : 2;
  auto at = [&](const int d[3]) { return s.u(i + d[0], j + d[1], k + d[2]); };
  auto offset = [](int axis, int step, int out[3]) {
    out[0] = out[1] = out[2] = 0;
    out[axis] = step;
  };
  grad.setZero();
  hess.setZero();
  const double u0 = s.u(i, j, k);
  for (int a = 0; a < dims; ++a) {
    int p[3], q[3];
    offset(a, 1, p);
    offset(a, -1, q);
    const double up = at(p);
    const double um = at(q);
    grad[a] = (up - um) / (2.0 * h[a]);
    hess(a, a) = (up - 2.0 * u0 + um) / (h[a] * h[a]);
    for (int b = a + 1; b < dims; ++b) {
      int pp[3] = {0, 0, 0}, pm[3] = {0, 0, 0}, mp[3] = {0, 0, 0}, mm[3] = {0, 0, 0};
      pp[a] = 1, pp[b] = 1;
      pm[a] = 1, pm[b] = -1;
      mp[a] = -1, mp[b] = 1;
      mm[a] = -1, mm[b] = -1;
      const double v = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * h[a] * h[b]);
      hess(a, b) = hess(b, a) = v;
    }
  }
}

std::string centre_line_diagnostic(const PotentialMap& map, const WaveguideGeometry& geometry) {
  const int i = map.grid.nearest_i(0.0);
  std::vector<double> line;
  for (int j = 0; j < map.grid.ny; ++j)
    if (map.grid.y(j) > geometry.core_top() && !map.masked(i, j)) line.push_back(map.total[map.index(i, j, 0)]);
  if (line.size() < 2) return "no unmasked cells above the core";
  bool rising = true, falling = true;
  for (std::size_t n = 1; n < line.size(); ++n) {
    rising = rising && line[n] >= line[n - 1];
    falling = falling && line[n] <= line[n - 1];
  }
  std::ostringstream os;
  os << "potential above the core centre is "
     << (rising ? "monotonically increasing" : falling ? "monotonically decreasing" : "non-monotone")
     << " with height";
  if (!rising && !falling) os << " but no local minimum has an attractive optical part";
  return os.str();
}

}  // namespace

TrapMinimum find_trap_minimum(const PotentialMap& map, const WaveguideGeometry& geometry) {
  const Stencil s{map};
  const int nz = map.nz();
  const double top = geometry.core_top();
  const double half_w = 0.5 * geometry.core_width;
  // Full local minima first; failing that, minima of the vertical profile
  // above the core centre, which the report then flags as lateral saddles.
  const int centre = map.grid.nearest_i(0.0);
  bool found = false;
  TrapMinimum best;
  for (int pass = 0; pass < 2 && !found; ++pass)
    for (int k = 0; k < nz; ++k)
      for (int j = 1; j + 1 < map.grid.ny; ++j) {
        if (!(map.grid.y(j) > top)) continue;
        for (int i = 1; i + 1 < map.grid.nx; ++i) {
          if (pass == 1 && i != centre) continue;
          if (std::abs(map.grid.x(i)) > half_w + 1e-12 || !s.usable(i, j)) continue;
          const std::size_t idx = map.index(i, j, k);
          if (!(map.red[idx] + map.blue[idx] < 0.0)) continue;
          const double u0 = map.total[idx];
          const int reach_x = pass == 0 ? 1 : 0;
          bool is_min = true;
          for (int dk = (nz > 1 ? -1 : 0); dk <= (nz > 1 ? 1 : 0) && is_min; ++dk)
            for (int dj = -1; dj <= 1 && is_min; ++dj)
              for (int di = -reach_x; di <= reach_x; ++di) {
                if (!di && !dj && !dk) continue;
                if (s.u(i + di, j + dj, k + dk) < u0) {
                  is_min = false;
                  break;
                }
              }
          if (!is_min) continue;
          if (!found || u0 < best.u_node) {
            found = true;
            best.i = i;
            best.j = j;
            best.k = k;
            best.u_node = u0;
            best.profile_only = pass == 1;
          }
        }
      }
  if (!found)
    throw NoTrapMinimum("no trapping minimum above the core: " + centre_line_diagnostic(map, geometry));

  derivatives(s, best.i, best.j, best.k, best.gradient, best.hessian);
  const int dims = nz > 1 ? 3 : 2;
  const double h[3] = {map.grid.dx, map.grid.dy, map.dz()};
  Eigen::Vector3d step = Eigen::Vector3d::Zero();
  const Eigen::MatrixXd hd = best.hessian.topLeftCorner(dims, dims);
  Eigen::LLT<Eigen::MatrixXd> llt(hd);
  if (llt.info() == Eigen::Success) {
    step.head(dims) = -llt.solve(best.gradient.head(dims));
    for (int a = 0; a < dims; ++a)
      if (std::abs(step[a]) > h[a]) {
        step[a] = std::copysign(h[a], step[a]);
        best.clamped = true;
      }
  }
  best.position = {map.grid.x(best.i) + step[0], map.grid.y(best.j) + step[1],
                   (nz > 1 ? map.z[best.k] : 0.0) + step[2]};
  best.u_min = best.u_node + best.gradient.dot(step) + 0.5 * step.dot(best.hessian * step);
  const double scale = hd.norm() * std::min(map.grid.dx, map.grid.dy);
  best.gradient_residual = scale > 0.0 ? (best.gradient + best.hessian * step).head(dims).norm() / scale : 0.0;
  return best;
}

double profile_barrier(const PotentialMap& map, const TrapMinimum& minimum) {
  const int i = minimum.i;
  double down = minimum.u_node;
  for (int j = minimum.j; j >= 0 && !map.masked(i, j); --j) down = std::max(down, map.total[map.index(i, j, minimum.k)]);
  double up = minimum.u_node;
  for (int j = minimum.j; j < map.grid.ny && !map.masked(i, j); ++j)
    up = std::max(up, map.total[map.index(i, j, minimum.k)]);
  return std::min(down, up);
}

EscapeBarrier escape_barrier(const PotentialMap& map, const TrapMinimum& minimum, bool allow_z) {
  const int nx = map.grid.nx, ny = map.grid.ny, nz = map.nz();
  const bool z_escape = allow_z && nz > 1;
  const int layers = z_escape ? 2 * nz + 1 : nz;
  const std::size_t cells = map.cells();
  auto data_k = [&](int layer) { return z_escape ? (((minimum.k + layer - nz) % nz) + nz) % nz : layer; };
  auto near_mask = [&](int i, int j) {
    return (i > 0 && map.masked(i - 1, j)) || (i + 1 < nx && map.masked(i + 1, j)) ||
           (j > 0 && map.masked(i, j - 1)) || (j + 1 < ny && map.masked(i, j + 1));
  };

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
  std::vector<char> done(cells * static_cast<std::size_t>(layers), 0);
  const int start_layer = z_escape ? nz : minimum.k;
  queue.emplace(minimum.u_node, static_cast<std::size_t>(start_layer) * cells + map.grid.index(minimum.i, minimum.j));
  while (!queue.empty()) {
    const auto [level, node] = queue.top();
    queue.pop();
    if (done[node]) continue;
    done[node] = 1;
    const int layer = static_cast<int>(node / cells);
    const std::size_t c = node % cells;
    const int i = static_cast<int>(c % static_cast<std::size_t>(nx));
    const int j = static_cast<int>(c / static_cast<std::size_t>(nx));
    if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) return {level, "boundary"};
    if (near_mask(i, j)) return {level, "surface"};
    if (z_escape && (layer == 0 || layer == layers - 1)) return {level, "z"};

    auto visit = [&](int a, int b, int l) {
      if (map.masked(a, b)) return;
      const std::size_t next = static_cast<std::size_t>(l) * cells + map.grid.index(a, b);
      if (done[next]) return;
      const double u = map.total[map.index(a, b, data_k(l))];
      queue.emplace(std::max(level, u), next);
    };
    visit(i - 1, j, layer);
    visit(i + 1, j, layer);
    visit(i, j - 1, layer);
    visit(i, j + 1, layer);
    if (nz > 1) {
      if (z_escape) {
        visit(i, j, layer - 1);
        visit(i, j, layer + 1);
      } else {
        visit(i, j, (layer + 1) % nz);
        visit(i, j, (layer + nz - 1) % nz);
      }
    }
  }
  return {inf_value, "none"};
}

TrapReport trap_report(const TwoColorConfig& config, const PotentialMap& map, const TrapMinimum& minimum) {
  const auto& atom = config.atom;
  TrapReport r;
  r.x = minimum.position[0];
  r.y = minimum.position[1];
  r.z = minimum.position[2];
  r.standoff = r.y - config.geometry.core_top();
  r.u_min = minimum.u_min;
  r.well_bottom = -minimum.u_min;
  r.gradient_residual = minimum.gradient_residual;
  const bool lattice = map.nz() > 1;

  const EscapeBarrier full = escape_barrier(map, minimum, true);
  const EscapeBarrier transverse = lattice ? escape_barrier(map, minimum, false) : full;
  r.saddle = full.level;
  r.depth_saddle = full.level - minimum.u_min;
  r.depth_transverse = transverse.level - minimum.u_min;
  r.escape_route = full.route;
  r.profile_saddle = profile_barrier(map, minimum);
  r.depth = r.profile_saddle - minimum.u_min;

  const std::size_t idx = map.index(minimum.i, minimum.j, minimum.k);
  if (!config.red.excitations.empty()) {
    r.intensity_red = map.red[idx] / dipole_potential(1.0, atom, config.red.wavelength);
    r.gamma_red = scattering_rate(r.intensity_red, atom, config.red.wavelength);
  }
  if (!config.blue.excitations.empty()) {
    r.intensity_blue = map.blue[idx] / dipole_potential(1.0, atom, config.blue.wavelength);
    r.gamma_blue = scattering_rate(r.intensity_blue, atom, config.blue.wavelength);
  }
  r.gamma_sc = r.gamma_red + r.gamma_blue;
  r.tau_coh = r.gamma_sc > 0.0 ? 1.0 / r.gamma_sc : inf_value;
  double heating = 0.0;
  if (r.gamma_red > 0.0) heating += recoil_energy(atom, config.red.wavelength) * r.gamma_red;
  if (r.gamma_blue > 0.0) heating += recoil_energy(atom, config.blue.wavelength) * r.gamma_blue;
  r.tau_trap = heating > 0.0 ? r.depth / heating : inf_value;
  r.tau_trap_alt = heating > 0.0 ? r.depth / (2.0 * heating) : inf_value;

  const int dims = lattice ? 3 : 2;
  const Eigen::MatrixXd h = minimum.hessian.topLeftCorner(dims, dims);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  std::vector<std::string> issues;
  bool assigned[3] = {false, false, false};
  for (int n = 0; n < dims; ++n) {
    const double lambda = es.eigenvalues()[n];
    int axis = 0;
    es.eigenvectors().col(n).cwiseAbs().maxCoeff(&axis);
    if (assigned[axis]) issues.push_back("two Hessian eigenvectors align with one axis");
    assigned[axis] = true;
    if (!(lambda > 0.0)) {
      r.valid = false;
      issues.push_back("Hessian is not positive definite at the minimum");
      continue;
    }
    r.omega[axis] = std::sqrt(lambda / atom.mass);
  }
  for (int a = 0; a < dims; ++a) {
    const double d = minimum.hessian(a, a);
    r.omega_axis_fd[a] = d > 0.0 ? std::sqrt(d / atom.mass) : 0.0;
    if (r.omega_axis_fd[a] > 0.0 && r.omega[a] > 0.0)
      r.hessian_vs_fd = std::max(r.hessian_vs_fd, std::abs(r.omega[a] - r.omega_axis_fd[a]) / r.omega_axis_fd[a]);
  }
  double omega_max = 0.0;
  for (int a = 0; a < 3; ++a) {
    r.localization[a] = r.omega[a] > 0.0 ? std::sqrt(constants::hbar / (atom.mass * r.omega[a])) : 0.0;
    omega_max = std::max(omega_max, r.omega[a]);
  }
  r.mode_spacing = constants::hbar * omega_max;
  if (!lattice) issues.push_back("z-independent potential: no axial confinement");
  if (!(r.depth > 0.0)) {
    r.valid = false;
    issues.push_back("no escape barrier above the minimum");
  }
  if (minimum.profile_only) {
    r.valid = false;
    issues.push_back("minimum exists only along the vertical profile; laterally it is a saddle");
  }
  if (minimum.clamped) issues.push_back("minimum refinement step was clamped to one cell");
  for (std::size_t n = 0; n < issues.size(); ++n) r.note += (n ? "; " : "") + issues[n];
  return r;
}

TrapReport analyze_trap(const TwoColorConfig& config, const TrapRegion& region, int threads, PotentialMap* map_out) {
  PotentialMap map = total_potential(config, region, threads);
  const TrapMinimum minimum = find_trap_minimum(map, config.geometry);
  TrapReport report = trap_report(config, map, minimum);
  if (map_out) *map_out = std::move(map);
  return report;
}

TwoColorConfig with_red_power(const TwoColorConfig& config, double power) {
  if (!(power >= 0.0)) throw ConfigError("red power must be non-negative");
  TwoColorConfig out = config;
  const double current = config.red.power();
  const double n = static_cast<double>(out.red.excitations.size());
  for (auto& e : out.red.excitations) e.power = current > 0.0 ? e.power * power / current : power / n;
  return out;
}

SweepResult power_sweep(const TwoColorConfig& config, const std::vector<double>& red_powers,
                        const TrapRegion& region, int threads) {
  SweepResult result;
  std::ostringstream diag;
  for (double p : red_powers) {
    SweepRow row;
    row.red_power = p;
    try {
      row.report = analyze_trap(with_red_power(config, p), region, threads);
    } catch (const NoTrapMinimum& e) {
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  const SweepRow* prev = nullptr;
  for (const auto& row : result.rows) {
    if (!row.report) {
      result.standoff_decreasing = result.depth_increasing = false;
      diag << "no trap at " << row.red_power * 1e3 << " mW; ";
      prev = nullptr;
      continue;
    }
    if (prev) {
      if (!(row.report->standoff < prev->report->standoff)) {
        result.standoff_decreasing = false;
        diag << "standoff does not decrease between " << prev->red_power * 1e3 << " and " << row.red_power * 1e3
             << " mW; ";
      }
      if (!(row.report->depth > prev->report->depth)) {
        result.depth_increasing = false;
        diag << "depth does not increase between " << prev->red_power * 1e3 << " and " << row.red_power * 1e3
             << " mW; ";
      }
    }
    prev = &row;
  }
  result.diagnostics = diag.str();
  return result;
}

namespace {

LatticeReport lattice_from_map(const TwoColorConfig& config, const PotentialMap& map) {
  LatticeReport out;
  out.period = map.period;
  out.degenerate = map.nz() == 1;
  if (out.degenerate)
    out.note = "red light is effectively single-mode; the potential is z-independent and reduces to the guide";
  const TrapMinimum minimum = find_trap_minimum(map, config.geometry);
  out.site = trap_report(config, map, minimum);
  if (!out.degenerate) {
    const Stencil s{map};
    for (int k = 0; k < map.nz(); ++k) {
      const double u = s.u(minimum.i, minimum.j, k);
      if (u < s.u(minimum.i, minimum.j, k - 1) && u <= s.u(minimum.i, minimum.j, k + 1)) out.site_z.push_back(map.z[k]);
    }
  }
  return out;
}

}  // namespace

LatticeReport lattice_analysis(const TwoColorConfig& config, const TrapRegion& region, int threads,
                               PotentialMap* map_out) {
  PotentialMap map = total_potential(config, region, threads);
  LatticeReport report = lattice_from_map(config, map);
  if (map_out) *map_out = std::move(map);
  return report;
}

std::vector<TransitionRow> guide_lattice_transition(const TwoColorConfig& base, const RedModes& modes,
                                                    double red_power, const CouplerDevice& coupler,
                                                    const std::vector<double>& thetas, const TrapRegion& region,
                                                    double probe_standoff, int threads) {
  if (!modes.te00 || !modes.te01) throw ConfigError("transition needs the red TE00 and TE01 modes");
  if (!(red_power > 0.0)) throw ConfigError("transition needs a positive red power");
  std::vector<TransitionRow> rows;
  for (double theta : thetas) {
    TransitionRow row;
    row.theta = theta;
    std::vector<ChainStage> stages(2);
    stages[0].kind = ChainStage::Kind::Mzi;
    stages[0].theta = theta;
    stages[1].kind = ChainStage::Kind::Coupler;
    stages[1].coupler = coupler;
    row.state = run_chain(stages).back().state;

    TwoColorConfig config = base;
    config.red.excitations.clear();
    auto add = [&](const std::shared_ptr<const GuidedMode>& mode, std::complex<double> a) {
      const double p = red_power * std::norm(a);
      if (p > 1e-12 * red_power) config.red.excitations.push_back({mode, p, std::arg(a)});
    };
    add(modes.te00, row.state.te00);
    add(modes.te01, row.state.te01);
    if (std::norm(row.state.te10) > 1e-12) row.error = "residual TE10 content dropped; ";

    try {
      const PotentialMap map = total_potential(config, region, threads);
      const int i = map.grid.nearest_i(0.0);
      const int j = map.grid.nearest_j(base.geometry.core_top() + probe_standoff);
      double lo = inf_value, hi = -inf_value;
      for (int k = 0; k < map.nz(); ++k) {
        const double u = map.total[map.index(i, j, k)];
        lo = std::min(lo, u);
        hi = std::max(hi, u);
      }
      row.corrugation = hi - lo;
      row.lattice = lattice_from_map(config, map);
    } catch (const NoTrapMinimum& e) {
      row.error += e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace evatrap
