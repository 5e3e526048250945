#include "evatrap/bpm.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "evatrap/errors.hpp"
#include "evatrap/physics.hpp"

namespace evatrap {

using SparseComplex = Eigen::SparseMatrix<Complex>;
using VectorXc = Eigen::VectorXcd;

void BpmRun::validate(const IndexMap& map) const {
  if (!(launch.grid == map.grid)) throw ConfigError("BPM launch field and index map use different grids");
  if (!(dz > 0.0)) throw ConfigError("BPM step dz must be positive");
  if (!(z_extent > 0.0)) throw ConfigError("BPM propagation length must be positive");
  if (!(wavelength > 0.0)) throw ConfigError("BPM wavelength must be positive");
  if (!(reference_index > 0.0)) throw ConfigError("BPM reference index must be positive");
  const double cell = std::max(map.grid.dx, map.grid.dy);
  if (absorber_width < 10.0 * cell * (1.0 - 1e-9)) throw ConfigError("BPM absorber must span at least 10 cells");
  if (pade_order != 1 && pade_order != 2) throw ConfigError("BPM Pade order must be 1 or 2");
  if (!projection.empty() && projection.size() != map.grid.size())
    throw ConfigError("BPM projection field has the wrong size");
}

namespace {

SparseComplex transverse_operator(const IndexMap& map, double k0, double n_ref, double width, double strength) {
  const auto& g = map.grid;
  const double ix2 = 1.0 / (g.dx * g.dx);
  const double iy2 = 1.0 / (g.dy * g.dy);
  const double x_lo = g.x0, x_hi = g.x_max(), y_lo = g.y0, y_hi = g.y_max();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(g.size() * 5);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto row = static_cast<int>(g.index(i, j));
      const double edge = std::min({g.x(i) - x_lo, x_hi - g.x(i), g.y(j) - y_lo, y_hi - g.y(j)});
      double absorb = 0.0;
      if (edge < width) {
        const double depth = (width - edge) / width;
        absorb = strength * depth * depth;
      }
      const double n = map.at(i, j);
      const Complex diag = Complex(n * n - n_ref * n_ref, absorb) * (k0 * k0) - 2.0 * (ix2 + iy2);
      trips.emplace_back(row, row, diag);
      if (i > 0) trips.emplace_back(row, static_cast<int>(g.index(i - 1, j)), ix2);
      if (i + 1 < g.nx) trips.emplace_back(row, static_cast<int>(g.index(i + 1, j)), ix2);
      if (j > 0) trips.emplace_back(row, static_cast<int>(g.index(i, j - 1)), iy2);
      if (j + 1 < g.ny) trips.emplace_back(row, static_cast<int>(g.index(i, j + 1)), iy2);
    }
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  SparseComplex p(n, n);
  p.setFromTriplets(trips.begin(), trips.end());
  return p;
}

// c0 I + c1 P
SparseComplex shifted(const SparseComplex& p, Complex c0, Complex c1) {
  SparseComplex m = c1 * p;
  for (Eigen::Index k = 0; k < m.rows(); ++k) m.coeffRef(k, k) += c0;
  m.makeCompressed();
  return m;
}

// Cayley step (D - i b N) psi+ = (D + i b N) psi with N/D the Pade approximant
// of sqrt(1 + X) - 1, X = P / k^2 and b = dz k / 2. The left polynomial is
// factored into linear terms so each factor is one sparse LU.
struct Stepper {
  std::vector<std::unique_ptr<Eigen::SparseLU<SparseComplex>>> factors;
  std::vector<Complex> rhs_coef;  // right polynomial in X, ascending
  Complex lead{1.0, 0.0};
  const SparseComplex* p = nullptr;
  double k2 = 0.0;

  Stepper(const SparseComplex& op, double k, double dz, int order) : p(&op), k2(k * k) {
    const Complex ib(0.0, 0.5 * dz * k);
    std::vector<double> num, den;
    if (order == 1) {
      num = {0.0, 0.5};
      den = {1.0, 0.25};
    } else {
      num = {0.0, 0.5, 0.25};
      den = {1.0, 0.75, 1.0 / 16.0};
    }
    std::vector<Complex> lhs(num.size());
    rhs_coef.resize(num.size());
    for (std::size_t n = 0; n < num.size(); ++n) {
      lhs[n] = den[n] - ib * num[n];
      rhs_coef[n] = den[n] + ib * num[n];
    }
    std::vector<Complex> roots;
    if (order == 1) {
      roots = {-lhs[0] / lhs[1]};
    } else {
      const Complex disc = std::sqrt(lhs[1] * lhs[1] - 4.0 * lhs[2] * lhs[0]);
      roots = {(-lhs[1] + disc) / (2.0 * lhs[2]), (-lhs[1] - disc) / (2.0 * lhs[2])};
    }
    lead = lhs.back();
    // (X - r) = (P - r k^2) / k^2; the 1/k^2 factors fold into lead.
    for (const Complex r : roots) {
      auto lu = std::make_unique<Eigen::SparseLU<SparseComplex>>();
      const SparseComplex m = shifted(op, -r * k2, 1.0);
      lu->analyzePattern(m);
      lu->factorize(m);
      if (lu->info() != Eigen::Success) throw SolverError("BPM factorisation failed", 0.0);
      factors.push_back(std::move(lu));
      lead /= k2;
    }
  }

  VectorXc step(const VectorXc& psi) const {
    VectorXc acc = rhs_coef.back() * psi;
    for (std::size_t n = rhs_coef.size() - 1; n-- > 0;) acc = (*p * acc) / k2 + rhs_coef[n] * psi;
    for (const auto& lu : factors) acc = lu->solve(acc);
    return acc / lead;
  }
};

}  // namespace

BpmResult bpm_propagate(const BpmRun& run, const IndexMap& map) {
  run.validate(map);
  const auto& g = map.grid;
  const double k0 = 2.0 * constants::pi / run.wavelength;
  const double kref = run.reference_index * k0;
  const SparseComplex p = transverse_operator(map, k0, run.reference_index, run.absorber_width, run.absorber_strength);
  const Stepper stepper(p, kref, run.dz, run.pade_order);

  VectorXc psi(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) psi[static_cast<Eigen::Index>(k)] = run.launch.values[k];

  std::vector<double> stations = run.stations;
  std::sort(stations.begin(), stations.end());
  std::size_t next_station = 0;
  BpmResult result;
  result.probe_intensity.resize(run.probes.size());

  const double area = g.cell_area();
  auto full_field = [&](double z) {
    FieldMap f{g, std::vector<Complex>(g.size())};
    const Complex carrier = std::polar(1.0, kref * z);
    for (std::size_t k = 0; k < g.size(); ++k) f.values[k] = psi[static_cast<Eigen::Index>(k)] * carrier;
    return f;
  };
  auto record = [&](double z) {
    const FieldMap f = full_field(z);
    result.trace_z.push_back(z);
    result.power.push_back(f.power());
    for (std::size_t q = 0; q < run.probes.size(); ++q)
      result.probe_intensity[q].push_back(intensity(f, run.probes[q].first, run.probes[q].second));
    if (!run.projection.empty()) {
      Complex ov{0.0, 0.0};
      for (std::size_t k = 0; k < g.size(); ++k) ov += run.projection[k] * f.values[k];
      result.projection.push_back(ov * area);
    }
    while (next_station < stations.size() && stations[next_station] <= z + 0.5 * run.dz) {
      result.station_z.push_back(z);
      result.snapshots.push_back(f);
      ++next_station;
    }
  };

  const int steps = static_cast<int>(std::lround(run.z_extent / run.dz));
  record(0.0);
  for (int s = 1; s <= steps; ++s) {
    const double before = result.power.back();
    psi = stepper.step(psi);
    record(s * run.dz);
    const double after = result.power.back();
    if (after > before * (1.0 + run.max_power_growth))
      throw SolverError("BPM step instability: power grew by " + std::to_string(after / before - 1.0) +
                            " in one step",
                        after / before - 1.0);
  }
  return result;
}

double phase_slope(const std::vector<double>& z, const std::vector<Complex>& overlap) {
  if (z.size() != overlap.size() || z.size() < 2) throw FitError("phase slope needs at least two samples");
  std::vector<double> phase(z.size());
  double offset = 0.0;
  phase[0] = std::arg(overlap[0]);
  for (std::size_t k = 1; k < z.size(); ++k) {
    double raw = std::arg(overlap[k]) + offset;
    while (raw - phase[k - 1] > constants::pi) {
      raw -= 2.0 * constants::pi;
      offset -= 2.0 * constants::pi;
    }
    while (raw - phase[k - 1] < -constants::pi) {
      raw += 2.0 * constants::pi;
      offset += 2.0 * constants::pi;
    }
    phase[k] = raw;
  }
  const double n = static_cast<double>(z.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    sx += z[k];
    sy += phase[k];
    sxx += z[k] * z[k];
    sxy += z[k] * phase[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace evatrap
