#include "evatrap/mode_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "evatrap/errors.hpp"
#include "evatrap/krylov.hpp"
#include "evatrap/parallel.hpp"
#include "evatrap/physics.hpp"

namespace evatrap {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

const char* to_string(Polarization p) { return p == Polarization::TE ? "TE" : "TM"; }

double GuidedMode::k0() const { return 2.0 * constants::pi / wavelength; }

namespace {

// Stencil coefficients of one row: (column, weight) pairs.
template <class Emit>
void for_each_stencil(const IndexMap& map, double k0, Polarization pol, BoundaryX bx, Emit&& emit) {
  const auto& g = map.grid;
  const double ix2 = 1.0 / (g.dx * g.dx);
  const double iy2 = 1.0 / (g.dy * g.dy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t row = g.index(i, j);
      const double n = map.n[row];
      const double n2 = n * n;
      double diag = n2 * k0 * k0 - 2.0 * ix2;

      // x neighbours: plain second difference for both polarisations.
      auto x_neighbour = [&](int ii) {
        if (ii < 0 || ii >= g.nx) {
          if (bx == BoundaryX::Periodic) ii = (ii + g.nx) % g.nx;
          else return;
        }
        emit(row, g.index(ii, j), ix2);
      };
      x_neighbour(i - 1);
      x_neighbour(i + 1);

      if (pol == Polarization::TE) {
        diag -= 2.0 * iy2;
        if (j > 0) emit(row, g.index(i, j - 1), iy2);
        if (j + 1 < g.ny) emit(row, g.index(i, j + 1), iy2);
      } else {
        // d/dy [ (1/n^2) d/dy (n^2 E) ] with n^2 averaged at the half points.
        const double n2_up = j + 1 < g.ny ? std::pow(map.at(i, j + 1), 2) : n2;
        const double n2_dn = j > 0 ? std::pow(map.at(i, j - 1), 2) : n2;
        const double mid_up = 0.5 * (n2 + n2_up);
        const double mid_dn = 0.5 * (n2 + n2_dn);
        diag -= iy2 * (n2 / mid_up + n2 / mid_dn);
        if (j > 0) emit(row, g.index(i, j - 1), iy2 * n2_dn / mid_dn);
        if (j + 1 < g.ny) emit(row, g.index(i, j + 1), iy2 * n2_up / mid_up);
      }
      emit(row, row, diag);
    }
  }
}

SparseMatrix assemble(const IndexMap& map, double k0, Polarization pol, BoundaryX bx) {
  std::vector<Triplet> trips;
  trips.reserve(map.grid.size() * 5);
  for_each_stencil(map, k0, pol, bx, [&](std::size_t r, std::size_t c, double v) {
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  });
  const auto n = static_cast<Eigen::Index>(map.grid.size());
  SparseMatrix a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

struct CoreBox {
  int i0, i1, j0, j1;
};

CoreBox core_box(const IndexMap& map) {
  const double nmax = map.max_index();
  CoreBox b{map.grid.nx, -1, map.grid.ny, -1};
  for (int j = 0; j < map.grid.ny; ++j)
    for (int i = 0; i < map.grid.nx; ++i)
      if (map.at(i, j) == nmax) {
        b.i0 = std::min(b.i0, i);
        b.i1 = std::max(b.i1, i);
        b.j0 = std::min(b.j0, j);
        b.j1 = std::max(b.j1, j);
      }
  return b;
}

int count_sign_changes(const std::vector<double>& line) {
  double peak = 0.0;
  for (double v : line) peak = std::max(peak, std::abs(v));
  int changes = 0;
  int last = 0;
  for (double v : line) {
    if (std::abs(v) < 1e-2 * peak) continue;
    const int s = v > 0 ? 1 : -1;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

double default_window_low(const IndexMap& map, BoundaryX bx) {
  const auto& g = map.grid;
  double low = 0.0;
  for (int i = 0; i < g.nx; ++i) low = std::max({low, map.at(i, 0), map.at(i, g.ny - 1)});
  if (bx == BoundaryX::Dirichlet)
    for (int j = 0; j < g.ny; ++j) low = std::max({low, map.at(0, j), map.at(g.nx - 1, j)});
  return low;
}

void finalize_mode(GuidedMode& mode, const IndexMap& map, const CoreBox& box) {
  const auto& g = map.grid;
  const double nmax = map.max_index();
  double sum = 0.0;
  double core_sum = 0.0;
  for (std::size_t k = 0; k < mode.field.size(); ++k) {
    const double e2 = mode.field[k] * mode.field[k];
    sum += e2;
    if (map.n[k] == nmax) core_sum += e2;
  }
  const double power = 0.5 * constants::epsilon0 * constants::c * sum * g.cell_area();
  const double scale = 1.0 / std::sqrt(power);
  for (double& v : mode.field) v *= scale;
  mode.power_normalization = 1.0;
  mode.confinement = core_sum / sum;

  // Sign: positive at the upper-right quarter point of the core.
  const int iq = box.i0 + (3 * (box.i1 - box.i0 + 1)) / 4;
  const int jq = box.j0 + (3 * (box.j1 - box.j0 + 1)) / 4;
  double peak = 0.0;
  std::size_t peak_at = 0;
  for (std::size_t k = 0; k < mode.field.size(); ++k)
    if (std::abs(mode.field[k]) > peak * (1.0 + 1e-12)) {
      peak = std::abs(mode.field[k]);
      peak_at = k;
    }
  double ref = mode.field[g.index(std::min(iq, g.nx - 1), std::min(jq, g.ny - 1))];
  if (std::abs(ref) < 1e-3 * peak) ref = mode.field[peak_at];
  if (ref < 0)
    for (double& v : mode.field) v = -v;

  std::vector<double> xline;
  for (int i = box.i0; i <= box.i1; ++i) xline.push_back(mode.at(i, std::min(jq, g.ny - 1)));
  std::vector<double> yline;
  for (int j = box.j0; j <= box.j1; ++j) yline.push_back(mode.at(std::min(iq, g.nx - 1), j));
  mode.nodes_x = count_sign_changes(xline);
  mode.nodes_y = count_sign_changes(yline);
  mode.label = std::string(to_string(mode.polarization)) + std::to_string(mode.nodes_x) +
               std::to_string(mode.nodes_y);
}

}  // namespace

std::vector<double> apply_mode_operator(const IndexMap& map, double wavelength, Polarization pol,
                                        BoundaryX boundary_x, const std::vector<double>& field) {
  const double k0 = 2.0 * constants::pi / wavelength;
  std::vector<double> out(field.size(), 0.0);
  for_each_stencil(map, k0, pol, boundary_x,
                   [&](std::size_t r, std::size_t c, double v) { out[r] += v * field[c]; });
  return out;
}

std::vector<GuidedMode> solve_modes(const IndexMap& map, double wavelength, Polarization pol,
                                    const SolverOptions& options) {
  if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
  if (options.max_modes < 1) throw ConfigError("max_modes must be at least 1");
  map.grid.validate();
  const double k0 = 2.0 * constants::pi / wavelength;
  const double n_high = map.max_index();
  const double n_low = options.window_low_index.value_or(default_window_low(map, options.boundary_x));
  if (!(n_high > n_low)) return {};

  const double sigma = n_high * n_high * k0 * k0;
  const double lambda_low = n_low * n_low * k0 * k0;
  const SparseMatrix a = assemble(map, k0, pol, options.boundary_x);
  const auto n = a.rows();
  SparseMatrix shifted = -a;
  for (Eigen::Index k = 0; k < n; ++k) shifted.coeffRef(k, k) += sigma;
  shifted.makeCompressed();

  detail::LinearOperator op;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu;
  if (pol == Polarization::TE) {
    ldlt = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(shifted);
    if (ldlt->info() != Eigen::Success) throw SolverError("factorisation of shifted operator failed", 0.0);
    op = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out = ldlt->solve(in); };
  } else {
    lu = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
    lu->analyzePattern(shifted);
    lu->factorize(shifted);
    if (lu->info() != Eigen::Success) throw SolverError("factorisation of shifted operator failed", 0.0);
    op = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) { out = lu->solve(in); };
  }

  detail::KrylovOptions kopt;
  kopt.nev = options.max_modes + 2;
  kopt.krylov_dim = options.krylov_dim > 0 ? options.krylov_dim : std::max(2 * kopt.nev + 10, 30);
  const auto eig = detail::largest_eigenpairs(op, n, kopt);

  const CoreBox box = core_box(map);
  std::vector<GuidedMode> modes;
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    const double mu = eig.values[k];
    if (!(mu > 0.0)) continue;
    Eigen::VectorXd v = eig.vectors.col(static_cast<Eigen::Index>(k));
    double lambda = sigma - 1.0 / mu;
    if (!(lambda > lambda_low) || !(lambda < sigma)) continue;

    auto residual_of = [&](const Eigen::VectorXd& vec, double lam) {
      return (a * vec - lam * vec).norm() / (std::abs(lam) * vec.norm());
    };
    if (pol == Polarization::TE) lambda = v.dot(a * v) / v.squaredNorm();
    double residual = residual_of(v, lambda);
    // A few inverse-iteration sweeps polish vectors the restarted Krylov
    // pass left slightly unconverged.
    for (int sweep = 0; sweep < 8 && residual > 1e-2 * options.residual_limit; ++sweep) {
      Eigen::VectorXd w;
      op(v, w);
      v = w / w.norm();
      lambda = v.dot(a * v);
      residual = residual_of(v, lambda);
    }
    if (!(lambda > lambda_low)) continue;
    if (residual > options.residual_limit)
      throw SolverError("eigen-iteration did not converge; residual " + std::to_string(residual), residual);

    GuidedMode mode;
    mode.polarization = pol;
    mode.beta = std::sqrt(lambda);
    mode.wavelength = wavelength;
    mode.grid = map.grid;
    mode.field.assign(v.data(), v.data() + v.size());
    mode.residual = residual;
    finalize_mode(mode, map, box);
    modes.push_back(std::move(mode));
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const GuidedMode& l, const GuidedMode& r) { return l.beta > r.beta; });
  if (static_cast<int>(modes.size()) > options.max_modes) modes.resize(options.max_modes);
  return modes;
}

std::vector<GuidedMode> solve_modes(const WaveguideGeometry& geometry, const SimulationGrid& grid,
                                    double wavelength, Polarization pol, int max_modes) {
  const IndexMap map = build_index_profile(geometry, grid);
  SolverOptions options;
  options.max_modes = max_modes;
  options.window_low_index = std::max(geometry.substrate_index, geometry.clad_index);
  return solve_modes(map, wavelength, pol, options);
}

const GuidedMode* find_mode(const std::vector<GuidedMode>& modes, const std::string& label) {
  for (const auto& m : modes)
    if (m.label == label) return &m;
  return nullptr;
}

DecayFit fit_exponential_decay(const std::vector<double>& distance, const std::vector<double>& value) {
  if (distance.size() != value.size() || distance.size() < 3)
    throw FitError("decay fit needs at least three samples");
  const double sign = value.front() > 0 ? 1.0 : -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double v : value) {
    if (!(v * sign > 0.0)) throw FitError("field changes sign or vanishes inside the fit window");
    if (!(std::abs(v) < prev)) throw FitError("field is not monotonically decaying inside the fit window");
    prev = std::abs(v);
  }
  const std::size_t n = distance.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ly = std::log(std::abs(value[k]));
    sx += distance[k];
    sy += ly;
    sxx += distance[k] * distance[k];
    sxy += distance[k] * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  if (!(slope < 0.0)) throw FitError("fitted decay rate is not positive");
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = std::log(std::abs(value[k])) - (intercept + slope * distance[k]);
    ss += r * r;
  }
  DecayFit fit;
  fit.length = -1.0 / slope;
  fit.samples = static_cast<int>(n);
  fit.rms_log_residual = std::sqrt(ss / n);
  return fit;
}

DecayFit decay_length(const GuidedMode& mode, const WaveguideGeometry& geometry, std::optional<double> x_probe,
                      DecayWindow window) {
  const auto& g = mode.grid;
  const double top = geometry.core_top();
  int j_first = -1;
  for (int j = 0; j < g.ny; ++j)
    if (g.y(j) > top) {
      j_first = j;
      break;
    }
  if (j_first < 0) throw FitError("no grid rows above the core top");

  int column = 0;
  if (x_probe) {
    if (!g.contains(*x_probe, g.y(j_first))) throw DomainError("probe position outside grid");
    column = g.nearest_i(*x_probe);
  } else {
    double best = -1.0;
    for (int i = 0; i < g.nx; ++i) {
      if (std::abs(g.x(i)) >= 0.5 * geometry.core_width) continue;
      const double v = std::abs(mode.at(i, j_first));
      const bool better = v > best * (1.0 + 1e-9);
      const bool tie = v >= best * (1.0 - 1e-9) && std::abs(g.x(i)) < std::abs(g.x(column));
      if (better || tie) {
        if (better) best = v;
        column = i;
      }
    }
  }

  std::vector<double> d;
  std::vector<double> e;
  for (int j = j_first; j < g.ny; ++j) {
    const double dist = g.y(j) - top;
    if (dist < window.skip_cells * g.dy) continue;
    if (dist > window.extent) break;
    d.push_back(dist);
    e.push_back(mode.at(column, j));
  }
  DecayFit fit = fit_exponential_decay(d, e);
  fit.x_probe = g.x(column);
  return fit;
}

double decay_length_scalar_estimate(double beta, double wavelength) {
  const double k0 = 2.0 * constants::pi / wavelength;
  if (!(beta > k0)) throw DomainError("beta <= k0: mode is radiative in vacuum");
  return 1.0 / std::sqrt(beta * beta - k0 * k0);
}

double decay_length_scalar_estimate(const GuidedMode& mode) {
  return decay_length_scalar_estimate(mode.beta, mode.wavelength);
}

double relative_decay_difference(double l_red, double l_blue) {
  if (!(l_blue > 0.0)) throw DomainError("blue decay length must be positive");
  return (l_red - l_blue) / l_blue;
}

std::vector<DispersionRow> dispersion_scan(const WaveguideGeometry& geometry, const SimulationGrid& grid,
                                           std::vector<double> wavelengths,
                                           const std::vector<std::string>& labels, int threads,
                                           DecayWindow window) {
  std::sort(wavelengths.begin(), wavelengths.end());
  bool want_te = false;
  bool want_tm = false;
  for (const auto& l : labels) {
    if (l.rfind("TE", 0) == 0) want_te = true;
    else if (l.rfind("TM", 0) == 0) want_tm = true;
    else throw ConfigError("unknown mode label '" + l + "'");
  }
  std::vector<std::vector<DispersionRow>> per_lambda(wavelengths.size());
  parallel_for(wavelengths.size(), threads, [&](std::size_t k) {
    const double lam = wavelengths[k];
    std::vector<GuidedMode> te, tm;
    if (want_te) te = solve_modes(geometry, grid, lam, Polarization::TE, 6);
    if (want_tm) tm = solve_modes(geometry, grid, lam, Polarization::TM, 4);
    for (const auto& label : labels) {
      DispersionRow row;
      row.wavelength = lam;
      row.label = label;
      const auto& pool = label.rfind("TE", 0) == 0 ? te : tm;
      const GuidedMode* mode = find_mode(pool, label);
      if (!mode) {
        row.cut_off = true;
        row.note = "mode not guided";
      } else {
        row.beta = mode->beta;
        row.decay_scalar = decay_length_scalar_estimate(*mode);
        try {
          row.decay_length = decay_length(*mode, geometry, std::nullopt, window).length;
        } catch (const FitError& e) {
          row.cut_off = true;
          row.note = e.what();
        }
      }
      per_lambda[k].push_back(row);
    }
  });
  std::vector<DispersionRow> rows;
  for (auto& v : per_lambda) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

}  // namespace evatrap
