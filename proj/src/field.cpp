#include "evatrap/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "evatrap/errors.hpp"
#include "evatrap/physics.hpp"

namespace evatrap {

namespace {

struct Bilinear {
  int i;
  int j;
  double tx;
  double ty;
};

Bilinear locate(const SimulationGrid& g, double x, double y) {
  if (!g.contains(x, y)) throw DomainError("query point outside the field grid");
  const double fx = std::clamp((x - g.x0) / g.dx, 0.0, static_cast<double>(g.nx - 1));
  const double fy = std::clamp((y - g.y0) / g.dy, 0.0, static_cast<double>(g.ny - 1));
  const int i = std::min(static_cast<int>(fx), g.nx - 2);
  const int j = std::min(static_cast<int>(fy), g.ny - 2);
  return {i, j, fx - i, fy - j};
}

template <class T, class Get>
T interpolate(const Bilinear& b, Get&& get) {
  return (1 - b.tx) * (1 - b.ty) * get(b.i, b.j) + b.tx * (1 - b.ty) * get(b.i + 1, b.j) +
         (1 - b.tx) * b.ty * get(b.i, b.j + 1) + b.tx * b.ty * get(b.i + 1, b.j + 1);
}

}  // namespace

double intensity(Complex phi) { return 0.5 * constants::epsilon0 * constants::c * std::norm(phi); }

double FieldMap::power() const {
  double sum = 0.0;
  for (const auto& v : values) sum += std::norm(v);
  return 0.5 * constants::epsilon0 * constants::c * sum * grid.cell_area();
}

Complex FieldMap::sample(double x, double y) const {
  const auto b = locate(grid, x, y);
  return interpolate<Complex>(b, [&](int i, int j) { return values[grid.index(i, j)]; });
}

std::vector<double> FieldMap::intensity_map() const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](Complex v) { return intensity(v); });
  return out;
}

double intensity(const FieldMap& field, double x, double y) { return intensity(field.sample(x, y)); }

void check_composable(std::span<const ModeExcitation> excitations) {
  if (excitations.empty()) return;
  const auto& first = *excitations.front().mode;
  for (const auto& e : excitations) {
    if (!e.mode) throw CompositionError("excitation without a mode");
    if (e.power < 0.0) throw CompositionError("excitation power must be non-negative");
    if (e.mode->wavelength != first.wavelength)
      throw CompositionError("cannot superpose modes of different wavelengths");
    if (!(e.mode->grid == first.grid)) throw CompositionError("cannot superpose modes on different grids");
  }
}

FieldMap superpose(std::span<const ModeExcitation> excitations, double z) {
  if (excitations.empty()) throw CompositionError("superposition needs at least one excitation");
  check_composable(excitations);
  FieldMap out{excitations.front().mode->grid, {}};
  out.values.assign(out.grid.size(), Complex{0.0, 0.0});
  for (const auto& e : excitations) {
    const Complex c = e.amplitude() * std::polar(1.0, e.mode->beta * z);
    const auto& f = e.mode->field;
    for (std::size_t k = 0; k < f.size(); ++k) out.values[k] += c * f[k];
  }
  return out;
}

Complex superpose_at(std::span<const ModeExcitation> excitations, double x, double y, double z) {
  check_composable(excitations);
  Complex phi{0.0, 0.0};
  for (const auto& e : excitations) {
    const auto& m = *e.mode;
    const auto b = locate(m.grid, x, y);
    const double ev = interpolate<double>(b, [&](int i, int j) { return m.at(i, j); });
    phi += e.amplitude() * std::polar(1.0, m.beta * z) * ev;
  }
  return phi;
}

double intensity(std::span<const ModeExcitation> excitations, double x, double y, double z) {
  return intensity(superpose_at(excitations, x, y, z));
}

double total_power(std::span<const ModeExcitation> excitations) {
  double p = 0.0;
  for (const auto& e : excitations) p += e.power;
  return p;
}

double beat_period(double beta0, double beta1) {
  if (beta0 == beta1) throw DomainError("beat period undefined for equal propagation constants");
  return 2.0 * constants::pi / std::abs(beta0 - beta1);
}

namespace {

double sinusoid_fit_residual(const std::vector<double>& z, const std::vector<double>& v, double period) {
  // Normal equations of v ~ a + b cos + c sin.
  const double k = 2.0 * constants::pi / period;
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (std::size_t n = 0; n < z.size(); ++n) {
    const Eigen::Vector3d row(1.0, std::cos(k * z[n]), std::sin(k * z[n]));
    ata += row * row.transpose();
    atb += row * v[n];
  }
  const Eigen::Vector3d coef = ata.ldlt().solve(atb);
  double ss = 0.0;
  for (std::size_t n = 0; n < z.size(); ++n) {
    const double r = v[n] - coef[0] - coef[1] * std::cos(k * z[n]) - coef[2] * std::sin(k * z[n]);
    ss += r * r;
  }
  return ss;
}

}  // namespace

double fit_oscillation_period(const std::vector<double>& z, const std::vector<double>& v, double period_min,
                              double period_max) {
  if (z.size() != v.size() || z.size() < 8) throw FitError("period fit needs at least 8 samples");
  if (!(period_min > 0.0) || !(period_max > period_min)) throw FitError("invalid period search range");
  const int scan = 400;
  double best_p = period_min;
  double best_r = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= scan; ++s) {
    const double p = period_min * std::pow(period_max / period_min, static_cast<double>(s) / scan);
    const double r = sinusoid_fit_residual(z, v, p);
    if (r < best_r) {
      best_r = r;
      best_p = p;
    }
  }
  const double step = std::pow(period_max / period_min, 1.0 / scan);
  double lo = best_p / step;
  double hi = best_p * step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - phi * (hi - lo);
  double b = lo + phi * (hi - lo);
  double fa = sinusoid_fit_residual(z, v, a);
  double fb = sinusoid_fit_residual(z, v, b);
  for (int it = 0; it < 80; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = sinusoid_fit_residual(z, v, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = sinusoid_fit_residual(z, v, b);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace evatrap
