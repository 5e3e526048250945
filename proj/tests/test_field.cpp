#include <catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "evatrap/errors.hpp"
#include "evatrap/field.hpp"
#include "evatrap/physics.hpp"

using namespace evatrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Hermite-Gauss profiles on a small grid, scaled to carry 1 W.
std::shared_ptr<const GuidedMode> hermite_mode(int nx, int ny, double beta, double wavelength = 865e-9) {
  GuidedMode m;
  m.label = "TE" + std::to_string(nx) + std::to_string(ny);
  m.nodes_x = nx;
  m.nodes_y = ny;
  m.beta = beta;
  m.wavelength = wavelength;
  m.grid = SimulationGrid::centered(2e-6, 2e-6, 20e-9);
  const double w = 0.25e-6;
  m.field.resize(m.grid.size());
  double sum = 0.0;
  for (int j = 0; j < m.grid.ny; ++j)
    for (int i = 0; i < m.grid.nx; ++i) {
      const double x = m.grid.x(i) / w, y = m.grid.y(j) / w;
      const double v = std::pow(x, nx) * std::pow(y, ny) * std::exp(-0.5 * (x * x + y * y));
      m.field[m.grid.index(i, j)] = v;
      sum += v * v;
    }
  const double scale = 1.0 / std::sqrt(0.5 * constants::epsilon0 * constants::c * sum * m.grid.cell_area());
  for (auto& v : m.field) v *= scale;
  return std::make_shared<const GuidedMode>(std::move(m));
}

}  // namespace

TEST_CASE("superposition is the pointwise sum of the mode terms") {
  auto m0 = hermite_mode(0, 0, 22.0e6);
  auto m1 = hermite_mode(0, 1, 17.3e6);
  const std::vector<ModeExcitation> ex{{m0, 0.7e-3, 0.3}, {m1, 0.4e-3, -1.1}};
  for (double z : {0.0, 0.37e-6, 2.9e-6}) {
    const FieldMap f = superpose(ex, z);
    for (std::size_t k = 0; k < f.values.size(); k += 97) {
      Complex expect{0.0, 0.0};
      for (const auto& e : ex) expect += std::sqrt(e.power) * e.mode->field[k] * std::polar(1.0, e.mode->beta * z + e.phase);
      CHECK(std::abs(f.values[k] - expect) <= 1e-13 * (1.0 + std::abs(expect)));
    }
  }
}

TEST_CASE("two-mode intensity decomposes into self and cross terms") {
  auto m0 = hermite_mode(0, 0, 22.0e6);
  auto m1 = hermite_mode(0, 1, 17.3e6);
  const std::vector<ModeExcitation> ex{{m0, 0.7e-3, 0.3}, {m1, 0.4e-3, -1.1}};
  const double x = 0.05e-6, y = 0.21e-6;  // on a node: grid-aligned values
  const double half = 0.5 * constants::epsilon0 * constants::c;
  const auto& g = m0->grid;
  const int i = g.nearest_i(x), j = g.nearest_j(y);
  const double xs = g.x(i), ys = g.y(j);
  const double a0 = std::sqrt(ex[0].power) * m0->at(i, j);
  const double a1 = std::sqrt(ex[1].power) * m1->at(i, j);
  for (double z = 0.0; z < 3e-6; z += 0.11e-6) {
    const double dphi = (m0->beta - m1->beta) * z + ex[0].phase - ex[1].phase;
    const double expect = half * (a0 * a0 + a1 * a1 + 2.0 * a0 * a1 * std::cos(dphi));
    CHECK_THAT(intensity(ex, xs, ys, z), WithinRel(expect, 1e-13));
  }
}

TEST_CASE("fringe shift equals the phase offset over the beta difference") {
  // Sample one beat period in N steps; a relative phase of 2 pi m / N must
  // translate the intensity trace by exactly m samples (cyclic correlation peak).
  auto m0 = hermite_mode(0, 0, 22.0e6);
  auto m1 = hermite_mode(0, 1, 17.3e6);
  const double period = beat_period(m0->beta, m1->beta);
  const int n = 64, shift = 11;
  const double dtheta = 2.0 * constants::pi * shift / n;
  auto trace = [&](double theta0) {
    const std::vector<ModeExcitation> ex{{m0, 0.5e-3, theta0}, {m1, 0.5e-3, 0.0}};
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(intensity(ex, 0.0, 0.2e-6, period * k / n));
    return v;
  };
  const auto base = trace(0.0);
  const auto moved = trace(dtheta);
  int best = -1;
  double best_c = -1e300;
  for (int s = 0; s < n; ++s) {
    double c = 0.0;
    for (int k = 0; k < n; ++k) c += base[k] * moved[(k + s) % n];
    if (c > best_c) {
      best_c = c;
      best = s;
    }
  }
  // beta0 > beta1: raising theta0 moves the pattern towards smaller z.
  CHECK(best == n - shift);
  for (int k = 0; k < n; ++k) CHECK_THAT(moved[(k + n - shift) % n], WithinRel(base[k], 1e-10));
}

TEST_CASE("power of a superposition of orthogonal modes") {
  auto m0 = hermite_mode(0, 0, 22.0e6);
  auto m1 = hermite_mode(1, 0, 17.3e6);
  auto m2 = hermite_mode(0, 1, 17.2e6);
  const std::vector<ModeExcitation> ex{{m0, 1.0e-3, 0.0}, {m1, 0.25e-3, 1.0}, {m2, 0.5e-3, 2.0}};
  CHECK_THAT(total_power(ex), WithinRel(1.75e-3, 1e-15));
  for (double z : {0.0, 1e-6, 5.5e-6}) CHECK_THAT(superpose(ex, z).power(), WithinRel(1.75e-3, 1e-9));
}

TEST_CASE("bilinear sampling and bounds") {
  auto m0 = hermite_mode(0, 0, 22.0e6);
  const std::vector<ModeExcitation> ex{{m0, 1e-3, 0.0}};
  const FieldMap f = superpose(ex, 0.0);
  const auto& g = f.grid;
  CHECK(std::abs(f.sample(g.x(10), g.y(20)) - f.values[g.index(10, 20)]) < 1e-15);
  const Complex mid = f.sample(0.5 * (g.x(10) + g.x(11)), g.y(20));
  CHECK(std::abs(mid - 0.5 * (f.values[g.index(10, 20)] + f.values[g.index(11, 20)])) < 1e-12);
  CHECK_THROWS_AS(f.sample(5e-6, 0.0), DomainError);
}

TEST_CASE("composition rules") {
  auto a = hermite_mode(0, 0, 22.0e6, 865e-9);
  auto b = hermite_mode(0, 0, 25.0e6, 700e-9);
  const std::vector<ModeExcitation> mixed{{a, 1e-3, 0.0}, {b, 1e-3, 0.0}};
  CHECK_THROWS_AS(superpose(mixed, 0.0), CompositionError);
  CHECK_THROWS_AS(superpose(std::vector<ModeExcitation>{}, 0.0), CompositionError);
  CHECK_THROWS_AS(beat_period(1.0, 1.0), DomainError);
  CHECK_THAT(beat_period(22.0e6, 17.2e6), WithinRel(2.0 * constants::pi / 4.8e6, 1e-15));
}

TEST_CASE("oscillation period fit") {
  std::vector<double> z, v;
  const double p = 1.31e-6;
  for (int k = 0; k < 300; ++k) {
    z.push_back(k * 0.02e-6);
    v.push_back(2.0 + 0.7 * std::cos(2.0 * constants::pi * z.back() / p + 0.4));
  }
  CHECK_THAT(fit_oscillation_period(z, v, 0.5 * p, 2.0 * p), WithinRel(p, 1e-8));
  CHECK_THROWS_AS(fit_oscillation_period({0, 1}, {0, 1}, 0.5, 2.0), FitError);
}
