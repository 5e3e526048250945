#include <catch_amalgamated.hpp>

#include <cmath>

#include "evatrap/errors.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/physics.hpp"
#include "evatrap/trap.hpp"

using namespace evatrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

constexpr double pi = constants::pi;

namespace {

struct Bowl {
  double kx, ky, a, period;
  double y0 = 0.25e-6;
};

// Analytic well 1/2 kx x^2 + 1/2 ky (y - y0)^2 - a cos(2 pi z / period) on a
// grid above the core; the optical part is marked attractive everywhere.
PotentialMap bowl_map(const Bowl& b, int nz) {
  PotentialMap m;
  m.grid.nx = 41;
  m.grid.ny = 41;
  m.grid.dx = m.grid.dy = 10e-9;
  m.grid.x0 = -0.2e-6;
  m.grid.y0 = 0.16e-6;
  m.period = nz > 1 ? b.period : 0.0;
  for (int k = 0; k < nz; ++k) m.z.push_back(nz > 1 ? b.period * k / nz : 0.0);
  const std::size_t n = m.grid.size() * nz;
  m.total.resize(n);
  m.red.assign(n, -1e-28);
  m.blue.assign(n, 0.0);
  m.surface.assign(m.grid.size(), 0.0);
  m.mask.assign(m.grid.size(), 0);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < m.grid.ny; ++j)
      for (int i = 0; i < m.grid.nx; ++i) {
        const double x = m.grid.x(i), y = m.grid.y(j) - b.y0;
        const double uz = nz > 1 ? -b.a * std::cos(2 * pi * m.z[k] / b.period) : 0.0;
        m.total[m.index(i, j, k)] = 0.5 * b.kx * x * x + 0.5 * b.ky * y * y + uz - 1e-27;
      }
  return m;
}

double stiffness(double f_hz) {
  const double w = 2 * pi * f_hz;
  return rubidium87().mass * w * w;
}

struct Modes {
  WaveguideGeometry geometry;
  SimulationGrid grid = SimulationGrid::centered(3e-6, 3e-6, 20e-9);
  std::shared_ptr<const GuidedMode> red00, red01, red10, blue00;

  Modes() {
    auto find = [&](double lam, const char* label) {
      for (auto& m : solve_modes(geometry, grid, lam, Polarization::TE, 4))
        if (m.label == label) return std::make_shared<const GuidedMode>(m);
      return std::shared_ptr<const GuidedMode>();
    };
    red00 = find(865e-9, "TE00");
    red01 = find(865e-9, "TE01");
    red10 = find(865e-9, "TE10");
    blue00 = find(700e-9, "TE00");
  }

  TwoColorConfig guide(double red_power = 1.5e-3) const {
    TwoColorConfig c;
    c.geometry = geometry;
    c.red.wavelength = 865e-9;
    c.red.excitations = {{red01, red_power, 0.0}};
    c.blue.wavelength = 700e-9;
    c.blue.excitations = {{blue00, 40e-3, 0.0}};
    return c;
  }
};

const Modes& modes() {
  static const Modes m;
  return m;
}

}  // namespace

TEST_CASE("analytic bowl: frequencies, depth and gradient") {
  const Bowl b{stiffness(50e3), stiffness(300e3), 0.0, 0.0};
  const PotentialMap map = bowl_map(b, 1);
  WaveguideGeometry g;
  const TrapMinimum m = find_trap_minimum(map, g);
  CHECK_THAT(m.position[0], WithinAbs(0.0, 1e-15));
  CHECK_THAT(m.position[1], WithinRel(0.25e-6, 1e-9));
  CHECK(m.gradient_residual < 1e-9);
  TwoColorConfig cfg;
  const TrapReport r = trap_report(cfg, map, m);
  CHECK_THAT(r.omega[0] / (2 * pi), WithinRel(50e3, 1e-9));
  CHECK_THAT(r.omega[1] / (2 * pi), WithinRel(300e3, 1e-9));
  CHECK(r.hessian_vs_fd < 1e-9);
  // Barrier along the vertical through the minimum: the lower edge at 90 nm.
  CHECK_THAT(r.depth, WithinRel(0.5 * b.ky * 0.09e-6 * 0.09e-6, 1e-9));
  CHECK_THAT(r.localization[0], WithinRel(std::sqrt(constants::hbar / (rubidium87().mass * r.omega[0])), 1e-12));
  // Flood fill leaves sideways through the lateral edge.
  CHECK_THAT(r.depth_saddle, WithinRel(0.5 * b.kx * 0.2e-6 * 0.2e-6, 1e-9));
}

TEST_CASE("analytic lattice: axial frequency and escape along z") {
  const double period = 1.31e-6;
  const double q = 2 * pi / period;
  const double a = stiffness(30e3) / (q * q);
  const Bowl b{stiffness(50e3), stiffness(300e3), a, period};
  const PotentialMap map = bowl_map(b, 50);
  const TrapMinimum m = find_trap_minimum(map, WaveguideGeometry{});
  CHECK(m.k == 0);
  TwoColorConfig cfg;
  const TrapReport r = trap_report(cfg, map, m);
  CHECK_THAT(r.omega[2] / (2 * pi), WithinRel(30e3, 1e-3));
  CHECK_THAT(r.omega[0] / (2 * pi), WithinRel(50e3, 1e-9));
  const EscapeBarrier z_only = escape_barrier(map, m, true);
  CHECK(z_only.level - m.u_min <= 0.5 * b.kx * 0.04e-12 * (1 + 1e-9));
}

TEST_CASE("no attractive minimum raises NoTrapMinimum") {
  Bowl b{stiffness(50e3), stiffness(300e3), 0.0, 0.0};
  PotentialMap map = bowl_map(b, 1);
  for (auto& v : map.red) v = 1e-28;
  CHECK_THROWS_AS(find_trap_minimum(map, WaveguideGeometry{}), NoTrapMinimum);
}

TEST_CASE("guide trap on a coarse grid") {
  const auto& md = modes();
  REQUIRE(md.red01);
  REQUIRE(md.blue00);
  const TrapReport r = analyze_trap(md.guide(), TrapRegion{});
  CHECK(r.valid);
  CHECK(r.standoff > 0.0);
  CHECK(r.depth > 0.0);
  CHECK(r.gradient_residual < 1e-6);
  CHECK(r.hessian_vs_fd < 0.02);
  CHECK_THAT(r.tau_coh * r.gamma_sc, WithinRel(1.0, 1e-14));
  CHECK_THAT(r.tau_trap / r.tau_trap_alt, WithinRel(2.0, 1e-14));
  CHECK_THAT(r.gamma_sc, WithinRel(r.gamma_red + r.gamma_blue, 1e-14));
  CHECK(r.omega[2] == 0.0);
}

TEST_CASE("zero red power has no trap") {
  const auto& md = modes();
  CHECK_THROWS_AS(analyze_trap(md.guide(0.0), TrapRegion{}), NoTrapMinimum);
}

TEST_CASE("red power rescaling keeps the split") {
  const auto& md = modes();
  TwoColorConfig c = md.guide();
  c.red.excitations = {{md.red00, 1e-3, 0.0}, {md.red01, 3e-3, 0.0}};
  const auto s = with_red_power(c, 2e-3);
  CHECK_THAT(s.red.excitations[0].power, WithinRel(0.5e-3, 1e-14));
  CHECK_THAT(s.red.excitations[1].power, WithinRel(1.5e-3, 1e-14));
  for (auto& e : c.red.excitations) e.power = 0.0;
  CHECK_THAT(with_red_power(c, 2e-3).red.excitations[0].power, WithinRel(1e-3, 1e-14));
  CHECK_THROWS_AS(with_red_power(c, -1.0), ConfigError);
}

TEST_CASE("sweep flags non-monotone trends") {
  const auto& md = modes();
  const auto up = power_sweep(md.guide(), {1.5e-3, 2.0e-3}, TrapRegion{});
  CHECK(up.standoff_decreasing);
  CHECK(up.depth_increasing);
  const auto down = power_sweep(md.guide(), {2.0e-3, 1.5e-3}, TrapRegion{});
  CHECK_FALSE(down.depth_increasing);
  CHECK_FALSE(down.diagnostics.empty());
  const auto single = power_sweep(md.guide(), {1.5e-3}, TrapRegion{});
  const auto direct = analyze_trap(md.guide(), TrapRegion{});
  REQUIRE(single.rows.front().report);
  CHECK(single.rows.front().report->depth == direct.depth);
}

TEST_CASE("beat period and composition checks") {
  const auto& md = modes();
  TwoColorConfig c = md.guide();
  CHECK(red_beat_period(c) == 0.0);
  c.red.excitations = {{md.red00, 0.75e-3, 0.0}, {md.red01, 0.75e-3, 0.0}};
  CHECK_THAT(red_beat_period(c), WithinRel(beat_period(md.red00->beta, md.red01->beta), 1e-14));
  TwoColorConfig three = c;
  three.red.excitations.push_back({md.red10, 0.1e-3, 0.0});
  CHECK_THROWS_AS(red_beat_period(three), CompositionError);
  TwoColorConfig blue_beat = c;
  blue_beat.blue.excitations.push_back({md.red00, 1e-3, 0.0});
  CHECK_THROWS(red_beat_period(blue_beat));
}

TEST_CASE("lattice stack and degeneracy") {
  const auto& md = modes();
  TwoColorConfig c = md.guide();
  c.red.excitations = {{md.red00, 0.75e-3, 0.0}, {md.red01, 0.75e-3, 0.0}};
  TrapRegion region;
  region.z_stations = 24;
  PotentialMap map;
  const LatticeReport l = lattice_analysis(c, region, 1, &map);
  CHECK(map.nz() == 24);
  CHECK_FALSE(l.degenerate);
  CHECK_THAT(l.period, WithinRel(beat_period(md.red00->beta, md.red01->beta), 1e-14));
  CHECK(l.site.omega[2] > 0.0);
  CHECK(l.site_z.size() == 1);

  c.red.excitations = {{md.red01, 1.5e-3, 0.0}};
  const LatticeReport g = lattice_analysis(c, region);
  CHECK(g.degenerate);
  CHECK_FALSE(g.note.empty());
}

TEST_CASE("guide to lattice transition") {
  const auto& md = modes();
  TwoColorConfig base = md.guide();
  base.red.excitations.clear();
  TrapRegion region;
  region.z_stations = 16;
  const auto rows = guide_lattice_transition(base, {md.red00, md.red01}, 1.5e-3, CouplerDevice{}, {0.5 * pi, pi},
                                             region, 0.08e-6);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].corrugation > 0.0);
  CHECK_THAT(std::norm(rows[1].state.te01), WithinRel(1.0, 1e-12));
  CHECK(rows[1].corrugation == 0.0);
  REQUIRE(rows[1].lattice);
  CHECK(rows[1].lattice->degenerate);
}
