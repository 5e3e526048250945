#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "evatrap/bpm.hpp"
#include "evatrap/errors.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/physics.hpp"

using namespace evatrap;
using Catch::Matchers::WithinRel;

namespace {

struct Setup {
  WaveguideGeometry geometry;
  SimulationGrid grid = SimulationGrid::centered(3e-6, 3e-6, 20e-9);
  std::vector<std::shared_ptr<const GuidedMode>> modes;

  Setup() {
    for (auto& m : solve_modes(geometry, grid, 865e-9, Polarization::TE, 3))
      modes.push_back(std::make_shared<const GuidedMode>(std::move(m)));
  }
  std::shared_ptr<const GuidedMode> mode(const std::string& label) const {
    for (const auto& m : modes)
      if (m->label == label) return m;
    return nullptr;
  }
  BpmRun run(const std::vector<ModeExcitation>& ex, double length) const {
    BpmRun r;
    r.launch = superpose(ex, 0.0);
    r.wavelength = 865e-9;
    r.dz = 0.02e-6;
    r.z_extent = length;
    double b = 0.0;
    for (const auto& e : ex) b += e.mode->beta / ex.size();
    r.reference_index = b / e_k0();
    r.absorber_width = 0.3e-6;
    r.probes = {{0.0, 0.2e-6}};
    r.projection = ex.front().mode->field;
    return r;
  }
  static double e_k0() { return 2.0 * constants::pi / 865e-9; }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST_CASE("an eigenmode propagates without change") {
  const auto& s = setup();
  const auto te00 = s.mode("TE00");
  REQUIRE(te00);
  const BpmRun run = s.run({{te00, 1e-3, 0.0}}, 2e-6);
  const BpmResult r = bpm_propagate(run, build_index_profile(s.geometry, s.grid));
  const auto [plo, phi] = std::minmax_element(r.power.begin(), r.power.end());
  CHECK((*phi - *plo) / 1e-3 < 1e-2);
  const auto& probe = r.probe_intensity[0];
  const auto [ilo, ihi] = std::minmax_element(probe.begin(), probe.end());
  CHECK((*ihi - *ilo) / *ihi < 1e-2);
  CHECK_THAT(phase_slope(r.trace_z, r.projection), WithinRel(te00->beta, 1e-5));
}

TEST_CASE("two-mode beating reproduces the analytic beat period") {
  const auto& s = setup();
  const auto te00 = s.mode("TE00");
  const auto te01 = s.mode("TE01");
  REQUIRE(te01);
  const double period = beat_period(te00->beta, te01->beta);
  BpmRun run = s.run({{te00, 0.5e-3, 0.0}, {te01, 0.5e-3, 0.0}}, 2.5 * period);
  run.stations = {0.0, period};
  const BpmResult r = bpm_propagate(run, build_index_profile(s.geometry, s.grid));
  const double fit = fit_oscillation_period(r.trace_z, r.probe_intensity[0], 0.5 * period, 2.0 * period);
  CHECK_THAT(fit, WithinRel(period, 0.01));
  // Power is conserved to the quadrature of the launch field.
  CHECK_THAT(r.power.back(), WithinRel(run.launch.power(), 0.01));
  REQUIRE(r.snapshots.size() == 2);
  CHECK(r.station_z[1] == Catch::Approx(period).margin(run.dz));
}

TEST_CASE("BPM run validation") {
  const auto& s = setup();
  BpmRun run = s.run({{s.mode("TE00"), 1e-3, 0.0}}, 1e-6);
  const auto map = build_index_profile(s.geometry, s.grid);
  BpmRun thin = run;
  thin.absorber_width = 5 * s.grid.dx;
  CHECK_THROWS_AS(bpm_propagate(thin, map), ConfigError);
  BpmRun bad = run;
  bad.pade_order = 3;
  CHECK_THROWS_AS(bpm_propagate(bad, map), ConfigError);
  BpmRun off = run;
  off.launch.grid = SimulationGrid::centered(3e-6, 3e-6, 25e-9);
  CHECK_THROWS_AS(bpm_propagate(off, map), ConfigError);
}

TEST_CASE("phase slope of a synthetic overlap") {
  std::vector<double> z;
  std::vector<Complex> ov;
  for (int k = 0; k < 100; ++k) {
    z.push_back(k * 0.05e-6);
    ov.push_back(std::polar(2.0, 2.2e7 * z.back() + 0.3));
  }
  CHECK_THAT(phase_slope(z, ov), WithinRel(2.2e7, 1e-10));
}
