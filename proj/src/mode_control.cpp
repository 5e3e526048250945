#include "evatrap/mode_control.hpp"

#include <algorithm>
#include <cmath>

#include "evatrap/errors.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/physics.hpp"

namespace evatrap {

using namespace std::complex_literals;

Eigen::Matrix2cd mzi_matrix(double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  Eigen::Matrix2cd m;
  m << c, 1i * s, 1i * s, c;
  return m;
}

ModeVector transform(const Eigen::Matrix2cd& m, const ModeVector& v) {
  return {m(0, 0) * v.c0 + m(0, 1) * v.c1, m(1, 0) * v.c0 + m(1, 1) * v.c1};
}

void MziDevice::validate() const {
  if (!(modulator_length > 0.0)) throw ConfigError("MZI modulator length must be positive");
  if (!(wavelength > 0.0)) throw ConfigError("MZI wavelength must be positive");
  if (!std::isfinite(index_shift)) throw ConfigError("MZI index shift must be finite");
}

double reduce_phase(double theta) {
  const double two_pi = 2.0 * constants::pi;
  double r = std::fmod(theta, two_pi);
  if (r < 0.0) r += two_pi;
  return r;
}

namespace {

const GuidedMode& fundamental(const std::vector<GuidedMode>& modes, const char* what) {
  const GuidedMode* m = find_mode(modes, "TE00");
  if (!m) throw DomainError(std::string("TE00 is not guided in the ") + what + " modulator arm");
  return *m;
}

}  // namespace

double modulator_phase(const MziDevice& device, const WaveguideGeometry& geometry, const SimulationGrid& grid,
                       double beta_unshifted, double confinement) {
  device.validate();
  if (device.phase) return *device.phase;
  if (device.index_shift == 0.0) return 0.0;
  if (device.analytic_phase)
    return 2.0 * constants::pi * device.index_shift * device.modulator_length * confinement / device.wavelength;
  SolverOptions opt;
  opt.max_modes = 1;
  opt.window_low_index = std::max(geometry.substrate_index, geometry.clad_index);
  const auto shifted =
      solve_modes(build_index_profile(geometry, grid, device.index_shift), device.wavelength, Polarization::TE, opt);
  return (fundamental(shifted, "shifted").beta - beta_unshifted) * device.modulator_length;
}

double modulator_phase(const MziDevice& device, const WaveguideGeometry& geometry, const SimulationGrid& grid) {
  device.validate();
  if (device.phase) return *device.phase;
  if (device.index_shift == 0.0) return 0.0;
  SolverOptions opt;
  opt.max_modes = 1;
  opt.window_low_index = std::max(geometry.substrate_index, geometry.clad_index);
  const auto base = solve_modes(build_index_profile(geometry, grid), device.wavelength, Polarization::TE, opt);
  const auto& m = fundamental(base, "unshifted");
  return modulator_phase(device, geometry, grid, m.beta, m.confinement);
}

ModeVector mzi_apply(double theta, const ModeVector& input) { return transform(mzi_matrix(theta), input); }

std::vector<SuperpositionRow> superposition_vs_dn(const MziDevice& base, const WaveguideGeometry& geometry,
                                                  const SimulationGrid& grid, const std::vector<double>& shifts) {
  base.validate();
  SolverOptions opt;
  opt.max_modes = 1;
  opt.window_low_index = std::max(geometry.substrate_index, geometry.clad_index);
  const auto modes = solve_modes(build_index_profile(geometry, grid), base.wavelength, Polarization::TE, opt);
  const auto& m0 = fundamental(modes, "unshifted");
  std::vector<SuperpositionRow> rows;
  for (double dn : shifts) {
    MziDevice d = base;
    d.index_shift = dn;
    d.phase.reset();
    SuperpositionRow row;
    row.index_shift = dn;
    row.theta = modulator_phase(d, geometry, grid, m0.beta, m0.confinement);
    const ModeVector out = mzi_apply(row.theta, {});
    row.p0 = std::norm(out.c0);
    row.p1 = std::norm(out.c1);
    rows.push_back(row);
  }
  return rows;
}

void CouplerDevice::validate() const {
  if (!(coupling_length > 0.0)) throw ConfigError("coupler length must be positive");
  if (!(gap >= 0.0)) throw ConfigError("coupler gap must be non-negative");
}

double CouplerDevice::kappa() const {
  validate();
  return constants::pi / (2.0 * coupling_length);
}

Eigen::Matrix2cd coupler_matrix(double kappa, double z) {
  const double c = std::cos(kappa * z);
  const double s = std::sin(kappa * z);
  Eigen::Matrix2cd m;
  m << c, 1i * s, 1i * s, c;
  return m;
}

ModeVector coupler_apply(const CouplerDevice& device, double z, const ModeVector& input) {
  if (!(z >= 0.0)) throw DomainError("coupler position must be non-negative");
  return transform(coupler_matrix(device.kappa(), z), input);
}

SupermodeEstimate supermode_kappa(const CouplerDevice& device, const WaveguideGeometry& geometry, double wavelength,
                                  double step) {
  device.validate();
  const double w = geometry.core_width;
  const double h = geometry.core_height;
  const double ox = w + device.gap;
  const double oy = h + device.gap;
  const double margin = 1.0e-6;
  SimulationGrid grid;
  grid.dx = grid.dy = step;
  grid.nx = static_cast<int>(std::ceil((ox + w + 2 * margin) / step));
  grid.ny = static_cast<int>(std::ceil((oy + h + 2 * margin) / step));
  grid.x0 = -0.5 * w - margin + 0.5 * step;
  grid.y0 = -0.5 * h - margin + 0.5 * step;
  grid.validate();

  IndexMap map{grid, std::vector<double>(grid.size(), geometry.clad_index)};
  auto inside = [](double v, double c, double half) { return std::abs(v - c) < half; };
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i), y = grid.y(j);
      const bool a = inside(x, 0.0, 0.5 * w) && inside(y, 0.0, 0.5 * h);
      const bool b = inside(x, ox, 0.5 * w) && inside(y, oy, 0.5 * h);
      if (a || b) map.n[grid.index(i, j)] = geometry.core_index;
    }

  SolverOptions opt;
  opt.max_modes = 6;
  opt.window_low_index = geometry.clad_index;
  const auto modes = solve_modes(map, wavelength, Polarization::TE, opt);
  if (modes.size() < 6) throw DomainError("coupler cross-section does not guide the first-order supermode family");
  SupermodeEstimate est;
  for (std::size_t k = 2; k < 6; ++k) est.betas.push_back(modes[k].beta);
  est.kappa = 0.5 * (est.betas.front() - est.betas.back());
  est.coupling_length = constants::pi / (2.0 * est.kappa);
  return est;
}

std::vector<ChainStep> run_chain(const std::vector<ChainStage>& stages, ChainState input) {
  std::vector<ChainStep> steps;
  steps.push_back({"input", input});
  ChainState s = input;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& st = stages[k];
    if (st.kind == ChainStage::Kind::Mzi) {
      const ModeVector out = mzi_apply(st.theta, {s.te00, s.te10});
      s.te00 = out.c0;
      s.te10 = out.c1;
      steps.push_back({"mzi", s});
    } else {
      const double z = st.length.value_or(st.coupler.coupling_length);
      const ModeVector out = coupler_apply(st.coupler, z, {s.te10, s.te01});
      s.te10 = out.c0;
      s.te01 = out.c1;
      steps.push_back({"coupler", s});
    }
  }
  return steps;
}

}  // namespace evatrap
