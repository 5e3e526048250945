// Acceptance run: executes every command on the bundled configuration and
// prints one PASS/FAIL line per criterion. Tolerances are fixed here.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "evatrap/commands.hpp"
#include "evatrap/config.hpp"
#include "evatrap/field.hpp"
#include "evatrap/mode_solver.hpp"
#include "evatrap/physics.hpp"

using namespace evatrap;

namespace {

struct Check {
  std::string what;
  bool pass;
  std::string detail;
};

class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)) {}

  // |value / target - 1| <= tol
  void near(const std::string& what, double value, double target, double tol) {
    const double dev = value / target - 1.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.5g vs %.5g (%+.1f%%, tol %.0f%%)", value, target, 100.0 * dev, 100.0 * tol);
    checks_.push_back({what, std::isfinite(dev) && std::abs(dev) <= tol, buf});
  }
  void within(const std::string& what, double value, double target, double abs_tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.6g vs %.6g (tol %.3g)", value, target, abs_tol);
    checks_.push_back({what, std::isfinite(value) && std::abs(value - target) <= abs_tol, buf});
  }
  void below(const std::string& what, double value, double limit) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.3g < %.3g", value, limit);
    checks_.push_back({what, std::isfinite(value) && std::abs(value) < limit, buf});
  }
  void truth(const std::string& what, bool ok, const std::string& detail = "") { checks_.push_back({what, ok, detail}); }

  bool passed() const {
    for (const auto& c : checks_)
      if (!c.pass) return false;
    return !checks_.empty();
  }

  void print(int number) const {
    int failed = 0;
    for (const auto& c : checks_) failed += c.pass ? 0 : 1;
    std::printf("criterion %d %s: %s (%zu checks, %d failed)\n", number, title_.c_str(), passed() ? "PASS" : "FAIL",
                checks_.size(), failed);
    for (const auto& c : checks_)
      std::printf("    [%s] %s: %s\n", c.pass ? "ok" : "FAIL", c.what.c_str(), c.detail.c_str());
  }

 private:
  std::string title_;
  std::vector<Check> checks_;
};

double num(const Json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

const Json* find_row(const Json& rows, double red_mw) {
  for (const auto& r : rows)
    if (std::abs(num(r["red_power_mW"]) - red_mw) < 1e-9 && r.contains("depth_uK")) return &r;
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <config> <out_dir>\n");
    return 2;
  }
  const RunConfig cfg = load_config(argv[1]);
  const std::string out = argv[2];
  Json report;
  try {
    report = run_command("reproduce", cfg, {out + "/reproduce", 1});
  } catch (const std::exception& e) {
    std::printf("reproduce failed: %s\n", e.what());
    return 1;
  }
  const Json& r = report["results"];
  const Json& modes = r["modes"];
  const Json& decay = r["decay"];
  const Json& guide = r["guide"];
  const Json& trap = guide["trap"];
  const Json& sweep = r["sweep"];
  const Json& lattice = r["lattice"];
  const Json& site = lattice["site"];
  const Json& bpm = r["bpm"];
  const Json& mzi = r["mzi"];

  std::vector<Criterion> crit;

  {
    Criterion c("mode solve");
    double b00 = 0, b01 = 0;
    for (const auto& m : modes["modes"]) {
      if (m["label"] == "TE00") b00 = num(m["beta_per_m"]);
      if (m["label"] == "TE01") b01 = num(m["beta_per_m"]);
    }
    c.near("beta TE00", b00, 22.04e6, 0.02);
    c.near("beta TE01", b01, 17.23e6, 0.02);
    std::string higher;
    for (const auto& l : modes["higher_te_guided"]) higher += l.get<std::string>() + " ";
    c.truth("no guided TE mode beyond the first-order pair", modes["higher_te_guided"].empty(),
            higher.empty() ? "none" : "guided: " + higher);
    const auto grid = cfg.grid.build();
    double seconds = std::nan("");
    for (const auto& s : report["timing"]["solves"])
      if (s["polarization"] == "TE" && std::abs(num(s["wavelength_nm"]) - 865.0) < 1e-6 &&
          std::abs(num(s["grid_step_nm"]) - cfg.grid.step * 1e9) < 1e-9)
        seconds = num(s["seconds"]);
    c.truth("grid is 600 x 600", grid.nx == 600 && grid.ny == 600,
            std::to_string(grid.nx) + " x " + std::to_string(grid.ny));
    c.below("TE solve time (s)", seconds, 30.0);
    crit.push_back(c);
  }
  {
    Criterion c("decay lengths");
    c.near("L(TE01, 865 nm) um", num(decay["red"]["decay_length_um"]), 0.0617, 0.05);
    c.near("L(TE00, 700 nm) um", num(decay["blue"]["decay_length_um"]), 0.0375, 0.05);
    c.within("alpha_L", num(decay["alpha_L"]), 0.65, 0.05);
    std::string v;
    for (const auto& s : decay["ordering_violations"]) v += s.get<std::string>() + " ";
    c.truth("L(TE01) > L(TM00) > L(TE00) over the scan", decay["ordering_te01_tm00_te00"].get<bool>(),
            v.empty() ? "holds at every wavelength" : "violated at " + v);
    crit.push_back(c);
  }
  {
    Criterion c("guide trap");
    c.near("standoff um", num(trap["standoff_um"]), 0.092, 0.10);
    c.near("U_D uK", num(trap["depth_uK"]), 114.6, 0.15);
    c.near("Gamma_sc /s", num(trap["gamma_sc_per_s"]), 8.8, 0.20);
    c.near("tau_coh ms", num(trap["tau_coh_ms"]), 113.6, 0.20);
    c.near("tau_trap s", num(trap["tau_trap_s"]), 77.6, 0.20);
    c.near("f_x kHz", num(trap["freq_kHz"][0]), 51.0, 0.15);
    c.near("f_y kHz", num(trap["freq_kHz"][1]), 299.0, 0.15);
    c.near("hbar omega_y / k_B uK", num(trap["hbar_omega_y_uK"]), 14.3, 0.15);
    crit.push_back(c);
  }
  {
    Criterion c("power table");
    struct Row {
      double p, x, u, g, tau;
    };
    const Row table[] = {{0.5, 0.137, 7.49, 0.56, 12.4},
                         {1.0, 0.107, 41.51, 3.14, 78.6},
                         {1.5, 0.092, 114.6, 8.78, 77.6},
                         {2.0, 0.075, 236.9, 18.5, 74.7},
                         {2.5, 0.066, 417.4, 31.9, 77.7}};
    for (const auto& t : table) {
      const Json* row = find_row(sweep["rows"], t.p);
      const std::string tag = std::to_string(t.p).substr(0, 3) + " mW ";
      if (!row) {
        c.truth(tag + "row", false, "no trap found");
        continue;
      }
      c.near(tag + "y_min um", num((*row)["standoff_um"]), t.x, 0.15);
      c.near(tag + "U_D uK", num((*row)["depth_uK"]), t.u, 0.15);
      c.near(tag + "Gamma_sc /s", num((*row)["gamma_sc_per_s"]), t.g, 0.15);
      c.near(tag + "tau_trap s", num((*row)["tau_trap_s"]), t.tau, 0.15);
    }
    c.truth("standoff decreases with red power", sweep["standoff_decreasing"].get<bool>(),
            sweep["diagnostics"].get<std::string>());
    c.truth("depth increases with red power", sweep["depth_increasing"].get<bool>(),
            sweep["diagnostics"].get<std::string>());
    crit.push_back(c);
  }
  {
    Criterion c("lattice");
    c.near("beat period (analytic) um", num(lattice["period_analytic_um"]), 1.31, 0.01);
    c.near("beat period (BPM fit) um", num(bpm["period_fit_um"]), 1.31, 0.03);
    c.near("site standoff um", num(site["standoff_um"]), 0.08, 0.10);
    c.near("site U_D uK", num(site["depth_uK"]), 146.0, 0.15);
    c.near("f_x kHz", num(site["freq_kHz"][0]), 56.0, 0.20);
    c.near("f_y kHz", num(site["freq_kHz"][1]), 346.0, 0.20);
    c.near("f_z kHz", num(site["freq_kHz"][2]), 32.0, 0.20);
    c.near("Gamma_sc /s", num(site["gamma_sc_per_s"]), 13.71, 0.20);
    c.near("tau_trap s", num(site["tau_trap_s"]), 118.7, 0.20);
    crit.push_back(c);
  }
  {
    Criterion c("MZI");
    c.below("unitarity error", num(mzi["unitarity_error"]), 1e-12);
    c.near("theta(dn = 0.01012) / pi", num(mzi["theta_pi"]), 1.0, 0.10);
    c.near("theta(dn = 0.00506) / pi", num(mzi["theta_half_shift_pi"]), 0.5, 0.10);
    c.below("population sum error", num(mzi["population_sum_error"]), 1e-12);
    crit.push_back(c);
  }
  {
    Criterion c("coupler");
    const Json& cp = mzi["coupler"];
    c.within("TE10 -> TE01 at L_c", num(cp["transfer_at_Lc"]), 1.0, 1e-12);
    c.within("TE10 -> TE01 at L_c / 2", num(cp["transfer_at_half_Lc"]), 0.5, 1e-12);
    const double ratio = num(cp["supermode_kappa_ratio"]);
    char buf[96];
    std::snprintf(buf, sizeof buf, "kappa(supermode) / kappa(L_c) = %.3g", ratio);
    c.truth("supermode kappa within a factor 2", ratio >= 0.5 && ratio <= 2.0, buf);
    crit.push_back(c);
  }
  {
    Criterion c("property suites");
    double worst = 0.0;
    for (const auto& s : r["solver"]) worst = std::max(worst, num(s["max_residual"]));
    c.below("eigen-residual (all solves)", worst, 1e-6);
    c.below("TE mode orthogonality", num(modes["orthogonality_TE"]), 1e-6);
    c.below("gradient at guide minimum", num(trap["gradient_residual"]), 1e-3);
    c.below("gradient at lattice site", num(site["gradient_residual"]), 1e-3);
    c.below("Hessian vs 1D differences (guide)", num(trap["hessian_vs_fd"]), 0.02);
    c.below("Hessian vs 1D differences (lattice)", num(site["hessian_vs_fd"]), 0.02);
    c.within("tau_coh * Gamma_sc (guide)", num(trap["tau_coh_times_gamma"]), 1.0, 1e-12);
    c.within("tau_coh * Gamma_sc (lattice)", num(site["tau_coh_times_gamma"]), 1.0, 1e-12);
    c.below("grid halving: beta TE00", num(modes["grid_convergence"]["TE00_beta_rel"]), 0.005);
    c.below("grid halving: beta TE01", num(modes["grid_convergence"]["TE01_beta_rel"]), 0.005);
    c.below("grid halving: guide U_D", num(guide["grid_convergence"]["depth_rel"]), 0.05);

    // Superposition and fringe shift on real modes from a coarse solve.
    const auto set = solve_modes(cfg.geometry, SimulationGrid::centered(3e-6, 3e-6, 20e-9), 865e-9,
                                 Polarization::TE, 3);
    const GuidedMode* m0 = find_mode(set, "TE00");
    const GuidedMode* m1 = find_mode(set, "TE01");
    if (m0 && m1) {
      auto p0 = std::make_shared<const GuidedMode>(*m0);
      auto p1 = std::make_shared<const GuidedMode>(*m1);
      const std::vector<ModeExcitation> ex{{p0, 0.75e-3, 0.4}, {p1, 0.75e-3, -0.2}};
      double err = 0.0;
      for (double z : {0.0, 0.3e-6, 1.7e-6}) {
        const FieldMap f = superpose(ex, z);
        for (std::size_t k = 0; k < f.values.size(); ++k) {
          Complex e{0.0, 0.0};
          for (const auto& x : ex) e += x.amplitude() * std::polar(1.0, x.mode->beta * z) * x.mode->field[k];
          err = std::max(err, std::abs(f.values[k] - e) / (1.0 + std::abs(e)));
        }
      }
      c.below("pointwise superposition error", err, 1e-13);
      const double period = beat_period(p0->beta, p1->beta);
      const int n = 64, shift = 9;
      auto trace = [&](double th) {
        const std::vector<ModeExcitation> e{{p0, 0.75e-3, th}, {p1, 0.75e-3, 0.0}};
        std::vector<double> v;
        for (int k = 0; k < n; ++k) v.push_back(intensity(e, 0.0, 0.2e-6, period * k / n));
        return v;
      };
      const auto a = trace(0.0);
      const auto b = trace(2.0 * constants::pi * shift / n);
      int best = 0;
      double best_c = -1e300;
      for (int s = 0; s < n; ++s) {
        double corr = 0.0;
        for (int k = 0; k < n; ++k) corr += a[k] * b[(k + s) % n];
        if (corr > best_c) {
          best_c = corr;
          best = s;
        }
      }
      c.truth("fringe shift of d_theta / d_beta", best == n - shift,
              "correlation peak at " + std::to_string(best) + ", expected " + std::to_string(n - shift));
    } else {
      c.truth("coarse TE00/TE01 solve", false, "modes missing");
    }

    RunConfig small = cfg;
    small.grid.step = 20e-9;
    small.convergence_check = false;
    const Json h1 = run_command("guide", small, {out + "/determinism_a", 1});
    const Json h2 = run_command("guide", small, {out + "/determinism_b", 1});
    c.truth("determinism hash", h1["output_hash"] == h2["output_hash"], h1["output_hash"].get<std::string>());
    crit.push_back(c);
  }
  {
    Criterion c("surfaced inconsistencies");
    c.within("lifetime ratio (guide)", num(guide["lifetime_conventions"]["ratio"]), 2.0, 1e-12);
    c.within("lifetime ratio (lattice)", num(lattice["lifetime_conventions"]["ratio"]), 2.0, 1e-12);
    bool have_low = false, have_high = false;
    double spread = 0.0;
    const double base = num(trap["depth_uK"]);
    for (const auto& s : guide["surface_sensitivity"]) {
      const double eps = num(s["permittivity"]);
      if (!s.contains("depth_uK")) continue;
      have_low |= std::abs(eps - 2.1) < 1e-12;
      have_high |= std::abs(eps - 11.7) < 1e-12;
      spread = std::max(spread, std::abs(num(s["depth_uK"]) / base - 1.0));
    }
    c.truth("U_D reported for eps = 2.1 and 11.7", have_low && have_high);
    c.below("U_D change over the eps range (bound 50%)", spread, 0.5);
    crit.push_back(c);
  }

  int failed = 0;
  std::printf("\n");
  for (std::size_t k = 0; k < crit.size(); ++k) {
    crit[k].print(static_cast<int>(k + 1));
    failed += crit[k].passed() ? 0 : 1;
  }
  std::printf("\nacceptance: %zu criteria, %d passed, %d failed\n", crit.size(), static_cast<int>(crit.size()) - failed,
              failed);
  return failed ? 1 : 0;
}
