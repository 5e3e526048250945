#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "evatrap/commands.hpp"
#include "evatrap/config.hpp"
#include "evatrap/errors.hpp"

using namespace evatrap;
using Catch::Matchers::WithinRel;

TEST_CASE("quantities carry units") {
  CHECK_THAT(parse_quantity("865 nm", "length"), WithinRel(865e-9, 1e-15));
  CHECK_THAT(parse_quantity("1.5 mW", "power"), WithinRel(1.5e-3, 1e-15));
  CHECK_THAT(parse_quantity("0.3um", "length"), WithinRel(0.3e-6, 1e-15));
  CHECK_THAT(parse_quantity("0.3 μm", "length"), WithinRel(0.3e-6, 1e-15));
  CHECK_THAT(parse_quantity("0.5 pi", "angle"), WithinRel(0.5 * constants::pi, 1e-15));
  CHECK_THAT(parse_quantity("90 deg", "angle"), WithinRel(0.5 * constants::pi, 1e-15));
  CHECK_THAT(parse_quantity("38.1e6 /s", "rate"), WithinRel(38.1e6, 1e-15));
  CHECK_THAT(parse_quantity("86.9 amu", "mass"), WithinRel(86.9 * constants::amu, 1e-15));
  CHECK(parse_quantity("3.42", "none") == 3.42);
  CHECK_THROWS_AS(parse_quantity("865", "length"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("865 mW", "length"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("865 furlong", "length"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("nm", "length"), ConfigError);
  CHECK_THROWS_AS(parse_quantity("3.42 nm", "none"), ConfigError);
}

TEST_CASE("empty document gives the reference defaults") {
  const RunConfig c = parse_config("");
  CHECK(c.geometry.core_width == 0.3e-6);
  CHECK(c.red.wavelength == 865e-9);
  REQUIRE(c.red.modes.size() == 1);
  CHECK(c.red.modes[0].label == "TE01");
  CHECK(c.blue.modes[0].power == 40e-3);
}

TEST_CASE("sections parse into SI") {
  const RunConfig c = parse_config(R"(
geometry: {core_width: 250 nm, core_index: 3.5}
grid: {step: 10 nm}
red:
  wavelength: 850 nm
  modes:
    - {mode: TE00, power: 0.5 mW, phase: 0.5 pi}
    - {mode: TE01, power: 0.25 mW}
sweep: {red_powers: {from: 1 mW, to: 2 mW, step: 0.5 mW}}
chain:
  - {type: mzi, phase: 1 pi}
  - {type: coupler, length: 10 um}
)");
  CHECK_THAT(c.geometry.core_width, WithinRel(250e-9, 1e-15));
  CHECK(c.geometry.core_index == 3.5);
  CHECK(c.grid.step == 10e-9);
  REQUIRE(c.red.modes.size() == 2);
  CHECK_THAT(c.red.modes[0].phase, WithinRel(0.5 * constants::pi, 1e-15));
  REQUIRE(c.sweep_red_powers.size() == 3);
  CHECK_THAT(c.sweep_red_powers[2], WithinRel(2e-3, 1e-12));
  REQUIRE(c.chain.size() == 2);
  CHECK(c.chain[1].stage.kind == ChainStage::Kind::Coupler);
  CHECK_THAT(*c.chain[1].stage.length, WithinRel(10e-6, 1e-15));
}

TEST_CASE("schema violations are rejected") {
  CHECK_THROWS_AS(parse_config("geometry: {core_widht: 300 nm}"), ConfigError);
  CHECK_THROWS_AS(parse_config("bogus: 1"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid: {step: 5}"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid: [1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config("red: {modes: [{mode: TE01}]}"), ConfigError);
  CHECK_THROWS_AS(parse_config("chain: [{type: mzi}]"), ConfigError);
  CHECK_THROWS_AS(parse_config("chain: [{type: mzi, phase: 1 pi, index_shift: 0.01}]"), ConfigError);
  CHECK_THROWS_AS(parse_config("chain: [{type: splitter}]"), ConfigError);
  CHECK_THROWS_AS(parse_config("lattice: {te01_fraction: 1.5}"), ConfigError);
  CHECK_THROWS_AS(parse_config("geometry: {core_width: -1 nm}"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid: {step: [oops"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/evatrap.cfg"), ConfigError);
}

TEST_CASE("unknown command is a config error") {
  CHECK_THROWS_AS(run_command("nope", parse_config(""), {}), ConfigError);
  CHECK(command_names().back() == "reproduce");
}

TEST_CASE("identical runs give identical outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "evatrap_determinism";
  std::filesystem::remove_all(dir);
  RunConfig c = parse_config(R"(
grid: {step: 40 nm}
solver: {convergence_check: false}
mzi: {grid_step: 40 nm, scan: [0, 0.01]}
coupler: {supermode_estimate: false}
)");
  CommandOptions a{dir / "a", 1}, b{dir / "b", 2};
  const Json ra = run_command("mzi", c, a);
  const Json rb = run_command("mzi", c, b);
  CHECK(ra["output_hash"] == rb["output_hash"]);
  CHECK(ra["results"] == rb["results"]);
  std::ifstream fa(dir / "a" / "mzi_populations.csv"), fb(dir / "b" / "mzi_populations.csv");
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
  CHECK_FALSE(sa.empty());
}
