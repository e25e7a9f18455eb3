#include "qfc/cmt.hpp"
#include "qfc/config.hpp"
#include "qfc/error.hpp"

#include <doctest.h>

using namespace qfc;
using namespace qfc::config;

namespace {

const char* minimal = R"(
[scenario]
operation = efficiency

[geometry]
circumference_um = 100

[signal]
wavelength_nm = 1283
loss = 0.02
coupling = 0.01

[idler]
wavelength_nm = 704
loss = 0.02
coupling = 0.01

[pump1]
wavelength_nm = 780
intracavity_power_w = 1

[pump2]
wavelength_nm = 1548
intracavity_power_w = 1
)";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config fills defaults") {
  const auto cfg = parse_config(minimal);
  CHECK(cfg.operation == Operation::efficiency);
  CHECK(cfg.name == "scenario");
  CHECK_FALSE(cfg.calibrated);
  CHECK(cfg.signal.gamma == 1.0);
  CHECK(cfg.geometry.group_index == 2.0);
  CHECK(cfg.geometry.circumference_m == doctest::Approx(100e-6));
  CHECK(cfg.pump1.cavity_power() == 1.0);
  CHECK_FALSE(cfg.detunings.has_value());
  CHECK(cfg.resolved.at("geometry").at("group_index") == "2");
  CHECK(cfg.resolved.at("signal").at("gamma_per_w_m") == "1");
  CHECK(cfg.resolved.at("detection").at("efficiency_idler") == "1");
}

TEST_CASE("units are applied") {
  auto text = replace(minimal, "circumference_um = 100", "circumference_mm = 0.1");
  text = replace(text, "intracavity_power_w = 1", "intracavity_power_mw = 250");
  const auto cfg = parse_config(text);
  CHECK(cfg.geometry.circumference_m == doctest::Approx(1e-4));
  CHECK(cfg.pump1.cavity_power() == doctest::Approx(0.25));
}

TEST_CASE("validation errors name the offending key") {
  CHECK(contains(error_of(replace(minimal, "coupling = 0.01\n\n[idler]", "coupling = 0.05\n\n[idler]")), "signal"));
  CHECK(contains(error_of(replace(minimal, "wavelength_nm = 704", "wavelength_nm = 704\ncolour = red")),
                 "idler.colour: unknown key"));
  CHECK(contains(error_of(replace(minimal, "circumference_um", "circumference_w")), "geometry.circumference_w: unit mismatch"));
  CHECK(contains(error_of(replace(minimal, "circumference_um", "circumference")), "missing unit suffix"));
  CHECK(contains(error_of(replace(minimal, "wavelength_nm = 780\n", "")), "pump1.wavelength"));
  CHECK(contains(error_of(replace(minimal, "loss = 0.02\ncoupling = 0.01\n\n[idler]", "coupling = 0.01\n\n[idler]")),
                 "signal: missing required field loss or q_loaded"));
  CHECK(contains(error_of(std::string(minimal) + "\n[extras]\nx = 1\n"), "extras: unknown section"));
  CHECK(contains(error_of(replace(minimal, "operation = efficiency", "operation = teleport")), "scenario.operation"));
  CHECK(contains(error_of(replace(minimal, "circumference_um = 100", "circumference_um = 100\ncircumference_mm = 1")),
                 "duplicates"));
  CHECK(contains(error_of(replace(minimal, "loss = 0.02", "loss = abc")), "not a number"));
  CHECK(contains(error_of("[scenario\noperation = efficiency\n"), "config line 1"));
}

TEST_CASE("detunings are all or nothing") {
  auto text = replace(minimal, "coupling = 0.01\n\n[idler]", "coupling = 0.01\ndetuning = 0.1\n\n[idler]");
  CHECK(contains(error_of(text), "both modes"));
  text = replace(text, "coupling = 0.01\n\n[pump1]", "coupling = 0.01\ndetuning = 0.2\n\n[pump1]");
  const auto cfg = parse_config(text);
  REQUIRE(cfg.detunings.has_value());
  CHECK(cfg.detunings->idler == 0.2);
}

TEST_CASE("noise and filter sections") {
  const std::string base = "[scenario]\noperation = noise\n";
  const auto cfg = parse_config(base +
                                "[noise.fl]\nmechanism = fluorescence\ncoefficient_cps_per_w = 1e6\n"
                                "saturation_power_mw = 20\n"
                                "[filter.et]\nkind = etalon\ntransmission = 0.7\nsuppression_db = 15\n");
  REQUIRE(cfg.noise.size() == 1);
  CHECK(cfg.noise[0].name == "fl");
  CHECK(cfg.noise[0].source.saturation_power == doctest::Approx(0.02));
  REQUIRE(cfg.filters.size() == 1);
  CHECK(cfg.filters[0].stage.suppression_db == 15.0);
  CHECK(contains(error_of(base + "[noise.s]\nmechanism = sfwm\ncoefficient_cps_per_w = 1\n"), "unit mismatch"));
  CHECK(contains(error_of(base + "[noise.f]\nmechanism = fluorescence\ncoefficient_cps_per_w = 1\n"),
                 "saturation_power"));
}

TEST_CASE("sweep specification") {
  const std::string sweep = "\n[sweep]\nparameter = pump2.intracavity_power_w\nstart = 0.1\nstop = 2\npoints = 5\n";
  const auto cfg = parse_config(std::string(minimal) + sweep);
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->path() == "pump2.intracavity_power_w");
  CHECK(cfg.sweep->spacing == Spacing::linear);
  CHECK(contains(error_of(std::string(minimal) + replace(sweep, "stop = 2", "stop = 0.1")), "zero-length"));
  CHECK(contains(error_of(std::string(minimal) + replace(sweep, "points = 5", "points = 1")), "at least 2"));
  CHECK(contains(error_of(std::string(minimal) + replace(sweep, "pump2.", "pump3.")), "not present"));
  CHECK(error_of(std::string(minimal) + replace(sweep, "points = 5", "points = 5\nspacing = log")).empty());
  CHECK(contains(error_of(std::string(minimal) +
                          replace(replace(sweep, "start = 0.1", "start = -1"), "points = 5", "points = 5\nspacing = log")),
                 "positive bounds"));
}

TEST_CASE("hash tracks every value") {
  const auto a = parse_config(minimal);
  const auto b = parse_config(std::string("; comment\n") + minimal);
  CHECK(a.hash == b.hash);
  const auto c = parse_config(replace(minimal, "loss = 0.02", "loss = 0.021"));
  CHECK(a.hash != c.hash);
  CHECK(hash_hex(a.hash).size() == 16);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("canonical text round-trips") {
  const auto a = parse_config(minimal);
  const auto b = parse_config(canonical_text(a.resolved));
  CHECK(a.resolved == b.resolved);
  CHECK(a.hash == b.hash);
}

TEST_CASE("set_value replaces unit variants") {
  auto raw = parse_raw(minimal);
  set_value(raw, "pump2", "intracavity_power_mw", 500.0);
  CHECK(raw.at("pump2").count("intracavity_power_w") == 0);
  CHECK(build(raw).pump2.cavity_power() == doctest::Approx(0.5));
  CHECK(key_unit("pump2", "intracavity_power_mw") == "mw");
  CHECK(key_unit("signal", "loss") == "1");
}

TEST_CASE("shipped presets") {
  for (const auto& name : preset_names())
    CHECK_NOTHROW(load_config_or_preset("preset:" + name));
  CHECK_THROWS_AS(preset_text("nope"), IoError);

  const auto cfg = load_config_or_preset("preset:paper-device");
  CHECK(cfg.calibrated);
  const auto q = [&](const cmt::ModeParams& m) { return cmt::loss_to_q(m.loss, m.wavelength_m, cfg.geometry); };
  CHECK(q(cfg.pump1.mode) == doctest::Approx(1.5e6));
  CHECK(q(cfg.signal) == doctest::Approx(4.5e5));
  CHECK(q(cfg.pump2.mode) == doctest::Approx(2.8e5));
  CHECK(*cfg.pump2.on_chip_power_w == doctest::Approx(0.090));
  CHECK(*cfg.pump1.on_chip_power_w == doctest::Approx(0.004));
}

} // TEST_SUITE
