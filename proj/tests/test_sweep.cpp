#include "qfc/cmt.hpp"
#include "qfc/config.hpp"
#include "qfc/error.hpp"
#include "qfc/sweep.hpp"

#include <doctest.h>

#include <cmath>

using namespace qfc;

namespace {

const std::string device = R"(
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

config::ScenarioConfig with_sweep(const std::string& param, double start, double stop, int points,
                                  const std::string& spacing = "linear", const std::string& base = device) {
  return config::parse_config(base + "\n[sweep]\nparameter = " + param + "\nstart = " + table::format_number(start) +
                              "\nstop = " + table::format_number(stop) + "\npoints = " + std::to_string(points) +
                              "\nspacing = " + spacing + "\n");
}

} // namespace

TEST_SUITE("sweep") {

TEST_CASE("grid endpoints are exact") {
  config::SweepSpec s{"pump2", "intracavity_power_w", 0.1, 0.7, config::Spacing::linear, 7};
  auto g = sweep::grid(s);
  CHECK(g.front() == 0.1);
  CHECK(g.back() == 0.7);
  for (std::size_t i = 1; i < g.size(); ++i)
    CHECK(g[i] > g[i - 1]);
  s.spacing = config::Spacing::log;
  s.start = 1e-3;
  s.stop = 1e3;
  g = sweep::grid(s);
  CHECK(g.front() == 1e-3);
  CHECK(g.back() == 1e3);
  CHECK(g[3] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("reversed range gives reversed values") {
  for (auto spacing : {config::Spacing::linear, config::Spacing::log}) {
    config::SweepSpec a{"x", "y", 0.013, 7.9, spacing, 23};
    config::SweepSpec b = a;
    std::swap(b.start, b.stop);
    auto ga = sweep::grid(a), gb = sweep::grid(b);
    std::reverse(gb.begin(), gb.end());
    CHECK(ga == gb);
  }
}

TEST_CASE("grid argument errors") {
  CHECK_THROWS_AS(sweep::grid({"x", "y", 1.0, 1.0, config::Spacing::linear, 5}), ValidationError);
  CHECK_THROWS_AS(sweep::grid({"x", "y", 0.0, 1.0, config::Spacing::log, 5}), ValidationError);
  CHECK_THROWS_AS(sweep::grid({"x", "y", 0.0, 1.0, config::Spacing::linear, 1}), ValidationError);
}

TEST_CASE("reversed sweep reverses the rows") {
  const auto fwd = sweep::run_sweep(with_sweep("pump2.intracavity_power_w", 0.1, 3.0, 9));
  const auto rev = sweep::run_sweep(with_sweep("pump2.intracavity_power_w", 3.0, 0.1, 9));
  REQUIRE(fwd.rows().size() == 9);
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(fwd.rows()[i].values == rev.rows()[8 - i].values);
}

TEST_CASE("parallel sweep equals the serial sweep") {
  const auto cfg = with_sweep("pump2.intracavity_power_w", 1e-3, 1e2, 33, "log");
  const auto ser = sweep::serial::run_sweep(cfg);
  for (int jobs : {1, 2, 4})
    CHECK(sweep::run_sweep(cfg, jobs) == ser);
  CHECK(table::to_csv(sweep::run_sweep(cfg, 3)) == table::to_csv(ser));
}

TEST_CASE("sweep column and provenance") {
  const auto t = sweep::run_sweep(with_sweep("pump2.intracavity_power_mw", 100, 900, 3));
  CHECK(t.columns()[0].name == "pump2.intracavity_power_mw");
  CHECK(t.columns()[0].unit == "mw");
  CHECK(t.rows()[1].values[0] == 500.0);
  CHECK(t.rows()[1].values[t.column_index("p2_intracavity")] == doctest::Approx(0.5));
  CHECK(t.provenance().operation == "efficiency");
  CHECK(t.provenance().config_hash.size() == 16);
  CHECK_FALSE(t.provenance().seed.has_value());
}

TEST_CASE("failing points become NaN rows with an error tag") {
  const auto t = sweep::run_sweep(with_sweep("signal.coupling", 0.0, 0.04, 5));
  REQUIRE(t.rows().size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& r = t.rows()[i];
    const bool bad = r.values[0] > 0.02;
    CHECK(r.error.empty() == !bad);
    if (bad) {
      CHECK(r.error.find("signal") != std::string::npos);
      CHECK(std::isnan(r.values[1]));
    } else {
      CHECK(std::isfinite(r.values[t.column_index("efficiency")]));
    }
  }
}

TEST_CASE("efficiency operation") {
  const auto cfg = config::parse_config(device);
  const auto t = sweep::run_scenario(cfg);
  REQUIRE(t.rows().size() == 1);
  const auto& v = t.rows()[0].values;
  const auto best = cmt::max_efficiency(cfg.converter(), 1.0, 1.0);
  CHECK(v[t.column_index("max_efficiency")] == best.efficiency);
  CHECK(v[t.column_index("ceiling")] == doctest::Approx(0.25));
  const double coop = v[t.column_index("cooperativity")];
  CHECK(coop == best.cooperativity);
  CHECK(v[t.column_index("regime")] == (coop < 1.0 ? 0.0 : 2.0));
}

TEST_CASE("coupling study saturates at ratio squared") {
  auto t = sweep::run_sweep(config::load_config_or_preset("preset:coupling-study"));
  const auto ratio = t.column_index("coupling_ratio"), eta = t.column_index("max_efficiency");
  std::map<double, std::vector<double>> curves;
  for (const auto& r : t.rows()) {
    CHECK(r.error.empty());
    curves[r.values[ratio]].push_back(r.values[eta]);
  }
  REQUIRE(curves.size() == 3);
  for (const auto& [r, c] : curves) {
    CHECK(c.size() == 61);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(c.back() == doctest::Approx(r * r).epsilon(1e-9));
    CHECK(c.front() < 0.01 * r * r);
  }
}

TEST_CASE("calibrated device preset lands near six percent") {
  const auto cfg = config::load_config_or_preset("preset:paper-device");
  const auto t = sweep::run_scenario(cfg);
  const double eta = t.rows()[0].values[t.column_index("efficiency")];
  CHECK(eta >= 0.05);
  CHECK(eta <= 0.06 + 1e-9);
  CHECK(t.provenance().calibrated);
}

TEST_CASE("imbalance preset") {
  const auto cfg = config::load_config_or_preset("preset:noise-imbalance");
  const auto t = sweep::run_scenario(cfg);
  const auto& v = t.rows()[0].values;
  CHECK(v[t.column_index("p1")] == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(v[t.column_index("p2")] == 0.09);
  CHECK(v[t.column_index("noise")] <= v[t.column_index("balanced_noise")]);
  const auto s = sweep::run_sweep(cfg, 2);
  CHECK(s.rows().size() == 15);
}

TEST_CASE("coincidence preset is seeded and reproducible") {
  const auto cfg = config::load_config_or_preset("preset:coincidence");
  const auto a = sweep::run_scenario(cfg), b = sweep::run_scenario(cfg, 1);
  CHECK(a == b);
  CHECK(a.provenance().seed == cfg.photon.seed);
  REQUIRE(a.rows().size() == 4);
  CHECK(a.rows()[1].values[0] == static_cast<double>(cfg.photon.seed + 1));
  CHECK(a.rows()[0].values[a.column_index("car")] > 1.0);
}

TEST_CASE("noise operation lists sources and totals") {
  const auto cfg = config::parse_config(R"(
[scenario]
operation = noise
[pump1]
wavelength_nm = 780
power_mw = 10
loss = 0.01
coupling = 0.005
[noise.fl]
mechanism = fluorescence
coefficient_cps_per_w = 1e7
saturation_power_mw = 1e9
pump = 1
[filter.etalon]
kind = etalon
transmission = 0.7
suppression_db = 15
[detection]
efficiency_idler = 0.5
)");
  const auto t = sweep::run_scenario(cfg);
  REQUIRE(t.rows().size() == 1);
  const auto& v = t.rows()[0].values;
  CHECK(v[0] == doctest::Approx(1e5).epsilon(1e-6));
  CHECK(v[1] == doctest::Approx(1e5 * 0.5 * 0.7 * std::pow(10.0, -1.5)).epsilon(1e-6));
}

TEST_CASE("dispersion operation") {
  const auto cfg = config::parse_config(R"(
[scenario]
operation = dispersion
[signal]
wavelength_nm = 1260
loss = 0.02
coupling = 0.01
[idler]
wavelength_nm = 700
loss = 0.02
coupling = 0.01
[pump1]
wavelength_nm = 780
intracavity_power_w = 0.1
[pump2]
wavelength_nm = 1550
intracavity_power_w = 0.1
[dispersion]
center_wavelength_nm = 1000
beta_coefficients_si = 0, 6.7e-9, 1e-26
window_min_nm = 600
window_max_nm = 1700
)");
  const auto t = sweep::run_scenario(cfg);
  const auto& v = t.rows()[0].values;
  CHECK(v[t.column_index("idler_wavelength")] == doctest::Approx(699.04e-9).epsilon(1e-4));
  CHECK(v[t.column_index("span")] == doctest::Approx(190.935).epsilon(1e-4));
  CHECK(v[t.column_index("beta2_pump1")] == doctest::Approx(1e-26));
  CHECK(v[t.column_index("sfwm_matchable_pump1")] == 0.0);
}

} // TEST_SUITE
