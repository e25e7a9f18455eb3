#include "qfc/sweep.hpp"

#include "qfc/error.hpp"
#include "qfc/kernels.hpp"
#include "qfc/units.hpp"

#include <cmath>
#include <limits>

namespace qfc::sweep {

namespace {

using config::Operation;
using config::ScenarioConfig;
using Rows = std::vector<std::vector<double>>;

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double regime_code(cmt::Regime r) {
  switch (r) {
  case cmt::Regime::underpumped:
    return 0.0;
  case cmt::Regime::boundary:
    return 1.0;
  case cmt::Regime::overpumped:
    return 2.0;
  }
  return nan;
}

double on_chip_power(const config::PumpConfig& p) {
  return p.on_chip_power_w ? *p.on_chip_power_w : p.intracavity_power_w.value_or(0.0);
}

std::vector<noise::FilterStage> filters_for(const ScenarioConfig& cfg, config::Band band) {
  std::vector<noise::FilterStage> out;
  for (const auto& f : cfg.filters)
    if (f.band == band)
      out.push_back(f.stage);
  return out;
}

noise::NoiseBudget band_budget(const ScenarioConfig& cfg, config::Band band) {
  std::vector<noise::NamedSource> sources;
  for (const auto& n : cfg.noise)
    if (n.band == band)
      sources.push_back({n.name, n.source, on_chip_power(n.pump == 1 ? cfg.pump1 : cfg.pump2)});
  const double eta = band == config::Band::idler ? cfg.detection_efficiency_idler : cfg.detection_efficiency_signal;
  auto budget = noise::make_budget(sources, eta);
  const auto chain = filters_for(cfg, band);
  return chain.empty() ? budget : noise::apply_filters(budget, chain);
}

cmt::ConversionResult device_optimum(const ScenarioConfig& cfg) {
  return cmt::max_efficiency(cfg.converter(), cfg.pump1.cavity_power(), cfg.pump2.cavity_power());
}

Rows eval_efficiency(const ScenarioConfig& cfg) {
  const auto params = cfg.converter();
  const double p1 = cfg.pump1.cavity_power(), p2 = cfg.pump2.cavity_power();
  const auto best = cmt::max_efficiency(params, p1, p2);
  cmt::Detunings d = best.detunings;
  double eta = best.efficiency;
  if (cfg.detunings) {
    d = *cfg.detunings;
    eta = cmt::transfer_efficiency(params, cmt::PumpPair::from_powers(p1, p2), d);
  }
  return {{p1, p2, best.cooperativity, regime_code(best.regime), d.signal, d.idler, eta, best.efficiency,
           cmt::efficiency_ceiling(params), eta * cfg.detection_efficiency_idler}};
}

Rows eval_coupling_study(const ScenarioConfig& cfg) {
  const double p1 = cfg.pump1.cavity_power(), p2 = cfg.pump2.cavity_power();
  Rows rows;
  for (double r : cfg.coupling_ratios) {
    auto params = cfg.converter();
    params.signal.coupling = r * params.signal.loss;
    params.idler.coupling = r * params.idler.loss;
    const auto best = cmt::max_efficiency(params, p1, p2);
    rows.push_back({r, p1, p2, best.cooperativity, regime_code(best.regime), best.efficiency,
                    cmt::efficiency_ceiling(params)});
  }
  return rows;
}

Rows eval_detuning_map(const ScenarioConfig& cfg, int jobs) {
  const auto params = cfg.converter();
  const double p1 = cfg.pump1.cavity_power(), p2 = cfg.pump2.cavity_power();
  const auto center = cfg.detunings ? *cfg.detunings : cmt::optimal_detunings(params, p1, p2);
  const auto g = kernels::detuning_grid(params, center, cfg.map.span_linewidths, cfg.map.points);
  const auto eta = kernels::efficiency_map(params, cmt::PumpPair::from_powers(p1, p2), g, jobs);
  Rows rows;
  rows.reserve(eta.size());
  for (std::size_t i = 0; i < g.signal.size(); ++i)
    for (std::size_t j = 0; j < g.idler.size(); ++j)
      rows.push_back({g.signal[i], g.idler[j], eta[i * g.idler.size() + j]});
  return rows;
}

Rows eval_noise(const ScenarioConfig& cfg) {
  const auto idler = band_budget(cfg, config::Band::idler);
  const auto signal = band_budget(cfg, config::Band::signal);
  std::vector<double> row;
  // Columns follow the order of cfg.noise, not the per-band budgets.
  std::vector<std::pair<double, double>> per(cfg.noise.size());
  std::size_t ki = 0, ks = 0;
  for (std::size_t n = 0; n < cfg.noise.size(); ++n) {
    const auto& e = cfg.noise[n].band == config::Band::idler ? idler.entries[ki++] : signal.entries[ks++];
    per[n] = {e.on_chip_cps, e.detected_cps};
  }
  for (const auto& [on_chip, detected] : per) {
    row.push_back(on_chip);
    row.push_back(detected);
  }
  row.push_back(idler.total_detected());
  row.push_back(signal.total_detected());
  row.push_back(idler.signal_transmission);
  row.push_back(signal.signal_transmission);
  return {row};
}

Rows eval_imbalance(const ScenarioConfig& cfg) {
  std::vector<noise::NoiseSource> s1, s2;
  for (const auto& n : cfg.noise)
    (n.pump == 1 ? s1 : s2).push_back(n.source);
  const auto& im = *cfg.imbalance;
  const auto best = noise::optimize_imbalance(s1, s2, im.product_min_w2, im.p1_max_w, im.p2_max_w);
  const double pb = std::sqrt(im.product_min_w2);
  const double balanced =
      pb <= im.p1_max_w && pb <= im.p2_max_w ? noise::pump_noise(s1, s2, pb, pb) : nan;
  return {{best.p1_w, best.p2_w, best.noise_cps, pb, balanced}};
}

Rows eval_coincidence(const ScenarioConfig& cfg, int jobs) {
  auto src = cfg.photon;
  if (cfg.photon_use_device_efficiency) {
    if (cfg.signal.loss == 0.0 || cfg.idler.loss == 0.0)
      throw ValidationError("photon.use_device_efficiency: needs the signal, idler, pump1 and pump2 sections");
    src.converted_efficiency *= device_optimum(cfg).efficiency * cfg.detection_efficiency_idler;
  }
  std::vector<std::uint64_t> seeds(cfg.photon_repetitions);
  for (std::size_t r = 0; r < seeds.size(); ++r)
    seeds[r] = src.seed + r;
  const auto streams = kernels::generate_batch(src, seeds, jobs);
  Rows rows;
  for (std::size_t r = 0; r < streams.size(); ++r) {
    const auto& s = streams[r];
    const auto na = static_cast<double>(s.count(src.herald_channel));
    const auto nb = static_cast<double>(s.count(src.converted_channel));
    if (na == 0.0 || nb == 0.0) {
      rows.push_back({static_cast<double>(seeds[r]), na, nb, nan, nan, nan, nan, nan, nan});
      continue;
    }
    const auto h = photon::delay_histogram(s, src.herald_channel, src.converted_channel, cfg.histogram.bin_ps,
                                           cfg.histogram.range_ps);
    const auto m = photon::coincidence_metrics(h, cfg.histogram.peak_center_ps, cfg.histogram.peak_halfwidth_ps);
    rows.push_back({static_cast<double>(seeds[r]), na, nb, m.peak_counts, m.accidentals_per_bin, m.true_counts,
                    m.true_rate_hz, m.accidental_rate_hz, m.car.value_or(std::numeric_limits<double>::infinity())});
  }
  return rows;
}

Rows eval_dispersion(const ScenarioConfig& cfg) {
  const auto& prof = *cfg.dispersion;
  if (cfg.signal.wavelength_m <= 0.0 || cfg.pump1.mode.wavelength_m <= 0.0 || cfg.pump2.mode.wavelength_m <= 0.0)
    throw ValidationError("dispersion operation needs signal, pump1 and pump2 wavelengths");
  const double ws = units::angular_from_wavelength(cfg.signal.wavelength_m);
  const double w1 = units::angular_from_wavelength(cfg.pump1.mode.wavelength_m);
  const double w2 = units::angular_from_wavelength(cfg.pump2.mode.wavelength_m);
  const auto q = dispersion::quartet_from_three(ws, std::max(w1, w2), std::min(w1, w2));
  auto pm = [&](double w, const config::PumpConfig& p) {
    return dispersion::sfwm_phase_matching(prof, w, on_chip_power(p), cfg.dispersion_gamma).phase_matchable ? 1.0
                                                                                                           : 0.0;
  };
  auto b2 = [&](double w) { return prof.contains(w) ? dispersion::gvd(prof, w).beta2 : nan; };
  const bool all_inside = prof.contains(q.signal) && prof.contains(q.idler) && prof.contains(q.pump_hi) &&
                          prof.contains(q.pump_lo);
  return {{units::wavelength_from_angular(q.idler), units::thz_from_angular(q.span()),
           all_inside ? dispersion::bsfwm_mismatch(prof, q) : nan, b2(q.signal), b2(q.idler), b2(w1), b2(w2),
           pm(w1, cfg.pump1), pm(w2, cfg.pump2)}};
}

std::vector<table::Column> noise_columns(const ScenarioConfig& cfg) {
  std::vector<table::Column> c;
  for (const auto& n : cfg.noise) {
    c.push_back({n.name + "_on_chip", "cps"});
    c.push_back({n.name + "_detected", "cps"});
  }
  c.push_back({"idler_detected_total", "cps"});
  c.push_back({"signal_detected_total", "cps"});
  c.push_back({"idler_transmission", "1"});
  c.push_back({"signal_transmission", "1"});
  return c;
}

table::Provenance provenance(const ScenarioConfig& cfg) {
  table::Provenance p;
  p.config_hash = config::hash_hex(cfg.hash);
  p.calibrated = cfg.calibrated;
  p.operation = std::string(config::to_string(cfg.operation));
  if (cfg.operation == Operation::coincidence)
    p.seed = cfg.photon.seed;
  for (const auto& [section, values] : cfg.resolved)
    for (const auto& [key, value] : values)
      p.config.emplace_back(section + "." + key, value);
  return p;
}

struct PointResult {
  Rows rows;
  std::string error;
};

PointResult evaluate_point(const ScenarioConfig& base, double value, int jobs) {
  const auto& spec = *base.sweep;
  try {
    auto raw = base.resolved;
    config::set_value(raw, spec.section, spec.key, value);
    const auto cfg = config::build(raw);
    auto rows = evaluate(cfg, jobs);
    if (rows.size() != rows_per_point(base))
      throw InvalidParameter("swept value changes the table shape");
    return {std::move(rows), {}};
  } catch (const Error& e) {
    return {{}, e.what()};
  }
}

table::ResultTable assemble(const ScenarioConfig& cfg, const std::vector<double>& values,
                            std::vector<PointResult>& points) {
  const auto& spec = *cfg.sweep;
  auto cols = columns(cfg);
  cols.insert(cols.begin(), {spec.path(), config::key_unit(spec.section, spec.key)});
  table::ResultTable t(cols);
  t.provenance() = provenance(cfg);
  const std::size_t width = cols.size() - 1, height = rows_per_point(cfg);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& pr = points[i];
    if (!pr.error.empty())
      pr.rows.assign(height, std::vector<double>(width, nan));
    for (auto& r : pr.rows) {
      r.insert(r.begin(), values[i]);
      t.add_row(std::move(r), pr.error);
    }
  }
  return t;
}

void require_sweep(const ScenarioConfig& cfg) {
  if (!cfg.sweep)
    throw ValidationError("sweep: missing required section");
}

} // namespace

std::vector<double> grid(const config::SweepSpec& spec) {
  if (spec.points < 2)
    throw ValidationError("sweep needs at least 2 points");
  if (spec.start == spec.stop)
    throw ValidationError("sweep: zero-length range (start == stop)");
  const std::size_t n = spec.points;
  const auto last = static_cast<double>(n - 1);
  std::vector<double> g(n);
  if (spec.spacing == config::Spacing::linear) {
    for (std::size_t i = 0; i < n; ++i)
      g[i] = (spec.start * static_cast<double>(n - 1 - i) + spec.stop * static_cast<double>(i)) / last;
  } else {
    if (!(spec.start > 0.0 && spec.stop > 0.0))
      throw ValidationError("sweep: log spacing needs positive bounds");
    const double a = std::log(spec.start), b = std::log(spec.stop);
    for (std::size_t i = 0; i < n; ++i)
      g[i] = std::exp((a * static_cast<double>(n - 1 - i) + b * static_cast<double>(i)) / last);
  }
  g.front() = spec.start;
  g.back() = spec.stop;
  return g;
}

std::vector<table::Column> columns(const ScenarioConfig& cfg) {
  switch (cfg.operation) {
  case Operation::efficiency:
    return {{"p1_intracavity", "w"}, {"p2_intracavity", "w"}, {"cooperativity", "1"}, {"regime", "1"},
            {"detuning_signal", "rad"}, {"detuning_idler", "rad"}, {"efficiency", "1"}, {"max_efficiency", "1"},
            {"ceiling", "1"}, {"detected_efficiency", "1"}};
  case Operation::coupling_study:
    return {{"coupling_ratio", "1"}, {"p1_intracavity", "w"}, {"p2_intracavity", "w"}, {"cooperativity", "1"},
            {"regime", "1"}, {"max_efficiency", "1"}, {"ceiling", "1"}};
  case Operation::detuning_map:
    return {{"detuning_signal", "rad"}, {"detuning_idler", "rad"}, {"efficiency", "1"}};
  case Operation::noise:
    return noise_columns(cfg);
  case Operation::imbalance:
    return {{"p1", "w"}, {"p2", "w"}, {"noise", "cps"}, {"balanced_power", "w"}, {"balanced_noise", "cps"}};
  case Operation::coincidence:
    return {{"seed", "1"},
            {"herald_singles", "counts"},
            {"converted_singles", "counts"},
            {"peak_counts", "counts"},
            {"accidentals_per_bin", "counts"},
            {"true_coincidences", "counts"},
            {"true_rate", "hz"},
            {"accidental_rate", "hz"},
            {"car", "1"}};
  case Operation::dispersion:
    return {{"idler_wavelength", "m"}, {"span", "thz"},        {"bsfwm_mismatch", "rad/m"},
            {"beta2_signal", "s2/m"},  {"beta2_idler", "s2/m"}, {"beta2_pump1", "s2/m"},
            {"beta2_pump2", "s2/m"},   {"sfwm_matchable_pump1", "1"}, {"sfwm_matchable_pump2", "1"}};
  }
  return {};
}

std::size_t rows_per_point(const ScenarioConfig& cfg) {
  switch (cfg.operation) {
  case Operation::coupling_study:
    return cfg.coupling_ratios.size();
  case Operation::detuning_map:
    return cfg.map.points * cfg.map.points;
  case Operation::coincidence:
    return cfg.photon_repetitions;
  default:
    return 1;
  }
}

std::vector<std::vector<double>> evaluate(const ScenarioConfig& cfg, int jobs) {
  switch (cfg.operation) {
  case Operation::efficiency:
    return eval_efficiency(cfg);
  case Operation::coupling_study:
    return eval_coupling_study(cfg);
  case Operation::detuning_map:
    return eval_detuning_map(cfg, jobs);
  case Operation::noise:
    return eval_noise(cfg);
  case Operation::imbalance:
    return eval_imbalance(cfg);
  case Operation::coincidence:
    return eval_coincidence(cfg, jobs);
  case Operation::dispersion:
    return eval_dispersion(cfg);
  }
  throw InvalidParameter("unknown operation");
}

table::ResultTable run_scenario(const ScenarioConfig& cfg, int jobs) {
  table::ResultTable t(columns(cfg));
  t.provenance() = provenance(cfg);
  for (auto& r : evaluate(cfg, jobs))
    t.add_row(std::move(r));
  return t;
}

table::ResultTable run_sweep(const ScenarioConfig& cfg, int jobs) {
  require_sweep(cfg);
  const auto values = grid(*cfg.sweep);
  std::vector<PointResult> points(values.size());
  kernels::for_each_index(values.size(), jobs, [&](std::size_t i) { points[i] = evaluate_point(cfg, values[i], 1); });
  return assemble(cfg, values, points);
}

namespace serial {

table::ResultTable run_sweep(const ScenarioConfig& cfg) {
  require_sweep(cfg);
  const auto values = grid(*cfg.sweep);
  std::vector<PointResult> points;
  points.reserve(values.size());
  for (double v : values)
    points.push_back(evaluate_point(cfg, v, 1));
  return assemble(cfg, values, points);
}

} // namespace serial

} // namespace qfc::sweep
