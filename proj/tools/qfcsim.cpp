// qfcsim: batch front end for scenario runs, sweeps, noise classification and
// delay histograms. Exit codes: 0 ok, 1 validation, 2 evaluation, 3 I/O.

#include "qfc/config.hpp"
#include "qfc/error.hpp"
#include "qfc/kernels.hpp"
#include "qfc/noise.hpp"
#include "qfc/photon_stats.hpp"
#include "qfc/sweep.hpp"
#include "qfc/table.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qfc;

enum Exit { ok = 0, validation = 1, runtime = 2, io = 3 };

struct Globals {
  std::string out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out.flush())
    throw IoError(path + ": write failed");
}

config::ScenarioConfig load(const std::string& spec, const Globals& g) {
  constexpr std::string_view prefix = "preset:";
  const auto text = spec.starts_with(prefix) ? config::preset_text(std::string_view(spec).substr(prefix.size()))
                                             : read_file(spec);
  auto raw = config::parse_raw(text);
  if (g.seed)
    raw["photon"]["seed"] = std::to_string(*g.seed);
  return config::build(raw);
}

table::Format format_of(const Globals& g) {
  auto f = table::parse_format(g.format);
  if (!f)
    throw ValidationError("--format: expected csv or json");
  return *f;
}

void emit(const table::ResultTable& t, const Globals& g) {
  const auto f = format_of(g);
  if (g.out.empty() || g.out == "-")
    write_text("", table::encode(t, f));
  else
    table::emit(t, f, g.out);
}

int cmd_run(const std::string& cfg_path, const Globals& g) {
  const auto cfg = load(cfg_path, g);
  emit(sweep::run_scenario(cfg, g.jobs), g);
  return ok;
}

int cmd_sweep(const std::string& cfg_path, const Globals& g) {
  const auto cfg = load(cfg_path, g);
  const auto t = sweep::run_sweep(cfg, g.jobs);
  emit(t, g);
  std::size_t failed = 0;
  for (const auto& r : t.rows())
    failed += r.error.empty() ? 0 : 1;
  if (failed)
    std::cerr << "qfcsim: " << failed << " of " << t.rows().size() << " rows failed to evaluate\n";
  return ok;
}

int cmd_validate(const std::string& cfg_path, const Globals& g) {
  const auto cfg = load(cfg_path, g);
  std::ostringstream os;
  os << "; valid " << config::to_string(cfg.operation) << " scenario, config_hash " << config::hash_hex(cfg.hash)
     << "\n"
     << config::canonical_text(cfg.resolved);
  write_text(g.out, os.str());
  return ok;
}

int cmd_classify(const std::string& csv_path, const Globals& g) {
  const auto text = read_file(csv_path);
  const auto data = noise::read_measurements_csv(text);
  const auto c = noise::classify_source(data);
  table::ResultTable t({{"mechanism", "1"},
                        {"power_exponent", "1"},
                        {"coefficient", "cps/w^power_exponent"},
                        {"saturation_power", "w"},
                        {"polarization_contrast", "1"},
                        {"residual", "1"},
                        {"selected", "1"},
                        {"ambiguous", "1"}});
  auto& p = t.provenance();
  p.config_hash = config::hash_hex(config::fnv1a64(text));
  p.operation = "classify-noise";
  for (const auto& f : c.fits)
    t.add_row({static_cast<double>(f.mechanism), f.mechanism == noise::Mechanism::sfwm ? 2.0 : 1.0,
               f.params.coefficient, f.params.saturation_power,
               f.params.polarization_contrast, f.residual, f.mechanism == c.mechanism ? 1.0 : 0.0,
               c.ambiguous ? 1.0 : 0.0});
  std::cerr << "qfcsim: " << noise::to_string(c.mechanism) << (c.ambiguous ? " (ambiguous)" : "") << "\n";
  emit(t, g);
  return ok;
}

struct HistogramArgs {
  int ch_a = 1;
  int ch_b = 2;
  std::int64_t bin_ps = 100;
  std::int64_t range_ps = 10'000;
  std::optional<double> peak_center_ps;
  double peak_halfwidth_ps = 500.0;
};

int cmd_histogram(const std::string& path, const HistogramArgs& a, const Globals& g) {
  const auto text = read_file(path);
  const auto stream = photon::parse_timetags(text);
  const auto h = photon::delay_histogram(stream, a.ch_a, a.ch_b, a.bin_ps, a.range_ps);
  table::ResultTable t({{"delay", "ps"}, {"counts", "counts"}});
  auto& p = t.provenance();
  p.config_hash = config::hash_hex(config::fnv1a64(text));
  p.operation = "histogram";
  for (std::size_t k = 0; k < h.bins(); ++k)
    t.add_row({h.bin_center_ps(k), static_cast<double>(h.counts[k])});
  if (a.peak_center_ps) {
    const auto m = photon::coincidence_metrics(h, *a.peak_center_ps, a.peak_halfwidth_ps);
    std::cerr << "qfcsim: peak " << m.peak_counts << ", accidentals " << m.accidental_counts << ", true "
              << m.true_counts;
    if (m.car)
      std::cerr << ", CAR " << *m.car;
    std::cerr << "\n";
  }
  emit(t, g);
  return ok;
}

int cmd_simulate(const std::string& cfg_path, const Globals& g) {
  const auto cfg = load(cfg_path, g);
  write_text(g.out, photon::serialize_timetags(photon::generate_stream(cfg.photon)));
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity Bragg-scattering frequency-converter simulator"};
  app.require_subcommand(1);
  Globals g;
  std::optional<std::uint64_t> seed;
  app.add_option("--out,-o", g.out, "Output path (default stdout)");
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "Override photon.seed");
  app.add_option("--jobs,-j", g.jobs, "Worker threads (0 = all)")->check(CLI::NonNegativeNumber);

  std::string cfg_path, data_path;
  HistogramArgs hist;
  std::optional<double> peak_center;

  auto* run = app.add_subcommand("run", "Evaluate the configured operation once");
  run->add_option("config", cfg_path, "Config file or preset:<name>")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate the operation over the [sweep] grid");
  sweep_cmd->add_option("config", cfg_path, "Config file or preset:<name>")->required();
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled");
  validate->add_option("config", cfg_path, "Config file or preset:<name>")->required();
  auto* classify = app.add_subcommand("classify-noise", "Fit noise families to power_W,angle_rad,rate_cps data");
  classify->add_option("csv", data_path, "Measurement CSV")->required();
  auto* histogram = app.add_subcommand("histogram", "Delay histogram of a time-tag file");
  histogram->add_option("timetags", data_path, "Time-tag file")->required();
  histogram->add_option("--ch-a", hist.ch_a, "Start channel");
  histogram->add_option("--ch-b", hist.ch_b, "Stop channel");
  histogram->add_option("--bin-ps", hist.bin_ps, "Bin width in ps");
  histogram->add_option("--range-ps", hist.range_ps, "Half range in ps");
  histogram->add_option("--peak-center-ps", peak_center, "Report coincidence metrics about this delay");
  histogram->add_option("--peak-halfwidth-ps", hist.peak_halfwidth_ps, "Peak window half width in ps");
  auto* simulate = app.add_subcommand("simulate-tags", "Write a synthetic time-tag stream from [photon]");
  simulate->add_option("config", cfg_path, "Config file or preset:<name>")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return validation;
  }
  g.seed = seed;
  hist.peak_center_ps = peak_center;

  try {
    if (*run)
      return cmd_run(cfg_path, g);
    if (*sweep_cmd)
      return cmd_sweep(cfg_path, g);
    if (*validate)
      return cmd_validate(cfg_path, g);
    if (*classify)
      return cmd_classify(data_path, g);
    if (*histogram)
      return cmd_histogram(data_path, hist, g);
    if (*simulate)
      return cmd_simulate(cfg_path, g);
  } catch (const IoError& e) {
    std::cerr << "qfcsim: I/O error: " << e.what() << "\n";
    return io;
  } catch (const ValidationError& e) {
    std::cerr << "qfcsim: invalid config: " << e.what() << "\n";
    return validation;
  } catch (const ParseError& e) {
    std::cerr << "qfcsim: invalid input: " << e.what() << "\n";
    return validation;
  } catch (const InvalidParameter& e) {
    std::cerr << "qfcsim: invalid parameter: " << e.what() << "\n";
    return validation;
  } catch (const Error& e) {
    std::cerr << "qfcsim: evaluation failed: " << e.what() << "\n";
    return runtime;
  }
  return validation;
}
