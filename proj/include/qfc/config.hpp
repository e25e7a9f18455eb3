#pragma once

// Scenario configuration: sectioned key-value text with the unit spelled in
// each key name (power_mw, wavelength_nm, ...).

#include "qfc/cmt.hpp"
#include "qfc/dispersion.hpp"
#include "qfc/noise.hpp"
#include "qfc/photon_stats.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::config {

// section -> key -> raw value, sorted so the canonical text is stable.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_raw(std::string_view text);
std::string canonical_text(const RawConfig& raw);
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

enum class Operation { efficiency, coupling_study, detuning_map, noise, imbalance, coincidence, dispersion };
enum class Band { idler, signal };
enum class Spacing { linear, log };

std::string_view to_string(Operation op);

struct PumpConfig {
  cmt::ModeParams mode;
  std::optional<double> on_chip_power_w;
  std::optional<double> intracavity_power_w;
  double detuning = 0.0;

  /// Intracavity power, from the bus power through pump_buildup when needed.
  double cavity_power() const;
};

struct NoiseConfig {
  std::string name;
  noise::NoiseSource source;
  int pump = 1;
  Band band = Band::idler;
};

struct FilterConfig {
  std::string name;
  noise::FilterStage stage;
  Band band = Band::idler;
};

struct ImbalanceConfig {
  double product_min_w2 = 0.0;
  double p1_max_w = 0.0;
  double p2_max_w = 0.0;
};

struct HistogramConfig {
  std::int64_t bin_ps = 100;
  std::int64_t range_ps = 10'000;
  double peak_center_ps = 0.0;
  double peak_halfwidth_ps = 500.0;
};

struct SweepSpec {
  std::string section;
  std::string key;
  double start = 0.0;
  double stop = 0.0;
  Spacing spacing = Spacing::linear;
  std::size_t points = 0;

  std::string path() const { return section + "." + key; }
};

struct MapSpec {
  std::size_t points = 41;
  double span_linewidths = 6.0;
};

struct ScenarioConfig {
  std::string name;
  Operation operation = Operation::efficiency;
  bool calibrated = false;
  std::vector<double> coupling_ratios;

  cmt::ResonatorGeometry geometry;
  cmt::ModeParams signal;
  cmt::ModeParams idler;
  std::optional<cmt::Detunings> detunings;
  PumpConfig pump1;
  PumpConfig pump2;

  std::optional<dispersion::DispersionProfile> dispersion;
  double dispersion_gamma = 1.0;

  std::vector<NoiseConfig> noise;
  std::vector<FilterConfig> filters;
  double detection_efficiency_idler = 1.0;
  double detection_efficiency_signal = 1.0;
  std::optional<ImbalanceConfig> imbalance;

  photon::SourceConfig photon;
  bool photon_use_device_efficiency = false;
  std::size_t photon_repetitions = 1;
  HistogramConfig histogram;

  std::optional<SweepSpec> sweep;
  MapSpec map;

  RawConfig resolved; // input plus filled defaults
  std::uint64_t hash = 0;

  cmt::ConverterParams converter() const { return {signal, idler, geometry}; }
};

/// Validates and types a raw document. Errors are ValidationError with the
/// offending key path in the message.
ScenarioConfig build(const RawConfig& raw);

ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Sets section.key (replacing any unit variant of the same field).
void set_value(RawConfig& raw, const std::string& section, const std::string& key, double value);

/// Unit token spelled in a key ("mw" for power_mw); "1" for dimensionless keys.
std::string key_unit(const std::string& section, const std::string& key);

std::vector<std::string> preset_names();
/// Text of a shipped preset; throws IoError if unknown.
std::string preset_text(std::string_view name);
/// Resolves "preset:<name>" or a file path.
ScenarioConfig load_config_or_preset(const std::string& spec);

} // namespace qfc::config
