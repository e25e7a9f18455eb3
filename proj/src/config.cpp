#include "qfc/config.hpp"

#include "qfc/error.hpp"
#include "qfc/units.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace qfc::config {

namespace {

enum class Kind { text, boolean, integer, number, list, si_list, length, power, time, rate, gamma, coefficient, product, db };

struct Unit {
  std::string_view name;
  double scale;
};

std::span<const Unit> units_of(Kind k) {
  static constexpr Unit length[] = {{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
  static constexpr Unit power[] = {{"w", 1.0}, {"mw", 1e-3}, {"uw", 1e-6}};
  static constexpr Unit time[] = {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  static constexpr Unit rate[] = {{"hz", 1.0}, {"khz", 1e3}, {"mhz", 1e6}};
  static constexpr Unit gamma[] = {{"per_w_m", 1.0}};
  static constexpr Unit coefficient[] = {{"cps_per_w", 1.0}, {"cps_per_w2", 1.0}};
  static constexpr Unit product[] = {{"w2", 1.0}};
  static constexpr Unit db[] = {{"db", 1.0}};
  static constexpr Unit si[] = {{"si", 1.0}};
  switch (k) {
  case Kind::length:
    return length;
  case Kind::power:
    return power;
  case Kind::time:
    return time;
  case Kind::rate:
    return rate;
  case Kind::gamma:
    return gamma;
  case Kind::coefficient:
    return coefficient;
  case Kind::product:
    return product;
  case Kind::db:
    return db;
  case Kind::si_list:
    return si;
  default:
    return {};
  }
}

std::string_view kind_name(Kind k) {
  switch (k) {
  case Kind::length:
    return "a length (m, mm, um, nm)";
  case Kind::power:
    return "a power (w, mw, uw)";
  case Kind::time:
    return "a time (s, ms, us, ns, ps)";
  case Kind::rate:
    return "a rate (hz, khz, mhz)";
  case Kind::gamma:
    return "a nonlinear parameter (per_w_m)";
  case Kind::coefficient:
    return "a noise coefficient (cps_per_w, cps_per_w2)";
  case Kind::product:
    return "a power product (w2)";
  case Kind::db:
    return "a level in db";
  default:
    return "dimensionless";
  }
}

bool is_unit_token(std::string_view s) {
  for (Kind k : {Kind::length, Kind::power, Kind::time, Kind::rate, Kind::gamma, Kind::coefficient, Kind::product,
                 Kind::db, Kind::si_list})
    for (const auto& u : units_of(k))
      if (u.name == s)
        return true;
  return false;
}

struct Field {
  std::string_view base;
  Kind kind;
  std::string_view default_key = {}; // full key written when the default applies
  std::string_view default_value = {};
};

// clang-format off
constexpr Field scenario_fields[] = {
  {"name", Kind::text, "name", "scenario"},
  {"operation", Kind::text},
  {"calibrated", Kind::boolean, "calibrated", "false"},
  {"coupling_ratios", Kind::list},
};
constexpr Field geometry_fields[] = {
  {"circumference", Kind::length},
  {"group_index", Kind::number},
  {"roundtrip_time", Kind::time},
};
constexpr Field mode_fields[] = {
  {"wavelength", Kind::length},
  {"loss", Kind::number},
  {"q_loaded", Kind::number},
  {"coupling", Kind::number},
  {"coupling_ratio", Kind::number},
  {"gamma", Kind::gamma, "gamma_per_w_m", "1"},
  {"detuning", Kind::number},
};
constexpr Field pump_fields[] = {
  {"wavelength", Kind::length},
  {"power", Kind::power},
  {"intracavity_power", Kind::power},
  {"loss", Kind::number},
  {"q_loaded", Kind::number},
  {"coupling", Kind::number},
  {"coupling_ratio", Kind::number},
  {"detuning", Kind::number, "detuning", "0"},
};
constexpr Field dispersion_fields[] = {
  {"center_wavelength", Kind::length},
  {"beta_coefficients", Kind::si_list},
  {"window_min", Kind::length},
  {"window_max", Kind::length},
  {"gamma", Kind::gamma, "gamma_per_w_m", "1"},
};
constexpr Field detection_fields[] = {
  {"efficiency_idler", Kind::number, "efficiency_idler", "1"},
  {"efficiency_signal", Kind::number, "efficiency_signal", "1"},
};
constexpr Field imbalance_fields[] = {
  {"product_min", Kind::product},
  {"p1_max", Kind::power},
  {"p2_max", Kind::power},
};
constexpr Field photon_fields[] = {
  {"pair_rate", Kind::rate, "pair_rate_hz", "0"},
  {"herald_efficiency", Kind::number, "herald_efficiency", "1"},
  {"converted_efficiency", Kind::number, "converted_efficiency", "1"},
  {"use_device_efficiency", Kind::boolean, "use_device_efficiency", "false"},
  {"herald_noise", Kind::rate, "herald_noise_hz", "0"},
  {"converted_noise", Kind::rate, "converted_noise_hz", "0"},
  {"herald_jitter", Kind::time, "herald_jitter_ps", "100"},
  {"converted_jitter", Kind::time, "converted_jitter_ps", "100"},
  {"arm_delay", Kind::time, "arm_delay_ps", "0"},
  {"duration", Kind::time, "duration_s", "1"},
  {"seed", Kind::integer, "seed", "1"},
  {"herald_channel", Kind::integer, "herald_channel", "1"},
  {"converted_channel", Kind::integer, "converted_channel", "2"},
  {"repetitions", Kind::integer, "repetitions", "1"},
};
constexpr Field histogram_fields[] = {
  {"bin", Kind::time, "bin_ps", "100"},
  {"range", Kind::time, "range_ps", "10000"},
  {"peak_center", Kind::time},
  {"peak_halfwidth", Kind::time, "peak_halfwidth_ps", "500"},
};
constexpr Field sweep_fields[] = {
  {"parameter", Kind::text},
  {"start", Kind::number},
  {"stop", Kind::number},
  {"spacing", Kind::text, "spacing", "linear"},
  {"points", Kind::integer},
};
constexpr Field map_fields[] = {
  {"points", Kind::integer, "points", "41"},
  {"span_linewidths", Kind::number, "span_linewidths", "6"},
};
constexpr Field noise_fields[] = {
  {"mechanism", Kind::text},
  {"coefficient", Kind::coefficient},
  {"saturation_power", Kind::power},
  {"polarization_contrast", Kind::number, "polarization_contrast", "0"},
  {"character", Kind::text, "character", "broadband"},
  {"pump", Kind::integer, "pump", "1"},
  {"band", Kind::text, "band", "idler"},
};
constexpr Field filter_fields[] = {
  {"kind", Kind::text},
  {"transmission", Kind::number, "transmission", "1"},
  {"suppression", Kind::db, "suppression_db", "0"},
  {"bandwidth", Kind::length},
  {"band", Kind::text, "band", "idler"},
};
// clang-format on

std::span<const Field> schema_for(std::string_view section) {
  if (section == "scenario")
    return scenario_fields;
  if (section == "geometry")
    return geometry_fields;
  if (section == "signal" || section == "idler")
    return mode_fields;
  if (section == "pump1" || section == "pump2")
    return pump_fields;
  if (section == "dispersion")
    return dispersion_fields;
  if (section == "detection")
    return detection_fields;
  if (section == "imbalance")
    return imbalance_fields;
  if (section == "photon")
    return photon_fields;
  if (section == "histogram")
    return histogram_fields;
  if (section == "sweep")
    return sweep_fields;
  if (section == "map")
    return map_fields;
  if (section.starts_with("noise.") && section.size() > 6)
    return noise_fields;
  if (section.starts_with("filter.") && section.size() > 7)
    return filter_fields;
  return {};
}

struct Resolved {
  const Field* field = nullptr;
  std::string key;
  std::string unit;
  double scale = 1.0;
};

// Maps a key onto a schema field; throws for unknown keys and unit mismatches.
Resolved resolve_key(std::string_view section, std::string_view key) {
  const auto schema = schema_for(section);
  const std::string path = std::string(section) + "." + std::string(key);
  for (const auto& f : schema) {
    const auto units = units_of(f.kind);
    if (units.empty()) {
      if (key == f.base)
        return {&f, std::string(key), "", 1.0};
      continue;
    }
    if (key.size() > f.base.size() + 1 && key.starts_with(f.base) && key[f.base.size()] == '_') {
      const auto suffix = key.substr(f.base.size() + 1);
      for (const auto& u : units)
        if (u.name == suffix)
          return {&f, std::string(key), std::string(u.name), u.scale};
    }
  }
  // A known base with a unit of the wrong kind, or a bare dimensioned key.
  for (const auto& f : schema) {
    if (units_of(f.kind).empty())
      continue;
    if (key == f.base)
      throw ValidationError(path + ": missing unit suffix, expected " + std::string(kind_name(f.kind)));
    if (key.size() > f.base.size() + 1 && key.starts_with(f.base) && key[f.base.size()] == '_' &&
        is_unit_token(key.substr(f.base.size() + 1)))
      throw ValidationError(path + ": unit mismatch, expected " + std::string(kind_name(f.kind)));
  }
  throw ValidationError(path + ": unknown key");
}

double parse_number(const std::string& path, const std::string& text) {
  std::string_view s = text;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ValidationError(path + ": not a number: '" + text + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Typed view over one section of the resolved document.
class Section {
public:
  Section(std::string name, const std::map<std::string, std::string>* values) : name_(std::move(name)) {
    if (!values)
      return;
    for (const auto& [key, value] : *values) {
      auto r = resolve_key(name_, key);
      const std::string base(r.field->base);
      if (entries_.count(base))
        throw ValidationError(name_ + "." + key + ": duplicates " + name_ + "." + entries_.at(base).resolved.key);
      entries_.emplace(base, Entry{r, value});
    }
  }

  bool has(std::string_view base) const { return entries_.count(std::string(base)) != 0; }
  std::string path(std::string_view base) const {
    auto it = entries_.find(std::string(base));
    return name_ + "." + (it != entries_.end() ? it->second.resolved.key : std::string(base));
  }

  std::optional<double> number(std::string_view base) const {
    auto it = entries_.find(std::string(base));
    if (it == entries_.end())
      return std::nullopt;
    return parse_number(path(base), it->second.value) * it->second.resolved.scale;
  }

  double require_number(std::string_view base) const {
    auto v = number(base);
    if (!v)
      throw ValidationError(name_ + "." + std::string(base) + ": missing required field");
    return *v;
  }

  std::optional<std::string> text(std::string_view base) const {
    auto it = entries_.find(std::string(base));
    if (it == entries_.end())
      return std::nullopt;
    return it->second.value;
  }

  std::string require_text(std::string_view base) const {
    auto v = text(base);
    if (!v)
      throw ValidationError(name_ + "." + std::string(base) + ": missing required field");
    return *v;
  }

  std::optional<long long> integer(std::string_view base) const {
    auto t = text(base);
    if (!t)
      return std::nullopt;
    long long v = 0;
    auto [p, ec] = std::from_chars(t->data(), t->data() + t->size(), v);
    if (ec != std::errc() || p != t->data() + t->size())
      throw ValidationError(path(base) + ": not an integer: '" + *t + "'");
    return v;
  }

  bool boolean(std::string_view base) const {
    auto t = text(base);
    if (!t)
      return false;
    if (*t == "true" || *t == "1" || *t == "yes")
      return true;
    if (*t == "false" || *t == "0" || *t == "no")
      return false;
    throw ValidationError(path(base) + ": expected true or false");
  }

  std::optional<std::vector<double>> list(std::string_view base) const {
    auto t = text(base);
    if (!t)
      return std::nullopt;
    std::vector<double> out;
    std::stringstream ss(*t);
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(parse_number(path(base), trim(item)));
    if (out.empty())
      throw ValidationError(path(base) + ": empty list");
    return out;
  }

  std::string unit(std::string_view base) const {
    auto it = entries_.find(std::string(base));
    return it == entries_.end() ? std::string() : it->second.resolved.unit;
  }

  const std::string& name() const { return name_; }

private:
  struct Entry {
    Resolved resolved;
    std::string value;
  };
  std::string name_;
  std::map<std::string, Entry> entries_;
};

const std::map<std::string, std::string>* find_section(const RawConfig& raw, const std::string& name) {
  auto it = raw.find(name);
  return it == raw.end() ? nullptr : &it->second;
}

void fill_defaults(RawConfig& raw, const std::string& section) {
  auto& values = raw[section];
  std::set<std::string> present;
  for (const auto& [key, value] : values)
    present.insert(std::string(resolve_key(section, key).field->base));
  for (const auto& f : schema_for(section))
    if (!f.default_key.empty() && !present.count(std::string(f.base)))
      values.emplace(std::string(f.default_key), std::string(f.default_value));
}

void check_fraction(const std::string& path, double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(path + ": must lie in [0, 1]");
}

template <class F> auto rethrow_as_validation(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

cmt::ModeParams build_mode(const Section& s, const cmt::ResonatorGeometry& geom, bool pump) {
  cmt::ModeParams m;
  m.wavelength_m = s.require_number("wavelength");
  if (!(m.wavelength_m > 0.0))
    throw ValidationError(s.path("wavelength") + ": must be positive");
  if (!pump || s.has("gamma"))
    m.gamma = s.number("gamma").value_or(1.0);

  if (s.has("loss") && s.has("q_loaded"))
    throw ValidationError(s.name() + ": give either loss or q_loaded, not both");
  if (s.has("loss"))
    m.loss = s.require_number("loss");
  else if (s.has("q_loaded"))
    m.loss = rethrow_as_validation(s.path("q_loaded"),
                                   [&] { return cmt::q_to_loss(s.require_number("q_loaded"), m.wavelength_m, geom); });
  else
    throw ValidationError(s.name() + ": missing required field loss or q_loaded");

  if (s.has("coupling") && s.has("coupling_ratio"))
    throw ValidationError(s.name() + ": give either coupling or coupling_ratio, not both");
  if (s.has("coupling"))
    m.coupling = s.require_number("coupling");
  else if (s.has("coupling_ratio"))
    m.coupling = s.require_number("coupling_ratio") * m.loss;
  else
    throw ValidationError(s.name() + ": missing required field coupling or coupling_ratio");

  rethrow_as_validation(s.name(), [&] { m.validate(s.name()); });
  return m;
}

PumpConfig build_pump(const Section& s, const cmt::ResonatorGeometry& geom) {
  PumpConfig p;
  p.detuning = s.number("detuning").value_or(0.0);
  if (s.has("power") == s.has("intracavity_power"))
    throw ValidationError(s.name() + ": give exactly one of power or intracavity_power");
  if (s.has("intracavity_power")) {
    p.intracavity_power_w = s.require_number("intracavity_power");
    p.mode.wavelength_m = s.require_number("wavelength");
    if (!(*p.intracavity_power_w >= 0.0))
      throw ValidationError(s.path("intracavity_power") + ": must be nonnegative");
  } else {
    p.on_chip_power_w = s.require_number("power");
    if (!(*p.on_chip_power_w >= 0.0))
      throw ValidationError(s.path("power") + ": must be nonnegative");
    p.mode = build_mode(s, geom, true);
    rethrow_as_validation(s.name(), [&] { (void)p.cavity_power(); });
  }
  return p;
}

Band parse_band(const Section& s) {
  const auto b = s.text("band").value_or("idler");
  if (b == "idler")
    return Band::idler;
  if (b == "signal")
    return Band::signal;
  throw ValidationError(s.path("band") + ": expected idler or signal");
}

Operation parse_operation(const Section& s) {
  const auto t = s.require_text("operation");
  for (auto op : {Operation::efficiency, Operation::coupling_study, Operation::detuning_map, Operation::noise,
                  Operation::imbalance, Operation::coincidence, Operation::dispersion})
    if (to_string(op) == t)
      return op;
  throw ValidationError(s.path("operation") +
                        ": unknown operation '" + t +
                        "' (efficiency, coupling-study, detuning-map, noise, imbalance, coincidence, dispersion)");
}

std::int64_t to_ps_exact(const Section& s, std::string_view base, double seconds) {
  const double ps = seconds * 1e12;
  const double rounded = std::round(ps);
  if (std::abs(ps - rounded) > 1e-6 * std::max(1.0, std::abs(ps)))
    throw ValidationError(s.path(base) + ": must be a whole number of picoseconds");
  return static_cast<std::int64_t>(rounded);
}

bool requires_device(Operation op) {
  return op == Operation::efficiency || op == Operation::coupling_study || op == Operation::detuning_map;
}

} // namespace

std::string_view to_string(Operation op) {
  switch (op) {
  case Operation::efficiency:
    return "efficiency";
  case Operation::coupling_study:
    return "coupling-study";
  case Operation::detuning_map:
    return "detuning-map";
  case Operation::noise:
    return "noise";
  case Operation::imbalance:
    return "imbalance";
  case Operation::coincidence:
    return "coincidence";
  case Operation::dispersion:
    return "dispersion";
  }
  return "unknown";
}

double PumpConfig::cavity_power() const {
  if (intracavity_power_w)
    return *intracavity_power_w;
  return cmt::pump_buildup(mode, on_chip_power_w.value_or(0.0), detuning);
}

RawConfig parse_raw(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RawConfig raw;
  for (const auto& [section, child] : tree) {
    if (child.empty())
      throw ValidationError(section + ": key outside of any [section], or empty section");
    auto& values = raw[section];
    for (const auto& [key, leaf] : child)
      values[key] = trim(leaf.get_value<std::string>());
  }
  return raw;
}

std::string canonical_text(const RawConfig& raw) {
  std::string out;
  for (const auto& [section, values] : raw) {
    out += '[' + section + "]\n";
    for (const auto& [key, value] : values)
      out += key + " = " + value + '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

ScenarioConfig build(const RawConfig& input) {
  RawConfig raw = input;
  for (const auto& [section, values] : raw)
    if (schema_for(section).empty())
      throw ValidationError(section + ": unknown section");

  ScenarioConfig cfg;
  const Section scenario("scenario", find_section(raw, "scenario"));
  cfg.operation = parse_operation(scenario);
  cfg.name = scenario.text("name").value_or("scenario");
  cfg.calibrated = scenario.boolean("calibrated");
  if (auto r = scenario.list("coupling_ratios"))
    cfg.coupling_ratios = *r;

  // geometry is needed by every mode-based operation
  const bool needs_device = requires_device(cfg.operation);
  const Section geometry("geometry", find_section(raw, "geometry"));
  if (needs_device || find_section(raw, "geometry")) {
    const double L = geometry.require_number("circumference");
    if (!(L > 0.0))
      throw ValidationError(geometry.path("circumference") + ": must be positive");
    if (geometry.has("roundtrip_time")) {
      cfg.geometry.circumference_m = L;
      cfg.geometry.roundtrip_time_s = geometry.require_number("roundtrip_time");
      if (auto ng = geometry.number("group_index"))
        cfg.geometry.group_index = *ng;
      rethrow_as_validation("geometry", [&] { cfg.geometry.validate(); });
    } else {
      if (!geometry.has("group_index"))
        raw["geometry"]["group_index"] = "2";
      const double ng = geometry.number("group_index").value_or(2.0);
      cfg.geometry = rethrow_as_validation("geometry", [&] { return cmt::ResonatorGeometry::from_group_index(L, ng); });
    }
  }

  for (const char* mode_name : {"signal", "idler"}) {
    if (!find_section(raw, mode_name)) {
      if (needs_device)
        throw ValidationError(std::string(mode_name) + ": missing required section");
      continue;
    }
    fill_defaults(raw, mode_name);
    const Section s(mode_name, find_section(raw, mode_name));
    (std::string_view(mode_name) == "signal" ? cfg.signal : cfg.idler) = build_mode(s, cfg.geometry, false);
  }
  {
    const Section sig("signal", find_section(raw, "signal"));
    const Section idl("idler", find_section(raw, "idler"));
    if (sig.has("detuning") != idl.has("detuning"))
      throw ValidationError("signal/idler: give detuning for both modes or neither");
    if (sig.has("detuning"))
      cfg.detunings = cmt::Detunings{sig.require_number("detuning"), idl.require_number("detuning")};
  }

  for (const char* pump_name : {"pump1", "pump2"}) {
    if (!find_section(raw, pump_name)) {
      if (needs_device)
        throw ValidationError(std::string(pump_name) + ": missing required section");
      continue;
    }
    fill_defaults(raw, pump_name);
    const Section s(pump_name, find_section(raw, pump_name));
    (std::string_view(pump_name) == "pump1" ? cfg.pump1 : cfg.pump2) = build_pump(s, cfg.geometry);
  }

  if (find_section(raw, "dispersion")) {
    fill_defaults(raw, "dispersion");
    const Section s("dispersion", find_section(raw, "dispersion"));
    auto coeffs = s.list("beta_coefficients");
    if (!coeffs)
      throw ValidationError("dispersion.beta_coefficients_si: missing required field");
    cfg.dispersion = rethrow_as_validation("dispersion", [&] {
      return dispersion::DispersionProfile::from_wavelengths(s.require_number("center_wavelength"), *coeffs,
                                                             s.require_number("window_min"),
                                                             s.require_number("window_max"));
    });
    cfg.dispersion_gamma = s.number("gamma").value_or(1.0);
  } else if (cfg.operation == Operation::dispersion) {
    throw ValidationError("dispersion: missing required section");
  }

  fill_defaults(raw, "detection");
  {
    const Section s("detection", find_section(raw, "detection"));
    cfg.detection_efficiency_idler = s.require_number("efficiency_idler");
    cfg.detection_efficiency_signal = s.require_number("efficiency_signal");
    check_fraction(s.path("efficiency_idler"), cfg.detection_efficiency_idler);
    check_fraction(s.path("efficiency_signal"), cfg.detection_efficiency_signal);
  }

  std::vector<std::string> noise_sections, filter_sections;
  for (const auto& [section, values] : raw) {
    if (section.starts_with("noise."))
      noise_sections.push_back(section);
    else if (section.starts_with("filter."))
      filter_sections.push_back(section);
  }
  for (const auto& name : noise_sections) {
    fill_defaults(raw, name);
    const Section s(name, find_section(raw, name));
    NoiseConfig n;
    n.name = name.substr(6);
    const auto mech = noise::parse_mechanism(s.require_text("mechanism"));
    if (!mech)
      throw ValidationError(s.path("mechanism") + ": expected fluorescence, sfwm, or raman");
    n.source.mechanism = *mech;
    n.source.coefficient = s.require_number("coefficient");
    const std::string expected_unit = *mech == noise::Mechanism::sfwm ? "cps_per_w2" : "cps_per_w";
    if (s.unit("coefficient") != expected_unit)
      throw ValidationError(s.path("coefficient") + ": unit mismatch, " + std::string(noise::to_string(*mech)) +
                            " coefficients are in " + expected_unit);
    if (*mech == noise::Mechanism::fluorescence)
      n.source.saturation_power = s.require_number("saturation_power");
    else if (s.has("saturation_power"))
      throw ValidationError(s.path("saturation_power") + ": only fluorescence saturates");
    n.source.polarization_contrast = s.require_number("polarization_contrast");
    const auto ch = noise::parse_character(s.require_text("character"));
    if (!ch)
      throw ValidationError(s.path("character") + ": expected broadband or cavity-resonant");
    n.source.character = *ch;
    const auto pump = s.integer("pump").value_or(1);
    if (pump != 1 && pump != 2)
      throw ValidationError(s.path("pump") + ": expected 1 or 2");
    n.pump = static_cast<int>(pump);
    n.band = parse_band(s);
    rethrow_as_validation(name, [&] { n.source.validate(); });
    cfg.noise.push_back(std::move(n));
  }
  for (const auto& name : filter_sections) {
    fill_defaults(raw, name);
    const Section s(name, find_section(raw, name));
    FilterConfig f;
    f.name = name.substr(7);
    const auto kind = noise::parse_filter_kind(s.require_text("kind"));
    if (!kind)
      throw ValidationError(s.path("kind") + ": expected bandpass, etalon, fbg, or free-space-grating");
    f.stage.kind = *kind;
    f.stage.transmission = s.require_number("transmission");
    f.stage.suppression_db = s.require_number("suppression");
    f.stage.bandwidth_nm = s.number("bandwidth").value_or(0.0) / units::nm;
    f.band = parse_band(s);
    rethrow_as_validation(name, [&] { f.stage.validate(); });
    cfg.filters.push_back(std::move(f));
  }

  if (find_section(raw, "imbalance")) {
    const Section s("imbalance", find_section(raw, "imbalance"));
    cfg.imbalance = ImbalanceConfig{s.require_number("product_min"), s.require_number("p1_max"),
                                    s.require_number("p2_max")};
    if (cfg.imbalance->p1_max_w * cfg.imbalance->p2_max_w < cfg.imbalance->product_min_w2)
      throw ValidationError("imbalance: product_min is infeasible within p1_max and p2_max");
  } else if (cfg.operation == Operation::imbalance) {
    throw ValidationError("imbalance: missing required section");
  }

  fill_defaults(raw, "photon");
  {
    const Section s("photon", find_section(raw, "photon"));
    auto& p = cfg.photon;
    p.pair_rate_hz = s.require_number("pair_rate");
    p.herald_efficiency = s.require_number("herald_efficiency");
    p.converted_efficiency = s.require_number("converted_efficiency");
    cfg.photon_use_device_efficiency = s.boolean("use_device_efficiency");
    p.herald_noise_hz = s.require_number("herald_noise");
    p.converted_noise_hz = s.require_number("converted_noise");
    p.herald_jitter_s = s.require_number("herald_jitter");
    p.converted_jitter_s = s.require_number("converted_jitter");
    p.arm_delay_ps = to_ps_exact(s, "arm_delay", s.require_number("arm_delay"));
    p.duration_s = s.require_number("duration");
    const auto seed = s.integer("seed").value_or(1);
    if (seed < 0)
      throw ValidationError(s.path("seed") + ": must be nonnegative");
    p.seed = static_cast<std::uint64_t>(seed);
    p.herald_channel = static_cast<int>(s.integer("herald_channel").value_or(1));
    p.converted_channel = static_cast<int>(s.integer("converted_channel").value_or(2));
    const auto reps = s.integer("repetitions").value_or(1);
    if (reps < 1)
      throw ValidationError(s.path("repetitions") + ": must be at least 1");
    cfg.photon_repetitions = static_cast<std::size_t>(reps);
    rethrow_as_validation("photon", [&] { p.validate(); });
  }

  fill_defaults(raw, "histogram");
  {
    const Section s("histogram", find_section(raw, "histogram"));
    auto& h = cfg.histogram;
    h.bin_ps = to_ps_exact(s, "bin", s.require_number("bin"));
    h.range_ps = to_ps_exact(s, "range", s.require_number("range"));
    if (!s.has("peak_center"))
      raw["histogram"]["peak_center_ps"] = std::to_string(cfg.photon.arm_delay_ps);
    h.peak_center_ps = s.has("peak_center") ? s.require_number("peak_center") * 1e12
                                            : static_cast<double>(cfg.photon.arm_delay_ps);
    h.peak_halfwidth_ps = s.require_number("peak_halfwidth") * 1e12;
    if (h.bin_ps <= 0 || 2 * h.range_ps < 3 * h.bin_ps)
      throw ValidationError("histogram: range must span at least 3 bins of positive width");
    if (!(h.peak_halfwidth_ps > 0.0))
      throw ValidationError(s.path("peak_halfwidth") + ": must be positive");
  }

  fill_defaults(raw, "map");
  {
    const Section s("map", find_section(raw, "map"));
    const auto pts = s.integer("points").value_or(41);
    if (pts < 2)
      throw ValidationError(s.path("points") + ": must be at least 2");
    cfg.map.points = static_cast<std::size_t>(pts);
    cfg.map.span_linewidths = s.require_number("span_linewidths");
  }

  if (find_section(raw, "sweep")) {
    fill_defaults(raw, "sweep");
    const Section s("sweep", find_section(raw, "sweep"));
    SweepSpec sw;
    const auto param = s.require_text("parameter");
    const auto dot = param.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == param.size())
      throw ValidationError(s.path("parameter") + ": expected section.key, got '" + param + "'");
    sw.section = param.substr(0, dot);
    sw.key = param.substr(dot + 1);
    if (sw.section == "sweep")
      throw ValidationError(s.path("parameter") + ": cannot sweep the sweep section");
    if (!find_section(raw, sw.section))
      throw ValidationError(s.path("parameter") + ": section '" + sw.section + "' not present in the config");
    const auto r = resolve_key(sw.section, sw.key);
    const Kind k = r.field->kind;
    if (k == Kind::text || k == Kind::boolean || k == Kind::list || k == Kind::si_list)
      throw ValidationError(s.path("parameter") + ": '" + param + "' is not numeric");
    sw.start = s.require_number("start");
    sw.stop = s.require_number("stop");
    const auto spacing = s.require_text("spacing");
    if (spacing == "linear")
      sw.spacing = Spacing::linear;
    else if (spacing == "log")
      sw.spacing = Spacing::log;
    else
      throw ValidationError(s.path("spacing") + ": expected linear or log");
    const auto pts = s.integer("points");
    if (!pts)
      throw ValidationError("sweep.points: missing required field");
    if (*pts < 2)
      throw ValidationError(s.path("points") + ": sweep needs at least 2 points");
    sw.points = static_cast<std::size_t>(*pts);
    if (sw.start == sw.stop)
      throw ValidationError("sweep: zero-length range (start == stop)");
    if (!std::isfinite(sw.start) || !std::isfinite(sw.stop))
      throw ValidationError("sweep: range must be finite");
    if (sw.spacing == Spacing::log && !(sw.start > 0.0 && sw.stop > 0.0))
      throw ValidationError("sweep: log spacing needs positive bounds");
    cfg.sweep = sw;
  }

  if (cfg.operation == Operation::coupling_study) {
    if (cfg.coupling_ratios.empty())
      throw ValidationError("scenario.coupling_ratios: required for coupling-study");
    for (double r : cfg.coupling_ratios)
      if (!(r >= 0.0 && r <= 1.0))
        throw ValidationError("scenario.coupling_ratios: ratios must lie in [0, 1]");
  }
  if (needs_device && (cfg.signal.loss == 0.0 || cfg.idler.loss == 0.0))
    throw ValidationError("signal/idler: loss must be positive for conversion operations");

  fill_defaults(raw, "scenario");
  cfg.resolved = raw;
  cfg.hash = fnv1a64(canonical_text(raw));
  return cfg;
}

ScenarioConfig parse_config(std::string_view text) { return build(parse_raw(text)); }

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void set_value(RawConfig& raw, const std::string& section, const std::string& key, double value) {
  auto& values = raw[section];
  const auto r = resolve_key(section, key);
  for (auto it = values.begin(); it != values.end();) {
    if (resolve_key(section, it->first).field == r.field)
      it = values.erase(it);
    else
      ++it;
  }
  if (r.field->kind == Kind::integer) {
    if (value != std::floor(value) || std::abs(value) > 9e15)
      throw ValidationError(section + "." + key + ": swept value " + format_number(value) + " is not an integer");
    values[key] = std::to_string(static_cast<long long>(value));
  } else {
    values[key] = format_number(value);
  }
}

std::string key_unit(const std::string& section, const std::string& key) {
  const auto r = resolve_key(section, key);
  return r.unit.empty() || r.unit == "si" ? "1" : r.unit;
}

std::vector<std::string> preset_names() { return {"paper-device", "coupling-study", "noise-imbalance", "coincidence"}; }

std::string preset_text(std::string_view name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw IoError("unknown preset '" + std::string(name) + "'");
  const auto path = std::filesystem::path(QFC_PRESET_DIR) / (std::string(name) + ".ini");
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path.string() + ": cannot open preset");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_config_or_preset(const std::string& spec) {
  constexpr std::string_view prefix = "preset:";
  if (spec.starts_with(prefix))
    return parse_config(preset_text(std::string_view(spec).substr(prefix.size())));
  return load_config(spec);
}

} // namespace qfc::config
