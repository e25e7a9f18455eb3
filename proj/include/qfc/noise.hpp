#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::noise {

enum class Mechanism { fluorescence, sfwm, raman };
enum class SpectralCharacter { broadband, cavity_resonant };

std::string_view to_string(Mechanism m);
std::string_view to_string(SpectralCharacter c);
std::optional<Mechanism> parse_mechanism(std::string_view s);
std::optional<SpectralCharacter> parse_character(std::string_view s);

struct NoiseSource {
  Mechanism mechanism = Mechanism::fluorescence;
  double coefficient = 0.0;       // cps/W (fluorescence, raman) or cps/W^2 (sfwm)
  double saturation_power = 0.0;  // W, fluorescence only; +inf means no saturation
  double polarization_contrast = 0.0;
  SpectralCharacter character = SpectralCharacter::broadband;

  void validate() const;
};

/// Emission rate in counts/s at pump power P (W), seen through an analyzer
/// aligned with the pump polarization.
double noise_rate(const NoiseSource& src, double pump_power_w);

/// Rate behind an analyzer at `angle` (rad) from the pump polarization:
/// rate(P) * ((1 - rho) + rho cos^2(angle)).
double polarized_rate(const NoiseSource& src, double pump_power_w, double analyzer_angle);

struct Measurement {
  double power_w = 0.0;
  double angle_rad = 0.0;
  double rate_cps = 0.0;
};

struct FamilyFit {
  Mechanism mechanism = Mechanism::fluorescence;
  NoiseSource params;
  double residual = 0.0; // RMS relative residual
};

struct Classification {
  Mechanism mechanism = Mechanism::fluorescence;
  bool ambiguous = false;
  NoiseSource params;
  std::array<FamilyFit, 3> fits; // sorted by residual, best first
};

// Fluorescence is fitted with polarization contrast in [0, 0.5]; raman and
// sfwm (the co-polarized mechanisms) with contrast in [0.5, 1].
inline constexpr double copolarized_threshold = 0.5;
inline constexpr double ambiguity_ratio = 1.05;

/// Least-squares fit of the three families; ties within 5% of residual are
/// reported as ambiguous. Requires >= 6 points spanning a decade of power and
/// at least two analyzer angles.
Classification classify_source(std::span<const Measurement> data);

std::vector<Measurement> read_measurements_csv(std::string_view text);

enum class FilterKind { bandpass, etalon, fbg, free_space_grating };

std::string_view to_string(FilterKind k);
std::optional<FilterKind> parse_filter_kind(std::string_view s);

struct FilterStage {
  FilterKind kind = FilterKind::bandpass;
  double transmission = 1.0;   // in-band, fraction
  double suppression_db = 0.0; // broadband rejection
  double bandwidth_nm = 0.0;   // descriptive only

  void validate() const;
};

struct BudgetEntry {
  std::string name;
  Mechanism mechanism = Mechanism::fluorescence;
  SpectralCharacter character = SpectralCharacter::broadband;
  double on_chip_cps = 0.0;
  double detected_cps = 0.0;
};

struct NoiseBudget {
  std::vector<BudgetEntry> entries;
  double detection_efficiency = 1.0; // chip-to-click efficiency before filters
  double signal_transmission = 1.0;  // in-band throughput including filters

  double total_on_chip() const;
  double total_detected() const;
};

struct NamedSource {
  std::string name;
  NoiseSource source;
  double pump_power_w = 0.0;
};

/// On-chip rates for each source; detected = on-chip * detection efficiency.
NoiseBudget make_budget(std::span<const NamedSource> sources, double detection_efficiency);

/// Applies a filter chain: every source is scaled by the product of
/// transmissions, broadband sources are further suppressed by the summed dB.
NoiseBudget apply_filters(const NoiseBudget& budget, std::span<const FilterStage> chain);

/// On-chip rate implied by a detected rate through a known efficiency.
double infer_on_chip(double detected_cps, double efficiency);

struct ImbalanceResult {
  double p1_w = 0.0;
  double p2_w = 0.0;
  double noise_cps = 0.0;
};

double pump_noise(std::span<const NoiseSource> pump1, std::span<const NoiseSource> pump2, double p1_w, double p2_w);

/// Minimizes total noise subject to P1 P2 >= product_min, P1 <= p1_max,
/// P2 <= p2_max. Flat objectives resolve to the balanced pair.
ImbalanceResult optimize_imbalance(std::span<const NoiseSource> pump1, std::span<const NoiseSource> pump2,
                                   double product_min_w2, double p1_max_w, double p2_max_w);

} // namespace qfc::noise
