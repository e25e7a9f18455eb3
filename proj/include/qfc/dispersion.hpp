#pragma once

#include <optional>
#include <vector>

namespace qfc::dispersion {

// Taylor-expanded propagation constant about a reference angular frequency.
// coefficients[n] is beta_n in s^n/m; at least beta_0..beta_2 are required.
class DispersionProfile {
public:
  DispersionProfile(double omega0, std::vector<double> coefficients, double omega_min, double omega_max);

  static DispersionProfile from_wavelengths(double center_wavelength_m, std::vector<double> coefficients,
                                            double wavelength_min_m, double wavelength_max_m);

  double omega0() const { return omega0_; }
  double omega_min() const { return omega_min_; }
  double omega_max() const { return omega_max_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  bool contains(double omega) const { return omega >= omega_min_ && omega <= omega_max_; }

  /// d^k beta / d omega^k of the Taylor series, no window check.
  double derivative(double omega, std::size_t order) const;

private:
  double omega0_;
  std::vector<double> coefficients_;
  double omega_min_;
  double omega_max_;
};

struct FrequencyQuartet {
  double signal = 0.0;
  double idler = 0.0;
  double pump_hi = 0.0;
  double pump_lo = 0.0;

  double span() const { return idler - signal; }
};

enum class GvdSign { normal, anomalous, zero };

struct GvdValue {
  double beta2 = 0.0;
  GvdSign sign = GvdSign::zero;
};

double beta(const DispersionProfile& profile, double omega);

GvdValue gvd(const DispersionProfile& profile, double omega);

FrequencyQuartet quartet_from_three(double omega_signal, double omega_pump_hi, double omega_pump_lo);

/// Linear phase mismatch beta(s) + beta(p_hi) - beta(i) - beta(p_lo).
double bsfwm_mismatch(const DispersionProfile& profile, const FrequencyQuartet& q);

struct SfwmAssessment {
  bool phase_matchable = false;
  std::optional<double> matched_offset; // smallest offset with zero mismatch, rad/s
  double max_offset = 0.0;              // largest offset scanned
};

/// 2 beta(wp) - beta(wp + d) - beta(wp - d) - 2 gamma P.
double sfwm_mismatch(const DispersionProfile& profile, double omega_pump, double offset, double pump_power_w,
                     double gamma);

/// Scans offsets for which wp +- offset stays in the window and reports
/// whether the SFWM mismatch reaches zero.
SfwmAssessment sfwm_phase_matching(const DispersionProfile& profile, double omega_pump, double pump_power_w,
                                   double gamma, std::size_t scan_points = 4096);

} // namespace qfc::dispersion
