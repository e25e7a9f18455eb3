#include "qfc/dispersion.hpp"

#include "qfc/error.hpp"
#include "qfc/units.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace qfc::dispersion {

namespace {

void require_in_window(const DispersionProfile& p, double omega) {
  if (!p.contains(omega))
    throw RangeError("frequency " + std::to_string(units::thz_from_angular(omega)) +
                     " THz outside the dispersion profile window");
}

} // namespace

DispersionProfile::DispersionProfile(double omega0, std::vector<double> coefficients, double omega_min,
                                     double omega_max)
    : omega0_(omega0), coefficients_(std::move(coefficients)), omega_min_(omega_min), omega_max_(omega_max) {
  if (coefficients_.size() < 3)
    throw InvalidParameter("dispersion profile needs at least beta_0, beta_1, beta_2");
  if (!(omega0_ > 0.0) || !(omega_min_ < omega_max_) || !(omega_min_ > 0.0))
    throw InvalidParameter("dispersion profile needs positive frequencies and omega_min < omega_max");
  for (double b : coefficients_)
    if (!std::isfinite(b))
      throw InvalidParameter("dispersion coefficients must be finite");
}

DispersionProfile DispersionProfile::from_wavelengths(double center_wavelength_m, std::vector<double> coefficients,
                                                      double wavelength_min_m, double wavelength_max_m) {
  return DispersionProfile(units::angular_from_wavelength(center_wavelength_m), std::move(coefficients),
                           units::angular_from_wavelength(wavelength_max_m),
                           units::angular_from_wavelength(wavelength_min_m));
}

double DispersionProfile::derivative(double omega, std::size_t order) const {
  if (order >= coefficients_.size())
    return 0.0;
  // Horner on beta_{order+j} x^j / j!
  const double x = omega - omega0_;
  const std::size_t top = coefficients_.size() - 1 - order;
  double acc = coefficients_[order + top];
  for (std::size_t j = top; j-- > 0;)
    acc = coefficients_[order + j] + acc * x / static_cast<double>(j + 1);
  return acc;
}

double beta(const DispersionProfile& profile, double omega) {
  require_in_window(profile, omega);
  return profile.derivative(omega, 0);
}

GvdValue gvd(const DispersionProfile& profile, double omega) {
  require_in_window(profile, omega);
  GvdValue v;
  v.beta2 = profile.derivative(omega, 2);
  v.sign = v.beta2 > 0.0 ? GvdSign::normal : (v.beta2 < 0.0 ? GvdSign::anomalous : GvdSign::zero);
  return v;
}

FrequencyQuartet quartet_from_three(double omega_signal, double omega_pump_hi, double omega_pump_lo) {
  if (!(omega_signal > 0.0) || !(omega_pump_hi > 0.0) || !(omega_pump_lo > 0.0))
    throw InvalidParameter("quartet frequencies must be positive");
  if (omega_pump_hi < omega_pump_lo)
    throw InvalidParameter("pump_hi must not be below pump_lo");
  FrequencyQuartet q{omega_signal, omega_signal + (omega_pump_hi - omega_pump_lo), omega_pump_hi, omega_pump_lo};
  if (!(q.idler > 0.0))
    throw InvalidParameter("quartet has nonpositive idler frequency");
  return q;
}

double bsfwm_mismatch(const DispersionProfile& profile, const FrequencyQuartet& q) {
  for (double w : {q.signal, q.idler, q.pump_hi, q.pump_lo})
    require_in_window(profile, w);
  // beta_0 cancels identically; evaluate the remaining orders on offsets.
  const double w0 = profile.omega0();
  const double xs = q.signal - w0, xh = q.pump_hi - w0, xi = q.idler - w0, xl = q.pump_lo - w0;
  const auto& b = profile.coefficients();
  double ps = xs, ph = xh, pi = xi, pl = xl;
  double fact = 1.0;
  double sum = 0.0;
  for (std::size_t n = 1; n < b.size(); ++n) {
    fact *= static_cast<double>(n);
    sum += b[n] / fact * ((ps - pi) + (ph - pl));
    ps *= xs;
    ph *= xh;
    pi *= xi;
    pl *= xl;
  }
  return sum;
}

double sfwm_mismatch(const DispersionProfile& profile, double omega_pump, double offset, double pump_power_w,
                     double gamma) {
  require_in_window(profile, omega_pump + offset);
  require_in_window(profile, omega_pump - offset);
  // Odd orders cancel between +offset and -offset.
  const std::size_t n_max = profile.coefficients().size() - 1;
  double sum = 0.0;
  double pow_over_fact = 1.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    pow_over_fact *= offset / static_cast<double>(n);
    if (n % 2 == 0)
      sum += profile.derivative(omega_pump, n) * pow_over_fact;
  }
  return -2.0 * sum - 2.0 * gamma * pump_power_w;
}

SfwmAssessment sfwm_phase_matching(const DispersionProfile& profile, double omega_pump, double pump_power_w,
                                   double gamma, std::size_t scan_points) {
  require_in_window(profile, omega_pump);
  SfwmAssessment out;
  out.max_offset = std::min(omega_pump - profile.omega_min(), profile.omega_max() - omega_pump);
  auto f = [&](double d) { return sfwm_mismatch(profile, omega_pump, d, pump_power_w, gamma); };

  // Offset 0 is the degenerate pump itself and never counts as a match.
  double prev_d = 0.0;
  for (std::size_t j = 1; j <= scan_points; ++j) {
    const double d = out.max_offset * static_cast<double>(j) / static_cast<double>(scan_points);
    const double fd = f(d);
    if (fd >= 0.0) {
      double lo = prev_d, hi = d;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) >= 0.0 ? hi : lo) = mid;
      }
      out.phase_matchable = true;
      out.matched_offset = hi;
      return out;
    }
    prev_d = d;
  }
  return out;
}

} // namespace qfc::dispersion
