#include "qfc/cmt.hpp"

#include "qfc/error.hpp"
#include "qfc/units.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qfc::cmt {

namespace {

constexpr cplx I{0.0, 1.0};

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw InvalidParameter(std::string(what) + " must be finite");
}

double frobenius_sq(const Mat2& m) { return m.squaredNorm(); }

void check_singular(cplx det, const Mat2& m) {
  if (std::abs(det) <= singular_tolerance * frobenius_sq(m))
    throw SingularSystem("coupled-mode matrix is singular (lossless, exactly resonant drive)");
}

Mat2 inverse(const Mat2& m, cplx det) {
  Mat2 inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}

cplx det2(const Mat2& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

// Shared pieces of the closed-form efficiency.
struct Denominator {
  cplx det;
  double pump_product; // |A|^2 |B|^2
};

Denominator closed_form_det(const ConverterParams& p, const PumpPair& pumps, const Detunings& d) {
  const double L = p.geometry.circumference_m;
  const double S = pumps.total_power();
  const double prod = pumps.first.power() * pumps.second.power();
  const cplx zeta_c = -p.signal.loss / 2.0 + 2.0 * I * p.signal.gamma * L * S;
  const cplx zeta_d = -p.idler.loss / 2.0 + 2.0 * I * p.idler.gamma * L * S;
  const cplx det = (zeta_c - I * d.signal) * (zeta_d - I * d.idler) + 4.0 * p.signal.gamma * p.idler.gamma * L * L * prod;
  return {det, prod};
}

} // namespace

ResonatorGeometry ResonatorGeometry::from_group_index(double circumference_m, double group_index) {
  ResonatorGeometry g;
  g.circumference_m = circumference_m;
  g.group_index = group_index;
  g.roundtrip_time_s = group_index * circumference_m / units::c;
  g.validate();
  return g;
}

void ResonatorGeometry::validate() const {
  if (!(circumference_m > 0.0) || !std::isfinite(circumference_m))
    throw InvalidParameter("geometry: circumference must be positive");
  if (!(roundtrip_time_s > 0.0) || !std::isfinite(roundtrip_time_s))
    throw InvalidParameter("geometry: roundtrip time must be positive");
  if (group_index) {
    const double expected = *group_index * circumference_m / units::c;
    if (std::abs(expected - roundtrip_time_s) > 1e-9 * expected)
      throw InvalidParameter("geometry: roundtrip time inconsistent with group index and circumference");
  }
}

void ModeParams::validate(std::string_view name) const {
  const std::string n(name);
  if (!std::isfinite(wavelength_m) || !(wavelength_m > 0.0))
    throw InvalidParameter(n + ": wavelength must be positive");
  if (!std::isfinite(loss) || loss < 0.0 || loss > 1.0)
    throw InvalidParameter(n + ": loss must lie in [0, 1]");
  if (!std::isfinite(coupling) || coupling < 0.0 || coupling > loss)
    throw InvalidParameter(n + ": coupling must lie in [0, loss]");
  if (!std::isfinite(gamma) || gamma < 0.0)
    throw InvalidParameter(n + ": nonlinear parameter must be nonnegative");
}

void ConverterParams::validate() const {
  signal.validate("signal");
  idler.validate("idler");
  geometry.validate();
}

PumpPair PumpPair::from_powers(double p1_w, double p2_w) {
  if (!(p1_w >= 0.0) || !(p2_w >= 0.0))
    throw InvalidParameter("pump powers must be nonnegative");
  return {{cplx(std::sqrt(p1_w), 0.0), 0.0}, {cplx(std::sqrt(p2_w), 0.0), 0.0}};
}

std::string_view to_string(Regime r) {
  switch (r) {
  case Regime::underpumped:
    return "underpumped";
  case Regime::boundary:
    return "boundary";
  case Regime::overpumped:
    return "overpumped";
  }
  return "unknown";
}

CoupledModeSystem build_system(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings) {
  params.validate();
  if (!finite(pumps.first.amplitude) || !finite(pumps.second.amplitude))
    throw InvalidParameter("pump amplitudes must be finite");
  require_finite(detunings.signal, "signal detuning");
  require_finite(detunings.idler, "idler detuning");

  const double L = params.geometry.circumference_m;
  const double S = pumps.total_power();
  const cplx A = pumps.first.amplitude;
  const cplx B = pumps.second.amplitude;
  const ModeParams& c = params.signal;
  const ModeParams& d = params.idler;

  CoupledModeSystem sys;
  sys.evolution(0, 0) = -c.loss / 2.0 - I * detunings.signal + 2.0 * I * c.gamma * L * S;
  sys.evolution(0, 1) = 2.0 * I * c.gamma * L * A * std::conj(B);
  sys.evolution(1, 0) = 2.0 * I * d.gamma * L * std::conj(A) * B;
  sys.evolution(1, 1) = -d.loss / 2.0 - I * detunings.idler + 2.0 * I * d.gamma * L * S;
  sys.input_coupling = {std::sqrt(c.coupling), std::sqrt(d.coupling)};
  return sys;
}

Vec2 steady_state(const CoupledModeSystem& sys, const Vec2& inputs) {
  const Mat2& m = sys.evolution;
  const cplx det = det2(m);
  check_singular(det, m);
  const Vec2 drive(sys.input_coupling[0] * inputs(0), sys.input_coupling[1] * inputs(1));
  return -(inverse(m, det) * drive);
}

Vec2 output_fields(const CoupledModeSystem& sys, const Vec2& intracavity, const Vec2& inputs) {
  Vec2 out;
  for (int k = 0; k < 2; ++k) {
    const double kk = sys.input_coupling[static_cast<std::size_t>(k)];
    if (kk < 0.0 || kk > 1.0)
      throw InvalidParameter("input coupling must lie in [0, 1]");
    out(k) = kk * intracavity(k) - std::sqrt(1.0 - kk * kk) * inputs(k);
  }
  return out;
}

SignalIdlerState solve(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings,
                       const Vec2& inputs) {
  const auto sys = build_system(params, pumps, detunings);
  SignalIdlerState s;
  s.inputs = inputs;
  s.intracavity = steady_state(sys, inputs);
  s.outputs = output_fields(sys, s.intracavity, inputs);
  s.detunings = detunings;
  return s;
}

double transfer_efficiency(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings) {
  const auto sys = build_system(params, pumps, detunings);
  const auto [det, prod] = closed_form_det(params, pumps, detunings);
  check_singular(det, sys.evolution);
  const double L = params.geometry.circumference_m;
  const double gd = params.idler.gamma;
  const double num = 4.0 * gd * gd * L * L * params.signal.coupling * params.idler.coupling * prod;
  return num / std::norm(det);
}

double reverse_transfer_efficiency(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings) {
  const auto sys = build_system(params, pumps, detunings);
  const auto [det, prod] = closed_form_det(params, pumps, detunings);
  check_singular(det, sys.evolution);
  const double L = params.geometry.circumference_m;
  const double gc = params.signal.gamma;
  const double num = 4.0 * gc * gc * L * L * params.signal.coupling * params.idler.coupling * prod;
  return num / std::norm(det);
}

double cooperativity(const ModeParams& signal, const ModeParams& idler, const ResonatorGeometry& geom, double p1_w,
                     double p2_w) {
  if (!(p1_w >= 0.0) || !(p2_w >= 0.0))
    throw InvalidParameter("pump powers must be nonnegative");
  if (signal.loss == 0.0 || idler.loss == 0.0)
    throw InvalidParameter("cooperativity undefined for zero loss");
  const double L = geom.circumference_m;
  return 16.0 * signal.gamma * idler.gamma * L * L * p1_w * p2_w / (signal.loss * idler.loss);
}

Regime classify_regime(double coop) {
  if (std::abs(coop - 1.0) <= regime_tolerance)
    return Regime::boundary;
  return coop < 1.0 ? Regime::underpumped : Regime::overpumped;
}

double xpm_shift(const ModeParams& mode, const ResonatorGeometry& geom, double p1_w, double p2_w) {
  return 2.0 * mode.gamma * geom.circumference_m * (p1_w + p2_w);
}

Detunings optimal_detunings(const ConverterParams& params, double p1_w, double p2_w) {
  const double shift_c = xpm_shift(params.signal, params.geometry, p1_w, p2_w);
  const double shift_d = xpm_shift(params.idler, params.geometry, p1_w, p2_w);
  if (p1_w == 0.0 || p2_w == 0.0 || params.signal.gamma == 0.0 || params.idler.gamma == 0.0)
    return {shift_c, shift_d};
  const double coop = cooperativity(params.signal, params.idler, params.geometry, p1_w, p2_w);
  if (classify_regime(coop) != Regime::overpumped)
    return {shift_c, shift_d};
  const double delta_d = shift_d - params.idler.loss / 2.0 * std::sqrt(coop - 1.0);
  const double delta_c = params.signal.loss / params.idler.loss * (delta_d - shift_d) + shift_c;
  return {delta_c, delta_d};
}

double efficiency_ceiling(const ConverterParams& params) {
  return params.signal.coupling * params.idler.coupling / (params.signal.loss * params.idler.loss);
}

ConversionResult max_efficiency(const ConverterParams& params, double p1_w, double p2_w) {
  params.validate();
  ConversionResult r;
  r.cooperativity = cooperativity(params.signal, params.idler, params.geometry, p1_w, p2_w);
  r.regime = classify_regime(r.cooperativity);
  r.detunings = optimal_detunings(params, p1_w, p2_w);
  const double ceiling = efficiency_ceiling(params);
  const double coop = r.cooperativity;
  r.efficiency = r.regime == Regime::overpumped ? ceiling : ceiling * 4.0 * coop / ((1.0 + coop) * (1.0 + coop));
  return r;
}

EigenAnalysis eigen_analysis(const CoupledModeSystem& sys) {
  const Mat2& m = sys.evolution;
  const cplx half_trace = (m(0, 0) + m(1, 1)) / 2.0;
  const cplx half_diff = (m(0, 0) - m(1, 1)) / 2.0;
  const cplx root = std::sqrt(half_diff * half_diff + m(0, 1) * m(1, 0));

  EigenAnalysis out;
  out.eigenvalues = {half_trace + root, half_trace - root};
  out.eigenvalue_gap = std::abs(2.0 * root);

  // |det(M - i delta)|^2 = prod_k ((delta - w_k)^2 + g_k^2) with lambda_k = -g_k + i w_k.
  // Its derivative in t = delta - mean(w) is 2 (t^3 + p t + q).
  const double w1 = out.eigenvalues[0].imag();
  const double w2 = out.eigenvalues[1].imag();
  const double g1 = out.eigenvalues[0].real() * out.eigenvalues[0].real();
  const double g2 = out.eigenvalues[1].real() * out.eigenvalues[1].real();
  const double half_gap = (w1 - w2) / 2.0;
  const double p = (g1 + g2) / 2.0 - half_gap * half_gap;
  const double q = (g1 - g2) * half_gap / 2.0;
  if (p < 0.0 && 4.0 * p * p * p + 27.0 * q * q < 0.0) {
    const double amp = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    std::array<double, 3> roots{};
    for (int k = 0; k < 3; ++k)
      roots[static_cast<std::size_t>(k)] = amp * std::cos(phi - 2.0 * units::pi * k / 3.0);
    const auto [lo, hi] = std::minmax_element(roots.begin(), roots.end());
    out.resolved_splitting = *hi - *lo;
  }
  return out;
}

std::vector<double> idler_response_spectrum(const ConverterParams& params, const PumpPair& pumps,
                                            const Detunings& center, std::span<const double> probe_offsets) {
  std::vector<double> out;
  out.reserve(probe_offsets.size());
  for (double off : probe_offsets) {
    const auto sys = build_system(params, pumps, {center.signal + off, center.idler + off});
    const Vec2 x = steady_state(sys, Vec2(0.0, 1.0));
    out.push_back(std::norm(x(1)));
  }
  return out;
}

double max_stable_step(const CoupledModeSystem& sys) {
  const double largest = sys.evolution.cwiseAbs().maxCoeff();
  return largest > 0.0 ? 0.1 / largest : std::numeric_limits<double>::infinity();
}

Trajectory integrate_dynamics(const CoupledModeSystem& sys, const Vec2& inputs, const Vec2& initial,
                              const IntegrationOptions& opts) {
  if (!(opts.step > 0.0) || !(opts.horizon >= 0.0))
    throw InvalidParameter("integration step must be positive and horizon nonnegative");
  if (opts.step > max_stable_step(sys))
    throw StabilityError("integration step exceeds 0.1/max|M|");

  const auto steps = static_cast<std::size_t>(std::ceil(opts.horizon / opts.step));
  const double h = steps > 0 ? opts.horizon / static_cast<double>(steps) : 0.0;
  const std::size_t stride = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, opts.samples));

  const Mat2& m = sys.evolution;
  const Vec2 drive(sys.input_coupling[0] * inputs(0), sys.input_coupling[1] * inputs(1));
  auto rhs = [&](const Vec2& x) -> Vec2 { return m * x + drive; };

  Trajectory traj;
  traj.reserve(steps / stride + 2);
  Vec2 x = initial;
  traj.push_back({0.0, x});
  for (std::size_t n = 1; n <= steps; ++n) {
    const Vec2 k1 = rhs(x);
    const Vec2 k2 = rhs(x + 0.5 * h * k1);
    const Vec2 k3 = rhs(x + 0.5 * h * k2);
    const Vec2 k4 = rhs(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (n % stride == 0 || n == steps)
      traj.push_back({static_cast<double>(n) * h, x});
  }
  return traj;
}

double pump_buildup(const ModeParams& pump, double on_chip_power_w, double detuning) {
  if (!(on_chip_power_w >= 0.0))
    throw InvalidParameter("on-chip pump power must be nonnegative");
  const double half_loss = pump.loss / 2.0;
  const double denom = half_loss * half_loss + detuning * detuning;
  if (denom == 0.0)
    throw SingularSystem("pump buildup diverges for a lossless resonance driven on resonance");
  return pump.coupling * on_chip_power_w / denom;
}

double q_to_loss(double q_loaded, double wavelength_m, const ResonatorGeometry& geom) {
  if (!(q_loaded > 0.0))
    throw InvalidParameter("quality factor must be positive");
  return units::angular_from_wavelength(wavelength_m) * geom.roundtrip_time_s / q_loaded;
}

double loss_to_q(double loss, double wavelength_m, const ResonatorGeometry& geom) {
  if (!(loss > 0.0))
    throw InvalidParameter("loss must be positive");
  return units::angular_from_wavelength(wavelength_m) * geom.roundtrip_time_s / loss;
}

double loaded_linewidth_hz(double q_loaded, double wavelength_m) { return units::c / wavelength_m / q_loaded; }

} // namespace qfc::cmt
