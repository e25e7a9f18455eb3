#pragma once

// Four-mode coupled-amplitude model of a cavity Bragg-scattering converter.
//
// Normalization used throughout this namespace:
//   * field amplitudes are in sqrt(W), so |A|^2 is intracavity power;
//   * loss (alpha) and coupling (theta) are per-roundtrip power fractions;
//   * detuning is the roundtrip phase (omega_res - omega) * t_R;
//   * time is measured in roundtrips.

#include <Eigen/Core>

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qfc::cmt {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

struct ResonatorGeometry {
  double circumference_m = 0.0;
  double roundtrip_time_s = 0.0;
  std::optional<double> group_index;

  static ResonatorGeometry from_group_index(double circumference_m, double group_index);
  void validate() const;
};

struct ModeParams {
  double wavelength_m = 0.0;
  double loss = 0.0;     // alpha
  double coupling = 0.0; // theta
  double gamma = 0.0;    // 1/(W m)

  double coupling_ratio() const { return coupling / loss; }
  void validate(std::string_view name) const;
};

struct PumpState {
  cplx amplitude{};
  double detuning = 0.0;

  double power() const { return std::norm(amplitude); }
};

struct Detunings {
  double signal = 0.0;
  double idler = 0.0;
};

struct PumpPair {
  PumpState first;
  PumpState second;

  static PumpPair from_powers(double p1_w, double p2_w);
  double total_power() const { return first.power() + second.power(); }
};

// Signal/idler mode set sharing one resonator.
struct ConverterParams {
  ModeParams signal;
  ModeParams idler;
  ResonatorGeometry geometry;

  void validate() const;
};

struct CoupledModeSystem {
  Mat2 evolution = Mat2::Zero();            // M
  std::array<double, 2> input_coupling{};   // diagonal of K
};

struct SignalIdlerState {
  Vec2 intracavity = Vec2::Zero();
  Vec2 inputs = Vec2::Zero();
  Vec2 outputs = Vec2::Zero();
  Detunings detunings;
};

enum class Regime { underpumped, boundary, overpumped };

std::string_view to_string(Regime r);

struct ConversionResult {
  double efficiency = 0.0;
  double cooperativity = 0.0;
  Regime regime = Regime::underpumped;
  Detunings detunings;
};

inline constexpr double regime_tolerance = 1e-9;
inline constexpr double singular_tolerance = 1e-14;

CoupledModeSystem build_system(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings);

Vec2 steady_state(const CoupledModeSystem& sys, const Vec2& inputs);

Vec2 output_fields(const CoupledModeSystem& sys, const Vec2& intracavity, const Vec2& inputs);

// Full solve (steady state plus bus outputs) for given inputs.
SignalIdlerState solve(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings,
                       const Vec2& inputs);

/// Signal-to-idler efficiency |D_out/C_in|^2 with no idler input, evaluated in
/// closed form. Amplitudes are sqrt(W), so this is a bus power ratio.
double transfer_efficiency(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings);

/// Idler-to-signal efficiency |C_out/D_in|^2 with no signal input.
double reverse_transfer_efficiency(const ConverterParams& params, const PumpPair& pumps, const Detunings& detunings);

/// 16 gamma_s gamma_i L^2 P1 P2 / (alpha_s alpha_i), pump powers intracavity.
double cooperativity(const ModeParams& signal, const ModeParams& idler, const ResonatorGeometry& geom, double p1_w,
                     double p2_w);

Regime classify_regime(double cooperativity);

/// Cross-phase-modulation shift 2 gamma L (P1 + P2) of one mode.
double xpm_shift(const ModeParams& mode, const ResonatorGeometry& geom, double p1_w, double p2_w);

/// Detunings maximizing transfer_efficiency at fixed intracavity pump powers.
/// In the overpumped regime this returns the branch with the detuning below
/// the XPM shift; its mirror image above the shift is equally optimal.
Detunings optimal_detunings(const ConverterParams& params, double p1_w, double p2_w);

/// Closed-form maximum conversion efficiency with the matching cooperativity,
/// regime, and optimal detunings. Bounded by theta_s theta_i / (alpha_s alpha_i).
ConversionResult max_efficiency(const ConverterParams& params, double p1_w, double p2_w);

double efficiency_ceiling(const ConverterParams& params);

struct EigenAnalysis {
  std::array<cplx, 2> eigenvalues;
  double eigenvalue_gap = 0.0;    // |lambda_1 - lambda_2|
  double resolved_splitting = 0.0; // separation of the two response peaks, 0 if only one
};

// The resolved splitting is the distance between the two minima of
// |det(M - i*delta*I)|^2 over a common probe detuning delta, i.e. the peak
// separation seen when a probe sweeps signal and idler together. It vanishes
// below the exceptional point even though the raw eigenvalues stay split.
EigenAnalysis eigen_analysis(const CoupledModeSystem& sys);

/// Intracavity idler response |D/D_in|^2 as a common probe detuning offset is
/// swept across both resonances (the signal frequency follows the probe through
/// energy conservation).
std::vector<double> idler_response_spectrum(const ConverterParams& params, const PumpPair& pumps,
                                            const Detunings& center, std::span<const double> probe_offsets);

struct IntegrationOptions {
  double horizon = 0.0; // roundtrips
  double step = 0.0;    // roundtrips
  std::size_t samples = 1000;
};

struct TrajectoryPoint {
  double time = 0.0;
  Vec2 state = Vec2::Zero();
};

using Trajectory = std::vector<TrajectoryPoint>;

/// Largest RK4 step accepted for this system.
double max_stable_step(const CoupledModeSystem& sys);

/// Fixed-step RK4 integration of dx/dt = M x + K u in roundtrip units. The
/// returned trajectory holds about `samples` evenly spaced points and always
/// ends with the terminal state.
Trajectory integrate_dynamics(const CoupledModeSystem& sys, const Vec2& inputs, const Vec2& initial,
                              const IntegrationOptions& opts);

/// Intracavity pump power from on-chip bus power using single-mode CMT.
double pump_buildup(const ModeParams& pump, double on_chip_power_w, double detuning);

double q_to_loss(double q_loaded, double wavelength_m, const ResonatorGeometry& geom);
double loss_to_q(double loss, double wavelength_m, const ResonatorGeometry& geom);
double loaded_linewidth_hz(double q_loaded, double wavelength_m);

} // namespace qfc::cmt
