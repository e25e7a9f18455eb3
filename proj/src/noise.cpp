#include "qfc/noise.hpp"

#include "qfc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace qfc::noise {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double power_law(const NoiseSource& s, double p) {
  switch (s.mechanism) {
  case Mechanism::fluorescence:
    return std::isinf(s.saturation_power) ? s.coefficient * p : s.coefficient * p / (1.0 + p / s.saturation_power);
  case Mechanism::sfwm:
    return s.coefficient * p * p;
  case Mechanism::raman:
    return s.coefficient * p;
  }
  return 0.0;
}

// Weighted linear least squares for y ~ g*(u - v*s2) with rho = v/u restricted
// to [rho_lo, rho_hi] and u >= 0. The feasible set is a convex cone, so the
// optimum is the unconstrained one or lies on one of the two bounding rays.
struct LinearFit {
  double u = 0.0;
  double rho = 0.0;
  double sse = inf;
};

LinearFit fit_amplitude_contrast(std::span<const double> g, std::span<const double> s2, std::span<const double> y,
                                 std::span<const double> w, double rho_lo, double rho_hi) {
  auto sse_of = [&](double u, double v) {
    double acc = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double r = g[j] * (u - v * s2[j]) - y[j];
      acc += w[j] * r * r;
    }
    return acc;
  };

  LinearFit best;
  // unconstrained normal equations in (u, v); basis a = g, b = -g*s2
  double aa = 0, ab = 0, bb = 0, ay = 0, by = 0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double a = g[j], b = -g[j] * s2[j];
    aa += w[j] * a * a;
    ab += w[j] * a * b;
    bb += w[j] * b * b;
    ay += w[j] * a * y[j];
    by += w[j] * b * y[j];
  }
  const double det = aa * bb - ab * ab;
  if (det > 1e-14 * aa * bb) {
    const double u = (ay * bb - by * ab) / det;
    const double v = (aa * by - ab * ay) / det;
    if (u > 0.0 && v >= rho_lo * u && v <= rho_hi * u) {
      best = {u, v / u, sse_of(u, v)};
      return best;
    }
  }
  for (double rho : {rho_lo, rho_hi}) {
    double num = 0, den = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double basis = g[j] * (1.0 - rho * s2[j]);
      num += w[j] * basis * y[j];
      den += w[j] * basis * basis;
    }
    const double u = den > 0.0 ? std::max(0.0, num / den) : 0.0;
    const double sse = sse_of(u, rho * u);
    if (sse < best.sse)
      best = {u, rho, sse};
  }
  return best;
}

struct Prepared {
  std::vector<double> p, s2, y, w;
};

Prepared prepare(std::span<const Measurement> data) {
  Prepared d;
  double ymax = 0.0;
  for (const auto& m : data)
    ymax = std::max(ymax, m.rate_cps);
  const double floor = 1e-3 * ymax;
  for (const auto& m : data) {
    d.p.push_back(m.power_w);
    const double s = std::sin(m.angle_rad);
    d.s2.push_back(s * s);
    d.y.push_back(m.rate_cps);
    const double scale = std::max(m.rate_cps, floor);
    d.w.push_back(scale > 0.0 ? 1.0 / (scale * scale) : 1.0);
  }
  return d;
}

FamilyFit fit_family(const Prepared& d, Mechanism mech, double saturation) {
  NoiseSource shape{mech, 1.0, saturation, 0.0, SpectralCharacter::broadband};
  std::vector<double> g(d.p.size());
  for (std::size_t j = 0; j < g.size(); ++j)
    g[j] = power_law(shape, d.p[j]);
  const bool copol = mech != Mechanism::fluorescence;
  const auto lf = fit_amplitude_contrast(g, d.s2, d.y, d.w, copol ? copolarized_threshold : 0.0,
                                         copol ? 1.0 : copolarized_threshold);
  FamilyFit f;
  f.mechanism = mech;
  f.params = {mech, lf.u, mech == Mechanism::fluorescence ? saturation : 0.0, lf.rho, SpectralCharacter::broadband};
  f.residual = std::sqrt(lf.sse / static_cast<double>(d.y.size()));
  return f;
}

FamilyFit fit_fluorescence(const Prepared& d) {
  const auto [pmin_it, pmax_it] = std::minmax_element(d.p.begin(), d.p.end());
  const double lo = std::log(*pmin_it / 100.0);
  const double hi = std::log(*pmax_it * 100.0);
  constexpr int grid = 240;

  FamilyFit best = fit_family(d, Mechanism::fluorescence, inf);
  int best_k = -1;
  for (int k = 0; k <= grid; ++k) {
    const double x = lo + (hi - lo) * k / grid;
    auto f = fit_family(d, Mechanism::fluorescence, std::exp(x));
    if (f.residual < best.residual) {
      best = f;
      best_k = k;
    }
  }
  if (best_k < 0 || best_k == grid)
    return best;

  // golden-section refinement inside the bracketing grid cells
  double a = lo + (hi - lo) * std::max(0, best_k - 1) / grid;
  double b = lo + (hi - lo) * (best_k + 1) / grid;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto resid = [&](double x) { return fit_family(d, Mechanism::fluorescence, std::exp(x)).residual; };
  double c = b - phi * (b - a), e = a + phi * (b - a);
  double fc = resid(c), fe = resid(e);
  for (int it = 0; it < 80; ++it) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - phi * (b - a);
      fc = resid(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + phi * (b - a);
      fe = resid(e);
    }
  }
  auto refined = fit_family(d, Mechanism::fluorescence, std::exp(0.5 * (a + b)));
  return refined.residual < best.residual ? refined : best;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

} // namespace

std::string_view to_string(Mechanism m) {
  switch (m) {
  case Mechanism::fluorescence:
    return "fluorescence";
  case Mechanism::sfwm:
    return "sfwm";
  case Mechanism::raman:
    return "raman";
  }
  return "unknown";
}

std::string_view to_string(SpectralCharacter c) {
  return c == SpectralCharacter::broadband ? "broadband" : "cavity-resonant";
}

std::optional<Mechanism> parse_mechanism(std::string_view s) {
  for (auto m : {Mechanism::fluorescence, Mechanism::sfwm, Mechanism::raman})
    if (to_string(m) == s)
      return m;
  return std::nullopt;
}

std::optional<SpectralCharacter> parse_character(std::string_view s) {
  if (s == "broadband")
    return SpectralCharacter::broadband;
  if (s == "cavity-resonant")
    return SpectralCharacter::cavity_resonant;
  return std::nullopt;
}

void NoiseSource::validate() const {
  if (!(coefficient >= 0.0) || std::isinf(coefficient))
    throw InvalidParameter("noise coefficient must be finite and nonnegative");
  if (!(polarization_contrast >= 0.0 && polarization_contrast <= 1.0))
    throw InvalidParameter("polarization contrast must lie in [0, 1]");
  if (mechanism == Mechanism::fluorescence && !(saturation_power > 0.0))
    throw InvalidParameter("fluorescence needs a positive saturation power");
}

double noise_rate(const NoiseSource& src, double pump_power_w) {
  if (!(pump_power_w >= 0.0))
    throw InvalidParameter("pump power must be nonnegative");
  return power_law(src, pump_power_w);
}

double polarized_rate(const NoiseSource& src, double pump_power_w, double analyzer_angle) {
  const double c = std::cos(analyzer_angle);
  const double rho = src.polarization_contrast;
  return noise_rate(src, pump_power_w) * ((1.0 - rho) + rho * c * c);
}

Classification classify_source(std::span<const Measurement> data) {
  if (data.size() < 6)
    throw InvalidParameter("noise classification needs at least 6 measurements (have " +
                           std::to_string(data.size()) + ")");
  double pmin = inf, pmax = 0.0;
  std::set<double> angles;
  for (const auto& m : data) {
    if (!(m.power_w > 0.0) || !(m.rate_cps >= 0.0) || !std::isfinite(m.angle_rad))
      throw InvalidParameter("measurements need positive power, finite angle, nonnegative rate");
    pmin = std::min(pmin, m.power_w);
    pmax = std::max(pmax, m.power_w);
    angles.insert(m.angle_rad);
  }
  if (pmax < 10.0 * pmin * (1.0 - 1e-12))
    throw InvalidParameter("noise classification needs measurements spanning at least one decade of power");
  if (angles.size() < 2)
    throw InvalidParameter("noise classification needs at least two analyzer angles");

  const auto d = prepare(data);
  Classification out;
  out.fits = {fit_fluorescence(d), fit_family(d, Mechanism::sfwm, 0.0), fit_family(d, Mechanism::raman, 0.0)};
  std::sort(out.fits.begin(), out.fits.end(),
            [](const FamilyFit& a, const FamilyFit& b) { return a.residual < b.residual; });
  out.mechanism = out.fits[0].mechanism;
  out.params = out.fits[0].params;
  out.ambiguous = out.fits[1].residual <= ambiguity_ratio * out.fits[0].residual;
  return out;
}

std::vector<Measurement> read_measurements_csv(std::string_view text) {
  std::vector<Measurement> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    if (!header_seen) {
      header_seen = true;
      if (t != "power_W,angle_rad,rate_cps")
        throw ParseError(line_no, "expected header 'power_W,angle_rad,rate_cps'");
      continue;
    }
    std::array<double, 3> v{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto end = t.find(',', start);
      if ((k < 2) != (end != std::string_view::npos))
        throw ParseError(line_no, "expected 3 comma-separated values");
      const auto field = std::string(trim(t.substr(start, end == std::string_view::npos ? t.npos : end - start)));
      try {
        std::size_t used = 0;
        v[k] = std::stod(field, &used);
        if (used != field.size())
          throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError(line_no, "not a number: '" + field + "'");
      }
      start = end + 1;
    }
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

std::string_view to_string(FilterKind k) {
  switch (k) {
  case FilterKind::bandpass:
    return "bandpass";
  case FilterKind::etalon:
    return "etalon";
  case FilterKind::fbg:
    return "fbg";
  case FilterKind::free_space_grating:
    return "free-space-grating";
  }
  return "unknown";
}

std::optional<FilterKind> parse_filter_kind(std::string_view s) {
  for (auto k : {FilterKind::bandpass, FilterKind::etalon, FilterKind::fbg, FilterKind::free_space_grating})
    if (to_string(k) == s)
      return k;
  return std::nullopt;
}

void FilterStage::validate() const {
  if (!(transmission > 0.0 && transmission <= 1.0))
    throw InvalidParameter("filter transmission must lie in (0, 1]");
  if (!(suppression_db >= 0.0) || std::isinf(suppression_db))
    throw InvalidParameter("filter suppression must be a finite nonnegative dB value");
}

double NoiseBudget::total_on_chip() const {
  return std::accumulate(entries.begin(), entries.end(), 0.0,
                         [](double acc, const BudgetEntry& e) { return acc + e.on_chip_cps; });
}

double NoiseBudget::total_detected() const {
  return std::accumulate(entries.begin(), entries.end(), 0.0,
                         [](double acc, const BudgetEntry& e) { return acc + e.detected_cps; });
}

NoiseBudget make_budget(std::span<const NamedSource> sources, double detection_efficiency) {
  if (!(detection_efficiency >= 0.0 && detection_efficiency <= 1.0))
    throw InvalidParameter("detection efficiency must lie in [0, 1]");
  NoiseBudget b;
  b.detection_efficiency = detection_efficiency;
  b.signal_transmission = detection_efficiency;
  for (const auto& s : sources) {
    s.source.validate();
    const double rate = noise_rate(s.source, s.pump_power_w);
    b.entries.push_back({s.name, s.source.mechanism, s.source.character, rate, rate * detection_efficiency});
  }
  return b;
}

NoiseBudget apply_filters(const NoiseBudget& budget, std::span<const FilterStage> chain) {
  if (chain.empty())
    throw InvalidParameter("filter chain must not be empty");
  double transmission = 1.0;
  double suppression_db = 0.0;
  for (const auto& f : chain) {
    f.validate();
    transmission *= f.transmission;
    suppression_db += f.suppression_db;
  }
  const double broadband_factor = std::pow(10.0, -suppression_db / 10.0);
  NoiseBudget out = budget;
  out.signal_transmission = budget.signal_transmission * transmission;
  for (auto& e : out.entries) {
    e.detected_cps *= transmission;
    if (e.character == SpectralCharacter::broadband)
      e.detected_cps *= broadband_factor;
  }
  return out;
}

double infer_on_chip(double detected_cps, double efficiency) {
  if (!(efficiency > 0.0))
    throw InvalidParameter("efficiency must be positive");
  return detected_cps / efficiency;
}

double pump_noise(std::span<const NoiseSource> pump1, std::span<const NoiseSource> pump2, double p1_w, double p2_w) {
  double total = 0.0;
  for (const auto& s : pump1)
    total += noise_rate(s, p1_w);
  for (const auto& s : pump2)
    total += noise_rate(s, p2_w);
  return total;
}

ImbalanceResult optimize_imbalance(std::span<const NoiseSource> pump1, std::span<const NoiseSource> pump2,
                                   double product_min_w2, double p1_max_w, double p2_max_w) {
  for (const auto& s : pump1)
    s.validate();
  for (const auto& s : pump2)
    s.validate();
  if (!(product_min_w2 >= 0.0) || !(p1_max_w >= 0.0) || !(p2_max_w >= 0.0))
    throw InvalidParameter("imbalance bounds must be nonnegative");
  if (p1_max_w * p2_max_w < product_min_w2)
    throw InvalidParameter("pump power product constraint is infeasible within the power bounds");
  auto objective = [&](double p1, double p2) { return pump_noise(pump1, pump2, p1, p2); };
  if (product_min_w2 == 0.0)
    return {0.0, 0.0, objective(0.0, 0.0)};

  // Noise is nondecreasing in each power, so the optimum sits on P1 P2 = P_min.
  const double lo = product_min_w2 / p2_max_w;
  const double hi = p1_max_w;
  auto point = [&](double p1) -> ImbalanceResult {
    if (p1 <= lo)
      return {lo, p2_max_w, objective(lo, p2_max_w)};
    if (p1 >= hi)
      return {hi, product_min_w2 / hi, objective(hi, product_min_w2 / hi)};
    return {p1, product_min_w2 / p1, objective(p1, product_min_w2 / p1)};
  };

  const double xlo = std::log(lo), xhi = std::log(hi);
  constexpr int grid = 2000;
  std::vector<ImbalanceResult> samples;
  samples.reserve(grid + 1);
  for (int k = 0; k <= grid; ++k)
    samples.push_back(k == 0 ? point(lo) : (k == grid ? point(hi) : point(std::exp(xlo + (xhi - xlo) * k / grid))));

  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    return a.noise_cps < b.noise_cps;
  });
  if (mx->noise_cps - mn->noise_cps <= 1e-12 * std::max(1.0, std::abs(mx->noise_cps)) || hi == lo) {
    const double balanced = std::clamp(std::sqrt(product_min_w2), lo, hi);
    return point(balanced);
  }

  const auto k = static_cast<int>(mn - samples.begin());
  if (k == 0 || k == grid)
    return *mn;
  double a = xlo + (xhi - xlo) * (k - 1) / grid;
  double b = xlo + (xhi - xlo) * (k + 1) / grid;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double x) { return point(std::exp(x)).noise_cps; };
  double c = b - phi * (b - a), e = a + phi * (b - a);
  double fc = f(c), fe = f(e);
  for (int it = 0; it < 100; ++it) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + phi * (b - a);
      fe = f(e);
    }
  }
  const auto refined = point(std::exp(0.5 * (a + b)));
  return refined.noise_cps <= mn->noise_cps ? refined : *mn;
}

} // namespace qfc::noise
