#include "qfc/kernels.hpp"

#include "qfc/error.hpp"

#include <cmath>
#include <limits>

namespace qfc::kernels {

namespace {

double eta_or_nan(const cmt::ConverterParams& params, const cmt::PumpPair& pumps, const cmt::Detunings& d) {
  try {
    return cmt::transfer_efficiency(params, pumps, d);
  } catch (const SingularSystem&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

photon::SourceConfig with_seed(photon::SourceConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}

} // namespace

int default_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

DetuningGrid detuning_grid(const cmt::ConverterParams& params, const cmt::Detunings& center,
                           double span_in_linewidths, std::size_t points) {
  if (points < 2)
    throw InvalidParameter("detuning grid needs at least 2 points per axis");
  DetuningGrid g;
  g.signal.resize(points);
  g.idler.resize(points);
  const double hc = span_in_linewidths * params.signal.loss / 2.0;
  const double hd = span_in_linewidths * params.idler.loss / 2.0;
  const auto last = static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = -1.0 + 2.0 * static_cast<double>(k) / last;
    g.signal[k] = center.signal + t * hc;
    g.idler[k] = center.idler + t * hd;
  }
  return g;
}

namespace serial {

std::vector<double> efficiency_map(const cmt::ConverterParams& params, const cmt::PumpPair& pumps,
                                   const DetuningGrid& grid) {
  const std::size_t nc = grid.signal.size(), nd = grid.idler.size();
  std::vector<double> out(nc * nd);
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t j = 0; j < nd; ++j)
      out[i * nd + j] = eta_or_nan(params, pumps, {grid.signal[i], grid.idler[j]});
  return out;
}

std::vector<cmt::ConversionResult> max_efficiency_batch(const cmt::ConverterParams& params,
                                                        std::span<const PowerPoint> powers) {
  std::vector<cmt::ConversionResult> out;
  out.reserve(powers.size());
  for (const auto& p : powers)
    out.push_back(cmt::max_efficiency(params, p.p1_w, p.p2_w));
  return out;
}

std::vector<photon::TimeTagStream> generate_batch(const photon::SourceConfig& cfg,
                                                  std::span<const std::uint64_t> seeds) {
  std::vector<photon::TimeTagStream> out;
  out.reserve(seeds.size());
  for (auto s : seeds)
    out.push_back(photon::generate_stream(with_seed(cfg, s)));
  return out;
}

} // namespace serial

std::vector<double> efficiency_map(const cmt::ConverterParams& params, const cmt::PumpPair& pumps,
                                   const DetuningGrid& grid, int jobs) {
  params.validate();
  const std::size_t nc = grid.signal.size(), nd = grid.idler.size();
  std::vector<double> out(nc * nd);
  for_each_index(nc, jobs, [&](std::size_t i) {
    for (std::size_t j = 0; j < nd; ++j)
      out[i * nd + j] = eta_or_nan(params, pumps, {grid.signal[i], grid.idler[j]});
  });
  return out;
}

std::vector<cmt::ConversionResult> max_efficiency_batch(const cmt::ConverterParams& params,
                                                        std::span<const PowerPoint> powers, int jobs) {
  params.validate();
  std::vector<cmt::ConversionResult> out(powers.size());
  for_each_index(powers.size(), jobs,
                 [&](std::size_t i) { out[i] = cmt::max_efficiency(params, powers[i].p1_w, powers[i].p2_w); });
  return out;
}

std::vector<photon::TimeTagStream> generate_batch(const photon::SourceConfig& cfg,
                                                  std::span<const std::uint64_t> seeds, int jobs) {
  cfg.validate();
  std::vector<photon::TimeTagStream> out(seeds.size());
  for_each_index(seeds.size(), jobs, [&](std::size_t i) { out[i] = photon::generate_stream(with_seed(cfg, seeds[i])); });
  return out;
}

} // namespace qfc::kernels
