#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial reference in
// qfc::kernels::serial computing bit-identical results; tests compare the two
// and bench/ times them.

#include "qfc/cmt.hpp"
#include "qfc/photon_stats.hpp"

#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qfc::kernels {

struct DetuningGrid {
  std::vector<double> signal; // Delta_C values
  std::vector<double> idler;  // Delta_D values
};

/// Evenly spaced grid of +-span_in_linewidths * alpha/2 about a centre.
DetuningGrid detuning_grid(const cmt::ConverterParams& params, const cmt::Detunings& center,
                           double span_in_linewidths, std::size_t points);

struct PowerPoint {
  double p1_w = 0.0;
  double p2_w = 0.0;
};

/// Number of worker threads used when `jobs` <= 0.
int default_jobs();

/// Runs f(i) for i in [0, n) on up to `jobs` threads. f must only write to
/// slot i of its output. The first exception thrown by any f(i) is rethrown
/// after the loop.
template <class F> void for_each_index(std::size_t n, int jobs, F&& f) {
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : default_jobs();
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(qfc_for_each_index)
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
#else
  (void)jobs;
  for (std::size_t i = 0; i < n; ++i)
    f(i);
#endif
}

namespace serial {

/// Row-major eta over grid.signal x grid.idler; NaN where the system is singular.
std::vector<double> efficiency_map(const cmt::ConverterParams& params, const cmt::PumpPair& pumps,
                                   const DetuningGrid& grid);

std::vector<cmt::ConversionResult> max_efficiency_batch(const cmt::ConverterParams& params,
                                                        std::span<const PowerPoint> powers);

std::vector<photon::TimeTagStream> generate_batch(const photon::SourceConfig& cfg,
                                                  std::span<const std::uint64_t> seeds);

} // namespace serial

std::vector<double> efficiency_map(const cmt::ConverterParams& params, const cmt::PumpPair& pumps,
                                   const DetuningGrid& grid, int jobs = 0);

std::vector<cmt::ConversionResult> max_efficiency_batch(const cmt::ConverterParams& params,
                                                        std::span<const PowerPoint> powers, int jobs = 0);

std::vector<photon::TimeTagStream> generate_batch(const photon::SourceConfig& cfg,
                                                  std::span<const std::uint64_t> seeds, int jobs = 0);

} // namespace qfc::kernels
