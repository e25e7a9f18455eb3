#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::photon {

// Heralded-pair source feeding two detectors: the herald arm and the arm that
// carries the partner photon (through the converter, or directly for a
// pre-conversion reference run).
struct SourceConfig {
  double pair_rate_hz = 0.0;
  double herald_efficiency = 1.0;
  double converted_efficiency = 1.0;
  double herald_noise_hz = 0.0;
  double converted_noise_hz = 0.0;
  double herald_jitter_s = 100e-12;
  double converted_jitter_s = 100e-12;
  std::int64_t arm_delay_ps = 0;
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  int herald_channel = 1;
  int converted_channel = 2;

  void validate() const;
};

struct TimeTag {
  int channel = 0;
  std::int64_t time_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

// Events ordered by (time, channel); per-channel timestamps are nondecreasing.
struct TimeTagStream {
  std::vector<TimeTag> events;

  std::vector<std::int64_t> channel_times(int channel) const;
  std::size_t count(int channel) const;
  friend bool operator==(const TimeTagStream&, const TimeTagStream&) = default;
};

TimeTagStream generate_stream(const SourceConfig& cfg);

inline constexpr std::string_view timetag_header = "#timetags v1";
inline constexpr int max_channel = 65535;

std::string serialize_timetags(const TimeTagStream& stream);

/// Parses the text time-tag format. Channels must be integers in
/// [0, max_channel]; when `allowed` is given they must also belong to it.
TimeTagStream parse_timetags(std::string_view text, const std::vector<int>* allowed = nullptr);

struct DelayHistogram {
  std::int64_t bin_ps = 0;
  std::int64_t range_lo_ps = 0;  // delays in (lo, hi] are binned
  std::int64_t range_hi_ps = 0;
  std::vector<std::uint64_t> counts;
  double acquisition_s = 0.0;

  std::size_t bins() const { return counts.size(); }
  double bin_center_ps(std::size_t k) const;
  std::uint64_t total() const;
};

/// Histogram of delays t_b - t_a over (-range_ps, range_ps]. Bins are
/// half-open (e_k, e_{k+1}], so a delay on an edge goes to the lower bin.
DelayHistogram delay_histogram(const TimeTagStream& stream, int channel_a, int channel_b, std::int64_t bin_ps,
                               std::int64_t range_ps);

std::string histogram_csv(const DelayHistogram& hist);

struct CoincidenceMetrics {
  double peak_counts = 0.0;
  double accidentals_per_bin = 0.0;
  double accidental_counts = 0.0; // expected accidentals inside the peak window
  double true_counts = 0.0;
  double true_rate_hz = 0.0;
  double accidental_rate_hz = 0.0;
  std::optional<double> car; // empty (infinite CAR) when the accidental estimate is zero
};

/// Peak bins are those whose centres lie within peak_center +- halfwidth;
/// accidentals are the mean of bins centred further than 3 halfwidths away.
CoincidenceMetrics coincidence_metrics(const DelayHistogram& hist, double peak_center_ps, double peak_halfwidth_ps);

} // namespace qfc::photon
