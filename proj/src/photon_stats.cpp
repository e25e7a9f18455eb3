#include "qfc/photon_stats.hpp"

#include "qfc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <random>

namespace qfc::photon {

namespace {

// Draws are built from raw 64-bit engine output so a seed reproduces the same
// stream with any standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  double gaussian() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 == 0.0)
      u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(th);
    return r * std::cos(th);
  }

private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::int64_t to_ps(double seconds) { return std::llround(seconds * 1e12); }

void sort_events(std::vector<TimeTag>& ev) {
  std::sort(ev.begin(), ev.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
  });
}

void poisson_noise(Rng& rng, double rate, double duration, int channel, std::vector<TimeTag>& out) {
  if (rate <= 0.0)
    return;
  double t = rng.exponential(rate);
  while (t < duration) {
    out.push_back({channel, to_ps(t)});
    t += rng.exponential(rate);
  }
}

} // namespace

void SourceConfig::validate() const {
  auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(pair_rate_hz >= 0.0) || !(herald_noise_hz >= 0.0) || !(converted_noise_hz >= 0.0))
    throw InvalidParameter("photon source rates must be nonnegative");
  if (!fraction(herald_efficiency) || !fraction(converted_efficiency))
    throw InvalidParameter("photon arm efficiencies must lie in [0, 1]");
  if (!(herald_jitter_s >= 0.0) || !(converted_jitter_s >= 0.0))
    throw InvalidParameter("timing jitter must be nonnegative");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw InvalidParameter("acquisition duration must be positive");
  if (herald_channel == converted_channel || herald_channel < 0 || converted_channel < 0 ||
      herald_channel > max_channel || converted_channel > max_channel)
    throw InvalidParameter("herald and converted channels must be distinct ids in [0, 65535]");
}

std::vector<std::int64_t> TimeTagStream::channel_times(int channel) const {
  std::vector<std::int64_t> out;
  for (const auto& e : events)
    if (e.channel == channel)
      out.push_back(e.time_ps);
  return out;
}

std::size_t TimeTagStream::count(int channel) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [channel](const TimeTag& e) { return e.channel == channel; }));
}

TimeTagStream generate_stream(const SourceConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<TimeTag> ev;
  if (cfg.pair_rate_hz > 0.0) {
    double t = rng.exponential(cfg.pair_rate_hz);
    while (t < cfg.duration_s) {
      const std::int64_t emitted = to_ps(t);
      const bool herald = rng.uniform() < cfg.herald_efficiency;
      const bool partner = rng.uniform() < cfg.converted_efficiency;
      if (herald)
        ev.push_back({cfg.herald_channel, emitted + to_ps(cfg.herald_jitter_s * rng.gaussian())});
      if (partner)
        ev.push_back(
            {cfg.converted_channel, emitted + cfg.arm_delay_ps + to_ps(cfg.converted_jitter_s * rng.gaussian())});
      t += rng.exponential(cfg.pair_rate_hz);
    }
  }
  poisson_noise(rng, cfg.herald_noise_hz, cfg.duration_s, cfg.herald_channel, ev);
  poisson_noise(rng, cfg.converted_noise_hz, cfg.duration_s, cfg.converted_channel, ev);
  sort_events(ev);
  return {std::move(ev)};
}

std::string serialize_timetags(const TimeTagStream& stream) {
  std::string out(timetag_header);
  out += '\n';
  out.reserve(out.size() + stream.events.size() * 16);
  char buf[32];
  for (const auto& e : stream.events) {
    auto r = std::to_chars(buf, buf + sizeof buf, e.channel);
    out.append(buf, r.ptr);
    out += '\t';
    r = std::to_chars(buf, buf + sizeof buf, e.time_ps);
    out.append(buf, r.ptr);
    out += '\n';
  }
  return out;
}

TimeTagStream parse_timetags(std::string_view text, const std::vector<int>* allowed) {
  TimeTagStream stream;
  std::map<int, std::int64_t> last;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.empty())
      continue;
    if (!header) {
      if (line != timetag_header)
        throw ParseError(line_no, "missing '#timetags v1' header");
      header = true;
      continue;
    }
    if (line.front() == '#')
      continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(line_no, "expected 'channel<TAB>timestamp_ps'");
    const auto ch_text = line.substr(0, tab);
    const auto t_text = line.substr(tab + 1);

    int channel = 0;
    auto [cp, cec] = std::from_chars(ch_text.data(), ch_text.data() + ch_text.size(), channel);
    if (cec != std::errc() || cp != ch_text.data() + ch_text.size() || channel < 0 || channel > max_channel)
      throw ParseError(line_no, "bad channel '" + std::string(ch_text) + "'");
    if (allowed && std::find(allowed->begin(), allowed->end(), channel) == allowed->end())
      throw ParseError(line_no, "channel " + std::to_string(channel) + " not in the configured set");

    std::int64_t t = 0;
    auto [tp, tec] = std::from_chars(t_text.data(), t_text.data() + t_text.size(), t);
    if (tec == std::errc::result_out_of_range)
      throw ParseError(line_no, "timestamp overflows 64-bit picoseconds");
    if (tec != std::errc() || tp != t_text.data() + t_text.size())
      throw ParseError(line_no, "bad timestamp '" + std::string(t_text) + "'");

    auto [it, inserted] = last.try_emplace(channel, t);
    if (!inserted) {
      if (t < it->second)
        throw ParseError(line_no, "timestamp decreases on channel " + std::to_string(channel));
      it->second = t;
    }
    stream.events.push_back({channel, t});
  }
  if (!text.empty() && !header)
    throw ParseError(1, "missing '#timetags v1' header");
  std::stable_sort(stream.events.begin(), stream.events.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
  });
  return stream;
}

double DelayHistogram::bin_center_ps(std::size_t k) const {
  return static_cast<double>(range_lo_ps) + (static_cast<double>(k) + 0.5) * static_cast<double>(bin_ps);
}

std::uint64_t DelayHistogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts)
    s += c;
  return s;
}

DelayHistogram delay_histogram(const TimeTagStream& stream, int channel_a, int channel_b, std::int64_t bin_ps,
                               std::int64_t range_ps) {
  if (bin_ps <= 0)
    throw InvalidParameter("histogram bin width must be positive");
  if (range_ps <= 0 || 2 * range_ps < 3 * bin_ps)
    throw InvalidParameter("histogram range must span at least 3 bins");
  const auto a = stream.channel_times(channel_a);
  const auto b = stream.channel_times(channel_b);
  if (a.empty())
    throw InvalidParameter("unknown channel " + std::to_string(channel_a));
  if (b.empty())
    throw InvalidParameter("unknown channel " + std::to_string(channel_b));

  DelayHistogram h;
  h.bin_ps = bin_ps;
  const std::int64_t nbins = (2 * range_ps + bin_ps - 1) / bin_ps;
  h.range_lo_ps = -range_ps;
  h.range_hi_ps = -range_ps + nbins * bin_ps;
  h.counts.assign(static_cast<std::size_t>(nbins), 0);
  h.acquisition_s = static_cast<double>(stream.events.back().time_ps - stream.events.front().time_ps) * 1e-12;

  const bool same = channel_a == channel_b;
  std::size_t first = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t ta = a[i];
    while (first < b.size() && b[first] - ta <= h.range_lo_ps)
      ++first;
    for (std::size_t j = first; j < b.size(); ++j) {
      const std::int64_t d = b[j] - ta;
      if (d > h.range_hi_ps)
        break;
      if (same && i == j)
        continue;
      ++h.counts[static_cast<std::size_t>((d - h.range_lo_ps - 1) / bin_ps)];
    }
  }
  return h;
}

std::string histogram_csv(const DelayHistogram& hist) {
  std::string out = "delay_ps,counts\n";
  char buf[64];
  for (std::size_t k = 0; k < hist.bins(); ++k) {
    auto r = std::to_chars(buf, buf + sizeof buf, hist.bin_center_ps(k));
    out.append(buf, r.ptr);
    out += ',';
    r = std::to_chars(buf, buf + sizeof buf, hist.counts[k]);
    out.append(buf, r.ptr);
    out += '\n';
  }
  return out;
}

CoincidenceMetrics coincidence_metrics(const DelayHistogram& hist, double peak_center_ps, double peak_halfwidth_ps) {
  if (!(peak_halfwidth_ps > 0.0))
    throw InvalidParameter("peak window half-width must be positive");
  double peak = 0.0, off_sum = 0.0;
  std::size_t n_peak = 0, n_off = 0;
  for (std::size_t k = 0; k < hist.bins(); ++k) {
    const double dist = std::abs(hist.bin_center_ps(k) - peak_center_ps);
    const auto c = static_cast<double>(hist.counts[k]);
    if (dist <= peak_halfwidth_ps) {
      peak += c;
      ++n_peak;
    } else if (dist > 3.0 * peak_halfwidth_ps) {
      off_sum += c;
      ++n_off;
    }
  }
  if (n_peak == 0)
    throw InvalidParameter("peak window contains no histogram bins");
  if (n_off == 0)
    throw InvalidParameter("no off-peak bins beyond 3x the peak window; widen the histogram range");

  CoincidenceMetrics m;
  m.peak_counts = peak;
  m.accidentals_per_bin = off_sum / static_cast<double>(n_off);
  m.accidental_counts = m.accidentals_per_bin * static_cast<double>(n_peak);
  m.true_counts = peak - m.accidental_counts;
  if (hist.acquisition_s > 0.0) {
    m.true_rate_hz = m.true_counts / hist.acquisition_s;
    m.accidental_rate_hz = m.accidental_counts / hist.acquisition_s;
  }
  if (m.accidental_counts > 0.0)
    m.car = m.true_counts / m.accidental_counts;
  return m;
}

} // namespace qfc::photon
