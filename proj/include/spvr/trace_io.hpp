// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "spvr/tile_geometry.hpp"

namespace spvr {

/// Raised when a trace file cannot be ingested. `row()` is the 1-based line
/// number of the offending row (0 when the problem is not tied to a row).
class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(const std::string& what, std::size_t row)
      : std::runtime_error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Number of τ-samples in one segment; T_seg must be an integer multiple of τ.
inline std::size_t samples_per_segment(double tau, double t_seg) {
  if (!(tau > 0.0) || !(t_seg > 0.0)) throw std::domain_error("tau and T_seg must be positive");
  const double ratio = t_seg / tau;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * std::max(1.0, r))
    throw std::domain_error("T_seg must be an integer multiple of tau");
  return static_cast<std::size_t>(r);
}

/// Head-movement trace sampled uniformly at τ and cut into L playback segments.
struct Trace {
  std::string user_id;
  std::string video_id;
  double tau = 0.1;
  double t_seg = 1.0;
  std::vector<Gaze> samples;

  std::size_t samples_per_segment() const { return spvr::samples_per_segment(tau, t_seg); }
  std::size_t segments() const { return samples.size() / samples_per_segment(); }
  double duration() const { return static_cast<double>(samples.size()) * tau; }

  /// Samples owned by 1-based segment l: [(l-1)·S, l·S).
  std::span<const Gaze> segment(std::size_t l) const {
    const auto s = samples_per_segment();
    if (l < 1 || l > segments()) throw std::out_of_range("segment index out of range");
    return std::span<const Gaze>(samples).subspan((l - 1) * s, s);
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses `timestamp_s,yaw_deg,pitch_deg` rows and resamples them onto a
/// uniform τ grid anchored at the first timestamp, picking the nearest sample.
inline Trace parse_trace_csv(std::istream& in, double tau, double t_seg, std::string user_id = {},
                             std::string video_id = {}) {
  const auto per_seg = samples_per_segment(tau, t_seg);
  std::vector<double> ts;
  std::vector<Gaze> raw;
  std::string line;
  std::size_t row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    std::string_view v = detail::trim(line);
    if (row == 1 && v.starts_with("\xEF\xBB\xBF")) v.remove_prefix(3);
    if (v.empty()) continue;
    if (!header_seen) {
      if (v != "timestamp_s,yaw_deg,pitch_deg")
        throw TraceFormatError("expected header 'timestamp_s,yaw_deg,pitch_deg'", row);
      header_seen = true;
      continue;
    }
    double f[3];
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
      const auto comma = v.find(',', start);
      const bool last = (k == 2);
      if (last != (comma == std::string_view::npos))
        throw TraceFormatError("expected 3 comma-separated fields", row);
      const auto field = v.substr(start, last ? std::string_view::npos : comma - start);
      if (!detail::parse_double(field, f[k]))
        throw TraceFormatError("malformed number '" + std::string(detail::trim(field)) + "'", row);
      start = comma + 1;
    }
    if (!ts.empty() && !(f[0] > ts.back())) throw TraceFormatError("timestamps must be strictly increasing", row);
    ts.push_back(f[0]);
    raw.push_back(Gaze::make(f[1], f[2]));
  }
  if (!header_seen) throw TraceFormatError("empty trace file", 0);
  if (ts.empty()) throw TraceFormatError("trace has no samples", 0);

  const double span = ts.back() - ts.front();
  const auto n = static_cast<std::size_t>(std::floor(span / tau + 1e-9)) + 1;
  Trace t{std::move(user_id), std::move(video_id), tau, t_seg, {}};
  t.samples.reserve(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = ts.front() + static_cast<double>(i) * tau;
    while (j + 1 < ts.size() && std::abs(ts[j + 1] - target) < std::abs(ts[j] - target)) ++j;
    t.samples.push_back(raw[j]);
  }
  if (t.samples.size() < 2 * per_seg)
    throw TraceFormatError("trace shorter than two segments", 0);
  return t;
}

/// Loads a trace file. User and video ids come from a `<user>_<video>.csv` file name.
inline Trace load_csv(const std::filesystem::path& path, double tau, double t_seg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  const std::string stem = path.stem().string();
  const auto us = stem.find('_');
  std::string user = us == std::string::npos ? stem : stem.substr(0, us);
  std::string video = us == std::string::npos ? std::string{} : stem.substr(us + 1);
  try {
    return parse_trace_csv(in, tau, t_seg, std::move(user), std::move(video));
  } catch (const TraceFormatError& e) {
    throw TraceFormatError(path.string() + ": " + e.what(), e.row());
  }
}

/// All `*.csv` traces in a directory, in lexicographic file-name order.
inline std::vector<Trace> load_trace_dir(const std::filesystem::path& dir, double tau, double t_seg) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Trace> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_csv(f, tau, t_seg));
  return out;
}

inline void write_csv(std::ostream& out, const Trace& trace) {
  out << "timestamp_s,yaw_deg,pitch_deg\n";
  char buf[64];
  auto put = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, p - buf);
  };
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    put(static_cast<double>(i) * trace.tau);
    out << ',';
    put(trace.samples[i].yaw);
    out << ',';
    put(trace.samples[i].pitch);
    out << '\n';
  }
}

/// Knobs for the synthetic head-movement generator.
struct SynthOptions {
  double yaw_speed_dps = 20.0;    ///< stationary std-dev of yaw angular velocity
  double pitch_speed_dps = 8.0;   ///< same for pitch
  double jitter_deg = 0.0;        ///< i.i.d. sensor noise added to reported positions
  Gaze start{0.0, 0.0};
  std::string user_id = "synth";
  std::string video_id = "0";
};

/// Seeded random walk on the sphere whose angular velocity is AR(1) with the
/// given momentum. Pitch reflects at the poles, yaw wraps.
inline Trace synth_trace(std::uint64_t seed, double duration, double tau, double t_seg, double momentum,
                         const SynthOptions& opt = {}) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::domain_error("momentum must lie in [0, 1)");
  const auto per_seg = samples_per_segment(tau, t_seg);
  const auto n = static_cast<std::size_t>(std::floor(duration / tau + 1e-9));
  if (n < 2 * per_seg) throw std::domain_error("synthetic trace must span at least two segments");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innov = std::sqrt(1.0 - momentum * momentum);
  double vy = opt.yaw_speed_dps * normal(rng);
  double vp = opt.pitch_speed_dps * normal(rng);
  double yaw = wrap_yaw(opt.start.yaw);
  double pitch = std::clamp(opt.start.pitch, -90.0, 90.0);

  Trace t{opt.user_id, opt.video_id, tau, t_seg, {}};
  t.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (opt.jitter_deg > 0.0) {
      const double jy = opt.jitter_deg * normal(rng);
      const double jp = opt.jitter_deg * normal(rng);
      t.samples.push_back(Gaze::make(yaw + jy, pitch + jp));
    } else {
      t.samples.push_back(Gaze{yaw, pitch});
    }
    vy = momentum * vy + innov * opt.yaw_speed_dps * normal(rng);
    vp = momentum * vp + innov * opt.pitch_speed_dps * normal(rng);
    yaw = wrap_yaw(yaw + vy * tau);
    pitch += vp * tau;
    if (pitch > 90.0) {
      pitch = 180.0 - pitch;
      vp = -vp;
    } else if (pitch < -90.0) {
      pitch = -180.0 - pitch;
      vp = -vp;
    }
  }
  return t;
}

/// Traces plus the seeded train/test partition parameters.
struct TraceSet {
  std::vector<Trace> traces;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
};

struct TraceSplit {
  std::vector<Trace> train;
  std::vector<Trace> test;
  std::map<std::string, std::size_t> train_counts;  ///< n_k per user id
};

inline TraceSplit split(const TraceSet& set) {
  const auto n = set.traces.size();
  if (n < 2) throw std::domain_error("split needs at least two traces");
  if (!(set.train_fraction > 0.0 && set.train_fraction < 1.0))
    throw std::domain_error("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(set.split_seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * set.train_fraction));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  TraceSplit out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& t = set.traces[order[k]];
    if (k < n_train) {
      out.train.push_back(t);
      ++out.train_counts[t.user_id];
    } else {
      out.test.push_back(t);
    }
  }
  return out;
}

}  // namespace spvr
