// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spvr/duration_opt.hpp"
#include "spvr/link_model.hpp"
#include "spvr/predictors.hpp"
#include "spvr/privacy_mask.hpp"
#include "spvr/tile_geometry.hpp"
#include "spvr/trace_io.hpp"
#include "spvr/training.hpp"

namespace spvr {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& msg)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + msg) {}
};

/// Flat `key = value` text with `[section]` headers; `#` starts a comment.
/// Keys are addressed as `section.key`.
class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line;
  };

  static KeyValueFile parse(std::istream& in, std::string source) {
    KeyValueFile f;
    f.source_ = std::move(source);
    std::string raw, section;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string_view v = raw;
      if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
      v = detail::trim(v);
      if (v.empty()) continue;
      if (v.front() == '[') {
        if (v.back() != ']' || v.size() < 3) throw ConfigError(f.source_, line, "malformed section header");
        section = std::string(detail::trim(v.substr(1, v.size() - 2)));
        continue;
      }
      const auto eq = v.find('=');
      if (eq == std::string_view::npos) throw ConfigError(f.source_, line, "expected key = value");
      const auto key = std::string(detail::trim(v.substr(0, eq)));
      if (key.empty()) throw ConfigError(f.source_, line, "empty key");
      const auto full = section.empty() ? key : section + "." + key;
      if (f.entries_.count(full)) throw ConfigError(f.source_, line, "duplicate key '" + full + "'");
      f.entries_[full] = Entry{std::string(detail::trim(v.substr(eq + 1))), line};
    }
    return f;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
    return parse(in, path.string());
  }

  const std::string& source() const { return source_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// Everything one experiment needs. Defaults are the Table-I style settings:
/// 10 x 20 tiles, 192 x 216 px tiles at 12 bit/px and 30 fps, 1 s segments,
/// compression 2.41, 50° FoV caps with N_fov = 33, C_com = 2.85 Gbps,
/// C_cpt = 2.2 Gbps, l0 = 3 and τ = 0.1 s.
struct ExperimentConfig {
  std::size_t grid_rows = 10;
  std::size_t grid_cols = 20;
  TileMediaSpec media;
  FovSpec fov;
  std::size_t l0 = 3;
  double tau = 0.1;

  double c_com = 2.85e9;
  double c_cpt = 2.2e9;
  std::optional<double> r_cc_star;

  PrivacyConfig privacy;

  RadioModel radio;
  std::size_t mc_samples = 100000;
  std::uint64_t mc_seed = 1;
  ComputeModel compute{2.2e9 * 4, 4, 1.0};

  FedConfig fed;
  std::uint64_t train_seed = 1;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 1;
  std::vector<PredictorKind> predictors{PredictorKind::no_motion};

  std::vector<double> rho_values{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> rcc_values{0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
  std::uint64_t sweep_seed = 1;
  unsigned workers = 1;

  TileGrid grid() const { return TileGrid(grid_rows, grid_cols); }
  StreamConfig stream() const { return StreamConfig{media.t_seg, l0, tau}; }

  /// Configured budget, rescaled to `r_cc_star` when that key is present.
  LinkBudget budget() const {
    const auto bits = tile_bits(media);
    LinkBudget b{c_com, c_cpt, bits.s_com, bits.s_cpt, grid_rows * grid_cols};
    return r_cc_star ? with_resources_rate(b, *r_cc_star) : b;
  }

  /// Predictor shape implied by the optimal plan at this config's sDoP.
  PredictorConfig predictor_shape(const DurationPlan& plan) const {
    const auto per_seg = samples_per_segment(tau, media.t_seg);
    const auto ps = (l0 - 1) * per_seg;
    return PredictorConfig{PredictorKind::linear_ar, plan.obw_samples, per_seg,
                           ps >= plan.obw_samples ? ps - plan.obw_samples : 0};
  }

  void validate() const {
    grid().tiles();
    fov.validate(grid());
    media.validate();
    stream().validate();
    samples_per_segment(tau, media.t_seg);
    privacy.validate();
    if (rho_values.empty() || rcc_values.empty() || predictors.empty())
      throw std::domain_error("sweep lists must be non-empty");
    for (double r : rho_values)
      if (!(r >= 0 && r <= 1)) throw std::domain_error("sweep sDoP values must lie in [0, 1]");
    for (double r : rcc_values)
      if (!(r > 0)) throw std::domain_error("sweep resources rates must be positive");
  }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const KeyValueFile& f) : f_(f) {}

  template <typename T>
  void get(const std::string& key, T& out) {
    const auto* e = f_.find(key);
    used_.insert(key);
    if (!e) return;
    try {
      out = convert<T>(e->value);
    } catch (const std::exception& ex) {
      throw ConfigError(f_.source(), e->line, "bad value for '" + key + "': " + ex.what());
    }
  }

  bool has(const std::string& key) const { return f_.find(key) != nullptr; }

  void reject_unknown() const {
    for (const auto& [k, e] : f_.entries())
      if (!used_.count(k)) throw ConfigError(f_.source(), e.line, "unknown key '" + k + "'");
  }

 private:
  template <typename T>
  static T convert(const std::string& s) {
    if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::optional<double>>) {
      double v;
      if (!parse_double(s, v)) throw std::invalid_argument("not a number");
      return v;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      std::vector<double> out;
      for (const auto& tok : split_list(s)) {
        double v;
        if (!parse_double(tok, v)) throw std::invalid_argument("not a number list");
        out.push_back(v);
      }
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<PredictorKind>>) {
      std::vector<PredictorKind> out;
      for (const auto& tok : split_list(s)) out.push_back(parse_predictor_kind(tok));
      return out;
    } else if constexpr (std::is_same_v<T, MaskScheme>) {
      return parse_mask_scheme(s);
    } else {
      static_assert(std::is_integral_v<T>);
      T v{};
      const auto t = trim(s);
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size()) throw std::invalid_argument("not a non-negative integer");
      return v;
    }
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto t = trim(tok);
      if (t.empty()) throw std::invalid_argument("empty list element");
      out.emplace_back(t);
    }
    return out;
  }

  const KeyValueFile& f_;
  std::set<std::string> used_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const KeyValueFile& f) {
  ExperimentConfig c;
  detail::ConfigReader r(f);
  r.get("grid.rows", c.grid_rows);
  r.get("grid.cols", c.grid_cols);
  r.get("media.px_w", c.media.px_w);
  r.get("media.px_h", c.media.px_h);
  r.get("media.bits_per_pixel", c.media.bits_per_pixel);
  r.get("media.frame_rate", c.media.frame_rate);
  r.get("media.t_seg", c.media.t_seg);
  r.get("media.compression", c.media.gamma_c);
  r.get("fov.radius_deg", c.fov.angular_radius);
  r.get("fov.n_fov", c.fov.n_fov);
  r.get("stream.l0", c.l0);
  r.get("stream.tau", c.tau);
  r.get("link.c_com_bps", c.c_com);
  r.get("link.c_cpt_bps", c.c_cpt);
  r.get("link.r_cc_star", c.r_cc_star);
  r.get("privacy.rho_s", c.privacy.rho_s);
  r.get("privacy.scheme", c.privacy.scheme);
  r.get("privacy.seed", c.privacy.seed);

  r.get("radio.bandwidth_hz", c.radio.bandwidth_hz);
  r.get("radio.power_w", c.radio.power_w);
  std::optional<double> dbm;
  r.get("radio.power_dbm", dbm);
  if (dbm) c.radio.power_w = dbm_to_watts(*dbm);
  r.get("radio.antennas", c.radio.n_t);
  r.get("radio.users", c.radio.users);
  r.get("radio.alpha", c.radio.alpha);
  r.get("radio.noise_w", c.radio.sigma2_w);
  std::optional<double> noise_dbm;
  r.get("radio.noise_dbm", noise_dbm);
  if (noise_dbm) c.radio.sigma2_w = dbm_to_watts(*noise_dbm);
  r.get("radio.distances_m", c.radio.distances_m);
  r.get("radio.distance_m", c.radio.default_distance_m);
  r.get("radio.slot_s", c.radio.delta_t_s);
  r.get("radio.mc_samples", c.mc_samples);
  r.get("radio.seed", c.mc_seed);
  r.get("compute.flops", c.compute.f_cpt);
  r.get("compute.users", c.compute.users);
  r.get("compute.flops_per_bit", c.compute.mu_r);

  r.get("train.local_epochs", c.fed.local_epochs);
  r.get("train.rounds", c.fed.rounds);
  r.get("train.learning_rate", c.fed.learning_rate);
  r.get("train.ridge_lambda", c.fed.ridge_lambda);
  r.get("train.seed", c.train_seed);
  r.get("train.fraction", c.train_fraction);
  r.get("train.split_seed", c.split_seed);

  r.get("sweep.rho_values", c.rho_values);
  r.get("sweep.rcc_values", c.rcc_values);
  r.get("sweep.predictors", c.predictors);
  r.get("sweep.seed", c.sweep_seed);
  r.get("sweep.workers", c.workers);
  r.reject_unknown();

  try {
    c.validate();
  } catch (const std::exception& e) {
    throw ConfigError(f.source(), 0, e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(KeyValueFile::load(path)); }

inline ExperimentConfig parse_config_string(const std::string& text, const std::string& source = "<string>") {
  std::istringstream in(text);
  return parse_config(KeyValueFile::parse(in, source));
}

}  // namespace spvr
