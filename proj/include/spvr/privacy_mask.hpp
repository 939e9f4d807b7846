// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spvr/tile_geometry.hpp"
#include "spvr/tile_set.hpp"

namespace spvr {

enum class MaskScheme { rect_dilation, uniform_random };

inline const char* to_string(MaskScheme s) {
  return s == MaskScheme::rect_dilation ? "rect_dilation" : "uniform_random";
}

inline MaskScheme parse_mask_scheme(std::string_view s) {
  if (s == "rect_dilation") return MaskScheme::rect_dilation;
  if (s == "uniform_random") return MaskScheme::uniform_random;
  throw std::invalid_argument("unknown masking scheme '" + std::string(s) + "'");
}

struct PrivacyConfig {
  double rho_s = 0.0;
  MaskScheme scheme = MaskScheme::rect_dilation;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(rho_s >= 0.0 && rho_s <= 1.0)) throw std::domain_error("sDoP must lie in [0, 1]");
  }
};

/// The uploaded request: real or predicted tiles plus camouflage.
struct PrivacyRequest {
  TileSet tiles;
  std::size_t n_p = 0;
};

/// N_p = N_fov + ρ_s (M − N_fov), rounded half up.
inline std::size_t n_privacy_tiles(double rho_s, std::size_t m, std::size_t n_fov) {
  if (!(rho_s >= 0.0 && rho_s <= 1.0)) throw std::domain_error("sDoP must lie in [0, 1]");
  if (n_fov > m) throw std::domain_error("n_fov cannot exceed M");
  const double exact = static_cast<double>(n_fov) + rho_s * static_cast<double>(m - n_fov);
  const auto n = static_cast<std::size_t>(std::floor(exact + 0.5));
  return std::clamp(n, n_fov, m);
}

/// ρ_s = (N_p − N_fov) / (M − N_fov).
inline double sdop_of(std::size_t n_p, std::size_t m, std::size_t n_fov) {
  if (n_fov >= m) throw std::domain_error("sDoP is undefined when n_fov >= M");
  if (n_p < n_fov) throw std::domain_error("privacy violated: fewer requested tiles than one FoV");
  if (n_p > m) throw std::domain_error("cannot request more than M tiles");
  return static_cast<double>(n_p - n_fov) / static_cast<double>(m - n_fov);
}

namespace detail {

// Columns are kept as a wrapped interval [col0, col0 + width) mod cols.
struct WrappedRect {
  std::size_t row0, rows, col0, width;
};

// Smallest wrapped column interval covering the occupied columns; the tie
// goes to the smaller starting column.
inline std::pair<std::size_t, std::size_t> minimal_column_span(const std::vector<bool>& used) {
  const std::size_t cols = used.size();
  std::size_t best_start = 0, best_width = cols;
  for (std::size_t s = 0; s < cols; ++s) {
    if (!used[s]) continue;
    const std::size_t prev = (s + cols - 1) % cols;
    if (used[prev] && cols > 1) continue;  // not the start of a run
    // Interval starting at s ends at the last occupied column before the gap that precedes s.
    std::size_t end = prev;
    while (!used[end]) end = (end + cols - 1) % cols;
    const std::size_t width = (end + cols - s) % cols + 1;
    if (width < best_width || (width == best_width && s < best_start)) {
      best_width = width;
      best_start = s;
    }
  }
  return {best_start, best_width};
}

}  // namespace detail

/// Grows the wrapped bounding rectangle of `request` one line at a time
/// (right, bottom, left, top; clamped at the poles, wrapping in yaw) until it
/// holds at least n_p tiles, then trims the surplus from the end of the last
/// added line.
inline PrivacyRequest mask_rect_dilation(const TileGrid& grid, const TileSet& request, std::size_t n_p) {
  const std::size_t m = grid.tiles();
  if (request.size() != m) throw std::invalid_argument("request set does not match the grid");
  if (n_p > m) throw std::domain_error("n_p cannot exceed M");
  const auto req = request.indices();
  if (req.empty()) throw std::domain_error("request set is empty");
  if (n_p < req.size()) throw std::domain_error("n_p is smaller than the request set");

  const std::size_t rows = grid.rows(), cols = grid.cols();
  std::vector<bool> used_cols(cols, false);
  std::size_t r_min = rows, r_max = 0;
  for (auto i : req) {
    used_cols[grid.col_of(i)] = true;
    r_min = std::min(r_min, grid.row_of(i));
    r_max = std::max(r_max, grid.row_of(i));
  }
  const auto [c0, width] = detail::minimal_column_span(used_cols);
  detail::WrappedRect rect{r_min, r_max - r_min + 1, c0, width};

  auto rect_tiles = [&](const detail::WrappedRect& r) {
    std::vector<std::size_t> out;
    for (std::size_t dr = 0; dr < r.rows; ++dr)
      for (std::size_t dc = 0; dc < r.width; ++dc) out.push_back(grid.index(r.row0 + dr, (r.col0 + dc) % cols));
    return out;
  };

  TileSet out = request;
  const std::size_t area0 = rect.rows * rect.width;
  if (area0 >= n_p) {
    // Scattered request: fill from the bounding box in local row-major order.
    for (auto i : rect_tiles(rect)) {
      if (out.count() >= n_p) break;
      out.insert(i);
    }
    return PrivacyRequest{std::move(out), n_p};
  }

  std::vector<std::size_t> last_line;
  int side = 0;  // 0 right, 1 bottom, 2 left, 3 top
  while (rect.rows * rect.width < n_p) {
    last_line.clear();
    switch (side) {
      case 0:
        if (rect.width < cols) {
          const std::size_t c = (rect.col0 + rect.width) % cols;
          for (std::size_t dr = 0; dr < rect.rows; ++dr) last_line.push_back(grid.index(rect.row0 + dr, c));
          ++rect.width;
        }
        break;
      case 1:
        if (rect.row0 + rect.rows < rows) {
          const std::size_t r = rect.row0 + rect.rows;
          for (std::size_t dc = 0; dc < rect.width; ++dc) last_line.push_back(grid.index(r, (rect.col0 + dc) % cols));
          ++rect.rows;
        }
        break;
      case 2:
        if (rect.width < cols) {
          rect.col0 = (rect.col0 + cols - 1) % cols;
          for (std::size_t dr = 0; dr < rect.rows; ++dr) last_line.push_back(grid.index(rect.row0 + dr, rect.col0));
          ++rect.width;
        }
        break;
      default:
        if (rect.row0 > 0) {
          --rect.row0;
          for (std::size_t dc = 0; dc < rect.width; ++dc)
            last_line.push_back(grid.index(rect.row0, (rect.col0 + dc) % cols));
          ++rect.rows;
        }
        break;
    }
    side = (side + 1) % 4;
  }

  for (auto i : rect_tiles(rect)) out.insert(i);
  // Lines never contain request tiles, and the surplus is shorter than the last line.
  std::size_t surplus = rect.rows * rect.width - n_p;
  for (auto it = last_line.rbegin(); surplus > 0 && it != last_line.rend(); ++it, --surplus) out.erase(*it);
  return PrivacyRequest{std::move(out), n_p};
}

/// Adds n_p − |request| camouflage tiles drawn uniformly without replacement.
inline PrivacyRequest mask_uniform_random(const TileGrid& grid, const TileSet& request, std::size_t n_p,
                                          std::uint64_t seed) {
  const std::size_t m = grid.tiles();
  if (request.size() != m) throw std::invalid_argument("request set does not match the grid");
  if (n_p > m) throw std::domain_error("n_p cannot exceed M");
  const std::size_t have = request.count();
  if (n_p < have) throw std::domain_error("n_p is smaller than the request set");

  const auto pool = request.complement().indices();
  std::vector<std::size_t> picked;
  picked.reserve(n_p - have);
  std::mt19937_64 rng(seed);
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), n_p - have, rng);
  TileSet out = request;
  for (auto i : picked) out.insert(i);
  return PrivacyRequest{std::move(out), n_p};
}

inline PrivacyRequest apply_mask(const TileGrid& grid, const TileSet& request, std::size_t n_p, MaskScheme scheme,
                                 std::uint64_t seed) {
  return scheme == MaskScheme::rect_dilation ? mask_rect_dilation(grid, request, n_p)
                                             : mask_uniform_random(grid, request, n_p, seed);
}

}  // namespace spvr
