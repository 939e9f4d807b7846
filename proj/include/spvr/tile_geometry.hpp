// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "spvr/tile_set.hpp"

namespace spvr {

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees into [-180, 180).
inline double wrap_yaw(double yaw) {
  double w = std::fmod(yaw + 180.0, 360.0);
  if (w < 0) w += 360.0;
  w -= 180.0;
  return w >= 180.0 ? w - 360.0 : w;
}

/// Shortest signed angular difference `to - from`, in [-180, 180).
inline double yaw_delta(double from, double to) { return wrap_yaw(to - from); }

/// Head orientation in degrees. Yaw wraps into [-180, 180), pitch clamps to [-90, 90].
struct Gaze {
  double yaw = 0.0;
  double pitch = 0.0;

  static Gaze make(double yaw, double pitch) {
    return Gaze{wrap_yaw(yaw), std::clamp(pitch, -90.0, 90.0)};
  }
  friend bool operator==(const Gaze&, const Gaze&) = default;
};

/// Central angle between two directions on the unit sphere, in degrees.
inline double great_circle_deg(const Gaze& a, const Gaze& b) {
  const double p1 = deg2rad(a.pitch), p2 = deg2rad(b.pitch);
  const double dl = deg2rad(yaw_delta(a.yaw, b.yaw));
  const double x = std::cos(p2) * std::sin(dl);
  const double y = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  const double z = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return rad2deg(std::atan2(std::hypot(x, y), z));
}

/// Equirectangular tile grid; tiles are numbered row-major from the top-left.
class TileGrid {
 public:
  TileGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) throw std::domain_error("tile grid needs at least one row and column");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t tiles() const noexcept { return rows_ * cols_; }

  std::size_t index(std::size_t row, std::size_t col) const { return row * cols_ + col; }
  std::size_t row_of(std::size_t index) const { return index / cols_; }
  std::size_t col_of(std::size_t index) const { return index % cols_; }

  TileSet empty_set() const { return TileSet(tiles()); }

  friend bool operator==(const TileGrid&, const TileGrid&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
};

/// Circular field of view: a spherical cap, plus the configured request size N_fov.
struct FovSpec {
  double angular_radius = 50.0;
  std::size_t n_fov = 33;

  void validate(const TileGrid& grid) const {
    if (!(angular_radius > 0.0 && angular_radius <= 90.0))
      throw std::domain_error("FoV angular radius must lie in (0, 90] degrees");
    if (n_fov < 1 || n_fov > grid.tiles()) throw std::domain_error("n_fov must lie in [1, M]");
  }
};

inline Gaze tile_center(const TileGrid& grid, std::size_t index) {
  if (index >= grid.tiles()) throw std::domain_error("tile index out of range");
  const double col = static_cast<double>(grid.col_of(index));
  const double row = static_cast<double>(grid.row_of(index));
  return Gaze{-180.0 + (col + 0.5) * 360.0 / static_cast<double>(grid.cols()),
              90.0 - (row + 0.5) * 180.0 / static_cast<double>(grid.rows())};
}

namespace detail {

struct Unit3 {
  double x, y, z;
};

inline Unit3 unit_vector(const Gaze& g) {
  const double p = deg2rad(g.pitch), y = deg2rad(g.yaw);
  return {std::cos(p) * std::cos(y), std::cos(p) * std::sin(y), std::sin(p)};
}

// Tile-centre unit vectors, cached per thread for the last grid seen.
inline const std::vector<Unit3>& tile_center_vectors(const TileGrid& grid) {
  thread_local std::size_t rows = 0, cols = 0;
  thread_local std::vector<Unit3> cache;
  if (rows != grid.rows() || cols != grid.cols()) {
    cache.clear();
    for (std::size_t i = 0; i < grid.tiles(); ++i) cache.push_back(unit_vector(tile_center(grid, i)));
    rows = grid.rows();
    cols = grid.cols();
  }
  return cache;
}

}  // namespace detail

/// Tiles whose centre lies inside the FoV cap around `gaze`.
inline TileSet fov_tiles(const TileGrid& grid, const Gaze& gaze, const FovSpec& fov) {
  TileSet out = grid.empty_set();
  const auto g = detail::unit_vector(Gaze::make(gaze.yaw, gaze.pitch));
  const double cos_r = std::cos(deg2rad(fov.angular_radius));
  const auto& centers = detail::tile_center_vectors(grid);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const auto& c = centers[i];
    if (g.x * c.x + g.y * c.y + g.z * c.z >= cos_r - 1e-12) out.insert(i);
  }
  return out;
}

/// The n_fov tiles most often covered by the FoV over `gazes`; ties go to the
/// lower tile index. Always returns exactly n_fov tiles.
inline TileSet top_n_by_dwell(const TileGrid& grid, std::span<const Gaze> gazes, const FovSpec& fov) {
  if (gazes.empty()) throw std::domain_error("top_n_by_dwell needs at least one gaze sample");
  fov.validate(grid);
  std::vector<std::size_t> dwell(grid.tiles(), 0);
  for (const auto& g : gazes)
    for (auto i : fov_tiles(grid, g, fov).indices()) ++dwell[i];

  std::vector<std::size_t> order(grid.tiles());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dwell[a] > dwell[b]; });

  TileSet out = grid.empty_set();
  for (std::size_t k = 0; k < fov.n_fov; ++k) out.insert(order[k]);
  return out;
}

}  // namespace spvr
