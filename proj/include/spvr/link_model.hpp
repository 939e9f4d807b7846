// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "spvr/detail/parallel.hpp"

namespace spvr {

/// Raw media parameters of one tile.
struct TileMediaSpec {
  double px_w = 192;
  double px_h = 216;
  double bits_per_pixel = 12;
  double frame_rate = 30;
  double t_seg = 1.0;
  double gamma_c = 2.41;

  void validate() const {
    if (!(px_w > 0 && px_h > 0 && bits_per_pixel > 0 && frame_rate > 0 && t_seg > 0))
      throw std::domain_error("media spec values must be positive");
    if (!(gamma_c >= 1.0)) throw std::domain_error("compression ratio must be >= 1");
  }
};

struct TileBits {
  double s_com;  ///< bits per tile to transmit
  double s_cpt;  ///< bits per tile to render
};

inline TileBits tile_bits(const TileMediaSpec& spec) {
  spec.validate();
  const double raw = spec.px_w * spec.px_h * spec.bits_per_pixel * spec.frame_rate * spec.t_seg;
  return TileBits{raw / spec.gamma_c, raw};
}

struct ComputeModel {
  double f_cpt = 0;  ///< FLOPs/s shared by all users
  std::size_t users = 1;
  double mu_r = 1;   ///< FLOPs per rendered bit
};

/// C_cpt = F_cpt / (K μ_r), bits/s.
inline double computing_rate(const ComputeModel& m) {
  if (!(m.f_cpt > 0 && m.mu_r > 0) || m.users == 0) throw std::domain_error("compute model values must be positive");
  return m.f_cpt / (static_cast<double>(m.users) * m.mu_r);
}

/// Downlink with zero-forcing beamforming from N_t antennas to K single-antenna users.
struct RadioModel {
  double bandwidth_hz = 150e6;
  double power_w = 0.25;
  std::size_t n_t = 8;
  std::size_t users = 4;
  double alpha = 2.0;
  double sigma2_w = 1e-13;
  std::vector<double> distances_m;  ///< one per user; empty means every user at `default_distance_m`
  double default_distance_m = 5.0;
  double delta_t_s = 1e-3;  ///< slot duration; unused once the ensemble average replaces the time average

  std::vector<double> distances() const {
    if (distances_m.empty()) return std::vector<double>(users, default_distance_m);
    return distances_m;
  }

  void validate() const {
    if (users == 0 || n_t < users) throw std::domain_error("zero-forcing needs N_t >= K >= 1");
    if (!(bandwidth_hz > 0 && power_w > 0 && alpha > 0 && sigma2_w > 0))
      throw std::domain_error("radio model values must be positive");
    const auto d = distances();
    if (d.size() != users) throw std::domain_error("one distance per user is required");
    for (double x : d)
      if (!(x > 0)) throw std::domain_error("distances must be positive");
  }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

/// Path-loss compensating power split: p_k = β d_k^α with β Σ_k d_k^α = P.
inline std::vector<double> zf_power_share(const RadioModel& model) {
  model.validate();
  const auto d = model.distances();
  double sum = 0;
  for (double x : d) sum += std::pow(x, model.alpha);
  const double beta = model.power_w / sum;
  std::vector<double> p;
  p.reserve(d.size());
  for (double x : d) p.push_back(beta * std::pow(x, model.alpha));
  return p;
}

/// Equivalent gains |h_k^H w_k|² for one channel draw, with w_k the unit-norm
/// columns of the pseudo-inverse. Returns false if the draw is (numerically) singular.
inline bool zf_equivalent_gains(const Eigen::MatrixXcd& h, Eigen::VectorXd& gains) {
  const Eigen::MatrixXcd gram = h * h.adjoint();
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Eigen::VectorXcd dvals = ldlt.vectorD();
  if (dvals.real().minCoeff() <= 1e-12 * dvals.real().maxCoeff()) return false;
  const Eigen::MatrixXcd w = h.adjoint() * ldlt.solve(Eigen::MatrixXcd::Identity(h.rows(), h.rows()));
  gains.resize(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    const Eigen::VectorXcd wk = w.col(k).normalized();
    gains[k] = std::norm((h.row(k) * wk).value());
  }
  return true;
}

struct EnsembleOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::size_t chunk = 1024;  ///< samples per RNG sub-stream; fixes the result independent of `workers`
};

namespace detail {

// Runs `per_sample(gains)` over all Monte Carlo draws; returns the sum in chunk order.
template <typename Fn>
double monte_carlo_sum(std::size_t n_t, std::size_t users, const EnsembleOptions& opt, Fn per_sample) {
  if (opt.samples == 0) throw std::domain_error("need at least one Monte Carlo sample");
  const std::size_t chunks = (opt.samples + opt.chunk - 1) / opt.chunk;
  std::vector<double> partial(chunks, 0.0);
  detail::parallel_for(chunks, opt.workers, [&](std::size_t c) {
    std::mt19937_64 rng(derive_seed(opt.seed, c));
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd h(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(n_t));
    Eigen::VectorXd g;
    const std::size_t begin = c * opt.chunk, end = std::min(opt.samples, begin + opt.chunk);
    double acc = 0;
    for (std::size_t s = begin; s < end; ++s) {
      int tries = 0;
      do {
        if (++tries > 100) throw std::runtime_error("channel draws kept coming out singular");
        for (Eigen::Index i = 0; i < h.rows(); ++i)
          for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = {normal(rng), normal(rng)};
      } while (!zf_equivalent_gains(h, g));
      acc += per_sample(g);
    }
    partial[c] = acc;
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

}  // namespace detail

/// Sample mean of the ZF equivalent gain, pooled over users.
inline double zf_mean_gain(std::size_t n_t, std::size_t users, const EnsembleOptions& opt) {
  if (users == 0 || n_t < users) throw std::domain_error("zero-forcing needs N_t >= K >= 1");
  const double sum = detail::monte_carlo_sum(n_t, users, opt, [](const Eigen::VectorXd& g) { return g.sum(); });
  return sum / static_cast<double>(opt.samples * users);
}

/// Monte Carlo estimate of the ensemble-average rate E_h{B log2(1 + p_k d_k^-α |h̃_k|²/σ²)}.
/// Path-loss compensation makes p_k d_k^-α = β for every user, so all users
/// share one rate; samples are pooled across users.
inline double ensemble_rate(const RadioModel& model, const EnsembleOptions& opt) {
  model.validate();
  const auto d = model.distances();
  const auto p = zf_power_share(model);
  std::vector<double> snr_scale(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) snr_scale[k] = p[k] * std::pow(d[k], -model.alpha) / model.sigma2_w;
  const double sum = detail::monte_carlo_sum(model.n_t, model.users, opt, [&](const Eigen::VectorXd& g) {
    double s = 0;
    for (Eigen::Index k = 0; k < g.size(); ++k) s += std::log2(1.0 + snr_scale[static_cast<std::size_t>(k)] * g[k]);
    return s;
  });
  return model.bandwidth_hz * sum / static_cast<double>(opt.samples * model.users);
}

/// Rates and tile sizes that the duration optimizer works with.
struct LinkBudget {
  double c_com = 0;  ///< bits/s
  double c_cpt = 0;  ///< bits/s
  double s_com = 0;  ///< bits per tile
  double s_cpt = 0;  ///< bits per tile
  std::size_t m = 0; ///< tiles per segment

  void validate() const {
    if (!(c_com > 0 && c_cpt > 0 && s_com > 0 && s_cpt > 0) || m == 0)
      throw std::domain_error("link budget values must be positive");
  }

  /// Same budget with both rates scaled by `factor`.
  LinkBudget scaled(double factor) const {
    LinkBudget b = *this;
    b.c_com *= factor;
    b.c_cpt *= factor;
    return b;
  }
};

/// R_cc* = 1 / (s_com M / C_com + s_cpt M / C_cpt).
inline double resources_rate(const LinkBudget& b) {
  b.validate();
  const double m = static_cast<double>(b.m);
  return 1.0 / (b.s_com * m / b.c_com + b.s_cpt * m / b.c_cpt);
}

/// Scales both rates proportionally so that resources_rate hits `target`.
inline LinkBudget with_resources_rate(const LinkBudget& b, double target) {
  if (!(target > 0)) throw std::domain_error("target resources rate must be positive");
  return b.scaled(target / resources_rate(b));
}

}  // namespace spvr
