// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spvr/detail/parallel.hpp"
#include "spvr/predictors.hpp"
#include "spvr/trace_io.hpp"

namespace spvr {

/// Sliding (window, gap, horizon) training examples, one row per example.
struct ExampleSet {
  Eigen::MatrixXd inputs;   ///< n x input_dim
  Eigen::MatrixXd targets;  ///< n x output_dim
  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

inline std::size_t examples_in(const Trace& t, const PredictorConfig& cfg) {
  const auto need = cfg.window_samples + cfg.gap_samples + cfg.horizon_samples;
  return t.samples.size() >= need ? t.samples.size() - need + 1 : 0;
}

inline ExampleSet build_examples(std::span<const Trace> traces, const PredictorConfig& cfg) {
  cfg.validate();
  std::size_t n = 0;
  for (const auto& t : traces) n += examples_in(t, cfg);
  ExampleSet ex{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.input_dim())),
                Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.output_dim()))};
  Eigen::Index row = 0;
  for (const auto& t : traces) {
    const auto count = examples_in(t, cfg);
    const std::span<const Gaze> s(t.samples);
    for (std::size_t start = 0; start < count; ++start, ++row) {
      ex.inputs.row(row) = window_features(s.subspan(start, cfg.window_samples)).transpose();
      // Offsets accumulate shortest-arc steps so the yaw target never jumps at the seam.
      const std::size_t last = start + cfg.window_samples - 1;
      double oy = 0.0;
      std::size_t at = last;
      for (std::size_t j = 0; j < cfg.horizon_samples; ++j) {
        const std::size_t target = last + cfg.gap_samples + 1 + j;
        for (; at < target; ++at) oy += yaw_delta(s[at].yaw, s[at + 1].yaw);
        ex.targets(row, static_cast<Eigen::Index>(2 * j)) = oy;
        ex.targets(row, static_cast<Eigen::Index>(2 * j + 1)) = s[target].pitch - s[last].pitch;
      }
    }
  }
  return ex;
}

/// Sufficient statistics of the squared loss; full-batch gradient steps only need these.
struct Moments {
  Eigen::MatrixXd xtx;  ///< in x in
  Eigen::MatrixXd xty;  ///< in x out
  double yty = 0.0;
  std::size_t n = 0;
};

inline Moments moments_of(const ExampleSet& ex) {
  return Moments{ex.inputs.transpose() * ex.inputs, ex.inputs.transpose() * ex.targets,
                 ex.targets.squaredNorm(), ex.size()};
}

/// L(W) = 1/(2n) Σ_i ||W x_i - y_i||² + λ/2 ||W||²
inline double loss(const Eigen::MatrixXd& w, const Moments& m, double lambda) {
  const double n = static_cast<double>(m.n);
  const double fit = (w * m.xtx * w.transpose()).trace() - 2.0 * (w * m.xty).trace() + m.yty;
  return 0.5 * fit / n + 0.5 * lambda * w.squaredNorm();
}

inline Eigen::MatrixXd gradient(const Eigen::MatrixXd& w, const Moments& m, double lambda) {
  return (w * m.xtx - m.xty.transpose()) / static_cast<double>(m.n) + lambda * w;
}

struct LocalTrainStats {
  std::size_t epochs = 0;
  std::vector<std::size_t> passes_per_trace;
};

/// Full-batch gradient descent from `model` for `epochs` passes over all
/// sliding examples of `traces`.
inline LinearArModel train_local(LinearArModel model, const Moments& m, std::size_t epochs, double lr) {
  if (m.n == 0) throw std::domain_error("no training examples fit the window/gap/horizon");
  if (!(lr >= 0.0)) throw std::domain_error("learning rate must be non-negative");
  for (std::size_t e = 0; e < epochs; ++e) model.weights -= lr * gradient(model.weights, m, model.ridge_lambda);
  if (!model.weights.allFinite()) throw std::runtime_error("training diverged; lower the learning rate");
  return model;
}

inline LinearArModel train_local(LinearArModel model, std::span<const Trace> traces, std::size_t epochs, double lr,
                                 LocalTrainStats* stats = nullptr) {
  const Moments m = moments_of(build_examples(traces, model.shape));
  if (stats) {
    stats->epochs += epochs;
    stats->passes_per_trace.resize(traces.size(), 0);
    for (auto& p : stats->passes_per_trace) p += epochs;
  }
  return train_local(std::move(model), m, epochs, lr);
}

/// Seeded starting point for federated training.
inline LinearArModel initial_model(const PredictorConfig& cfg, double ridge_lambda, std::uint64_t seed,
                                   double init_scale = 1e-4) {
  LinearArModel m = LinearArModel::zeros(cfg, ridge_lambda);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_scale);
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) m.weights(r, c) = normal(rng);
  return m;
}

/// FederatedAveraging settings. Empty `client_weights` means c_k = n_k / N_train.
struct FedConfig {
  std::size_t local_epochs = 50;
  std::size_t rounds = 10;
  std::vector<double> client_weights;
  double learning_rate = 1e-3;
  double ridge_lambda = 1e-3;
  unsigned workers = 1;
};

struct FedResult {
  LinearArModel model;
  std::vector<double> round_loss;  ///< c_k-weighted training loss of the global model after each round
  std::vector<std::vector<std::size_t>> passes_per_trace;  ///< [client][trace]
};

inline std::vector<double> client_weights_by_count(std::span<const std::vector<Trace>> clients) {
  double total = 0;
  for (const auto& c : clients) total += static_cast<double>(c.size());
  std::vector<double> w;
  w.reserve(clients.size());
  for (const auto& c : clients) w.push_back(static_cast<double>(c.size()) / total);
  return w;
}

/// Groups traces by user id (one client per user, ordered by id).
inline std::vector<std::vector<Trace>> clients_by_user(std::span<const Trace> traces) {
  std::map<std::string, std::vector<Trace>> by_user;
  for (const auto& t : traces) by_user[t.user_id].push_back(t);
  std::vector<std::vector<Trace>> out;
  out.reserve(by_user.size());
  for (auto& [id, ts] : by_user) out.push_back(std::move(ts));
  return out;
}

inline FedResult federated_average(std::span<const std::vector<Trace>> clients, const FedConfig& fed,
                                   const PredictorConfig& cfg, std::uint64_t seed) {
  if (clients.empty()) throw std::domain_error("federated training needs at least one client");
  for (const auto& c : clients)
    if (c.empty()) throw std::domain_error("every client needs at least one training trace");
  const std::vector<double> c_k = fed.client_weights.empty() ? client_weights_by_count(clients) : fed.client_weights;
  if (c_k.size() != clients.size()) throw std::domain_error("one weight per client is required");
  double sum = 0;
  for (double c : c_k) {
    if (!(c >= 0.0)) throw std::domain_error("client weights must be non-negative");
    sum += c;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::domain_error("client weights must sum to 1");

  std::vector<Moments> moments(clients.size());
  detail::parallel_for(clients.size(), fed.workers, [&](std::size_t k) {
    moments[k] = moments_of(build_examples(clients[k], cfg));
    if (moments[k].n == 0) throw std::domain_error("a client has no examples for this window/gap/horizon");
  });

  FedResult res{initial_model(cfg, fed.ridge_lambda, seed), {}, {}};
  for (const auto& c : clients) res.passes_per_trace.emplace_back(c.size(), 0);

  std::vector<LinearArModel> local(clients.size());
  for (std::size_t r = 0; r < fed.rounds; ++r) {
    detail::parallel_for(clients.size(), fed.workers, [&](std::size_t k) {
      local[k] = train_local(res.model, moments[k], fed.local_epochs, fed.learning_rate);
    });
    // Averaging relative to the first client keeps identical client models bit-exact.
    Eigen::MatrixXd avg = local[0].weights;
    for (std::size_t k = 1; k < clients.size(); ++k) avg += c_k[k] * (local[k].weights - local[0].weights);
    res.model.weights = std::move(avg);
    for (auto& p : res.passes_per_trace)
      for (auto& v : p) v += fed.local_epochs;

    double l = 0;
    for (std::size_t k = 0; k < clients.size(); ++k) l += c_k[k] * loss(res.model.weights, moments[k], fed.ridge_lambda);
    res.round_loss.push_back(l);
  }
  return res;
}

}  // namespace spvr
