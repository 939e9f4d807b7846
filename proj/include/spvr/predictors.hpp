// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spvr/tile_geometry.hpp"
#include "spvr/tile_set.hpp"

namespace spvr {

enum class PredictorKind { no_motion, linear_ar };

inline const char* to_string(PredictorKind k) { return k == PredictorKind::no_motion ? "no_motion" : "linear_ar"; }

inline PredictorKind parse_predictor_kind(std::string_view s) {
  if (s == "no_motion") return PredictorKind::no_motion;
  if (s == "linear_ar") return PredictorKind::linear_ar;
  throw std::invalid_argument("unknown predictor '" + std::string(s) + "'");
}

/// Observation window, gap before the predicted segment, and horizon, all in τ-samples.
struct PredictorConfig {
  PredictorKind kind = PredictorKind::no_motion;
  std::size_t window_samples = 1;
  std::size_t horizon_samples = 1;
  std::size_t gap_samples = 0;

  void validate() const {
    if (window_samples < 1) throw std::domain_error("window_samples must be >= 1");
    if (horizon_samples < 1) throw std::domain_error("horizon_samples must be >= 1");
  }
  std::size_t input_dim() const { return 1 + 2 * (window_samples - 1); }
  std::size_t output_dim() const { return 2 * horizon_samples; }

  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

/// Repeats the last observed gaze over the horizon.
inline std::vector<Gaze> predict_no_motion(std::span<const Gaze> window, std::size_t horizon_samples) {
  if (window.empty()) throw std::domain_error("no-motion prediction needs a non-empty window");
  return std::vector<Gaze>(horizon_samples, window.back());
}

/// Linear autoregressive gaze predictor.
///
/// Input features are a bias term followed by the W-1 successive (yaw, pitch)
/// deltas of the window, yaw deltas taken along the shortest arc. Outputs are
/// the (yaw, pitch) offsets of each horizon sample from the last window gaze.
struct LinearArModel {
  PredictorConfig shape;
  double ridge_lambda = 0.0;
  Eigen::MatrixXd weights;  ///< output_dim x input_dim

  static LinearArModel zeros(const PredictorConfig& cfg, double ridge_lambda = 0.0) {
    cfg.validate();
    if (!(ridge_lambda >= 0.0)) throw std::domain_error("ridge lambda must be non-negative");
    LinearArModel m{cfg, ridge_lambda, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.output_dim()),
                                                             static_cast<Eigen::Index>(cfg.input_dim()))};
    m.shape.kind = PredictorKind::linear_ar;
    return m;
  }

  friend bool operator==(const LinearArModel& a, const LinearArModel& b) {
    return a.shape == b.shape && a.ridge_lambda == b.ridge_lambda && a.weights.rows() == b.weights.rows() &&
           a.weights.cols() == b.weights.cols() && a.weights == b.weights;
  }
};

inline Eigen::VectorXd window_features(std::span<const Gaze> window) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(1 + 2 * (window.size() - 1)));
  x[0] = 1.0;
  for (std::size_t i = 1; i < window.size(); ++i) {
    x[static_cast<Eigen::Index>(2 * i - 1)] = yaw_delta(window[i - 1].yaw, window[i].yaw);
    x[static_cast<Eigen::Index>(2 * i)] = window[i].pitch - window[i - 1].pitch;
  }
  return x;
}

inline std::vector<Gaze> predict_linear(const LinearArModel& model, std::span<const Gaze> window) {
  if (window.size() != model.shape.window_samples)
    throw std::domain_error("window length does not match the model's window_samples");
  const Eigen::VectorXd y = model.weights * window_features(window);
  const Gaze& last = window.back();
  std::vector<Gaze> out;
  out.reserve(model.shape.horizon_samples);
  for (std::size_t j = 0; j < model.shape.horizon_samples; ++j)
    out.push_back(Gaze::make(last.yaw + y[static_cast<Eigen::Index>(2 * j)],
                             last.pitch + y[static_cast<Eigen::Index>(2 * j + 1)]));
  return out;
}

/// Per-segment and averaged degree of overlap between truth and prediction.
struct DooReport {
  std::vector<double> per_segment;
  double average = 0.0;
};

inline double overlap_ratio(const TileSet& truth, const TileSet& other) {
  const auto n = truth.count();
  if (n == 0) throw std::domain_error("ground-truth tile set is empty");
  return static_cast<double>(truth.intersection_count(other)) / static_cast<double>(n);
}

inline DooReport average_doo(std::span<const TileSet> truth, std::span<const TileSet> predicted) {
  if (truth.size() != predicted.size() || truth.empty())
    throw std::domain_error("average_doo needs equal, non-empty segment lists");
  DooReport r;
  r.per_segment.reserve(truth.size());
  double sum = 0.0;
  for (std::size_t l = 0; l < truth.size(); ++l) {
    r.per_segment.push_back(overlap_ratio(truth[l], predicted[l]));
    sum += r.per_segment.back();
  }
  r.average = sum / static_cast<double>(truth.size());
  return r;
}

// Model files: one header line `linear_ar <window> <horizon> <gap> <rows> <cols> <lambda>`
// followed by `rows` lines of row-major weights. Doubles are written in the
// shortest form that round-trips exactly.

namespace detail {
inline void put_double(std::ostream& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, p - buf);
}
}  // namespace detail

inline void save_model(std::ostream& out, const LinearArModel& m) {
  out << "linear_ar " << m.shape.window_samples << ' ' << m.shape.horizon_samples << ' ' << m.shape.gap_samples
      << ' ' << m.weights.rows() << ' ' << m.weights.cols() << ' ';
  detail::put_double(out, m.ridge_lambda);
  out << '\n';
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) {
      if (c) out << ' ';
      detail::put_double(out, m.weights(r, c));
    }
    out << '\n';
  }
}

inline LinearArModel load_model(std::istream& in) {
  std::string tag;
  std::size_t w = 0, h = 0, g = 0;
  Eigen::Index rows = 0, cols = 0;
  std::string lambda_s;
  if (!(in >> tag >> w >> h >> g >> rows >> cols >> lambda_s) || tag != "linear_ar")
    throw std::runtime_error("malformed model header");
  PredictorConfig cfg{PredictorKind::linear_ar, w, h, g};
  double lambda = 0;
  auto parse = [](const std::string& s, double& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  if (!parse(lambda_s, lambda)) throw std::runtime_error("malformed model lambda");
  LinearArModel m = LinearArModel::zeros(cfg, lambda);
  if (rows != m.weights.rows() || cols != m.weights.cols())
    throw std::runtime_error("model weight shape does not match its window/horizon");
  std::string tok;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(in >> tok) || !parse(tok, m.weights(r, c))) throw std::runtime_error("malformed model weight");
    }
  if (!m.weights.allFinite()) throw std::runtime_error("model contains non-finite weights");
  return m;
}

/// Either predictor behind one call.
struct Predictor {
  PredictorKind kind = PredictorKind::no_motion;
  const LinearArModel* model = nullptr;

  std::vector<Gaze> predict(std::span<const Gaze> window, std::size_t horizon_samples) const {
    if (kind == PredictorKind::no_motion) return predict_no_motion(window, horizon_samples);
    if (!model) throw std::domain_error("linear predictor has no model");
    if (model->shape.horizon_samples != horizon_samples)
      throw std::domain_error("model horizon does not match the segment length");
    return predict_linear(*model, window);
  }
};

}  // namespace spvr
