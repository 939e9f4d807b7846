// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

#include "spvr/predictors.hpp"
#include "spvr/training.hpp"
#include "support.hpp"

using namespace spvr;

namespace {

// Straight-line motion at a constant angular velocity, no wrap in pitch.
Trace constant_velocity(double vy, double vp, double yaw0, std::size_t n, const std::string& user = "c") {
  Trace t{user, "0", 0.1, 1.0, {}};
  for (std::size_t i = 0; i < n; ++i)
    t.samples.push_back(Gaze::make(yaw0 + vy * 0.1 * static_cast<double>(i), vp * 0.1 * static_cast<double>(i)));
  return t;
}

// Loss summed row by row from the raw examples.
double direct_loss(const Eigen::MatrixXd& w, const ExampleSet& ex, double lambda) {
  double s = 0;
  for (Eigen::Index i = 0; i < ex.inputs.rows(); ++i)
    s += (w * ex.inputs.row(i).transpose() - ex.targets.row(i).transpose()).squaredNorm();
  return s / (2.0 * static_cast<double>(ex.inputs.rows())) + 0.5 * lambda * w.squaredNorm();
}

double stable_lr(const Moments& m, double lambda) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.xtx / static_cast<double>(m.n));
  return 1.0 / (es.eigenvalues().maxCoeff() + lambda);
}

std::vector<Trace> momentum_traces(std::size_t n, std::uint64_t seed, double jitter) {
  std::vector<Trace> out;
  for (std::size_t i = 0; i < n; ++i) {
    SynthOptions o;
    o.jitter_deg = jitter;
    o.user_id = "u" + std::to_string(i % 5);
    o.start = Gaze{static_cast<double>(i) * 37.0 - 180.0, 0.0};
    out.push_back(synth_trace(detail::derive_seed(seed, i), 60.0, 0.1, 1.0, 0.95, o));
  }
  return out;
}

}  // namespace

TEST(NoMotion, RepeatsLastGaze) {
  const std::vector<Gaze> w{{1, 1}, {5, 2}, {10, 5}};
  const auto p = predict_no_motion(w, 3);
  ASSERT_EQ(p.size(), 3u);
  for (const auto& g : p) EXPECT_EQ(g, (Gaze{10, 5}));
  EXPECT_TRUE(predict_no_motion(w, 0).empty());
  EXPECT_THROW(predict_no_motion(std::vector<Gaze>{}, 3), std::domain_error);
}

TEST(NoMotion, StationaryTraceIsExact) {
  const Gaze g{33.0, -12.0};
  const std::vector<Gaze> window(17, g);
  EXPECT_EQ(predict_no_motion(window, 10), std::vector<Gaze>(10, g));
}

TEST(LinearAr, ZeroWeightsMatchNoMotion) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 4, 5, 2};
  const auto m = LinearArModel::zeros(cfg);
  const std::vector<Gaze> w{{170, 1}, {175, 2}, {-179, 3}, {-170, 4}};
  EXPECT_EQ(predict_linear(m, w), predict_no_motion(w, 5));
  EXPECT_THROW(predict_linear(m, std::span(w).first(3)), std::domain_error);
}

TEST(LinearAr, OutputWrapsYawAndClampsPitch) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 2, 1, 0};
  auto m = LinearArModel::zeros(cfg);
  m.weights(0, 0) = 20.0;
  m.weights(1, 0) = 50.0;
  const std::vector<Gaze> w{{160, 60}, {170, 70}};
  const auto p = predict_linear(m, w);
  EXPECT_DOUBLE_EQ(p[0].yaw, -170.0);
  EXPECT_DOUBLE_EQ(p[0].pitch, 90.0);
}

TEST(LinearAr, FeaturesUseShortestArc) {
  const std::vector<Gaze> w{{179, 0}, {-179, 1}};
  const auto x = window_features(w);
  ASSERT_EQ(x.size(), 3);
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
  EXPECT_DOUBLE_EQ(x[2], 1.0);
}

TEST(Examples, TargetsAccumulateAcrossSeam) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 2, 2, 1};
  const auto t = constant_velocity(100.0, 0.0, 170.0, 6);
  const auto ex = build_examples(std::span(&t, 1), cfg);
  EXPECT_EQ(ex.size(), 2u);
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_NEAR(ex.targets(i, 0), 20.0, 1e-9);
    EXPECT_NEAR(ex.targets(i, 2), 30.0, 1e-9);
  }
}

TEST(Training, ZeroLearningRateKeepsModel) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 3, 2, 0};
  const auto start = initial_model(cfg, 1e-3, 42, 0.5);
  const auto traces = momentum_traces(2, 1, 0.0);
  EXPECT_EQ(train_local(start, traces, 25, 0.0), start);
}

TEST(Training, SingleExampleInterpolates) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 3, 2, 1};
  Trace t{"a", "0", 0.1, 1.0, {{0, 0}, {1, 0.5}, {3, 1}, {4, 1}, {6, 2}, {7, 2}}};
  const auto ex = build_examples(std::span(&t, 1), cfg);
  ASSERT_EQ(ex.size(), 1u);
  const double lr = 0.5 / ex.inputs.row(0).squaredNorm();
  auto m = train_local(LinearArModel::zeros(cfg, 0.0), std::span(&t, 1), 200, lr);
  EXPECT_LT(direct_loss(m.weights, ex, 0.0), 1e-6);
}

TEST(Training, MomentLossMatchesDirectSum) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 4, 3, 2};
  const auto traces = momentum_traces(3, 2, 0.5);
  const auto ex = build_examples(traces, cfg);
  const auto m = initial_model(cfg, 0.01, 8, 0.1);
  EXPECT_NEAR(loss(m.weights, moments_of(ex), 0.01), direct_loss(m.weights, ex, 0.01),
              1e-9 * direct_loss(m.weights, ex, 0.01));
}

TEST(Training, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const PredictorConfig cfg{PredictorKind::linear_ar, 2 + static_cast<std::size_t>(trial % 3), 1 + static_cast<std::size_t>(trial % 2), static_cast<std::size_t>(trial % 4)};
    const auto traces = momentum_traces(2, 100 + trial, 0.3);
    const auto ex = build_examples(traces, cfg);
    const double lambda = 0.01 * trial;
    const auto w = initial_model(cfg, lambda, rng(), 0.3).weights;
    const auto g = gradient(w, moments_of(ex), lambda);
    Eigen::MatrixXd fd(w.rows(), w.cols());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double h = 1e-5 * std::max(1.0, std::abs(w(r, c)));
        Eigen::MatrixXd wp = w, wm = w;
        wp(r, c) += h;
        wm(r, c) -= h;
        fd(r, c) = (direct_loss(wp, ex, lambda) - direct_loss(wm, ex, lambda)) / (2 * h);
      }
    EXPECT_LT((g - fd).norm() / g.norm(), 1e-5) << "trial " << trial;
  }
}

TEST(Training, LossDecreasesWithStableStep) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 5, 10, 3};
  const auto traces = momentum_traces(4, 3, 0.0);
  const auto mom = moments_of(build_examples(traces, cfg));
  auto m = initial_model(cfg, 1e-3, 1);
  double prev = loss(m.weights, mom, 1e-3);
  const double lr = stable_lr(mom, 1e-3);
  for (int i = 0; i < 20; ++i) {
    m = train_local(m, mom, 5, lr);
    const double l = loss(m.weights, mom, 1e-3);
    EXPECT_LE(l, prev);
    prev = l;
  }
}

TEST(Training, RejectsEmptyData) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 50, 50, 50};
  const auto traces = momentum_traces(1, 3, 0.0);
  Trace shorty = traces[0];
  shorty.samples.resize(20);
  EXPECT_THROW(train_local(LinearArModel::zeros(cfg), std::span(&shorty, 1), 1, 0.1), std::domain_error);
  EXPECT_THROW(train_local(LinearArModel::zeros(cfg), traces, 1, -1.0), std::domain_error);
}

TEST(Training, ConstantVelocityIsExtrapolated) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 5, 10, 3};
  std::vector<Trace> train;
  for (int k = 0; k < 12; ++k) train.push_back(constant_velocity(-30.0 + 5.0 * k, -3.0 + 0.5 * k, -150.0 + 25.0 * k, 60));
  const auto mom = moments_of(build_examples(train, cfg));
  auto m = train_local(LinearArModel::zeros(cfg, 0.0), mom, 20000, stable_lr(mom, 0.0));

  const auto held = constant_velocity(17.0, 2.0, 160.0, 40);
  const std::span<const Gaze> s(held.samples);
  const auto pred = predict_linear(m, s.subspan(10, 5));
  const auto& truth = held.samples[10 + 5 - 1 + 3 + 10];
  EXPECT_LT(great_circle_deg(pred.back(), truth), 1.0);
}

TEST(Federated, SingleClientEqualsLocalTraining) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 4, 10, 6};
  const auto traces = momentum_traces(3, 5, 0.0);
  const std::vector<std::vector<Trace>> clients{traces};
  FedConfig fed;
  fed.learning_rate = 1e-3;
  const auto res = federated_average(clients, fed, cfg, 123);
  const auto local = train_local(initial_model(cfg, fed.ridge_lambda, 123), traces, fed.rounds * fed.local_epochs,
                                 fed.learning_rate);
  EXPECT_TRUE(res.model == local);
}

TEST(Federated, IdenticalClientsEqualLocalTraining) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 4, 10, 6};
  const auto traces = momentum_traces(2, 6, 0.0);
  for (std::size_t k : {2u, 3u, 5u}) {
    const std::vector<std::vector<Trace>> clients(k, traces);
    FedConfig fed;
    fed.workers = 3;
    const auto res = federated_average(clients, fed, cfg, 9);
    const auto local =
        train_local(initial_model(cfg, fed.ridge_lambda, 9), traces, fed.rounds * fed.local_epochs, fed.learning_rate);
    EXPECT_TRUE(res.model == local) << k << " clients";
  }
}

TEST(Federated, PassesPerTraceWithDefaults) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 3, 10, 2};
  const auto all = momentum_traces(10, 7, 0.0);
  const auto clients = clients_by_user(all);
  EXPECT_EQ(clients.size(), 5u);
  const auto res = federated_average(clients, FedConfig{}, cfg, 1);
  for (const auto& c : res.passes_per_trace)
    for (auto p : c) EXPECT_EQ(p, 500u);
  EXPECT_EQ(res.round_loss.size(), 10u);
  EXPECT_LE(res.round_loss.back(), res.round_loss.front());
}

TEST(Federated, WeightsByCountAndValidation) {
  const auto all = momentum_traces(5, 8, 0.0);
  const std::vector<std::vector<Trace>> clients{{all[0]}, {all[1], all[2], all[3]}, {all[4]}};
  const auto w = client_weights_by_count(clients);
  EXPECT_DOUBLE_EQ(w[0], 0.2);
  EXPECT_DOUBLE_EQ(w[1], 0.6);
  const PredictorConfig cfg{PredictorKind::linear_ar, 3, 10, 2};
  FedConfig bad;
  bad.client_weights = {0.5, 0.5, 0.5};
  EXPECT_THROW(federated_average(clients, bad, cfg, 1), std::domain_error);
  EXPECT_THROW(federated_average(std::vector<std::vector<Trace>>{}, FedConfig{}, cfg, 1), std::domain_error);
}

TEST(Federated, WorkerCountDoesNotChangeModel) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 6, 10, 4};
  const auto clients = clients_by_user(momentum_traces(10, 9, 0.5));
  FedConfig a, b;
  a.workers = 1;
  b.workers = 4;
  EXPECT_TRUE(federated_average(clients, a, cfg, 3).model == federated_average(clients, b, cfg, 3).model);
}

TEST(Doo, OverlapCases) {
  const TileSet all = TileSet::all(10), q(10, {1, 2, 3});
  EXPECT_DOUBLE_EQ(overlap_ratio(q, q), 1.0);
  EXPECT_DOUBLE_EQ(overlap_ratio(q, TileSet(10, {4, 5})), 0.0);
  EXPECT_DOUBLE_EQ(overlap_ratio(q, TileSet(10, {3, 4, 5})), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(overlap_ratio(q, all), 1.0);
  EXPECT_THROW(overlap_ratio(TileSet(10), q), std::domain_error);

  const std::vector<TileSet> truth{q, q}, pred{q, TileSet(10, {3})};
  const auto r = average_doo(truth, pred);
  EXPECT_DOUBLE_EQ(r.average, (1.0 + 1.0 / 3.0) / 2.0);
}

TEST(ModelFile, RoundTripIsExact) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 5, 10, 3};
  const auto m = initial_model(cfg, 0.00123, 77, 3.7);
  std::stringstream s;
  save_model(s, m);
  EXPECT_TRUE(load_model(s) == m);
  std::istringstream bad("linear_ar 5 10 3 20 9 0.1\n1 2 3\n");
  EXPECT_THROW(load_model(bad), std::exception);
}

TEST(Predictor, DispatchesByKind) {
  const PredictorConfig cfg{PredictorKind::linear_ar, 2, 3, 0};
  auto m = LinearArModel::zeros(cfg);
  m.weights(0, 1) = 1.0;
  const std::vector<Gaze> w{{0, 0}, {4, 0}};
  EXPECT_EQ((Predictor{PredictorKind::no_motion, nullptr}.predict(w, 3)), predict_no_motion(w, 3));
  EXPECT_DOUBLE_EQ((Predictor{PredictorKind::linear_ar, &m}.predict(w, 3)[0].yaw), 8.0);
  EXPECT_THROW((Predictor{PredictorKind::linear_ar, nullptr}.predict(w, 3)), std::domain_error);
  EXPECT_THROW((Predictor{PredictorKind::linear_ar, &m}.predict(w, 4)), std::domain_error);
}

// Longer observation windows average out sensor jitter, so overlap should trend up.
TEST(Trend, LongerWindowImprovesOverlap) {
  const TileGrid grid(10, 20);
  const FovSpec fov;
  const std::size_t gap = 3, horizon = 10;
  const auto train = momentum_traces(30, 41, 3.0);
  const auto test = momentum_traces(10, 42, 3.0);
  std::vector<double> windows, doo;
  for (std::size_t w : {1u, 2u, 3u, 5u, 8u, 12u, 17u}) {
    const PredictorConfig cfg{PredictorKind::linear_ar, w, horizon, gap};
    const auto mom = moments_of(build_examples(train, cfg));
    const auto m = train_local(LinearArModel::zeros(cfg, 1e-3), mom, 3000, stable_lr(mom, 1e-3));
    double sum = 0;
    std::size_t n = 0;
    for (const auto& t : test) {
      const std::span<const Gaze> s(t.samples);
      for (std::size_t l = 3; l <= t.segments(); ++l) {
        const std::size_t end = (l - 1) * horizon - gap;
        const auto pred = predict_linear(m, s.subspan(end - w, w));
        sum += overlap_ratio(top_n_by_dwell(grid, t.segment(l), fov), top_n_by_dwell(grid, pred, fov));
        ++n;
      }
    }
    windows.push_back(static_cast<double>(w));
    doo.push_back(sum / static_cast<double>(n));
  }
  EXPECT_GT(support::spearman(windows, doo), 0.0);
  EXPECT_GT(doo.back(), doo.front());
}
