// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "spvr/config.hpp"
#include "spvr/detail/parallel.hpp"
#include "spvr/qoe_eval.hpp"
#include "spvr/training.hpp"

namespace spvr {

struct SweepRow {
  double rho_s = 0;
  double r_cc_star = 0;
  PredictorKind predictor = PredictorKind::no_motion;
  double t_obw_s = 0;
  double cc_capability = std::numeric_limits<double>::quiet_NaN();
  double avg_doo = std::numeric_limits<double>::quiet_NaN();
  double avg_qoe = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_traces = 0;
  PlanStatus status = PlanStatus::infeasible;
};

inline constexpr const char* kSweepCsvHeader =
    "rho_s,r_cc_star,predictor,t_obw_s,cc_capability,avg_doo,avg_qoe,n_traces,status";

/// Federated training of one linear model on `train`, one client per user id.
inline FedResult train_federated(const ExperimentConfig& cfg, std::span<const Trace> train, const PredictorConfig& shape,
                                 unsigned workers) {
  const auto clients = clients_by_user(train);
  FedConfig fed = cfg.fed;
  fed.workers = workers;
  const auto seed = detail::derive_seed(cfg.train_seed, shape.window_samples, shape.gap_samples, shape.horizon_samples);
  return federated_average(clients, fed, shape, seed);
}

namespace detail {
inline bool same_shape(const PredictorConfig& a, const PredictorConfig& b) {
  return a.window_samples == b.window_samples && a.gap_samples == b.gap_samples &&
         a.horizon_samples == b.horizon_samples;
}
}  // namespace detail

/// Every (R_cc*, ρ_s, predictor) cell, ordered R_cc* outermost then ρ_s then
/// predictor. Linear cells use `model` when its shape matches the cell's plan
/// and a federated model trained on `train` otherwise.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::span<const Trace> train,
                                       std::span<const Trace> test, const LinearArModel* model = nullptr,
                                       unsigned workers = 1) {
  cfg.validate();
  if (test.empty()) throw std::domain_error("sweep needs at least one test trace");
  const auto grid = cfg.grid();
  const auto stream = cfg.stream();

  std::vector<std::vector<TileSet>> truths(test.size());
  detail::parallel_for(test.size(), workers,
                       [&](std::size_t i) { truths[i] = ground_truth(test[i], grid, cfg.fov, stream.l0); });

  struct Cell {
    std::size_t i_rcc, i_rho, i_pred;
    LinkBudget budget;
    PlanResult plan;
    const LinearArModel* model = nullptr;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < cfg.rcc_values.size(); ++a) {
    const LinkBudget b = with_resources_rate(cfg.budget(), cfg.rcc_values[a]);
    for (std::size_t r = 0; r < cfg.rho_values.size(); ++r) {
      const auto plan = optimize_durations(b, cfg.rho_values[r], stream, cfg.fov.n_fov);
      for (std::size_t p = 0; p < cfg.predictors.size(); ++p) cells.push_back(Cell{a, r, p, b, plan, nullptr});
    }
  }

  // One model per distinct (window, gap, horizon); std::map keeps node addresses stable.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, LinearArModel> trained;
  for (auto& c : cells) {
    if (cfg.predictors[c.i_pred] != PredictorKind::linear_ar || !c.plan.feasible()) continue;
    const auto shape = cfg.predictor_shape(c.plan.plan);
    if (model && detail::same_shape(model->shape, shape)) {
      c.model = model;
      continue;
    }
    const auto key = std::make_tuple(shape.window_samples, shape.gap_samples, shape.horizon_samples);
    auto it = trained.find(key);
    if (it == trained.end()) {
      if (train.empty()) throw std::domain_error("linear predictor cells need training traces or a matching model");
      it = trained.emplace(key, train_federated(cfg, train, shape, workers).model).first;
    }
    c.model = &it->second;
  }

  std::vector<SweepRow> rows(cells.size());
  detail::parallel_for(cells.size(), workers, [&](std::size_t k) {
    const auto& c = cells[k];
    SweepRow& row = rows[k];
    row.rho_s = cfg.rho_values[c.i_rho];
    row.r_cc_star = cfg.rcc_values[c.i_rcc];
    row.predictor = cfg.predictors[c.i_pred];
    row.t_obw_s = c.plan.plan.t_obw;
    row.status = c.plan.status;
    if (!c.plan.feasible()) return;

    EvalSetup setup{grid, cfg.fov, stream, c.budget, cfg.privacy};
    setup.privacy.rho_s = row.rho_s;
    setup.privacy.seed = detail::derive_seed(cfg.sweep_seed, c.i_rho, c.i_rcc, c.i_pred);
    const Predictor pred{row.predictor, c.model};
    const auto rep = evaluate_traces(test, truths, pred, setup, 1);
    row.cc_capability = rep.cc_capability;
    row.avg_doo = rep.avg_doo;
    row.avg_qoe = rep.avg_qoe;
    row.n_traces = rep.n_traces;
  });
  return rows;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  auto num = [&](double v) {
    if (std::isnan(v))
      out << "nan";
    else
      out << std::fixed << std::setprecision(6) << v;
  };
  for (const auto& r : rows) {
    num(r.rho_s);
    out << ',';
    num(r.r_cc_star);
    out << ',' << to_string(r.predictor) << ',';
    num(r.t_obw_s);
    out << ',';
    num(r.cc_capability);
    out << ',';
    num(r.avg_doo);
    out << ',';
    num(r.avg_qoe);
    out << ',' << r.n_traces << ',' << (r.status == PlanStatus::feasible ? "feasible" : "infeasible") << '\n';
  }
}

}  // namespace spvr
