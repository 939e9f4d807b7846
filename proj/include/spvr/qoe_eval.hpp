// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spvr/detail/parallel.hpp"
#include "spvr/duration_opt.hpp"
#include "spvr/predictors.hpp"
#include "spvr/privacy_mask.hpp"
#include "spvr/tile_geometry.hpp"
#include "spvr/trace_io.hpp"

namespace spvr {

/// C_cc = min(C_com t_com / s_com, C_cpt t_cpt / s_cpt, M) / M.
inline double cc_capability(const LinkBudget& b, double t_com, double t_cpt) {
  b.validate();
  if (t_com < 0 || t_cpt < 0) throw std::domain_error("durations must be non-negative");
  const double m = static_cast<double>(b.m);
  return std::min({b.c_com * t_com / b.s_com, b.c_cpt * t_cpt / b.s_cpt, m}) / m;
}

/// Privacy-aware QoE of one segment with the streamed set equal to the
/// privacy-aware request: |q ∩ q^ρ| / |q|.
inline double segment_qoe(const TileSet& q, const TileSet& q_rho) { return overlap_ratio(q, q_rho); }

class InfeasiblePlanError : public std::runtime_error {
 public:
  explicit InfeasiblePlanError(const PlanResult& r)
      : std::runtime_error(std::string("duration plan is ") + to_string(r.status) +
                           " (deficit " + std::to_string(r.deficit) + " s)"),
        result_(r) {}
  const PlanResult& result() const noexcept { return result_; }

 private:
  PlanResult result_;
};

struct QoeReport {
  std::vector<double> per_segment;      ///< QoE_l for l = l0..L
  std::vector<double> per_segment_doo;  ///< DoO_l for l = l0..L
  double avg_qoe = 0;
  double avg_doo = 0;
  double cc_capability = 0;
  DurationPlan plan;
  double rho_s = 0;
  bool window_truncated = false;        ///< some window ran past the start of the trace
  std::size_t lookahead_violations = 0; ///< window samples measured after the prediction instant
};

/// Everything about the system that stays fixed across traces.
struct EvalSetup {
  TileGrid grid{10, 20};
  FovSpec fov;
  StreamConfig stream;
  LinkBudget budget;
  PrivacyConfig privacy;
};

/// Ground-truth requests q_l for l = l0..L.
inline std::vector<TileSet> ground_truth(const Trace& trace, const TileGrid& grid, const FovSpec& fov,
                                         std::size_t l0) {
  std::vector<TileSet> q;
  for (std::size_t l = l0; l <= trace.segments(); ++l) q.push_back(top_n_by_dwell(grid, trace.segment(l), fov));
  return q;
}

/// Runs one trace through observation, prediction, masking and scoring with a
/// given plan. `truth` holds q_l for l = l0..L (see ground_truth).
inline QoeReport evaluate_with_plan(const Trace& trace, std::span<const TileSet> truth, const Predictor& predictor,
                                    const EvalSetup& setup, const DurationPlan& plan) {
  const auto& cfg = setup.stream;
  const std::size_t per_seg = trace.samples_per_segment();
  if (std::abs(trace.tau - cfg.tau) > 1e-12 || std::abs(trace.t_seg - cfg.t_seg) > 1e-12)
    throw std::domain_error("trace sampling does not match the stream configuration");
  const std::size_t segs = trace.segments();
  if (segs < cfg.l0) throw std::domain_error("trace does not reach segment l0");
  if (truth.size() != segs - cfg.l0 + 1) throw std::domain_error("ground truth does not cover segments l0..L");
  if (plan.obw_samples == 0) throw std::domain_error("plan has an empty observation window");

  const std::size_t ps_samples = (cfg.l0 - 1) * per_seg;
  const std::size_t gap = ps_samples >= plan.obw_samples ? ps_samples - plan.obw_samples : 0;
  const std::size_t n_fov = setup.fov.n_fov;

  QoeReport rep;
  rep.plan = plan;
  rep.rho_s = setup.privacy.rho_s;
  rep.cc_capability = cc_capability(setup.budget, plan.t_com, plan.t_cpt);
  const std::size_t n_p = n_privacy_tiles(setup.privacy.rho_s, setup.grid.tiles(), n_fov);

  std::vector<Gaze> window;
  double qoe_sum = 0, doo_sum = 0;
  for (std::size_t l = cfg.l0; l <= segs; ++l) {
    const std::size_t seg_start = (l - 1) * per_seg;
    const std::size_t window_end = seg_start - gap;
    std::size_t window_begin = window_end >= plan.obw_samples ? window_end - plan.obw_samples : 0;
    if (window_end - window_begin < plan.obw_samples) rep.window_truncated = true;

    // Sample i is measured at i·τ; anything later than the decision instant
    // (segment start minus t_cc) must not reach the predictor.
    const double decision_time = static_cast<double>(seg_start) * cfg.tau - plan.t_cc();
    window.clear();
    for (std::size_t i = window_begin; i < window_end; ++i) {
      if (static_cast<double>(i) * cfg.tau > decision_time + 1e-9) ++rep.lookahead_violations;
      window.push_back(trace.samples[i]);
    }
    // A linear model needs its full window; pad truncated history with the oldest sample.
    if (predictor.kind == PredictorKind::linear_ar && predictor.model &&
        window.size() < predictor.model->shape.window_samples)
      window.insert(window.begin(), predictor.model->shape.window_samples - window.size(), window.front());

    const auto predicted = predictor.predict(window, per_seg);
    const TileSet e = top_n_by_dwell(setup.grid, predicted, setup.fov);
    const std::uint64_t mask_seed = detail::derive_seed(setup.privacy.seed, l);
    const PrivacyRequest q_rho = apply_mask(setup.grid, e, n_p, setup.privacy.scheme, mask_seed);

    const TileSet& q = truth[l - cfg.l0];
    rep.per_segment.push_back(segment_qoe(q, q_rho.tiles));
    rep.per_segment_doo.push_back(overlap_ratio(q, e));
    qoe_sum += rep.per_segment.back();
    doo_sum += rep.per_segment_doo.back();
  }
  rep.avg_qoe = qoe_sum / static_cast<double>(rep.per_segment.size());
  rep.avg_doo = doo_sum / static_cast<double>(rep.per_segment.size());
  return rep;
}

/// Full per-trace evaluation: optimise the durations, then score segments l0..L.
inline QoeReport evaluate_trace(const Trace& trace, const Predictor& predictor, const EvalSetup& setup) {
  setup.privacy.validate();
  setup.fov.validate(setup.grid);
  const PlanResult pr = optimize_durations(setup.budget, setup.privacy.rho_s, setup.stream, setup.fov.n_fov);
  if (!pr.feasible()) throw InfeasiblePlanError(pr);
  const auto truth = ground_truth(trace, setup.grid, setup.fov, setup.stream.l0);
  return evaluate_with_plan(trace, truth, predictor, setup, pr.plan);
}

/// Test-set averages: per-trace means over segments, then the mean over traces.
struct SetReport {
  double avg_qoe = 0;
  double avg_doo = 0;
  double cc_capability = 0;
  DurationPlan plan;
  std::size_t n_traces = 0;
  std::vector<QoeReport> per_trace;
};

/// `truths[i]` may be empty, in which case the ground truth of trace i is computed here.
inline SetReport evaluate_traces(std::span<const Trace> traces, std::span<const std::vector<TileSet>> truths,
                                 const Predictor& predictor, const EvalSetup& setup, unsigned workers = 1) {
  if (traces.empty()) throw std::domain_error("no traces to evaluate");
  setup.privacy.validate();
  setup.fov.validate(setup.grid);
  const PlanResult pr = optimize_durations(setup.budget, setup.privacy.rho_s, setup.stream, setup.fov.n_fov);
  if (!pr.feasible()) throw InfeasiblePlanError(pr);

  SetReport out;
  out.per_trace.resize(traces.size());
  detail::parallel_for(traces.size(), workers, [&](std::size_t i) {
    if (i < truths.size() && !truths[i].empty()) {
      out.per_trace[i] = evaluate_with_plan(traces[i], truths[i], predictor, setup, pr.plan);
    } else {
      const auto q = ground_truth(traces[i], setup.grid, setup.fov, setup.stream.l0);
      out.per_trace[i] = evaluate_with_plan(traces[i], q, predictor, setup, pr.plan);
    }
  });
  for (const auto& r : out.per_trace) {
    out.avg_qoe += r.avg_qoe;
    out.avg_doo += r.avg_doo;
  }
  out.avg_qoe /= static_cast<double>(traces.size());
  out.avg_doo /= static_cast<double>(traces.size());
  out.cc_capability = out.per_trace.front().cc_capability;
  out.plan = pr.plan;
  out.n_traces = traces.size();
  return out;
}

}  // namespace spvr
