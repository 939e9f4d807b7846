// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "spvr/link_model.hpp"
#include "spvr/privacy_mask.hpp"

namespace spvr {

/// Streaming timeline: proactive window T_ps = (l0 − 1) T_seg, behaviour sampled every τ.
struct StreamConfig {
  double t_seg = 1.0;
  std::size_t l0 = 3;
  double tau = 0.1;

  double t_ps() const { return static_cast<double>(l0 - 1) * t_seg; }
  void validate() const {
    if (l0 < 2) throw std::domain_error("l0 must be at least 2");
    if (!(t_seg > 0 && tau > 0)) throw std::domain_error("T_seg and tau must be positive");
  }
};

struct DurationPlan {
  double t_obw = 0;
  double t_com = 0;
  double t_cpt = 0;
  std::size_t obw_samples = 0;
  std::size_t n_p = 0;

  double t_cc() const { return t_com + t_cpt; }
};

enum class PlanStatus {
  feasible,
  no_observation,  ///< t_cc* fits in T_ps but leaves less than one τ-sample to observe
  infeasible,      ///< t_cc* > T_ps
};

inline const char* to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::feasible: return "feasible";
    case PlanStatus::no_observation: return "no_observation";
    default: return "infeasible";
  }
}

/// Outcome of a duration optimisation. `deficit` is how many seconds t_cc*
/// would have to shrink to admit one observation sample (0 when feasible).
struct PlanResult {
  PlanStatus status = PlanStatus::infeasible;
  DurationPlan plan;
  double deficit = 0;

  bool feasible() const { return status == PlanStatus::feasible; }
};

namespace detail {
// Tolerates representation error when (T_ps − t_cc)/τ lands on an integer.
inline std::size_t floor_samples(double x) {
  if (x <= 0) return 0;
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}
}  // namespace detail

/// Closed-form optimum: t_com* = s_com N_p / C_com, t_cpt* = s_cpt N_p / C_cpt,
/// and the observation window gets the floor of what remains, in τ-samples.
inline PlanResult optimize_durations(const LinkBudget& budget, double rho_s, const StreamConfig& cfg,
                                     std::size_t n_fov) {
  budget.validate();
  cfg.validate();
  PlanResult r;
  r.plan.n_p = n_privacy_tiles(rho_s, budget.m, n_fov);
  const double np = static_cast<double>(r.plan.n_p);
  r.plan.t_com = budget.s_com * np / budget.c_com;
  r.plan.t_cpt = budget.s_cpt * np / budget.c_cpt;
  const double t_cc = r.plan.t_cc();
  const double t_ps = cfg.t_ps();
  r.plan.obw_samples = detail::floor_samples((t_ps - t_cc) / cfg.tau);
  r.plan.t_obw = cfg.tau * static_cast<double>(r.plan.obw_samples);
  if (t_cc > t_ps) {
    r.status = PlanStatus::infeasible;
    r.deficit = t_cc - (t_ps - cfg.tau);
  } else if (r.plan.obw_samples == 0) {
    r.status = PlanStatus::no_observation;
    r.deficit = t_cc - (t_ps - cfg.tau);
  } else {
    r.status = PlanStatus::feasible;
  }
  return r;
}

/// The same window length via the resources rate: floor((T_ps − N_p/(R_cc* M))/τ).
inline std::size_t obw_samples_via_resources_rate(const LinkBudget& budget, std::size_t n_p, const StreamConfig& cfg) {
  const double r_cc = resources_rate(budget);
  return detail::floor_samples((cfg.t_ps() - static_cast<double>(n_p) / (r_cc * static_cast<double>(budget.m))) /
                               cfg.tau);
}

/// Exhaustive grid search over (t_com, t_cpt) ∈ [0, T_ps]² minimising
/// t_com + t_cpt subject to min(C_com t_com/s_com, C_cpt t_cpt/s_cpt, M) ≥ N_p.
/// Ties go to the lexicographically smallest (t_com, t_cpt).
inline PlanResult brute_force_durations(const LinkBudget& budget, double rho_s, const StreamConfig& cfg,
                                        std::size_t n_fov, double grid_step) {
  budget.validate();
  cfg.validate();
  if (!(grid_step > 0) || grid_step > cfg.tau / 10.0 * (1 + 1e-12))
    throw std::domain_error("grid step must lie in (0, tau/10]");
  PlanResult r;
  r.plan.n_p = n_privacy_tiles(rho_s, budget.m, n_fov);
  const double np = static_cast<double>(r.plan.n_p);
  const double m = static_cast<double>(budget.m);
  const double t_ps = cfg.t_ps();
  const auto steps = static_cast<std::size_t>(std::floor(t_ps / grid_step + 1e-9));

  double best = std::numeric_limits<double>::infinity();
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t_com = static_cast<double>(i) * grid_step;
    const double com_tiles = budget.c_com * t_com / budget.s_com;
    if (std::min(com_tiles, m) < np) continue;
    for (std::size_t j = 0; j <= steps; ++j) {
      const double t_cpt = static_cast<double>(j) * grid_step;
      if (std::min({com_tiles, budget.c_cpt * t_cpt / budget.s_cpt, m}) < np) continue;
      const double total = t_com + t_cpt;
      if (total < best) {
        best = total;
        bi = i;
        bj = j;
      }
    }
  }
  if (!std::isfinite(best)) {
    r.status = PlanStatus::infeasible;
    r.deficit = std::numeric_limits<double>::infinity();
    return r;
  }
  r.plan.t_com = static_cast<double>(bi) * grid_step;
  r.plan.t_cpt = static_cast<double>(bj) * grid_step;
  r.plan.obw_samples = detail::floor_samples((t_ps - best) / cfg.tau);
  r.plan.t_obw = cfg.tau * static_cast<double>(r.plan.obw_samples);
  r.status = best > t_ps ? PlanStatus::infeasible
                         : (r.plan.obw_samples == 0 ? PlanStatus::no_observation : PlanStatus::feasible);
  r.deficit = r.status == PlanStatus::feasible ? 0.0 : best - (t_ps - cfg.tau);
  return r;
}

}  // namespace spvr
