#pragma once

#include <cstddef>
#include <cstdint>

#include "seqest/intervals.hpp"
#include "seqest/plan.hpp"

namespace seqest {

// statistic is the success count K_l for fixed-size schemes and the sample
// count n for the inverse scheme.
struct StageObservation {
  std::size_t stage = 1;
  std::int64_t statistic = 0;
};

bool decide_abs(const SamplingPlan& plan, const StageObservation& obs);
bool decide_mixed(const SamplingPlan& plan, const StageObservation& obs);
bool decide_rel_inverse(const SamplingPlan& plan, const StageObservation& obs);
bool decide_rel_fixed(double eps, double zeta, double delta_ell, std::int64_t n_ell, std::int64_t k);
bool decide_rel_fixed(const SamplingPlan& plan, const StageObservation& obs);
bool decide_fw(const SamplingPlan& plan, const StageObservation& obs);
// Massart scheme: the algebraic inequality only (no clamp fallback).
bool decide_massart_algebraic(const SamplingPlan& plan, const StageObservation& obs);

// Bounded-variable schemes; mean is the normalized sample mean in [0,1].
bool decide_bounded(const SamplingPlan& plan, std::size_t stage, double mean);

// Dispatch for the binomial schemes.
bool decide(const SamplingPlan& plan, const StageObservation& obs);

// Shared threshold pieces of the mixed rule.
struct MixedWindows {
  bool empty = false;      // 1/4 + n eps_a^2 / (2 ln zd) < 0
  double lo_a = 0, hi_a = 0;  // first continuation window (lo_a, hi_a)
  double lo_b = 0, hi_b = 0;  // second continuation window
};
MixedWindows mixed_windows(double eps_a, double eps_r, double log_zd, std::int64_t n);

// Right-hand side threshold of the relative rule,
// 6(1+e)(3+e)L / (2(3+e)^2 L - 9 n e^2) with L = ln(zeta*delta).
double relative_threshold(double eps, double log_zd, std::int64_t n);

// Fixed-width interval the plan attaches to (n, k).
IntervalKind interval_kind(Scheme s);
double interval_alpha(const SamplingPlan& plan);
ConfidenceInterval plan_interval(const SamplingPlan& plan, std::int64_t n, std::int64_t k);

// Affine map between [a,b] and [0,1] (identity for the other schemes).
double normalize(const SamplingPlan& plan, double x);
double denormalize(const SamplingPlan& plan, double x);

}  // namespace seqest
