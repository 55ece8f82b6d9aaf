#include "seqest/rules.hpp"

#include <cmath>
#include <stdexcept>

#include "seqest/kernels.hpp"

namespace seqest {
namespace {

void require(const SamplingPlan& plan, bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(to_string(plan.scheme()) + ": " + what);
}

std::int64_t checked_size(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, obs.stage >= 1, "stage index starts at 1");
  require(plan, plan.open_ended() || obs.stage <= plan.stage_count(), "stage index beyond the plan");
  const std::int64_t n = plan.stage_size(obs.stage);
  if (plan.inverse())
    require(plan, obs.statistic >= n, "sample count below the success target");
  else
    require(plan, obs.statistic >= 0 && obs.statistic <= n, "success count outside [0, n_l]");
  return n;
}

bool abs_rule(double z, double eps, double log_zd, std::int64_t n) {
  const double d = std::fabs(z - 0.5) - 2.0 * eps / 3.0;
  return d * d >= 0.25 + eps * eps * static_cast<double>(n) / (2.0 * log_zd);
}

bool mixed_rule(double z, double eps_a, double eps_r, double log_zd, std::int64_t n) {
  const auto w = mixed_windows(eps_a, eps_r, log_zd, n);
  if (w.empty) return true;
  const bool cont = (w.lo_a < z && z < w.hi_a) || (w.lo_b < z && z < w.hi_b);
  return !cont;
}

}  // namespace

MixedWindows mixed_windows(double eps_a, double eps_r, double log_zd, std::int64_t n) {
  MixedWindows w;
  const double nn = static_cast<double>(n);
  const double r = 0.25 + nn * eps_a * eps_a / (2.0 * log_zd);
  if (r < 0.0) {
    w.empty = true;
    return w;
  }
  const double root = std::sqrt(r);
  w.lo_a = 0.5 - 2.0 * eps_a / 3.0 - root;
  w.hi_a = 6.0 * (1.0 - eps_r) * (3.0 - eps_r) * log_zd /
           (2.0 * (3.0 - eps_r) * (3.0 - eps_r) * log_zd - 9.0 * nn * eps_r * eps_r);
  w.lo_b = 0.5 + 2.0 * eps_a / 3.0 - root;
  w.hi_b = relative_threshold(eps_r, log_zd, n);
  return w;
}

double relative_threshold(double eps, double log_zd, std::int64_t n) {
  const double nn = static_cast<double>(n);
  return 6.0 * (1.0 + eps) * (3.0 + eps) * log_zd /
         (2.0 * (3.0 + eps) * (3.0 + eps) * log_zd - 9.0 * nn * eps * eps);
}

bool decide_abs(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, plan.scheme() == Scheme::Abs, "decide_abs needs an absolute-error plan");
  const std::int64_t n = checked_size(plan, obs);
  if (plan.is_last(obs.stage)) return true;
  return abs_rule(static_cast<double>(obs.statistic) / static_cast<double>(n), plan.spec.eps,
                  plan.log_zd, n);
}

bool decide_mixed(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, plan.scheme() == Scheme::Mixed, "decide_mixed needs a mixed plan");
  const std::int64_t n = checked_size(plan, obs);
  if (plan.is_last(obs.stage)) return true;
  return mixed_rule(static_cast<double>(obs.statistic) / static_cast<double>(n), plan.spec.eps_a,
                    plan.spec.eps_r, plan.log_zd, n);
}

bool decide_rel_inverse(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, plan.inverse(), "decide_rel_inverse needs an inverse-sampling plan");
  const std::int64_t g = checked_size(plan, obs);
  if (plan.is_last(obs.stage)) return true;
  return static_cast<double>(g) / static_cast<double>(obs.statistic) >= plan.thresholds[obs.stage - 1];
}

bool decide_rel_fixed(double eps, double zeta, double delta_ell, std::int64_t n_ell, std::int64_t k) {
  const double log_zd = std::log(zeta) + std::log(delta_ell);
  return static_cast<double>(k) / static_cast<double>(n_ell) >= relative_threshold(eps, log_zd, n_ell);
}

bool decide_rel_fixed(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, plan.open_ended(), "decide_rel_fixed needs an open-ended relative plan");
  const std::int64_t n = checked_size(plan, obs);
  return static_cast<double>(obs.statistic) / static_cast<double>(n) >=
         relative_threshold(plan.spec.eps, plan.stage_log_zd(obs.stage), n);
}

bool decide_fw(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, is_fixed_width(plan.scheme()), "decide_fw needs a fixed-width plan");
  const std::int64_t n = checked_size(plan, obs);
  if (plan.is_last(obs.stage)) return true;
  const double alpha = interval_alpha(plan);
  if (plan.scheme() == Scheme::FWMassart && !massart_clamp_active(n, obs.statistic, alpha))
    return massart_width_inequality(n, obs.statistic, plan.spec.eps, plan.log_zd);
  return plan_interval(plan, n, obs.statistic).width() <= 2.0 * plan.spec.eps;
}

bool decide_massart_algebraic(const SamplingPlan& plan, const StageObservation& obs) {
  require(plan, plan.scheme() == Scheme::FWMassart, "needs a Massart plan");
  const std::int64_t n = checked_size(plan, obs);
  return massart_width_inequality(n, obs.statistic, plan.spec.eps, plan.log_zd);
}

bool decide_bounded(const SamplingPlan& plan, std::size_t stage, double mean) {
  require(plan, is_bounded(plan.scheme()), "decide_bounded needs a bounded-variable plan");
  require(plan, stage >= 1 && stage <= plan.stage_count(), "stage index outside the plan");
  if (std::isnan(mean) || mean < 0.0 || mean > 1.0)
    throw std::domain_error("decide_bounded: normalized mean must lie in [0,1]");
  if (plan.is_last(stage)) return true;
  const std::int64_t n = plan.stage_size(stage);
  const auto& sp = plan.spec;
  switch (plan.scheme()) {
    case Scheme::BoundedAbs:
      return abs_rule(mean, sp.eps, plan.log_zd, n);
    case Scheme::BoundedMixed:
      return mixed_rule(mean, sp.eps_a, sp.eps_r, plan.log_zd, n);
    case Scheme::GeneralMixed: {
      const double mu = denormalize(plan, mean);
      const double sg = mu > 0.0 ? 1.0 : (mu < 0.0 ? -1.0 : 0.0);
      const double lo = std::min(mu - sp.eps_a, mu / (1.0 + sg * sp.eps_r));
      const double hi = std::max(mu + sp.eps_a, mu / (1.0 - sg * sp.eps_r));
      const double bound = plan.log_zd / static_cast<double>(n);
      return m_fn(mean, normalize(plan, lo)) <= bound && m_fn(mean, normalize(plan, hi)) <= bound;
    }
    default:
      break;
  }
  return true;
}

bool decide(const SamplingPlan& plan, const StageObservation& obs) {
  switch (plan.scheme()) {
    case Scheme::Abs: return decide_abs(plan, obs);
    case Scheme::Mixed: return decide_mixed(plan, obs);
    case Scheme::RelInverse: return decide_rel_inverse(plan, obs);
    case Scheme::RelFixed: return decide_rel_fixed(plan, obs);
    case Scheme::FWCp:
    case Scheme::FWCh:
    case Scheme::FWMassart: return decide_fw(plan, obs);
    default:
      throw std::invalid_argument("decide: bounded-variable schemes take a sample mean");
  }
}

IntervalKind interval_kind(Scheme s) {
  switch (s) {
    case Scheme::FWCp: return IntervalKind::ClopperPearson;
    case Scheme::FWCh: return IntervalKind::ChernoffHoeffding;
    case Scheme::FWMassart: return IntervalKind::Massart;
    default: throw std::invalid_argument("not a fixed-width scheme");
  }
}

double interval_alpha(const SamplingPlan& plan) {
  // Massart's closed form is written in ln(2/alpha); alpha = 2 zeta delta makes
  // its width test coincide with the scheme's ln(zeta delta) inequality.
  const double zd = std::exp(plan.log_zd);
  return plan.scheme() == Scheme::FWMassart ? 2.0 * zd : zd;
}

ConfidenceInterval plan_interval(const SamplingPlan& plan, std::int64_t n, std::int64_t k) {
  return make_interval(interval_kind(plan.scheme()), n, k, interval_alpha(plan));
}

double normalize(const SamplingPlan& plan, double x) {
  if (plan.scheme() != Scheme::GeneralMixed) return x;
  return (x - plan.spec.range_lo) / (plan.spec.range_hi - plan.spec.range_lo);
}

double denormalize(const SamplingPlan& plan, double x) {
  if (plan.scheme() != Scheme::GeneralMixed) return x;
  return plan.spec.range_lo + (plan.spec.range_hi - plan.spec.range_lo) * x;
}

}  // namespace seqest
