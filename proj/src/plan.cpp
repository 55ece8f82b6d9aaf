#include "seqest/plan.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "seqest/kernels.hpp"

namespace seqest {
namespace {

constexpr double kMaxStage = 9.0e15;

struct SchemeName {
  Scheme scheme;
  const char* name;
};

const SchemeName kNames[] = {
    {Scheme::Abs, "abs"},
    {Scheme::Mixed, "mixed"},
    {Scheme::RelInverse, "rel-inverse"},
    {Scheme::RelFixed, "rel-fixed"},
    {Scheme::FWCp, "fw-cp"},
    {Scheme::FWCh, "fw-ch"},
    {Scheme::FWMassart, "fw-massart"},
    {Scheme::BoundedAbs, "bounded-abs"},
    {Scheme::BoundedMixed, "bounded-mixed"},
    {Scheme::GeneralMixed, "general-mixed"},
};

[[noreturn]] void fail(Scheme s, const std::string& what) {
  throw SpecError(to_string(s) + ": " + what);
}

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

std::int64_t ceil_stage(double x) {
  if (!(x > 0.0) || x > kMaxStage) throw SpecError("stage size out of range");
  return static_cast<std::int64_t>(std::ceil(x));
}

std::vector<std::int64_t> dedup(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::int64_t tau_for(double base, double rho) {
  return static_cast<std::int64_t>(std::ceil(std::log(base) / std::log1p(rho)));
}

double log_inv_zd(const SamplingPlan& p) { return -p.log_zd; }

// Unrounded grid values for the schemes with a (tau, rho) grid.
std::vector<double> raw_grid(const SamplingPlan& plan) {
  const auto& sp = plan.spec;
  const double L = log_inv_zd(plan);
  const double t = static_cast<double>(plan.tau);
  std::vector<double> out;
  for (std::int64_t i = 0; i <= plan.tau; ++i) {
    const double f = static_cast<double>(i) / t;
    double v = 0.0;
    switch (sp.scheme) {
      case Scheme::Abs: {
        const double e = sp.eps;
        v = std::pow((24.0 * e - 16.0 * e * e) / 9.0, 1.0 - f) * L / (2.0 * e * e);
        break;
      }
      case Scheme::Mixed: {
        const double base = 1.5 * (1.0 / sp.eps_a - 1.0 / sp.eps_r - 1.0 / 3.0);
        v = std::pow(base, f) * 4.0 * (3.0 + sp.eps_r) / (9.0 * sp.eps_r) * L;
        break;
      }
      case Scheme::RelInverse: {
        const double e = sp.eps;
        v = std::pow(1.5 * (1.0 / e + 1.0), f) * 4.0 * (3.0 + e) / (9.0 * e) * L;
        break;
      }
      case Scheme::FWCp:
      case Scheme::FWCh: {
        const double e = sp.eps;
        v = std::pow(2.0 * e * e / std::log(1.0 / (1.0 - 2.0 * e)), 1.0 - f) * L / (2.0 * e * e);
        break;
      }
      case Scheme::FWMassart: {
        const double e = sp.eps;
        v = 8.0 / 9.0 * std::pow(3.0 / (4.0 * e) + 1.0, f) * (3.0 / (4.0 * e) - 1.0) * L;
        break;
      }
      default:
        throw SpecError("raw_grid: scheme has no (tau, rho) grid");
    }
    out.push_back(v);
  }
  return out;
}

void set_zeta(SamplingPlan& plan) {
  plan.zeta = plan.spec.zeta ? *plan.spec.zeta : default_zeta(plan.tau);
  plan.log_zd = std::log(plan.zeta) + std::log(plan.spec.delta);
  if (!(plan.log_zd < 0.0)) fail(plan.spec.scheme, "requires zeta*delta < 1");
}

void fill_grid(SamplingPlan& plan) {
  std::vector<std::int64_t> v;
  for (double x : raw_grid(plan)) v.push_back(ceil_stage(x));
  plan.stages = dedup(std::move(v));
}

void fill_inverse_thresholds(SamplingPlan& plan) {
  const double e = plan.spec.eps;
  plan.thresholds.clear();
  for (auto g : plan.stages)
    plan.thresholds.push_back(1.0 + 2.0 * e / (3.0 + e) +
                              9.0 * e * e * static_cast<double>(g) /
                                  (2.0 * (3.0 + e) * (3.0 + e) * plan.log_zd));
}

void check_floors(SamplingPlan& plan) {
  const auto& sp = plan.spec;
  const double last = static_cast<double>(plan.stages.back());
  std::ostringstream os;
  switch (sp.scheme) {
    case Scheme::Mixed: {
      const double ps = sp.eps_a / sp.eps_r;
      const double floor = plan.log_zd / m_fn(ps + sp.eps_a, ps);
      if (last < floor) {
        os << "final stage " << plan.stages.back() << " is below the mixed-scheme floor " << floor;
        plan.notes.push_back(os.str());
      }
      break;
    }
    case Scheme::RelInverse: {
      const double e = sp.eps;
      const double floor = plan.log_zd / (-e * e / (2.0 * (1.0 + e / 3.0) * (1.0 + e)));
      if (last < floor) {
        os << "final target " << plan.stages.back() << " is below the inverse-scheme floor " << floor;
        plan.notes.push_back(os.str());
      }
      break;
    }
    default:
      break;
  }
}

}  // namespace

std::string to_string(Scheme s) {
  for (const auto& n : kNames)
    if (n.scheme == s) return n.name;
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  for (const auto& n : kNames)
    if (name == n.name) return n.scheme;
  throw SpecError("unknown scheme '" + name + "'");
}

const std::vector<Scheme>& all_schemes() {
  static const std::vector<Scheme> v = [] {
    std::vector<Scheme> out;
    for (const auto& n : kNames) out.push_back(n.scheme);
    return out;
  }();
  return v;
}

bool is_fixed_width(Scheme s) {
  return s == Scheme::FWCp || s == Scheme::FWCh || s == Scheme::FWMassart;
}

bool is_bounded(Scheme s) {
  return s == Scheme::BoundedAbs || s == Scheme::BoundedMixed || s == Scheme::GeneralMixed;
}

double default_zeta(std::int64_t tau) {
  if (tau < 0) throw SpecError("default_zeta: tau must be >= 0");
  return (1.0 - std::ldexp(1.0, -20)) / (2.0 * static_cast<double>(tau + 1));
}

void validate_spec(const PrecisionSpec& sp) {
  const Scheme s = sp.scheme;
  if (!open_unit(sp.delta)) fail(s, "requires 0 < delta < 1");
  if (!(sp.rho > 0.0)) fail(s, "requires rho > 0");
  if (sp.zeta && !(*sp.zeta > 0.0 && *sp.zeta < 1.0)) fail(s, "requires 0 < zeta < 1");
  auto mixed_eps = [&] {
    if (!(sp.eps_a > 0.0 && sp.eps_a < 0.375)) fail(s, "requires 0 < eps_a < 3/8");
    if (!(sp.eps_r < 1.0)) fail(s, "requires eps_r < 1");
    if (!(sp.eps_r > 6.0 * sp.eps_a / (3.0 - 2.0 * sp.eps_a)))
      fail(s, "requires eps_r > 6 eps_a / (3 - 2 eps_a)");
  };
  switch (s) {
    case Scheme::Abs:
    case Scheme::FWCp:
    case Scheme::FWCh:
    case Scheme::FWMassart:
    case Scheme::BoundedAbs:
      if (!(sp.eps > 0.0 && sp.eps < 0.5)) fail(s, "requires 0 < eps < 1/2");
      break;
    case Scheme::Mixed:
    case Scheme::BoundedMixed:
      mixed_eps();
      break;
    case Scheme::RelInverse:
      if (!open_unit(sp.eps)) fail(s, "requires 0 < eps < 1");
      break;
    case Scheme::RelFixed:
      if (!open_unit(sp.eps)) fail(s, "requires 0 < eps < 1");
      if (sp.tau_free < 1) fail(s, "requires a positive integer tau");
      if (sp.zeta && 2.0 * static_cast<double>(sp.tau_free + 1) * *sp.zeta > 1.0)
        fail(s, "requires 2 (tau+1) zeta <= 1");
      if (sp.first_stage < 0) fail(s, "requires first_stage >= 1");
      if (!(sp.growth > 1.0)) fail(s, "requires stage growth ratio > 1");
      break;
    case Scheme::GeneralMixed:
      if (!(sp.eps_a > 0.0)) fail(s, "requires eps_a > 0");
      if (!open_unit(sp.eps_r)) fail(s, "requires 0 < eps_r < 1");
      if (!(sp.range_lo < sp.range_hi)) fail(s, "requires a < b");
      break;
  }
  if (is_bounded(s)) {
    if (sp.stage_count < 1) fail(s, "requires s >= 1");
    if (sp.zeta) fail(s, "zeta is not a parameter of this scheme");
  }
}

SamplingPlan build_abs_plan(const PrecisionSpec& spec) {
  if (spec.scheme != Scheme::Abs) throw SpecError("build_abs_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  const double e = spec.eps;
  p.tau = tau_for(9.0 / (24.0 * e - 16.0 * e * e), spec.rho);
  set_zeta(p);
  fill_grid(p);
  return p;
}

SamplingPlan build_mixed_plan(const PrecisionSpec& spec) {
  if (spec.scheme != Scheme::Mixed) throw SpecError("build_mixed_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  p.tau = tau_for(1.5 * (1.0 / spec.eps_a - 1.0 / spec.eps_r - 1.0 / 3.0), spec.rho);
  set_zeta(p);
  fill_grid(p);
  check_floors(p);
  return p;
}

SamplingPlan build_rel_inverse_plan(const PrecisionSpec& spec) {
  if (spec.scheme != Scheme::RelInverse) throw SpecError("build_rel_inverse_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  p.tau = tau_for(1.5 * (1.0 / spec.eps + 1.0), spec.rho);
  set_zeta(p);
  fill_grid(p);
  fill_inverse_thresholds(p);
  check_floors(p);
  return p;
}

SamplingPlan build_rel_fixed_plan(const PrecisionSpec& spec) {
  if (spec.scheme != Scheme::RelFixed) throw SpecError("build_rel_fixed_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  p.tau = spec.tau_free;
  set_zeta(p);
  const double e = spec.eps;
  if (p.spec.first_stage == 0)
    p.spec.first_stage = ceil_stage(4.0 * (3.0 + e) * (-p.log_zd) / (9.0 * e));
  p.stages.clear();
  for (std::size_t ell = 1; ell <= static_cast<std::size_t>(p.tau) + 8; ++ell)
    p.stages.push_back(p.stage_size(ell));
  return p;
}

SamplingPlan build_fw_plan(const PrecisionSpec& spec) {
  if (spec.scheme != Scheme::FWCp && spec.scheme != Scheme::FWCh)
    throw SpecError("build_fw_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  const double e = spec.eps;
  p.tau = tau_for(std::log(1.0 / (1.0 - 2.0 * e)) / (2.0 * e * e), spec.rho);
  set_zeta(p);
  fill_grid(p);
  return p;
}

SamplingPlan build_massart_fw_plan(const PrecisionSpec& spec) {
  if (spec.scheme != Scheme::FWMassart) throw SpecError("build_massart_fw_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  p.tau = tau_for(3.0 / (4.0 * spec.eps) + 1.0, spec.rho);
  set_zeta(p);
  fill_grid(p);
  return p;
}

double bounded_floor(const PrecisionSpec& sp) {
  const double l = std::log(2.0 * static_cast<double>(sp.stage_count) / sp.delta);
  switch (sp.scheme) {
    case Scheme::BoundedAbs:
      return l / (2.0 * sp.eps * sp.eps);
    case Scheme::BoundedMixed:
      return 2.0 * (1.0 / sp.eps_r + 1.0 / 3.0) * (1.0 / sp.eps_a - 1.0 / sp.eps_r - 1.0 / 3.0) * l;
    case Scheme::GeneralMixed: {
      const double w = sp.range_hi - sp.range_lo;
      return w * w / (2.0 * sp.eps_a * sp.eps_a) * l;
    }
    default:
      throw SpecError("bounded_floor: not a bounded-variable scheme");
  }
}

SamplingPlan build_bounded_plan(const PrecisionSpec& spec) {
  if (!is_bounded(spec.scheme)) throw SpecError("build_bounded_plan: wrong scheme");
  validate_spec(spec);
  SamplingPlan p;
  p.spec = spec;
  const std::int64_t s = spec.stage_count;
  p.tau = s - 1;
  // zeta*delta plays the role of delta/(2s) in these schemes
  p.zeta = 1.0 / (2.0 * static_cast<double>(s));
  p.log_zd = std::log(spec.delta / (2.0 * static_cast<double>(s)));
  const std::int64_t last = ceil_stage(bounded_floor(spec));
  std::vector<std::int64_t> v;
  for (std::int64_t ell = 1; ell <= s; ++ell) {
    const std::int64_t shift = s - ell;
    v.push_back(shift >= 62 ? 1 : std::max<std::int64_t>(1, (last + (std::int64_t{1} << shift) - 1) >> shift));
  }
  p.stages = dedup(std::move(v));
  return p;
}

SamplingPlan build_plan(const PrecisionSpec& spec) {
  switch (spec.scheme) {
    case Scheme::Abs: return build_abs_plan(spec);
    case Scheme::Mixed: return build_mixed_plan(spec);
    case Scheme::RelInverse: return build_rel_inverse_plan(spec);
    case Scheme::RelFixed: return build_rel_fixed_plan(spec);
    case Scheme::FWCp:
    case Scheme::FWCh: return build_fw_plan(spec);
    case Scheme::FWMassart: return build_massart_fw_plan(spec);
    case Scheme::BoundedAbs:
    case Scheme::BoundedMixed:
    case Scheme::GeneralMixed: return build_bounded_plan(spec);
  }
  throw SpecError("unknown scheme");
}

std::int64_t SamplingPlan::stage_size(std::size_t ell) const {
  if (ell < 1) throw std::out_of_range("stage index starts at 1");
  if (!open_ended()) {
    if (ell > stages.size()) throw std::out_of_range("stage index beyond the plan");
    return stages[ell - 1];
  }
  if (custom_grid && ell <= stages.size()) return stages[ell - 1];
  std::int64_t prev = 0;
  std::size_t start = 1;
  if (custom_grid) {
    prev = stages.back();
    start = stages.size() + 1;
  }
  std::int64_t cur = prev;
  for (std::size_t i = start; i <= ell; ++i) {
    double v = custom_grid ? static_cast<double>(prev) * spec.growth
                           : static_cast<double>(spec.first_stage) *
                                 std::pow(spec.growth, static_cast<double>(i - 1));
    cur = std::max(prev + 1, ceil_stage(v));
    prev = cur;
  }
  return cur;
}

double SamplingPlan::stage_delta(std::size_t ell) const {
  if (!open_ended() || static_cast<std::int64_t>(ell) <= tau) return spec.delta;
  return spec.delta * std::ldexp(1.0, static_cast<int>(tau - static_cast<std::int64_t>(ell)));
}

double SamplingPlan::stage_log_zd(std::size_t ell) const {
  if (!open_ended() || static_cast<std::int64_t>(ell) <= tau) return log_zd;
  return log_zd - static_cast<double>(static_cast<std::int64_t>(ell) - tau) * std::log(2.0);
}

SamplingPlan with_stages(const SamplingPlan& plan, std::vector<std::int64_t> stages) {
  if (stages.empty()) throw SpecError("grid must not be empty");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i] < 1) throw SpecError("grid entries must be positive");
    if (i > 0 && stages[i] <= stages[i - 1]) throw SpecError("grid must be strictly increasing");
  }
  SamplingPlan p = plan;
  p.stages = std::move(stages);
  p.custom_grid = true;
  p.notes.clear();
  if (p.inverse()) fill_inverse_thresholds(p);
  if (is_bounded(p.scheme()) && static_cast<double>(p.stages.back()) < bounded_floor(p.spec))
    throw SpecError(to_string(p.scheme()) + ": final stage is below the sample-size floor");
  return p;
}

std::vector<std::string> explain_plan(const SamplingPlan& plan) {
  std::vector<std::string> out;
  std::ostringstream head;
  head.precision(10);
  head << to_string(plan.scheme()) << ": tau=" << plan.tau << " zeta=" << plan.zeta
       << " ln(zeta*delta)=" << plan.log_zd;
  out.push_back(head.str());
  if (plan.custom_grid || plan.open_ended() || is_bounded(plan.scheme())) {
    for (std::size_t ell = 1; ell <= plan.stages.size(); ++ell) {
      std::ostringstream os;
      os << "stage " << ell << ": " << plan.stage_size(ell);
      if (plan.open_ended()) os << " (delta_l=" << plan.stage_delta(ell) << ")";
      out.push_back(os.str());
    }
    return out;
  }
  const auto raw = raw_grid(plan);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::ostringstream os;
    os.precision(12);
    os << "i=" << i << ": ceil(" << raw[i] << ") = " << ceil_stage(raw[i]);
    out.push_back(os.str());
  }
  return out;
}

}  // namespace seqest
