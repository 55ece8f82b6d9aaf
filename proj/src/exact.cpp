#include "seqest/exact.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "seqest/distributions.hpp"
#include "seqest/kernels.hpp"
#include "seqest/rules.hpp"

namespace seqest {
namespace {

constexpr std::int64_t kAlways = CompiledRule::kAlways;
constexpr std::int64_t kAtomCap = 20'000'000;

struct Span {
  std::int64_t offset = 0;
  std::vector<double> v;
};

// Bin(m, p) masses trimmed to the entries above `trim`; dropped mass returned.
Span trimmed_binomial(std::int64_t m, double p, double trim, double& dropped) {
  auto full = binom_pmf_vector(m, p);
  std::size_t lo = 0, hi = full.size();
  while (lo < hi && full[lo] < trim) ++lo;
  while (hi > lo && full[hi - 1] < trim) --hi;
  for (std::size_t i = 0; i < lo; ++i) dropped += full[i];
  for (std::size_t i = hi; i < full.size(); ++i) dropped += full[i];
  Span s;
  s.offset = static_cast<std::int64_t>(lo);
  s.v.assign(full.begin() + static_cast<std::ptrdiff_t>(lo), full.begin() + static_cast<std::ptrdiff_t>(hi));
  return s;
}

// Bin(m, p) masses at k = 0..kmax (zeros past m).
std::vector<double> binomial_prefix(std::int64_t m, double p, std::int64_t kmax) {
  std::vector<double> out(static_cast<std::size_t>(kmax + 1), 0.0);
  if (kmax < 0) return out;
  if (m == 0) {
    out[0] = 1.0;
    return out;
  }
  const std::int64_t top = std::min(kmax, m);
  const double q = 1.0 - p;
  const auto mode = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::floor((static_cast<double>(m) + 1.0) * p)), 0, m);
  const std::int64_t a = std::min(top, mode);
  out[a] = std::exp(binom_pmf(m, a, p));
  for (std::int64_t j = a; j < top; ++j)
    out[j + 1] = out[j] * (static_cast<double>(m - j) / static_cast<double>(j + 1) * p / q);
  for (std::int64_t j = a; j > 0; --j)
    out[j - 1] = out[j] / (static_cast<double>(m - j + 1) / static_cast<double>(j) * p / q);
  return out;
}

std::vector<double> cumulative(const std::vector<double>& v) {
  std::vector<double> c(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i];
    c[i] = std::min(1.0, s);
  }
  return c;
}

bool holds(int cmp, Direction d) {
  switch (d) {
    case Direction::Ge: return cmp >= 0;
    case Direction::Gt: return cmp > 0;
    case Direction::Le: return cmp <= 0;
    case Direction::Lt: return cmp < 0;
  }
  return false;
}

int compare_double(double x, double t) { return x < t ? -1 : (x > t ? 1 : 0); }

std::optional<Rational> exact_of(double x) { return exact_decimal(x); }

Threshold make_threshold(double v, std::optional<Rational> r) {
  Threshold t;
  t.value = r ? r->to_double() : v;
  t.exact = r;
  if (!r) t.value = v;
  return t;
}

Threshold shift(const Threshold& p, double eps, int sign) {
  std::optional<Rational> r;
  if (p.exact) {
    if (auto e = exact_of(eps)) r = sign > 0 ? add(*p.exact, *e) : sub(*p.exact, *e);
  }
  return make_threshold(p.value + sign * eps, r);
}

Threshold scale(const Threshold& p, double eps, int sign) {
  std::optional<Rational> r;
  if (p.exact) {
    if (auto e = exact_of(eps)) {
      if (auto f = sign > 0 ? add(Rational::of(1), *e) : sub(Rational::of(1), *e)) r = mul(*p.exact, *f);
    }
  }
  return make_threshold(p.value * (1.0 + sign * eps), r);
}

// floor and ceil of g / t, exactly when possible.
std::int64_t clamp_i64(double x) {
  if (x >= 9.0e18) return kAlways / 2;
  if (x <= -9.0e18) return -(kAlways / 2);
  return static_cast<std::int64_t>(x);
}

std::int64_t floor_div(std::int64_t g, const Threshold& t) {
  if (t.exact && t.exact->num != 0) {
    if (auto q = div(Rational::of(g), *t.exact)) {
      __int128 f = q->num / q->den;
      if ((q->num % q->den != 0) && (q->num < 0)) --f;
      if (f > kAlways / 2) return kAlways / 2;
      if (f < -(kAlways / 2)) return -(kAlways / 2);
      return static_cast<std::int64_t>(f);
    }
  }
  return clamp_i64(std::floor(static_cast<double>(g) / t.value));
}

std::int64_t ceil_div(std::int64_t g, const Threshold& t) {
  if (t.exact && t.exact->num != 0) {
    if (auto q = div(Rational::of(g), *t.exact)) {
      __int128 f = q->num / q->den;
      if ((q->num % q->den != 0) && (q->num > 0)) ++f;
      if (f > kAlways / 2) return kAlways / 2;
      if (f < -(kAlways / 2)) return -(kAlways / 2);
      return static_cast<std::int64_t>(f);
    }
  }
  return clamp_i64(std::ceil(static_cast<double>(g) / t.value));
}

}  // namespace

// ---------------------------------------------------------------- rules

CompiledRule::CompiledRule(SamplingPlan plan) : plan_(std::move(plan)) { compile(); }

CompiledRule::CompiledRule(SamplingPlan plan, StopPredicate pred)
    : plan_(std::move(plan)), custom_(std::move(pred)) {
  if (plan_.inverse()) throw SpecError("custom stop predicates need a fixed-size plan");
  if (plan_.open_ended()) throw SpecError("custom stop predicates need a finite plan");
  compile();
}

void CompiledRule::compile() {
  if (is_bounded(plan_.scheme()))
    throw SpecError(to_string(plan_.scheme()) + ": no exact analysis for bounded-variable schemes");
  if (plan_.inverse()) {
    for (std::size_t ell = 1; ell <= plan_.stage_count(); ++ell) {
      const std::int64_t g = plan_.stage_size(ell);
      if (plan_.is_last(ell) || plan_.thresholds[ell - 1] <= 0.0) {
        cutoffs_.push_back(kAlways);
        continue;
      }
      const double z = plan_.thresholds[ell - 1];
      auto stops_at = [&](std::int64_t n) { return decide_rel_inverse(plan_, {ell, n}); };
      std::int64_t c = std::max<std::int64_t>(g - 1, clamp_i64(std::floor(static_cast<double>(g) / z)));
      while (c >= g && !stops_at(c)) --c;
      while (stops_at(std::max(c + 1, g)) && c + 1 >= g) ++c;
      cutoffs_.push_back(c);
    }
    return;
  }
  if (plan_.open_ended()) return;
  const bool fw = is_fixed_width(plan_.scheme()) && !custom_;
  for (std::size_t ell = 1; ell <= plan_.stage_count(); ++ell) {
    const std::int64_t n = plan_.stage_size(ell);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(n + 1));
    std::vector<ConfidenceInterval> ivs;
    if (is_fixed_width(plan_.scheme())) ivs.reserve(static_cast<std::size_t>(n + 1));
    for (std::int64_t k = 0; k <= n; ++k) {
      if (is_fixed_width(plan_.scheme())) ivs.push_back(plan_interval(plan_, n, k));
      bool s;
      if (custom_)
        s = custom_(ell, k);
      else if (fw)
        s = decide_fw(plan_, {ell, k});
      else
        s = decide(plan_, {ell, k});
      row[static_cast<std::size_t>(k)] = s ? 1 : 0;
    }
    table_.push_back(std::move(row));
    if (!ivs.empty()) intervals_.push_back(std::move(ivs));
  }
}

bool CompiledRule::stops(std::size_t stage, std::int64_t statistic) const {
  if (plan_.inverse()) {
    const std::int64_t c = cutoff(stage);
    return c == kAlways || statistic <= c;
  }
  if (plan_.open_ended()) return decide_rel_fixed(plan_, {stage, statistic});
  return table_.at(stage - 1).at(static_cast<std::size_t>(statistic)) != 0;
}

std::size_t CompiledRule::stage_limit(const EngineOptions& opt) const {
  return plan_.open_ended() ? opt.max_open_stages : plan_.stage_count();
}

const ConfidenceInterval& CompiledRule::interval(std::size_t stage, std::int64_t k) const {
  return intervals_.at(stage - 1).at(static_cast<std::size_t>(k));
}

// ---------------------------------------------------------------- distributions

double StageMass::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

double StageStopDistribution::total_stop_mass() const {
  double s = 0.0;
  for (const auto& st : stops) s += st.total();
  return s;
}

double StageStopDistribution::stop_probability(std::size_t stage) const {
  for (const auto& st : stops)
    if (st.stage == stage) return st.total();
  return 0.0;
}

double StageStopDistribution::atom(std::size_t stage, std::int64_t statistic) const {
  for (const auto& st : stops) {
    if (st.stage != stage) continue;
    const std::int64_t i = statistic - st.offset;
    if (i < 0 || i >= static_cast<std::int64_t>(st.mass.size())) return 0.0;
    return st.mass[static_cast<std::size_t>(i)];
  }
  return 0.0;
}

namespace {

void finish_moments(StageStopDistribution& d) {
  double m1 = 0.0, m2 = 0.0;
  for (const auto& st : d.stops) {
    for (std::size_t i = 0; i < st.mass.size(); ++i) {
      const double n = d.inverse ? static_cast<double>(st.offset + static_cast<std::int64_t>(i))
                                 : static_cast<double>(st.stage_size);
      m1 += st.mass[i] * n;
      m2 += st.mass[i] * n * n;
    }
  }
  d.expected_sample_size = m1;
  d.sample_size_variance = std::max(0.0, m2 - m1 * m1);
}

StageStopDistribution fixed_size_dp(const CompiledRule& rule, double p, const EngineOptions& opt) {
  const SamplingPlan& plan = rule.plan();
  StageStopDistribution d;
  d.p = p;
  std::vector<double> surv{1.0};
  std::int64_t off = 0, prev_n = 0;
  double dropped = 0.0, stopped = 0.0;
  const std::size_t limit = rule.stage_limit(opt);
  for (std::size_t ell = 1; ell <= limit; ++ell) {
    const std::int64_t n = plan.stage_size(ell);
    d.survivor_mass.push_back(std::accumulate(surv.begin(), surv.end(), 0.0));
    const Span inc = trimmed_binomial(n - prev_n, p, opt.trim, dropped);
    std::vector<double> cur(surv.size() + inc.v.size() - 1, 0.0);
    for (std::size_t i = 0; i < surv.size(); ++i) {
      const double a = surv[i];
      if (a == 0.0) continue;
      double* out = cur.data() + i;
      for (std::size_t j = 0; j < inc.v.size(); ++j) out[j] += a * inc.v[j];
    }
    const std::int64_t cur_off = off + inc.offset;
    StageMass sm;
    sm.stage = ell;
    sm.stage_size = n;
    sm.offset = cur_off;
    sm.mass.assign(cur.size(), 0.0);
    std::vector<double> next(cur.size(), 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (rule.stops(ell, cur_off + static_cast<std::int64_t>(i)))
        sm.mass[i] = cur[i];
      else
        next[i] = cur[i];
    }
    stopped += sm.total();
    d.stops.push_back(std::move(sm));
    // shrink the survivor window to its nonzero range
    std::size_t lo = 0, hi = next.size();
    while (lo < hi && next[lo] == 0.0) ++lo;
    while (hi > lo && next[hi - 1] == 0.0) --hi;
    surv.assign(next.begin() + static_cast<std::ptrdiff_t>(lo), next.begin() + static_cast<std::ptrdiff_t>(hi));
    off = cur_off + static_cast<std::int64_t>(lo);
    prev_n = n;
    if (surv.empty()) break;
    if (plan.open_ended() && stopped > 1.0 - opt.tail_tolerance) break;
  }
  d.truncation_error = dropped + std::accumulate(surv.begin(), surv.end(), 0.0);
  finish_moments(d);
  return d;
}

// Inverse scheme.  With c_l the largest count that stops at stage l, stopping
// at l means K(c_i) < gamma_i for i < l and n_l <= c_l, so the state carried
// between stages is the success count at the previous cutoff.
struct InverseStage {
  std::size_t stage = 0;
  std::int64_t gamma = 0;
  std::int64_t t_prev = 0;       // previous effective cutoff
  std::int64_t cutoff = 0;       // kAlways or a finite count
  std::vector<double> surv;      // surv[j] = P(survived, K(t_prev) = j)
};

struct InverseLattice {
  double p = 0.0;
  std::vector<InverseStage> stages;

  InverseLattice(const CompiledRule& rule, double p_) : p(p_) {
    const SamplingPlan& plan = rule.plan();
    std::vector<double> surv{1.0};
    std::int64_t t_prev = 0;
    for (std::size_t ell = 1; ell <= plan.stage_count(); ++ell) {
      InverseStage st;
      st.stage = ell;
      st.gamma = plan.stage_size(ell);
      st.t_prev = t_prev;
      st.cutoff = rule.cutoff(ell);
      st.surv = surv;
      stages.push_back(st);
      if (st.cutoff == kAlways) break;
      const std::int64_t t = std::max(st.cutoff, t_prev);
      const auto bin = binomial_prefix(t - t_prev, p, st.gamma - 1);
      std::vector<double> next(static_cast<std::size_t>(st.gamma), 0.0);
      for (std::size_t j = 0; j < surv.size(); ++j) {
        if (surv[j] == 0.0) continue;
        for (std::size_t jj = j; jj < next.size(); ++jj) next[jj] += surv[j] * bin[jj - j];
      }
      surv = std::move(next);
      t_prev = t;
    }
  }

  // P{stop at this stage with sample count in [lo, hi]}, hi = kAlways for no bound.
  double range_mass(const InverseStage& st, std::int64_t lo, std::int64_t hi) const {
    lo = std::max({lo, st.t_prev + 1, st.gamma});
    if (st.cutoff != kAlways) {
      if (st.cutoff < st.gamma || st.cutoff <= st.t_prev) return 0.0;
      hi = std::min(hi, st.cutoff);
    }
    if (lo > hi) return 0.0;
    // F_m(r) = P(Bin(m - t_prev, p) <= r)
    const auto f_lo = cumulative(binomial_prefix(lo - 1 - st.t_prev, p, st.gamma - 1));
    std::vector<double> f_hi;
    const bool open = hi >= kAlways / 2;
    if (!open) f_hi = cumulative(binomial_prefix(hi - st.t_prev, p, st.gamma - 1));
    double s = 0.0;
    for (std::size_t j = 0; j < st.surv.size(); ++j) {
      if (st.surv[j] == 0.0) continue;
      const auto r = static_cast<std::size_t>(st.gamma - 1) - j;
      const double term = open ? f_lo[r] : f_lo[r] - f_hi[r];
      s += st.surv[j] * std::max(0.0, term);
    }
    return s;
  }

  StageStopDistribution atoms(const EngineOptions& opt) const {
    StageStopDistribution d;
    d.p = p;
    d.inverse = true;
    for (const auto& st : stages) {
      d.survivor_mass.push_back(std::accumulate(st.surv.begin(), st.surv.end(), 0.0));
      StageMass sm;
      sm.stage = st.stage;
      sm.stage_size = st.gamma;
      sm.offset = std::max(st.t_prev + 1, st.gamma);
      const bool open = st.cutoff == kAlways;
      std::int64_t last = open ? kAlways : st.cutoff;
      for (std::int64_t n = sm.offset; n <= last; ++n) {
        // P(gamma - j more successes, the last at trial n - t_prev)
        const auto b = binomial_prefix(n - 1 - st.t_prev, p, st.gamma - 1);
        double a = 0.0;
        for (std::size_t j = 0; j < st.surv.size(); ++j)
          if (st.surv[j] != 0.0) a += st.surv[j] * b[static_cast<std::size_t>(st.gamma - 1) - j];
        sm.mass.push_back(p * a);
        if (open && (sm.mass.size() % 64 == 0 || n - sm.offset > kAtomCap)) {
          const double rest = range_mass(st, n + 1, kAlways);
          if (rest < opt.tail_tolerance || n - sm.offset > kAtomCap) {
            d.truncation_error += rest;
            break;
          }
        }
      }
      d.stops.push_back(std::move(sm));
    }
    finish_moments(d);
    return d;
  }
};

}  // namespace

StageStopDistribution stop_distribution(const CompiledRule& rule, double p, const EngineOptions& opt) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) throw std::domain_error("stop_distribution: p outside [0,1]");
  if (rule.plan().inverse()) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse sampling needs p in (0,1)");
    return InverseLattice(rule, p).atoms(opt);
  }
  return fixed_size_dp(rule, p, opt);
}

ErrorSums error_sums(const StageStopDistribution& dist, const EventClassifier& cls) {
  ErrorSums e;
  for (const auto& st : dist.stops) {
    double over = 0.0, under = 0.0;
    for (std::size_t i = 0; i < st.mass.size(); ++i) {
      const auto c = cls(st.stage, st.stage_size, st.offset + static_cast<std::int64_t>(i));
      if (c == ErrorClass::Over) over += st.mass[i];
      if (c == ErrorClass::Under) under += st.mass[i];
    }
    e.over.push_back(over);
    e.under.push_back(under);
    e.total_over += over;
    e.total_under += under;
  }
  return e;
}

// ---------------------------------------------------------------- analysis

struct Analysis::Impl {
  const CompiledRule* rule = nullptr;
  std::optional<StageStopDistribution> dist;
  std::optional<InverseLattice> lattice;
};

Analysis::Analysis(const CompiledRule& rule, double p, const EngineOptions& opt)
    : impl_(std::make_unique<Impl>()) {
  impl_->rule = &rule;
  if (rule.plan().inverse()) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse sampling needs p in (0,1)");
    impl_->lattice.emplace(rule, p);
  } else {
    impl_->dist = fixed_size_dp(rule, p, opt);
  }
}

Analysis::~Analysis() = default;
Analysis::Analysis(Analysis&&) noexcept = default;
Analysis& Analysis::operator=(Analysis&&) noexcept = default;

double Analysis::truncation_error() const {
  return impl_->dist ? impl_->dist->truncation_error : 0.0;
}

std::size_t Analysis::stages() const {
  return impl_->dist ? impl_->dist->stops.size() : impl_->lattice->stages.size();
}

std::vector<double> Analysis::event_masses(const Event& e) const {
  std::vector<double> out;
  if (impl_->lattice) {
    if (e.on != Event::On::Estimate) throw std::invalid_argument("inverse scheme has no interval ends");
    const auto& lat = *impl_->lattice;
    for (const auto& st : lat.stages) {
      const std::int64_t g = st.gamma;
      std::int64_t lo = 0, hi = kAlways;
      // estimate is g/n, decreasing in n
      if (e.t.value <= 0.0 && !(e.t.exact && e.t.exact->num > 0)) {
        const bool all = (e.dir == Direction::Ge) || (e.dir == Direction::Gt && e.t.value < 0.0);
        out.push_back(all ? lat.range_mass(st, 0, kAlways) : 0.0);
        continue;
      }
      switch (e.dir) {
        case Direction::Ge: hi = floor_div(g, e.t); break;
        case Direction::Gt: hi = ceil_div(g, e.t) - 1; break;
        case Direction::Le: lo = ceil_div(g, e.t); break;
        case Direction::Lt: lo = floor_div(g, e.t) + 1; break;
      }
      out.push_back(lat.range_mass(st, lo, hi));
    }
    return out;
  }
  const auto& d = *impl_->dist;
  const CompiledRule& rule = *impl_->rule;
  for (const auto& st : d.stops) {
    double s = 0.0;
    for (std::size_t i = 0; i < st.mass.size(); ++i) {
      if (st.mass[i] == 0.0) continue;
      const std::int64_t k = st.offset + static_cast<std::int64_t>(i);
      int c = 0;
      switch (e.on) {
        case Event::On::Estimate: c = compare_ratio(k, st.stage_size, e.t); break;
        case Event::On::Lower: c = compare_double(rule.interval(st.stage, k).lower, e.t.value); break;
        case Event::On::Upper: c = compare_double(rule.interval(st.stage, k).upper, e.t.value); break;
      }
      if (holds(c, e.dir)) s += st.mass[i];
    }
    out.push_back(s);
  }
  return out;
}

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Threshold point_threshold(double p) { return make_threshold(p, exact_decimal(p)); }

}  // namespace

std::pair<Event, Event> failure_events(const CompiledRule& rule, const Threshold& p) {
  const auto& sp = rule.plan().spec;
  using On = Event::On;
  switch (rule.plan().scheme()) {
    case Scheme::Abs:
      return {{On::Estimate, Direction::Ge, shift(p, sp.eps, +1)},
              {On::Estimate, Direction::Le, shift(p, sp.eps, -1)}};
    case Scheme::Mixed: {
      // |p_hat - p| >= max(eps_a, eps_r p)
      std::optional<Rational> margin_exact;
      const auto ea = exact_decimal(sp.eps_a);
      std::optional<Rational> re;
      if (p.exact) {
        if (auto er = exact_decimal(sp.eps_r)) re = mul(*p.exact, *er);
      }
      double margin = std::max(sp.eps_a, sp.eps_r * p.value);
      if (ea && re) {
        if (auto c = compare(*ea, *re)) margin_exact = *c >= 0 ? *ea : *re;
      }
      Threshold up, dn;
      if (margin_exact && p.exact) {
        up = make_threshold(p.value + margin, add(*p.exact, *margin_exact));
        dn = make_threshold(p.value - margin, sub(*p.exact, *margin_exact));
      } else {
        up = make_threshold(p.value + margin, std::nullopt);
        dn = make_threshold(p.value - margin, std::nullopt);
      }
      return {{On::Estimate, Direction::Ge, up}, {On::Estimate, Direction::Le, dn}};
    }
    case Scheme::RelInverse:
    case Scheme::RelFixed:
      return {{On::Estimate, Direction::Gt, scale(p, sp.eps, +1)},
              {On::Estimate, Direction::Lt, scale(p, sp.eps, -1)}};
    case Scheme::FWCp:
    case Scheme::FWCh:
    case Scheme::FWMassart:
      return {{On::Lower, Direction::Ge, p}, {On::Upper, Direction::Le, p}};
    default:
      throw SpecError("coverage: no exact analysis for this scheme");
  }
}

bool event_holds(const Event& e, std::int64_t k, std::int64_t n, const ConfidenceInterval* ci) {
  int c = 0;
  switch (e.on) {
    case Event::On::Estimate: c = compare_ratio(k, n, e.t); break;
    case Event::On::Lower:
    case Event::On::Upper:
      if (!ci) throw std::invalid_argument("event_holds: interval event without an interval");
      c = compare_double(e.on == Event::On::Lower ? ci->lower : ci->upper, e.t.value);
      break;
  }
  return holds(c, e.dir);
}

CoverageResult coverage(const CompiledRule& rule, const Threshold& p, const EngineOptions& opt) {
  Analysis a(rule, p.value, opt);
  const auto ev = failure_events(rule, p);
  CoverageResult r;
  r.p = p.value;
  r.over = total(a.event_masses(ev.first));
  r.under = total(a.event_masses(ev.second));
  r.truncation = a.truncation_error();
  r.coverage = std::max(0.0, 1.0 - r.truncation - r.over - r.under);
  return r;
}

CoverageResult coverage(const CompiledRule& rule, double p, const EngineOptions& opt) {
  return coverage(rule, point_threshold(p), opt);
}

// ---------------------------------------------------------------- Q-sets

namespace {

void sort_unique(std::vector<QPoint>& pts) {
  std::stable_sort(pts.begin(), pts.end(), [](const QPoint& a, const QPoint& b) {
    if (a.p.value != b.p.value) return a.p.value < b.p.value;
    if (a.p.exact && b.p.exact) {
      if (auto c = compare(*a.p.exact, *b.p.exact)) return *c < 0;
    }
    return false;
  });
  std::vector<QPoint> out;
  for (const auto& q : pts) {
    if (!out.empty()) {
      const auto& b = out.back();
      bool same = b.p.value == q.p.value;
      if (b.p.exact && q.p.exact) {
        if (auto c = compare(*b.p.exact, *q.p.exact)) same = *c == 0;
      }
      if (same) continue;
    }
    out.push_back(q);
  }
  pts = std::move(out);
}

// lo < v < hi with exact comparison where available.
bool inside(const Threshold& v, const Threshold& lo, const Threshold& hi) {
  auto cmp = [](const Threshold& a, const Threshold& b) {
    if (a.exact && b.exact) {
      if (auto c = compare(*a.exact, *b.exact)) return *c;
    }
    return compare_double(a.value, b.value);
  };
  return cmp(v, lo) > 0 && cmp(v, hi) < 0;
}

Threshold ratio_threshold(std::int64_t k, std::int64_t n) {
  const auto r = Rational::of(k, n);
  return make_threshold(static_cast<double>(k) / static_cast<double>(n), r);
}

// k/n + sign*eps over all stages and k in [0, n], kept when inside (lo, hi).
std::vector<QPoint> shifted_points(const SamplingPlan& plan, double eps, int sign, const Threshold& lo,
                                   const Threshold& hi) {
  std::vector<QPoint> pts;
  for (std::size_t ell = 1; ell <= plan.stage_count(); ++ell) {
    const std::int64_t n = plan.stage_size(ell);
    for (std::int64_t k = 0; k <= n; ++k) {
      auto v = shift(ratio_threshold(k, n), eps, sign);
      if (inside(v, lo, hi)) pts.push_back({v, ell, k});
    }
  }
  return pts;
}

// k/(n(1 + sign*eps)) for k in [0, n] (or gamma/(m(1+sign eps)) for m >= 1).
Threshold divided(std::int64_t num, std::int64_t den, double eps, int sign) {
  std::optional<Rational> r;
  if (auto e = exact_decimal(eps)) {
    if (auto f = sign > 0 ? add(Rational::of(1), *e) : sub(Rational::of(1), *e)) {
      if (auto d = mul(Rational::of(den), *f)) r = div(Rational::of(num), *d);
    }
  }
  const double v = static_cast<double>(num) / (static_cast<double>(den) * (1.0 + sign * eps));
  return make_threshold(v, r);
}

}  // namespace

const QSet& QSetCollection::get(const std::string& name) const {
  for (const auto& s : sets)
    if (s.name == name) return s;
  throw std::out_of_range("no Q-set named " + name);
}

std::optional<double> inverse_p_star(const SamplingPlan& plan) {
  if (!plan.inverse() || plan.stage_count() < 2) return std::nullopt;
  const double eps = plan.spec.eps;
  const std::size_t s = plan.stage_count();
  const double gs = g_fn(eps, plan.stages.back());
  const double zmax = plan.thresholds[s - 2];
  auto f = [&](double p) {
    double v = gs;
    for (std::size_t ell = 1; ell < s; ++ell) {
      const double z = plan.thresholds[ell - 1];
      const double g = static_cast<double>(plan.stages[ell - 1]);
      const double a = 2.0 * p / 3.0 + z / 3.0;
      v += std::exp(g / z * (p - z) * (p - z) / (2.0 * a * (a - 1.0)));
    }
    return v - plan.spec.delta;
  };
  if (!(zmax > 0.0)) return std::nullopt;
  double lo = 0.0, hi = zmax;
  const double flo = f(1e-300), fhi = f(zmax * (1.0 - 1e-15));
  if (!(flo < 0.0 && fhi > 0.0)) return std::nullopt;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

QSetCollection build_qsets(const CompiledRule& rule) {
  const SamplingPlan& plan = rule.plan();
  const auto& sp = plan.spec;
  QSetCollection q;
  const Threshold zero = make_threshold(0.0, Rational::of(0));
  const Threshold one = make_threshold(1.0, Rational::of(1));
  switch (plan.scheme()) {
    case Scheme::Abs: {
      const Threshold half = make_threshold(0.5, Rational::of(1, 2));
      QSet minus{"Q-", shifted_points(plan, sp.eps, -1, zero, half)};
      QSet plus{"Q+", shifted_points(plan, sp.eps, +1, zero, half)};
      minus.points.push_back({half, 0, 0});
      plus.points.push_back({half, 0, 0});
      sort_unique(minus.points);
      sort_unique(plus.points);
      q.sets = {minus, plus};
      q.conditions = {{"abs-over", ConditionKind::AbsOver, sp.eps, "Q-"},
                      {"abs-under", ConditionKind::AbsUnder, sp.eps, "Q+"}};
      break;
    }
    case Scheme::Mixed: {
      std::optional<Rational> ps_exact;
      if (auto a = exact_decimal(sp.eps_a))
        if (auto r = exact_decimal(sp.eps_r)) ps_exact = div(*a, *r);
      const Threshold ps = make_threshold(sp.eps_a / sp.eps_r, ps_exact);
      q.p_star = ps.value;
      QSet am{"Qa-", shifted_points(plan, sp.eps_a, -1, zero, ps)};
      QSet ap{"Qa+", shifted_points(plan, sp.eps_a, +1, zero, ps)};
      am.points.push_back({ps, 0, 0});
      ap.points.push_back({ps, 0, 0});
      QSet rp{"Qr+", {}}, rm{"Qr-", {}};
      for (std::size_t ell = 1; ell <= plan.stage_count(); ++ell) {
        const std::int64_t n = plan.stage_size(ell);
        for (std::int64_t k = 0; k <= n; ++k) {
          auto up = divided(k, n, sp.eps_r, +1);
          if (inside(up, ps, one)) rp.points.push_back({up, ell, k});
          auto dn = divided(k, n, sp.eps_r, -1);
          if (inside(dn, ps, one)) rm.points.push_back({dn, ell, k});
        }
      }
      for (auto* s : {&am, &ap, &rp, &rm}) sort_unique(s->points);
      q.sets = {am, ap, rp, rm};
      q.notes.push_back("relative Q-sets enumerate k in [0, n_l]");
      q.conditions = {{"mixed-abs-over", ConditionKind::AbsOver, sp.eps_a, "Qa-"},
                      {"mixed-abs-under", ConditionKind::AbsUnder, sp.eps_a, "Qa+"},
                      {"mixed-rel-over", ConditionKind::RelOver, sp.eps_r, "Qr+"},
                      {"mixed-rel-under", ConditionKind::RelUnder, sp.eps_r, "Qr-"}};
      break;
    }
    case Scheme::RelInverse: {
      q.p_star = inverse_p_star(plan);
      QSet rp{"Qr+", {}}, rm{"Qr-", {}};
      if (!q.p_star) {
        q.notes.push_back("p* equation shows no sign change on (0, z_{s-1}); condition unverifiable");
      } else {
        const double ps = *q.p_star;
        const Threshold pst = make_threshold(ps, std::nullopt);
        for (std::size_t ell = 1; ell <= plan.stage_count(); ++ell) {
          const std::int64_t g = plan.stage_size(ell);
          for (int sign : {+1, -1}) {
            const auto mmax = static_cast<std::int64_t>(
                std::ceil(static_cast<double>(g) / (ps * (1.0 + sign * sp.eps)))) + 1;
            for (std::int64_t m = 1; m <= mmax; ++m) {
              auto v = divided(g, m, sp.eps, sign);
              if (inside(v, pst, one)) (sign > 0 ? rp : rm).points.push_back({v, ell, m});
            }
          }
        }
      }
      sort_unique(rp.points);
      sort_unique(rm.points);
      q.sets = {rm, rp};
      q.conditions = {{"rel-under", ConditionKind::RelUnder, sp.eps, "Qr-"},
                      {"rel-over", ConditionKind::RelOver, sp.eps, "Qr+"}};
      break;
    }
    case Scheme::FWCp:
    case Scheme::FWCh:
    case Scheme::FWMassart: {
      QSet ql{"QL", {}}, qu{"QU", {}};
      for (std::size_t ell = 1; ell <= plan.stage_count(); ++ell) {
        const std::int64_t n = plan.stage_size(ell);
        for (std::int64_t k = 0; k <= n; ++k) {
          const auto& ci = rule.interval(ell, k);
          if (ci.lower > 0.0 && ci.lower < 1.0) ql.points.push_back({make_threshold(ci.lower, std::nullopt), ell, k});
          if (ci.upper > 0.0 && ci.upper < 1.0) qu.points.push_back({make_threshold(ci.upper, std::nullopt), ell, k});
        }
      }
      sort_unique(ql.points);
      sort_unique(qu.points);
      q.sets = {ql, qu};
      q.conditions = {{"fw-lower", ConditionKind::LowerCover, sp.eps, "QL"},
                      {"fw-upper", ConditionKind::UpperCover, sp.eps, "QU"}};
      break;
    }
    default:
      throw SpecError(to_string(plan.scheme()) + ": no Q-sets for this scheme");
  }
  return q;
}

Event condition_event(const CompiledRule&, const Condition& c, const Threshold& p) {
  using On = Event::On;
  switch (c.kind) {
    case ConditionKind::AbsOver: return {On::Estimate, Direction::Ge, shift(p, c.eps, +1)};
    case ConditionKind::AbsUnder: return {On::Estimate, Direction::Le, shift(p, c.eps, -1)};
    case ConditionKind::RelOver: return {On::Estimate, Direction::Ge, scale(p, c.eps, +1)};
    case ConditionKind::RelUnder: return {On::Estimate, Direction::Le, scale(p, c.eps, -1)};
    case ConditionKind::LowerCover: return {On::Lower, Direction::Ge, p};
    case ConditionKind::UpperCover: return {On::Upper, Direction::Le, p};
  }
  throw std::invalid_argument("unknown condition");
}

// ---------------------------------------------------------------- certify

bool supports_certification(Scheme s) {
  switch (s) {
    case Scheme::Abs:
    case Scheme::Mixed:
    case Scheme::RelInverse:
    case Scheme::FWCp:
    case Scheme::FWCh:
    case Scheme::FWMassart: return true;
    default: return false;
  }
}

namespace {

bool within(double v, double limit, bool inclusive) { return inclusive ? v <= limit : v < limit; }

void settle(CoverageCertificate& c) {
  c.valid = true;
  c.worst_risk = -1.0;
  for (const auto& pr : c.points) {
    if (pr.sum > c.worst_risk) {
      c.worst_risk = pr.sum;
      c.worst_point = pr.p;
      c.worst_condition = pr.condition;
    }
    if (!within(pr.sum, c.limit, c.inclusive)) c.valid = false;
  }
  if (c.worst_risk < 0.0) c.worst_risk = 0.0;
  for (const auto& ch : c.checks)
    if (!ch.ok) c.valid = false;
}

}  // namespace

CoverageCertificate certify(const SamplingPlan& plan, const CertifyOptions& opt) {
  if (!supports_certification(plan.scheme()))
    throw SpecError(to_string(plan.scheme()) + ": certification is not available for this scheme");
  const CompiledRule rule(plan);
  const auto q = build_qsets(rule);
  CoverageCertificate cert;
  cert.scheme = plan.scheme();
  cert.zeta = plan.zeta;
  cert.delta = plan.spec.delta;
  cert.limit = plan.spec.delta / 2.0;
  cert.inclusive = plan.inverse();
  cert.notes = q.notes;
  for (const auto& n : plan.notes) cert.notes.push_back(n);

  if (plan.inverse()) {
    const double e = plan.spec.eps;
    const double cona = ((1.0 + e + std::sqrt(1.0 + 4.0 * e + e * e)) *
                             (1.0 + e + std::sqrt(1.0 + 4.0 * e + e * e)) / (4.0 * e * e) +
                         0.5) *
                        (e / (1.0 + e) - std::log1p(e));
    cert.checks.push_back({"ln(zeta*delta) bound", plan.log_zd, cona, plan.log_zd < cona});
    const double g = g_fn(e, plan.stages.back());
    cert.checks.push_back({"g(eps, gamma_s) < delta", g, plan.spec.delta, g < plan.spec.delta});
    cert.checks.push_back({"p* found", q.p_star.value_or(-1.0), 0.0, q.p_star.has_value()});
  }

  struct Job {
    std::size_t cond;
    QPoint point;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < q.conditions.size(); ++c)
    for (const auto& pt : q.get(q.conditions[c].qset).points) jobs.push_back({c, pt});

  std::vector<PointResult> results(jobs.size());
  detail::parallel_for(jobs.size(), opt.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& cond = q.conditions[job.cond];
    Analysis a(rule, job.point.p.value, opt.engine);
    PointResult r;
    r.condition = cond.id;
    r.qset = cond.qset;
    r.p = job.point.p.value;
    r.origin_stage = job.point.stage;
    r.origin_index = job.point.index;
    r.stage_mass = a.event_masses(condition_event(rule, cond, job.point.p));
    r.sum = total(r.stage_mass) + a.truncation_error();
    results[i] = std::move(r);
  });
  cert.points = std::move(results);
  settle(cert);
  if (!opt.keep_points) cert.points.clear();
  return cert;
}

// ---------------------------------------------------------------- interval bounds

namespace {

std::vector<double> support_values(const CompiledRule& rule) {
  std::vector<double> v;
  const auto& plan = rule.plan();
  for (std::size_t ell = 1; ell <= plan.stage_count(); ++ell)
    for (std::int64_t k = 0; k <= plan.stage_size(ell); ++k) {
      v.push_back(rule.interval(ell, k).lower);
      v.push_back(rule.interval(ell, k).upper);
    }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool support_inside(const std::vector<double>& sup, double a, double b) {
  auto it = std::upper_bound(sup.begin(), sup.end(), a);
  return it != sup.end() && *it < b;
}

double mass_of(const Analysis& an, Event::On on, Direction d, double t) {
  return total(an.event_masses({on, d, make_threshold(t, std::nullopt)}));
}

CoverageBounds bounds_from(const Analysis& at_a, const Analysis& at_b, double a, double b, bool refined) {
  using On = Event::On;
  CoverageBounds r;
  r.generic_upper = mass_of(at_b, On::Lower, Direction::Ge, a) + mass_of(at_a, On::Upper, Direction::Le, b) +
                    at_a.truncation_error() + at_b.truncation_error();
  r.generic_lower = mass_of(at_a, On::Lower, Direction::Ge, b) + mass_of(at_b, On::Upper, Direction::Le, a);
  r.lower = r.generic_lower;
  r.upper = std::min(1.0, r.generic_upper);
  r.refined = refined;
  if (refined) {
    const double ru = mass_of(at_b, On::Lower, Direction::Ge, b) + mass_of(at_a, On::Upper, Direction::Le, a) +
                      at_a.truncation_error() + at_b.truncation_error();
    const double rl = mass_of(at_a, On::Lower, Direction::Gt, a) + mass_of(at_b, On::Upper, Direction::Lt, b);
    r.upper = std::min(r.upper, ru);
    r.lower = std::max(r.lower, rl);
  }
  return r;
}

}  // namespace

CoverageBounds coverage_bounds(const CompiledRule& rule, double a, double b, const EngineOptions& opt) {
  if (!is_fixed_width(rule.plan().scheme())) throw SpecError("coverage bounds apply to fixed-width schemes");
  if (!(a > 0.0 && a <= b && b < 1.0)) throw std::invalid_argument("coverage_bounds: need 0 < a <= b < 1");
  const Analysis at_a(rule, a, opt);
  const Analysis at_b(rule, b, opt);
  const bool refined = a < b && !support_inside(support_values(rule), a, b);
  return bounds_from(at_a, at_b, a, b, refined);
}

double coverage_failure(const CompiledRule& rule, double p, const EngineOptions& opt) {
  const Analysis an(rule, p, opt);
  return mass_of(an, Event::On::Lower, Direction::Ge, p) + mass_of(an, Event::On::Upper, Direction::Le, p);
}

CoverageCertificate certify_branch_and_bound(const SamplingPlan& plan, const BnbOptions& opt) {
  if (!is_fixed_width(plan.scheme()))
    throw SpecError(to_string(plan.scheme()) + ": branch and bound needs a fixed-width scheme");
  const CompiledRule rule(plan);
  const auto sup = support_values(rule);
  CoverageCertificate cert;
  cert.scheme = plan.scheme();
  cert.method = "branch_and_bound";
  cert.zeta = plan.zeta;
  cert.delta = plan.spec.delta;
  cert.limit = plan.spec.delta;
  cert.inclusive = false;

  std::vector<std::pair<double, double>> cells;
  const double w = (opt.p_hi - opt.p_lo) / static_cast<double>(opt.initial_cells);
  for (std::size_t i = 0; i < opt.initial_cells; ++i) {
    const double a = opt.p_lo + w * static_cast<double>(i);
    const double b = i + 1 == opt.initial_cells ? opt.p_hi : opt.p_lo + w * static_cast<double>(i + 1);
    cells.emplace_back(a, b);
  }
  std::size_t processed = 0;
  bool failed = false;
  while (!cells.empty() && !failed) {
    std::vector<double> ends;
    for (const auto& c : cells) {
      ends.push_back(c.first);
      ends.push_back(c.second);
    }
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
    std::vector<std::optional<Analysis>> an(ends.size());
    detail::parallel_for(ends.size(), opt.jobs, [&](std::size_t i) { an[i].emplace(rule, ends[i], opt.engine); });
    auto find = [&](double x) -> const Analysis& {
      return *an[static_cast<std::size_t>(std::lower_bound(ends.begin(), ends.end(), x) - ends.begin())];
    };
    std::vector<std::pair<double, double>> next;
    for (const auto& [a, b] : cells) {
      ++processed;
      const bool refined = a < b && !support_inside(sup, a, b);
      const auto bd = bounds_from(find(a), find(b), a, b, refined);
      if (bd.upper < cert.limit) {
        PointResult r;
        r.condition = "cell";
        r.qset = refined ? "refined" : "generic";
        r.p = a;
        r.stage_mass = {a, b};
        r.sum = bd.upper;
        cert.points.push_back(std::move(r));
        continue;
      }
      if (b - a < opt.min_width || processed > opt.max_cells) {
        PointResult r;
        r.condition = "cell";
        r.qset = "unresolved";
        r.p = a;
        r.stage_mass = {a, b};
        r.sum = bd.upper;
        cert.points.push_back(std::move(r));
        failed = true;
        break;
      }
      // prefer splitting at a support point so that the halves can use the
      // refined bounds
      double cut = 0.5 * (a + b);
      if (!refined) {
        auto lo = std::upper_bound(sup.begin(), sup.end(), a);
        auto hi = std::lower_bound(sup.begin(), sup.end(), b);
        if (lo != hi) {
          auto mid = lo + (hi - lo) / 2;
          cut = *mid;
        }
      }
      next.emplace_back(a, cut);
      next.emplace_back(cut, b);
    }
    cells = std::move(next);
  }
  cert.cells = processed;
  std::stable_sort(cert.points.begin(), cert.points.end(),
                   [](const PointResult& x, const PointResult& y) { return x.p < y.p; });
  settle(cert);
  return cert;
}

// ---------------------------------------------------------------- tuning

TuneResult tune_zeta(const PrecisionSpec& spec, const TuneOptions& opt) {
  if (!supports_certification(spec.scheme))
    throw SpecError(to_string(spec.scheme) + ": tuning is not available for this scheme");
  if (opt.branch_and_bound && !is_fixed_width(spec.scheme))
    throw SpecError("branch-and-bound tuning needs a fixed-width scheme");
  TuneResult res;
  PrecisionSpec base = spec;
  base.zeta.reset();
  const double floor_zeta = build_plan(base).zeta;

  struct Eval {
    bool ok;
    SamplingPlan plan;
    CoverageCertificate cert;
  };
  auto eval = [&](double z) -> Eval {
    ++res.evaluations;
    PrecisionSpec s = spec;
    s.zeta = z;
    SamplingPlan plan = build_plan(s);
    CoverageCertificate cert;
    if (opt.branch_and_bound) {
      BnbOptions b;
      b.jobs = opt.jobs;
      cert = certify_branch_and_bound(plan, b);
    } else {
      CertifyOptions c;
      c.jobs = opt.jobs;
      cert = certify(plan, c);
    }
    return {cert.valid, plan, cert};
  };

  double cap = 1.0;
  if (spec.scheme == Scheme::FWMassart) cap = std::min(cap, 0.5 / spec.delta);
  double hi = cap * (1.0 - 1e-9);
  Eval top = eval(hi);
  if (top.ok) {
    res.found = true;
    res.zeta = hi;
    res.plan = top.plan;
    res.certificate = top.cert;
    return res;
  }
  double lo = std::min(floor_zeta, hi / 2.0);
  Eval best = eval(lo);
  while (!best.ok) {
    hi = lo;
    lo /= 2.0;
    if (lo < opt.zeta_floor) {
      res.found = false;
      res.zeta = lo;
      res.certificate = best.cert;
      res.plan = best.plan;
      return res;
    }
    best = eval(lo);
  }
  while (hi / lo > 1.0 + opt.rel_tol) {
    const double mid = std::sqrt(lo * hi);
    Eval e = eval(mid);
    if (e.ok) {
      lo = mid;
      best = std::move(e);
    } else {
      hi = mid;
    }
  }
  res.found = true;
  res.zeta = lo;
  res.plan = best.plan;
  res.certificate = best.cert;
  return res;
}

}  // namespace seqest
