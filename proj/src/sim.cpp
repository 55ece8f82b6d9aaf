#include "seqest/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "seqest/exact.hpp"
#include "seqest/kernels.hpp"
#include "seqest/rules.hpp"
#include "seqest/runtime.hpp"

namespace seqest {

Truth Truth::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw SpecError("bernoulli truth needs p in [0,1]");
  Truth t;
  t.kind = Kind::Bernoulli;
  t.a = p;
  return t;
}

Truth Truth::beta(double alpha, double beta) {
  if (!(alpha > 0.0 && beta > 0.0)) throw SpecError("beta truth needs positive shape parameters");
  Truth t;
  t.kind = Kind::Beta;
  t.a = alpha;
  t.b = beta;
  return t;
}

Truth Truth::uniform(double lo, double hi) {
  if (!(lo < hi)) throw SpecError("uniform truth needs lo < hi");
  Truth t;
  t.kind = Kind::Uniform;
  t.a = lo;
  t.b = hi;
  return t;
}

Truth Truth::constant(double c) {
  if (!std::isfinite(c)) throw SpecError("constant truth must be finite");
  Truth t;
  t.kind = Kind::Constant;
  t.a = c;
  return t;
}

Truth Truth::mixture(std::vector<std::pair<double, double>> atoms) {
  if (atoms.empty()) throw SpecError("mixture truth needs at least one atom");
  double w = 0.0;
  for (const auto& [v, p] : atoms) {
    if (!std::isfinite(v) || !(p > 0.0)) throw SpecError("mixture atoms need finite values and positive weights");
    w += p;
  }
  for (auto& at : atoms) at.second /= w;
  Truth t;
  t.kind = Kind::Mixture;
  t.atoms = std::move(atoms);
  return t;
}

namespace {

std::vector<double> numbers(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw SpecError("truth: cannot parse number '" + item + "'");
    }
    if (used != item.size()) throw SpecError("truth: cannot parse number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Truth Truth::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw SpecError("truth must look like kind:params, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "mixture") {
    std::vector<std::pair<double, double>> atoms;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto at = numbers(item, '@');
      if (at.size() != 2) throw SpecError("mixture atoms look like value@weight");
      atoms.emplace_back(at[0], at[1]);
    }
    return mixture(std::move(atoms));
  }
  const auto v = numbers(rest, ',');
  auto need = [&](std::size_t k) {
    if (v.size() != k) throw SpecError("truth '" + kind + "' takes " + std::to_string(k) + " parameter(s)");
  };
  if (kind == "bernoulli") {
    need(1);
    return bernoulli(v[0]);
  }
  if (kind == "beta") {
    need(2);
    return beta(v[0], v[1]);
  }
  if (kind == "uniform") {
    need(2);
    return uniform(v[0], v[1]);
  }
  if (kind == "constant") {
    need(1);
    return constant(v[0]);
  }
  throw SpecError("unknown truth kind '" + kind + "'");
}

double Truth::mean() const {
  switch (kind) {
    case Kind::Bernoulli: return a;
    case Kind::Beta: return a / (a + b);
    case Kind::Uniform: return 0.5 * (a + b);
    case Kind::Constant: return a;
    case Kind::Mixture: {
      double m = 0.0;
      for (const auto& [v, w] : atoms) m += v * w;
      return m;
    }
  }
  return 0.0;
}

double Truth::support_lo() const {
  switch (kind) {
    case Kind::Bernoulli: return a == 1.0 ? 1.0 : 0.0;
    case Kind::Beta: return 0.0;
    case Kind::Uniform:
    case Kind::Constant: return a;
    case Kind::Mixture: {
      double m = atoms.front().first;
      for (const auto& at : atoms) m = std::min(m, at.first);
      return m;
    }
  }
  return 0.0;
}

double Truth::support_hi() const {
  switch (kind) {
    case Kind::Bernoulli: return a == 0.0 ? 0.0 : 1.0;
    case Kind::Beta: return 1.0;
    case Kind::Uniform: return b;
    case Kind::Constant: return a;
    case Kind::Mixture: {
      double m = atoms.front().first;
      for (const auto& at : atoms) m = std::max(m, at.first);
      return m;
    }
  }
  return 1.0;
}

bool Truth::binary() const {
  switch (kind) {
    case Kind::Bernoulli: return true;
    case Kind::Constant: return a == 0.0 || a == 1.0;
    case Kind::Mixture:
      return std::all_of(atoms.begin(), atoms.end(),
                         [](const auto& at) { return at.first == 0.0 || at.first == 1.0; });
    default: return false;
  }
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double Truth::draw(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::Bernoulli: return unit_uniform(rng) < a ? 1.0 : 0.0;
    case Kind::Beta: {
      std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
      const double x = ga(rng);
      const double y = gb(rng);
      return x + y > 0.0 ? x / (x + y) : 0.5;
    }
    case Kind::Uniform: return a + (b - a) * unit_uniform(rng);
    case Kind::Constant: return a;
    case Kind::Mixture: {
      double u = unit_uniform(rng);
      for (const auto& [v, w] : atoms) {
        if (u < w) return v;
        u -= w;
      }
      return atoms.back().first;
    }
  }
  return 0.0;
}

std::string Truth::describe() const {
  auto num = [](double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
  };
  switch (kind) {
    case Kind::Bernoulli: return "bernoulli:" + num(a);
    case Kind::Beta: return "beta:" + num(a) + "," + num(b);
    case Kind::Uniform: return "uniform:" + num(a) + "," + num(b);
    case Kind::Constant: return "constant:" + num(a);
    case Kind::Mixture: {
      std::string out = "mixture:";
      for (std::size_t i = 0; i < atoms.size(); ++i)
        out += (i ? "," : "") + num(atoms[i].first) + "@" + num(atoms[i].second);
      return out;
    }
  }
  return {};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep) {
  return splitmix64(splitmix64(seed) ^ splitmix64(rep + 0x632BE59BD9B4E019ULL));
}

namespace {

struct Rep {
  std::int64_t n = 0;
  std::size_t stage = 0;  // 0 when the budget ran out
  bool covered = false;
  double estimate = 0.0;
};

bool bounded_success(const PrecisionSpec& sp, double est, double mu) {
  const double d = std::fabs(est - mu);
  switch (sp.scheme) {
    case Scheme::BoundedAbs: return d < sp.eps;
    case Scheme::BoundedMixed: return d < sp.eps_a || d < sp.eps_r * mu;
    case Scheme::GeneralMixed: return d < sp.eps_a || d < sp.eps_r * std::fabs(mu);
    default: return false;
  }
}

void check_truth(const SimConfig& c, const SamplingPlan& plan) {
  if (c.replications < 1) throw SpecError("replications must be >= 1");
  const auto& t = c.truth;
  if (!is_bounded(plan.scheme())) {
    if (c.link) {
      if (t.support_lo() < 0.0 || t.support_hi() > 1.0) throw SpecError("link transform needs a truth on [0,1]");
    } else if (!t.binary()) {
      throw SpecError(to_string(plan.scheme()) + " needs 0/1 samples; use a bernoulli truth or the link transform");
    }
    return;
  }
  const double lo = plan.scheme() == Scheme::GeneralMixed ? plan.spec.range_lo : 0.0;
  const double hi = plan.scheme() == Scheme::GeneralMixed ? plan.spec.range_hi : 1.0;
  if (t.support_lo() < lo || t.support_hi() > hi) throw SpecError("truth support lies outside the scheme's range");
}

}  // namespace

SimReport simulate(const SimConfig& config) {
  const SamplingPlan plan = build_plan(config.spec);
  check_truth(config, plan);
  const double mu = config.truth.mean();
  const bool binomial = !is_bounded(plan.scheme());
  std::optional<CompiledRule> rule;
  std::optional<std::pair<Event, Event>> fails;
  if (binomial) {
    rule.emplace(plan);
    fails = failure_events(*rule, Threshold{mu, exact_decimal(mu)});
  }

  std::vector<Rep> reps(static_cast<std::size_t>(config.replications));
  detail::parallel_for(reps.size(), config.jobs, [&](std::size_t i) {
    std::mt19937_64 rng(replication_seed(config.seed, i));
    EstimationSession s(plan, config.budget);
    while (s.status() == SessionStatus::Running) {
      double x = config.truth.draw(rng);
      if (config.link) x = link_transform(x, unit_uniform(rng));
      s.feed(x);
    }
    const auto r = s.report();
    Rep out;
    out.n = r.terminal_sample_size;
    out.stage = r.terminal_stage;
    out.estimate = r.point_estimate;
    if (r.certified) {
      if (binomial) {
        const auto k = static_cast<std::int64_t>(std::llround(r.sum));
        const std::int64_t n = r.terminal_sample_size;
        const ConfidenceInterval* ci = r.interval ? &*r.interval : nullptr;
        out.covered = !event_holds(fails->first, k, n, ci) && !event_holds(fails->second, k, n, ci);
      } else {
        out.covered = bounded_success(plan.spec, r.point_estimate, mu);
      }
    }
    reps[i] = out;
  });

  SimReport rep;
  rep.scheme = to_string(plan.scheme());
  rep.truth = config.truth.describe();
  rep.true_mean = mu;
  rep.replications = config.replications;
  rep.seed = config.seed;
  const double R = static_cast<double>(config.replications);
  std::size_t max_stage = plan.open_ended() ? 0 : plan.stage_count();
  for (const auto& r : reps) max_stage = std::max(max_stage, r.stage);
  rep.stage_frequency.assign(max_stage, 0.0);
  double covered = 0.0, exhausted = 0.0, sn = 0.0, sest = 0.0;
  std::vector<double> ns;
  ns.reserve(reps.size());
  for (const auto& r : reps) {
    covered += r.covered ? 1.0 : 0.0;
    if (r.stage == 0)
      exhausted += 1.0;
    else
      rep.stage_frequency[r.stage - 1] += 1.0;
    sn += static_cast<double>(r.n);
    sest += r.estimate;
    ns.push_back(static_cast<double>(r.n));
  }
  for (auto& f : rep.stage_frequency) f /= R;
  rep.coverage = covered / R;
  rep.coverage_se = std::sqrt(rep.coverage * (1.0 - rep.coverage) / R);
  rep.exhausted_fraction = exhausted / R;
  rep.mean_n = sn / R;
  rep.mean_estimate = sest / R;
  double ss = 0.0;
  for (double n : ns) ss += (n - rep.mean_n) * (n - rep.mean_n);
  rep.sd_n = reps.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
  std::sort(ns.begin(), ns.end());
  for (double level : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(level * R) - 1.0));
    rep.n_quantiles.emplace_back(level, ns[std::min(idx, ns.size() - 1)]);
  }
  if (exhausted > 0.0) rep.notes.push_back("replications that ran out of budget count as not covered");

  if (config.compare_exact) {
    if (!binomial) {
      rep.notes.push_back("no exact comparison for bounded-variable schemes");
    } else if (plan.inverse() && !(mu > 0.0 && mu < 1.0)) {
      rep.notes.push_back("no exact comparison for inverse sampling at p in {0,1}");
    } else {
      ExactComparison ex;
      ex.p = mu;
      const auto cov = coverage(*rule, Threshold{mu, exact_decimal(mu)});
      const auto dist = stop_distribution(*rule, mu);
      ex.coverage = cov.coverage;
      ex.expected_n = dist.expected_sample_size;
      ex.sd_n = std::sqrt(dist.sample_size_variance);
      ex.truncation = std::max(cov.truncation, dist.truncation_error);
      for (std::size_t l = 1; l <= std::max(max_stage, dist.stops.size()); ++l)
        ex.stage_probability.push_back(dist.stop_probability(l));
      auto z = [](double diff, double sigma) { return diff == 0.0 ? 0.0 : diff / sigma; };
      ex.z_coverage = z(rep.coverage - ex.coverage, std::sqrt(ex.coverage * (1.0 - ex.coverage) / R));
      ex.z_expected_n = z(rep.mean_n - ex.expected_n, ex.sd_n / std::sqrt(R));
      ex.max_abs_z = std::max(std::fabs(ex.z_coverage), std::fabs(ex.z_expected_n));
      for (std::size_t l = 0; l < ex.stage_probability.size(); ++l) {
        const double q = ex.stage_probability[l];
        const double f = l < rep.stage_frequency.size() ? rep.stage_frequency[l] : 0.0;
        ex.z_stage.push_back(z(f - q, std::sqrt(q * (1.0 - q) / R)));
        ex.max_abs_z = std::max(ex.max_abs_z, std::fabs(ex.z_stage.back()));
      }
      if (config.budget) rep.notes.push_back("budget truncation is not modelled by the exact comparison");
      rep.exact = std::move(ex);
    }
  }
  return rep;
}

SimReport simulate_link(SimConfig config) {
  if (is_bounded(config.spec.scheme)) throw SpecError("the link transform feeds a binomial scheme");
  config.link = true;
  return simulate(config);
}

std::string to_string(LemmaEvent e) {
  switch (e) {
    case LemmaEvent::UpperTail: return "upper-tail";
    case LemmaEvent::UpperDeviation: return "upper-deviation";
    case LemmaEvent::LowerDeviation: return "lower-deviation";
    case LemmaEvent::InverseLower: return "inverse-lower";
    case LemmaEvent::InverseUpper: return "inverse-upper";
  }
  return "?";
}

LemmaEvent lemma_event_from_string(const std::string& s) {
  for (auto e : {LemmaEvent::UpperTail, LemmaEvent::UpperDeviation, LemmaEvent::LowerDeviation,
                 LemmaEvent::InverseLower, LemmaEvent::InverseUpper})
    if (to_string(e) == s) return e;
  throw SpecError("unknown lemma event '" + s + "'");
}

LemmaResult lemma_event_check(const LemmaCheck& c) {
  if (c.reps < 1 || c.n < 1) throw SpecError("lemma check needs n >= 1 and reps >= 1");
  if (!(c.mu > 0.0 && c.mu < 1.0)) throw SpecError("lemma check needs mu in (0,1)");
  const bool inverse = c.event == LemmaEvent::InverseLower || c.event == LemmaEvent::InverseUpper;
  if (inverse && c.truth) throw SpecError("inverse-sampling events use Bernoulli draws");
  if (c.event == LemmaEvent::UpperTail && !(c.alpha > c.mu && c.alpha <= 1.0))
    throw SpecError("upper-tail check needs mu < z <= 1");
  if (c.event != LemmaEvent::UpperTail && !(c.alpha > 0.0)) throw SpecError("alpha must be positive");
  const Truth truth = c.truth.value_or(Truth::bernoulli(c.mu));
  const double nd = static_cast<double>(c.n);
  const double la = c.event == LemmaEvent::UpperTail ? 0.0 : std::log(c.alpha) / nd;

  std::vector<std::uint8_t> hit(static_cast<std::size_t>(c.reps), 0);
  detail::parallel_for(hit.size(), c.jobs, [&](std::size_t i) {
    std::mt19937_64 rng(replication_seed(c.seed, i));
    bool h = false;
    if (inverse) {
      std::int64_t k = 0, n = 0;
      while (k < c.n) {
        ++n;
        if (unit_uniform(rng) < c.mu) ++k;
      }
      const double z = nd / static_cast<double>(n);
      const bool side = c.event == LemmaEvent::InverseLower ? z <= c.mu : z >= c.mu;
      h = side && kl_inverse_binomial(z, c.mu) <= la;
    } else {
      double s = 0.0;
      for (std::int64_t j = 0; j < c.n; ++j) s += truth.draw(rng);
      const double xbar = std::clamp(s / nd, 0.0, 1.0);
      switch (c.event) {
        case LemmaEvent::UpperTail: h = xbar >= c.alpha; break;
        case LemmaEvent::UpperDeviation: h = xbar >= c.mu && m_fn(xbar, c.mu) <= la; break;
        case LemmaEvent::LowerDeviation: h = xbar <= c.mu && m_fn(xbar, c.mu) <= la; break;
        default: break;
      }
    }
    hit[i] = h ? 1 : 0;
  });

  LemmaResult r;
  double count = 0.0;
  for (auto h : hit) count += h;
  const double R = static_cast<double>(c.reps);
  r.frequency = count / R;
  r.bound = c.event == LemmaEvent::UpperTail ? std::exp(nd * m_fn(c.alpha, c.mu)) : std::min(1.0, c.alpha);
  r.se = std::sqrt(r.bound * (1.0 - r.bound) / R);
  r.ok = r.frequency <= r.bound + 4.0 * r.se;
  return r;
}

}  // namespace seqest
