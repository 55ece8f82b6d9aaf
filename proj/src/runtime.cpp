#include "seqest/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seqest/rules.hpp"

namespace seqest {

std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Running: return "running";
    case SessionStatus::Stopped: return "stopped";
    case SessionStatus::Exhausted: return "exhausted";
  }
  return "?";
}

SessionStatus session_status_from_string(const std::string& s) {
  if (s == "running") return SessionStatus::Running;
  if (s == "stopped") return SessionStatus::Stopped;
  if (s == "exhausted") return SessionStatus::Exhausted;
  throw std::invalid_argument("unknown session status: " + s);
}

EstimationSession::EstimationSession(SamplingPlan plan, std::optional<std::int64_t> budget) {
  if (budget && *budget < 1) throw SpecError("sample budget must be positive");
  st_.plan = std::move(plan);
  st_.budget = budget;
  binomial_ = !is_bounded(st_.plan.scheme());
}

EstimationSession EstimationSession::restore(SessionState state) {
  EstimationSession s;
  s.binomial_ = !is_bounded(state.plan.scheme());
  if (state.stage < 1 || (!state.plan.open_ended() && state.stage > state.plan.stage_count()))
    throw SpecError("session state: stage index outside the plan");
  if (state.count < 0 || state.successes < 0 || state.successes > state.count)
    throw SpecError("session state: inconsistent counts");
  s.st_ = std::move(state);
  return s;
}

bool EstimationSession::at_boundary() const {
  if (st_.plan.inverse()) return st_.successes == st_.plan.stage_size(st_.stage);
  return st_.count == st_.plan.stage_size(st_.stage);
}

bool EstimationSession::evaluate() const {
  const auto& plan = st_.plan;
  if (plan.inverse()) return decide_rel_inverse(plan, {st_.stage, st_.count});
  if (binomial_) return decide(plan, {st_.stage, st_.successes});
  const double mean = std::clamp(st_.sum / static_cast<double>(st_.count), 0.0, 1.0);
  return decide_bounded(plan, st_.stage, mean);
}

SessionStatus EstimationSession::feed(double x) {
  if (st_.status != SessionStatus::Running) throw std::logic_error("feed: session is not running");
  if (std::isnan(x)) throw DataError("sample is not a number");
  double v = x;
  if (binomial_) {
    if (x != 0.0 && x != 1.0) throw DataError("binomial schemes take 0/1 samples");
  } else {
    const auto& sp = st_.plan.spec;
    const double lo = st_.plan.scheme() == Scheme::GeneralMixed ? sp.range_lo : 0.0;
    const double hi = st_.plan.scheme() == Scheme::GeneralMixed ? sp.range_hi : 1.0;
    if (x < lo || x > hi) throw DataError("sample outside the scheme's range");
    v = std::clamp(normalize(st_.plan, x), 0.0, 1.0);
  }
  ++st_.count;
  st_.sum += v;
  if (binomial_ && x == 1.0) ++st_.successes;
  if (at_boundary()) {
    const bool stop = evaluate();
    st_.trajectory.push_back({st_.stage, st_.count, st_.sum, stop});
    if (stop)
      st_.status = SessionStatus::Stopped;
    else
      ++st_.stage;
  }
  if (st_.status == SessionStatus::Running && st_.budget && st_.count >= *st_.budget)
    st_.status = SessionStatus::Exhausted;
  return st_.status;
}

EstimationReport EstimationSession::report() const {
  if (st_.status == SessionStatus::Running) throw std::logic_error("report: session is still running");
  const auto& plan = st_.plan;
  EstimationReport r;
  r.scheme = plan.scheme();
  r.spec = plan.spec;
  r.terminal_sample_size = st_.count;
  r.terminal_stage = st_.status == SessionStatus::Stopped ? st_.stage : 0;
  r.certified = st_.status == SessionStatus::Stopped;
  r.trajectory = st_.trajectory;
  if (st_.count > 0) {
    const double n = static_cast<double>(st_.count);
    if (binomial_) {
      r.sum = static_cast<double>(st_.successes);
      r.point_estimate = r.sum / n;
    } else {
      r.point_estimate = denormalize(plan, st_.sum / n);
      r.sum = r.point_estimate * n;
    }
  }
  if (is_fixed_width(plan.scheme()) && st_.count > 0)
    r.interval = plan_interval(plan, st_.count, st_.successes);
  return r;
}

int link_transform(double z, double u) {
  if (std::isnan(z) || z < 0.0 || z > 1.0) throw DataError("link_transform: z outside [0,1]");
  if (std::isnan(u) || u < 0.0 || u > 1.0) throw DataError("link_transform: u outside [0,1]");
  return z >= u ? 1 : 0;
}

EstimationReport run_open_ended(const PrecisionSpec& spec, const std::function<std::optional<double>()>& stream,
                                std::int64_t max_samples) {
  if (spec.scheme != Scheme::RelFixed) throw SpecError("run_open_ended needs the rel-fixed scheme");
  EstimationSession s(build_plan(spec), max_samples);
  while (s.status() == SessionStatus::Running) {
    const auto x = stream();
    if (!x) break;
    s.feed(*x);
  }
  if (s.status() == SessionStatus::Running) {
    // stream ran dry: report what we have, uncertified
    auto st = s.state();
    st.status = SessionStatus::Exhausted;
    return EstimationSession::restore(std::move(st)).report();
  }
  return s.report();
}

}  // namespace seqest
