#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seqest/intervals.hpp"
#include "seqest/plan.hpp"
#include "seqest/rational.hpp"

namespace seqest {

using StopPredicate = std::function<bool(std::size_t stage, std::int64_t statistic)>;

struct EngineOptions {
  double tail_tolerance = 1e-12;     // inverse-scheme atom listing, open-ended residual
  std::size_t max_open_stages = 200;
  double trim = 1e-40;               // binomial increments below this are dropped (and counted)
};

// A plan together with its decision tables.
class CompiledRule {
 public:
  static constexpr std::int64_t kAlways = std::numeric_limits<std::int64_t>::max();

  explicit CompiledRule(SamplingPlan plan);
  // Arbitrary stop predicate on the plan's grid (fixed-size schemes only).
  CompiledRule(SamplingPlan plan, StopPredicate pred);

  const SamplingPlan& plan() const { return plan_; }
  bool stops(std::size_t stage, std::int64_t statistic) const;
  std::size_t stage_limit(const EngineOptions& opt) const;
  // Inverse scheme: largest sample count at which stage `stage` stops
  // (kAlways when every count stops; below the target when none does).
  std::int64_t cutoff(std::size_t stage) const { return cutoffs_.at(stage - 1); }
  const ConfidenceInterval& interval(std::size_t stage, std::int64_t k) const;
  bool has_intervals() const { return !intervals_.empty(); }

 private:
  void compile();

  SamplingPlan plan_;
  StopPredicate custom_;
  std::vector<std::vector<std::uint8_t>> table_;
  std::vector<std::vector<ConfidenceInterval>> intervals_;
  std::vector<std::int64_t> cutoffs_;
};

struct StageMass {
  std::size_t stage = 0;
  std::int64_t stage_size = 0;  // n_l, or gamma_l for the inverse scheme
  std::int64_t offset = 0;      // statistic value of mass[0]
  std::vector<double> mass;
  double total() const;
};

struct StageStopDistribution {
  double p = 0.0;
  bool inverse = false;
  std::vector<StageMass> stops;
  std::vector<double> survivor_mass;  // mass entering each stage
  double truncation_error = 0.0;
  double expected_sample_size = 0.0;
  double sample_size_variance = 0.0;

  double total_stop_mass() const;
  double stop_probability(std::size_t stage) const;
  double atom(std::size_t stage, std::int64_t statistic) const;
};

StageStopDistribution stop_distribution(const CompiledRule& rule, double p,
                                        const EngineOptions& opt = {});

enum class ErrorClass { Neither, Over, Under };
using EventClassifier =
    std::function<ErrorClass(std::size_t stage, std::int64_t stage_size, std::int64_t statistic)>;

struct ErrorSums {
  std::vector<double> over;
  std::vector<double> under;
  double total_over = 0.0;
  double total_under = 0.0;
};

ErrorSums error_sums(const StageStopDistribution& dist, const EventClassifier& cls);

enum class Direction { Ge, Gt, Le, Lt };

// {X dir t} where X is the stage estimate, or the interval's lower/upper end.
struct Event {
  enum class On { Estimate, Lower, Upper };
  On on = On::Estimate;
  Direction dir = Direction::Ge;
  Threshold t;
};

// Exact stagewise analysis of one rule at one parameter value.
class Analysis {
 public:
  Analysis(const CompiledRule& rule, double p, const EngineOptions& opt = {});
  ~Analysis();
  Analysis(Analysis&&) noexcept;
  Analysis& operator=(Analysis&&) noexcept;

  // P{event at stage l, D_{l-1} = 0, D_l = 1} for every stage l.
  std::vector<double> event_masses(const Event& e) const;
  double truncation_error() const;
  std::size_t stages() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// The scheme's two failure events at p: {over, under}.
std::pair<Event, Event> failure_events(const CompiledRule& rule, const Threshold& p);
// Evaluates e for a terminal outcome with k successes in n samples; ci is
// required for interval events.
bool event_holds(const Event& e, std::int64_t k, std::int64_t n, const ConfidenceInterval* ci = nullptr);

struct CoverageResult {
  double p = 0.0;
  double coverage = 0.0;
  double over = 0.0;
  double under = 0.0;
  double truncation = 0.0;
};

// Exact probability of the scheme's success event; over/under partition the
// complement (truncation is the unresolved remainder).
CoverageResult coverage(const CompiledRule& rule, const Threshold& p, const EngineOptions& opt = {});
CoverageResult coverage(const CompiledRule& rule, double p, const EngineOptions& opt = {});

struct QPoint {
  Threshold p;
  std::size_t stage = 0;    // 0 for anchor points not tied to a stage
  std::int64_t index = 0;   // k (or m for the inverse scheme) that produced it
};

struct QSet {
  std::string name;
  std::vector<QPoint> points;  // sorted by value, deduplicated
};

enum class ConditionKind { AbsOver, AbsUnder, RelOver, RelUnder, LowerCover, UpperCover };

struct Condition {
  std::string id;
  ConditionKind kind;
  double eps = 0.0;
  std::string qset;
};

struct QSetCollection {
  std::vector<QSet> sets;
  std::vector<Condition> conditions;
  std::optional<double> p_star;
  std::vector<std::string> notes;
  const QSet& get(const std::string& name) const;
};

QSetCollection build_qsets(const CompiledRule& rule);
Event condition_event(const CompiledRule& rule, const Condition& c, const Threshold& p);

// Root of the inverse scheme's p* equation on (0, z_{s-1}); nullopt when the
// left side shows no sign change there.
std::optional<double> inverse_p_star(const SamplingPlan& plan);

struct PointResult {
  std::string condition;
  std::string qset;
  double p = 0.0;
  std::size_t origin_stage = 0;
  std::int64_t origin_index = 0;
  std::vector<double> stage_mass;
  double sum = 0.0;
};

struct ExtraCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool ok = false;
};

struct CoverageCertificate {
  Scheme scheme = Scheme::Abs;
  std::string method = "grid";
  double zeta = 0.0;
  double delta = 0.0;
  double limit = 0.0;       // delta/2 per condition (grid), delta (branch and bound)
  bool inclusive = false;   // sums may equal the limit
  bool valid = false;
  double worst_point = 0.0;
  double worst_risk = 0.0;
  std::string worst_condition;
  std::vector<PointResult> points;
  std::vector<ExtraCheck> checks;
  std::vector<std::string> notes;
  std::size_t cells = 0;
};

struct CertifyOptions {
  unsigned jobs = 1;
  EngineOptions engine;
  bool keep_points = true;
};

bool supports_certification(Scheme s);

CoverageCertificate certify(const SamplingPlan& plan, const CertifyOptions& opt = {});

struct CoverageBounds {
  double lower = 0.0;
  double upper = 1.0;
  double generic_lower = 0.0;
  double generic_upper = 1.0;
  bool refined = false;
};

// Bounds on C(p) = 1 - P{L < p < U} valid for every p in [a, b].
CoverageBounds coverage_bounds(const CompiledRule& rule, double a, double b,
                               const EngineOptions& opt = {});
// Complement of fixed-width coverage at p.
double coverage_failure(const CompiledRule& rule, double p, const EngineOptions& opt = {});

struct BnbOptions {
  unsigned jobs = 1;
  std::size_t initial_cells = 32;
  double min_width = 1e-7;
  double p_lo = 1e-9;
  double p_hi = 1.0 - 1e-9;
  std::size_t max_cells = 200000;
  EngineOptions engine;
};

CoverageCertificate certify_branch_and_bound(const SamplingPlan& plan, const BnbOptions& opt = {});

struct TuneOptions {
  bool branch_and_bound = false;
  unsigned jobs = 1;
  double rel_tol = 1e-3;
  double zeta_floor = 1e-12;
};

struct TuneResult {
  bool found = false;
  double zeta = 0.0;
  SamplingPlan plan;
  CoverageCertificate certificate;
  int evaluations = 0;
};

TuneResult tune_zeta(const PrecisionSpec& spec, const TuneOptions& opt = {});

}  // namespace seqest
