#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqest/intervals.hpp"
#include "seqest/plan.hpp"

namespace seqest {

enum class SessionStatus { Running, Stopped, Exhausted };

std::string to_string(SessionStatus s);
SessionStatus session_status_from_string(const std::string& s);

// Sample out of the scheme's range (or not 0/1 for a binomial scheme).
struct DataError : std::domain_error {
  using std::domain_error::domain_error;
};

struct TrajectoryEntry {
  std::size_t stage = 0;
  std::int64_t samples = 0;
  double sum = 0.0;  // running sum on the internal (normalized) scale
  bool stop = false;
};

struct EstimationReport {
  Scheme scheme = Scheme::Abs;
  double point_estimate = 0.0;
  std::optional<ConfidenceInterval> interval;
  std::int64_t terminal_sample_size = 0;
  std::size_t terminal_stage = 0;
  double sum = 0.0;         // on the caller's scale
  bool certified = true;    // false when the budget ran out first
  PrecisionSpec spec;
  std::vector<TrajectoryEntry> trajectory;
};

// Everything needed to resume a session.
struct SessionState {
  SamplingPlan plan;
  std::optional<std::int64_t> budget;
  std::int64_t count = 0;
  std::int64_t successes = 0;  // binomial schemes
  double sum = 0.0;            // normalized scale
  std::size_t stage = 1;       // stage currently being filled
  SessionStatus status = SessionStatus::Running;
  std::vector<TrajectoryEntry> trajectory;
};

class EstimationSession {
 public:
  explicit EstimationSession(SamplingPlan plan, std::optional<std::int64_t> budget = std::nullopt);
  static EstimationSession restore(SessionState state);

  SessionStatus feed(double sample);
  EstimationReport report() const;

  const SessionState& state() const { return st_; }
  SessionStatus status() const { return st_.status; }
  std::int64_t sample_count() const { return st_.count; }
  std::size_t stage() const { return st_.stage; }

 private:
  EstimationSession() = default;
  bool at_boundary() const;
  bool evaluate() const;

  SessionState st_;
  bool binomial_ = true;
};

// 1{z >= u}; turns a draw z of a [0,1] variable and an independent uniform u
// into a Bernoulli(E[Z]) sample.
int link_transform(double z, double u);

// Streams samples through the open-ended relative scheme until it stops, the
// stream ends, or max_samples is reached (the latter two are not certified).
EstimationReport run_open_ended(const PrecisionSpec& spec, const std::function<std::optional<double>()>& stream,
                                std::int64_t max_samples);

}  // namespace seqest
