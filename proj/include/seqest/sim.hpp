#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "seqest/plan.hpp"

namespace seqest {

struct Truth {
  enum class Kind { Bernoulli, Beta, Uniform, Mixture, Constant };
  Kind kind = Kind::Bernoulli;
  double a = 0.5;  // Bernoulli p, Beta alpha, Uniform lower, Constant value
  double b = 0.0;  // Beta beta, Uniform upper
  std::vector<std::pair<double, double>> atoms;  // mixture (value, weight)

  static Truth bernoulli(double p);
  static Truth beta(double alpha, double beta);
  static Truth uniform(double lo, double hi);
  static Truth constant(double c);
  static Truth mixture(std::vector<std::pair<double, double>> atoms);
  // "bernoulli:0.3", "beta:2,2", "uniform:-1,1", "constant:0.4", "mixture:0@0.5,1@0.5"
  static Truth parse(const std::string& text);

  double mean() const;
  double support_lo() const;
  double support_hi() const;
  bool binary() const;  // only 0/1 values
  double draw(std::mt19937_64& rng) const;
  std::string describe() const;
};

// Uniform double in [0,1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng);
std::uint64_t splitmix64(std::uint64_t x);
// Seed of replication `rep`'s private generator.
std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep);

struct SimConfig {
  PrecisionSpec spec;
  Truth truth;
  std::int64_t replications = 1000;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> budget;
  unsigned jobs = 1;
  bool link = false;           // pass draws through link_transform first
  bool compare_exact = false;
};

struct ExactComparison {
  double p = 0.0;
  double coverage = 0.0;
  double expected_n = 0.0;
  double sd_n = 0.0;
  std::vector<double> stage_probability;
  double truncation = 0.0;
  double z_coverage = 0.0;
  double z_expected_n = 0.0;
  std::vector<double> z_stage;
  double max_abs_z = 0.0;
};

struct SimReport {
  std::string scheme;
  std::string truth;
  double true_mean = 0.0;
  std::int64_t replications = 0;
  std::uint64_t seed = 0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_estimate = 0.0;
  double mean_n = 0.0;
  double sd_n = 0.0;
  std::vector<std::pair<double, double>> n_quantiles;  // (level, value)
  std::vector<double> stage_frequency;                 // index 0 is stage 1
  double exhausted_fraction = 0.0;
  std::optional<ExactComparison> exact;
  std::vector<std::string> notes;
};

SimReport simulate(const SimConfig& config);
// simulate() with the truth's draws sent through link_transform into a
// binomial scheme; success is judged against E[Z].
SimReport simulate_link(SimConfig config);

enum class LemmaEvent {
  UpperTail,       // Xbar >= z, bound exp(n M(z, mu))
  UpperDeviation,  // Xbar >= mu and M(Xbar, mu) <= ln(alpha)/n, bound alpha
  LowerDeviation,  // Xbar <= mu and M(Xbar, mu) <= ln(alpha)/n, bound alpha
  InverseLower,    // gamma/n <= p and M_I(gamma/n, p) <= ln(alpha)/gamma, bound alpha
  InverseUpper     // gamma/n >= p and M_I(gamma/n, p) <= ln(alpha)/gamma, bound alpha
};

std::string to_string(LemmaEvent e);
LemmaEvent lemma_event_from_string(const std::string& s);

struct LemmaCheck {
  LemmaEvent event = LemmaEvent::UpperDeviation;
  std::int64_t n = 100;    // sample size, or gamma for the inverse events
  double mu = 0.5;
  double alpha = 0.05;     // UpperTail: the threshold z instead
  std::int64_t reps = 100000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  // Draws for the fixed-size events; Bernoulli(mu) when absent.
  std::optional<Truth> truth;
};

struct LemmaResult {
  double frequency = 0.0;
  double bound = 0.0;
  double se = 0.0;   // binomial standard error at the bound
  bool ok = false;   // frequency <= bound + 4 se
};

LemmaResult lemma_event_check(const LemmaCheck& check);

}  // namespace seqest
