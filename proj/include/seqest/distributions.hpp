#pragma once

#include <cstdint>
#include <vector>

namespace seqest {

// All scalar functions return natural-log probabilities (-inf allowed).

double log_gamma(double x);
double log_choose(std::int64_t n, std::int64_t k);

double binom_pmf(std::int64_t n, std::int64_t k, double p);
// log P(X >= k) and log P(X <= k) for X ~ Bin(n, p).
double binom_tail_upper(std::int64_t n, std::int64_t k, double p);
double binom_tail_lower(std::int64_t n, std::int64_t k, double p);

// Law of the trial index at which the gamma-th success occurs.
double negbinom_pmf(std::int64_t gamma, std::int64_t n, double p);

// log P(Y <= k) and log P(Y >= k) for Y ~ Poisson(lambda).
double poisson_cdf(std::int64_t k, double lambda);
double poisson_sf(std::int64_t k, double lambda);

// Linear-scale Bin(n, p) masses for j = 0..n.
std::vector<double> binom_pmf_vector(std::int64_t n, double p);

struct NegBinomTable {
  std::int64_t first = 0;     // smallest attainable n (= gamma)
  std::vector<double> mass;   // mass[i] = P(N = first + i)
  double tail = 0.0;          // P(N > first + mass.size() - 1), exact
};

// Masses of the gamma-th success index, truncated once the remaining tail
// falls below tail_tol (or max_len entries are produced).
NegBinomTable negbinom_table(std::int64_t gamma, double p, double tail_tol,
                             std::int64_t max_len = 50'000'000);

}  // namespace seqest
