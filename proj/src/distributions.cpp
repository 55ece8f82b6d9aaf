#include "seqest/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqest {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::int64_t kNoEnd = std::numeric_limits<std::int64_t>::max();

void check_p(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw std::domain_error("probability must lie in [0,1]");
}

struct Neumaier {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

// log sum_{j=lo}^{hi} t_j for a unimodal sequence whose maximum over the
// range sits at `peak`, with t_{j+1} = t_j * ratio(j).
template <class Ratio>
double log_range_sum(std::int64_t lo, std::int64_t hi, std::int64_t peak, double log_peak,
                     Ratio ratio) {
  if (log_peak == kNegInf) return kNegInf;
  // small terms first: collect both flanks, then add in increasing size
  std::vector<double> right, left;
  double t = 1.0;
  for (std::int64_t j = peak; j < hi; ++j) {
    t *= ratio(j);
    if (t < 1e-22 || !(t > 0.0)) break;
    right.push_back(t);
  }
  t = 1.0;
  for (std::int64_t j = peak; j > lo; --j) {
    const double r = ratio(j - 1);
    if (!(r > 0.0)) break;
    t /= r;
    if (t < 1e-22) break;
    left.push_back(t);
  }
  Neumaier acc;
  for (auto it = right.rbegin(); it != right.rend(); ++it) acc.add(*it);
  for (auto it = left.rbegin(); it != left.rend(); ++it) acc.add(*it);
  acc.add(1.0);
  return log_peak + std::log(acc.value());
}

std::int64_t binom_mode(std::int64_t n, double p) {
  auto m = static_cast<std::int64_t>(std::floor((static_cast<double>(n) + 1.0) * p));
  return std::clamp<std::int64_t>(m, 0, n);
}

}  // namespace

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return kNegInf;
  if (k == 0 || k == n) return 0.0;
  return log_gamma(static_cast<double>(n) + 1.0) - log_gamma(static_cast<double>(k) + 1.0) -
         log_gamma(static_cast<double>(n - k) + 1.0);
}

double binom_pmf(std::int64_t n, std::int64_t k, double p) {
  check_p(p);
  if (n < 0 || k < 0 || k > n) throw std::domain_error("binom_pmf: k outside [0,n]");
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == n ? 0.0 : kNegInf;
  return log_choose(n, k) + static_cast<double>(k) * std::log(p) +
         static_cast<double>(n - k) * std::log1p(-p);
}

double binom_tail_upper(std::int64_t n, std::int64_t k, double p) {
  check_p(p);
  if (k <= 0) return 0.0;
  if (k > n) return kNegInf;
  if (p == 0.0) return kNegInf;
  if (p == 1.0) return 0.0;
  const double q = 1.0 - p;
  const std::int64_t peak = std::max(k, binom_mode(n, p));
  return log_range_sum(k, n, peak, binom_pmf(n, peak, p), [&](std::int64_t j) {
    return static_cast<double>(n - j) / static_cast<double>(j + 1) * p / q;
  });
}

double binom_tail_lower(std::int64_t n, std::int64_t k, double p) {
  check_p(p);
  if (k < 0) return kNegInf;
  if (k >= n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return kNegInf;
  const double q = 1.0 - p;
  const std::int64_t peak = std::min(k, binom_mode(n, p));
  return log_range_sum(0, k, peak, binom_pmf(n, peak, p), [&](std::int64_t j) {
    return static_cast<double>(n - j) / static_cast<double>(j + 1) * p / q;
  });
}

double negbinom_pmf(std::int64_t gamma, std::int64_t n, double p) {
  check_p(p);
  if (gamma < 1) throw std::domain_error("negbinom_pmf: gamma must be >= 1");
  if (n < gamma) throw std::domain_error("negbinom_pmf: n < gamma");
  if (p == 0.0) return kNegInf;
  if (p == 1.0) return n == gamma ? 0.0 : kNegInf;
  return log_choose(n - 1, gamma - 1) + static_cast<double>(gamma) * std::log(p) +
         static_cast<double>(n - gamma) * std::log1p(-p);
}

double poisson_cdf(std::int64_t k, double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("poisson_cdf: lambda must be > 0");
  if (k < 0) return kNegInf;
  const auto mode = static_cast<std::int64_t>(std::floor(lambda));
  const std::int64_t peak = std::min(k, mode);
  const double log_peak = static_cast<double>(peak) * std::log(lambda) - lambda -
                          log_gamma(static_cast<double>(peak) + 1.0);
  return std::min(0.0, log_range_sum(0, k, peak, log_peak, [&](std::int64_t j) {
                    return lambda / static_cast<double>(j + 1);
                  }));
}

double poisson_sf(std::int64_t k, double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("poisson_sf: lambda must be > 0");
  if (k <= 0) return 0.0;
  const auto mode = static_cast<std::int64_t>(std::floor(lambda));
  const std::int64_t peak = std::max(k, mode);
  const double log_peak = static_cast<double>(peak) * std::log(lambda) - lambda -
                          log_gamma(static_cast<double>(peak) + 1.0);
  return std::min(0.0, log_range_sum(k, kNoEnd, peak, log_peak, [&](std::int64_t j) {
                    return lambda / static_cast<double>(j + 1);
                  }));
}

std::vector<double> binom_pmf_vector(std::int64_t n, double p) {
  check_p(p);
  if (n < 0) throw std::domain_error("binom_pmf_vector: n < 0");
  std::vector<double> out(static_cast<std::size_t>(n + 1), 0.0);
  if (p == 0.0) {
    out.front() = 1.0;
    return out;
  }
  if (p == 1.0) {
    out.back() = 1.0;
    return out;
  }
  const double q = 1.0 - p;
  const std::int64_t m = binom_mode(n, p);
  out[m] = std::exp(binom_pmf(n, m, p));
  for (std::int64_t j = m; j < n; ++j)
    out[j + 1] = out[j] * (static_cast<double>(n - j) / static_cast<double>(j + 1) * p / q);
  for (std::int64_t j = m; j > 0; --j)
    out[j - 1] = out[j] / (static_cast<double>(n - j + 1) / static_cast<double>(j) * p / q);
  return out;
}

NegBinomTable negbinom_table(std::int64_t gamma, double p, double tail_tol,
                             std::int64_t max_len) {
  check_p(p);
  if (gamma < 1) throw std::domain_error("negbinom_table: gamma must be >= 1");
  if (p == 0.0) throw std::domain_error("negbinom_table: p = 0 never reaches gamma successes");
  NegBinomTable t;
  t.first = gamma;
  if (p == 1.0) {
    t.mass = {1.0};
    t.tail = 0.0;
    return t;
  }
  const double q = 1.0 - p;
  // P(N = n+1) / P(N = n) = n q / (n - gamma + 1)
  double cur = std::exp(negbinom_pmf(gamma, gamma, p));
  const auto mode = static_cast<std::int64_t>(
      std::max<double>(gamma, std::floor((static_cast<double>(gamma) - 1.0) / p + 1.0)));
  std::int64_t n = gamma;
  const std::int64_t check_every = 256;
  while (true) {
    t.mass.push_back(cur);
    const std::int64_t len = static_cast<std::int64_t>(t.mass.size());
    if (n >= mode && (len % check_every == 0 || cur < tail_tol * 1e-3)) {
      const double tail = std::exp(binom_tail_lower(n, gamma - 1, p));
      if (tail < tail_tol || len >= max_len) {
        t.tail = tail;
        break;
      }
    }
    if (len >= max_len) {
      t.tail = std::exp(binom_tail_lower(n, gamma - 1, p));
      break;
    }
    const double next = cur * static_cast<double>(n) * q / static_cast<double>(n - gamma + 1);
    ++n;
    // the head can underflow when p^gamma is tiny; recompute directly until it doesn't
    cur = (next < 1e-280 && n <= mode) ? std::exp(negbinom_pmf(gamma, n, p)) : next;
  }
  return t;
}

}  // namespace seqest
