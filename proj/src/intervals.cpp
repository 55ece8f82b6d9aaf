#include "seqest/intervals.hpp"

#include <algorithm>
#include <cmath>

#include "seqest/distributions.hpp"
#include "seqest/kernels.hpp"

namespace seqest {
namespace {

constexpr double kTol = 1e-12;
constexpr int kMaxSteps = 200;

void check_args(std::int64_t n, std::int64_t k, double alpha) {
  if (n < 1) throw std::invalid_argument("interval: n must be >= 1");
  if (k < 0 || k > n) throw std::invalid_argument("interval: k must lie in [0,n]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("interval: alpha must lie in (0,1)");
}

// Root of an increasing predicate on (lo, hi): returns the point where
// above(x) flips from false to true.
template <class Above>
double bisect(double lo, double hi, Above above) {
  for (int step = 0; step < kMaxSteps; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= kTol || mid == lo || mid == hi) return mid;
    if (above(mid))
      hi = mid;
    else
      lo = mid;
  }
  throw NumericalError("bisection did not converge");
}

}  // namespace

std::string to_string(IntervalKind k) {
  switch (k) {
    case IntervalKind::ClopperPearson: return "clopper-pearson";
    case IntervalKind::ChernoffHoeffding: return "chernoff-hoeffding";
    case IntervalKind::Massart: return "massart";
  }
  return "?";
}

ConfidenceInterval cp_bounds(std::int64_t n, std::int64_t k, double alpha) {
  check_args(n, k, alpha);
  ConfidenceInterval ci{0.0, 1.0, IntervalKind::ClopperPearson, alpha};
  const double target = std::log(alpha / 2.0);
  // P(X >= k | p) increases in p; P(X <= k | p) decreases in p
  if (k > 0)
    ci.lower = bisect(0.0, 1.0, [&](double p) { return binom_tail_upper(n, k, p) >= target; });
  if (k < n)
    ci.upper = bisect(0.0, 1.0, [&](double p) { return binom_tail_lower(n, k, p) <= target; });
  return ci;
}

ConfidenceInterval ch_bounds(std::int64_t n, std::int64_t k, double alpha) {
  check_args(n, k, alpha);
  ConfidenceInterval ci{0.0, 1.0, IntervalKind::ChernoffHoeffding, alpha};
  const double nn = static_cast<double>(n);
  const double z = static_cast<double>(k) / nn;
  const double target = std::log(alpha) / nn;
  if (k == n)
    ci.lower = std::pow(alpha / 2.0, 1.0 / nn);
  else if (k > 0)
    ci.lower = bisect(0.0, z, [&](double p) { return kl_bernoulli(z, p) >= target; });
  if (k == 0)
    ci.upper = 1.0 - std::pow(alpha / 2.0, 1.0 / nn);
  else if (k < n)
    ci.upper = bisect(z, 1.0, [&](double p) { return kl_bernoulli(z, p) <= target; });
  return ci;
}

namespace {

struct MassartRaw {
  double lower, upper;
};

MassartRaw massart_raw(std::int64_t n, std::int64_t k, double alpha) {
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  const double c = std::log(2.0 / alpha);
  const double z = kk / nn;
  const double root = std::sqrt(1.0 + 9.0 / (2.0 * c) * kk * (1.0 - z));
  const double den = 1.0 + 9.0 * nn / (8.0 * c);
  return {z + 0.75 * (1.0 - 2.0 * z - root) / den, z + 0.75 * (1.0 - 2.0 * z + root) / den};
}

}  // namespace

ConfidenceInterval massart_bounds(std::int64_t n, std::int64_t k, double alpha) {
  check_args(n, k, alpha);
  const auto r = massart_raw(n, k, alpha);
  return {std::max(0.0, r.lower), std::min(1.0, r.upper), IntervalKind::Massart, alpha};
}

bool massart_clamp_active(std::int64_t n, std::int64_t k, double alpha) {
  check_args(n, k, alpha);
  const auto r = massart_raw(n, k, alpha);
  return r.lower < 0.0 || r.upper > 1.0;
}

bool massart_width_inequality(std::int64_t n, std::int64_t k, double eps, double log_zd) {
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  const double lhs = 1.0 - 9.0 / (2.0 * log_zd) * kk * (1.0 - kk / nn);
  const double b = 4.0 / 3.0 - 3.0 * nn / (2.0 * log_zd);
  return lhs <= eps * eps * b * b;
}

ConfidenceInterval make_interval(IntervalKind kind, std::int64_t n, std::int64_t k, double alpha) {
  switch (kind) {
    case IntervalKind::ClopperPearson: return cp_bounds(n, k, alpha);
    case IntervalKind::ChernoffHoeffding: return ch_bounds(n, k, alpha);
    case IntervalKind::Massart: return massart_bounds(n, k, alpha);
  }
  throw std::invalid_argument("unknown interval kind");
}

}  // namespace seqest
