#include "seqest/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace seqest {
namespace {

__int128 abs128(__int128 x) { return x < 0 ? -x : x; }

__int128 gcd128(__int128 a, __int128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational normalized(__int128 n, __int128 d) {
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  return {n, d};
}

bool mul_ok(__int128 a, __int128 b, __int128& out) { return !__builtin_mul_overflow(a, b, &out); }

}  // namespace

Rational Rational::of(std::int64_t n, std::int64_t d) {
  if (d == 0) throw std::domain_error("Rational: zero denominator");
  return normalized(n, d);
}

double Rational::to_double() const {
  // split to keep precision for large magnitudes
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

std::optional<Rational> add(const Rational& a, const Rational& b) {
  __int128 x, y, d, s;
  if (!mul_ok(a.num, b.den, x) || !mul_ok(b.num, a.den, y) || !mul_ok(a.den, b.den, d)) return std::nullopt;
  if (__builtin_add_overflow(x, y, &s)) return std::nullopt;
  return normalized(s, d);
}

std::optional<Rational> sub(const Rational& a, const Rational& b) {
  return add(a, Rational{-b.num, b.den});
}

std::optional<Rational> mul(const Rational& a, const Rational& b) {
  __int128 n, d;
  if (!mul_ok(a.num, b.num, n) || !mul_ok(a.den, b.den, d)) return std::nullopt;
  return normalized(n, d);
}

std::optional<Rational> div(const Rational& a, const Rational& b) {
  if (b.num == 0) throw std::domain_error("Rational: division by zero");
  return mul(a, Rational{b.den, b.num});
}

std::optional<int> compare(const Rational& a, const Rational& b) {
  __int128 x, y;
  if (!mul_ok(a.num, b.den, x) || !mul_ok(b.num, a.den, y)) return std::nullopt;
  return x < y ? -1 : (x > y ? 1 : 0);
}

std::optional<Rational> exact_decimal(double x) {
  if (!std::isfinite(x)) return std::nullopt;
  std::int64_t scale = 1;
  for (int j = 0; j <= 9; ++j, scale *= 10) {
    const double m = std::nearbyint(x * static_cast<double>(scale));
    if (std::fabs(m) > 9.0e15) return std::nullopt;
    if (m / static_cast<double>(scale) == x) return Rational::of(static_cast<std::int64_t>(m), scale);
  }
  return std::nullopt;
}

int compare_ratio(std::int64_t k, std::int64_t n, const Threshold& t) {
  if (t.exact) {
    if (auto c = compare(Rational::of(k, n), *t.exact)) return *c;
  }
  const double v = static_cast<double>(k) / static_cast<double>(n);
  return v < t.value ? -1 : (v > t.value ? 1 : 0);
}

}  // namespace seqest
