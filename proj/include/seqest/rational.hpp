#pragma once

#include <cstdint>
#include <optional>

namespace seqest {

// Small exact rational on __int128; operations return nullopt on overflow.
struct Rational {
  __int128 num = 0;
  __int128 den = 1;

  static Rational of(std::int64_t n, std::int64_t d = 1);
  double to_double() const;
};

std::optional<Rational> add(const Rational& a, const Rational& b);
std::optional<Rational> sub(const Rational& a, const Rational& b);
std::optional<Rational> mul(const Rational& a, const Rational& b);
std::optional<Rational> div(const Rational& a, const Rational& b);
// -1, 0, +1; nullopt on overflow.
std::optional<int> compare(const Rational& a, const Rational& b);

// Exact value of a short decimal literal such as 0.1 or 0.05, when x is the
// double nearest to m / 10^j for some j <= 9.
std::optional<Rational> exact_decimal(double x);

// A real number, optionally with its exact rational value.
struct Threshold {
  double value = 0.0;
  std::optional<Rational> exact;
};

// Sign of k/n - t: exact when t carries a rational, otherwise floating.
int compare_ratio(std::int64_t k, std::int64_t n, const Threshold& t);

}  // namespace seqest
