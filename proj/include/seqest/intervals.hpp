#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seqest {

enum class IntervalKind { ClopperPearson, ChernoffHoeffding, Massart };

std::string to_string(IntervalKind k);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
  IntervalKind kind = IntervalKind::ClopperPearson;
  double alpha = 0.0;
  double width() const { return upper - lower; }
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ConfidenceInterval cp_bounds(std::int64_t n, std::int64_t k, double alpha);
ConfidenceInterval ch_bounds(std::int64_t n, std::int64_t k, double alpha);
ConfidenceInterval massart_bounds(std::int64_t n, std::int64_t k, double alpha);
ConfidenceInterval make_interval(IntervalKind kind, std::int64_t n, std::int64_t k, double alpha);

// True when either max{0,.} / min{1,.} clamp of the Massart formula bites.
bool massart_clamp_active(std::int64_t n, std::int64_t k, double alpha);

// Algebraic stopping inequality of the Massart scheme, written with
// log_zd = ln(zeta*delta) < 0.
bool massart_width_inequality(std::int64_t n, std::int64_t k, double eps, double log_zd);

}  // namespace seqest
