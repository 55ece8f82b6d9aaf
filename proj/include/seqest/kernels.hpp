#pragma once

#include <cstdint>

namespace seqest {

// Bernstein-type exponent used by the bounded-variable schemes.
// -inf when mu lies outside (0,1).
double m_fn(double z, double mu);

// m_fn(z, mu) / z, with m_inv(0, mu) = -inf.
double m_inv(double z, double mu);

// Bernoulli Chernoff exponent z ln(theta/z) + (1-z) ln((1-theta)/(1-z)).
double kl_bernoulli(double z, double theta);

// Inverse-sampling exponent, kl_bernoulli(z, mu) / z; ln(mu) at z = 1.
double kl_inverse_binomial(double z, double mu);

// P(Poi(g/(1+eps)) >= g) + P(Poi(g/(1-eps)) <= g-1).
double g_fn(double eps, std::int64_t gamma);


// Closed-form partials of m_fn, for z, mu strictly inside (0,1).
double m_fn_dz(double z, double mu);
double m_fn_dmu(double z, double mu);
double m_inv_dmu(double z, double mu);
// d/dz m_fn(z, z + sign*eps) and d/dz m_fn(z, z/(1 + sign*eps)).
double m_shift_dz(double z, double eps, int sign);
double m_scale_dz(double z, double eps, int sign);

}  // namespace seqest
