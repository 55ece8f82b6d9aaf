#include "seqest/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "seqest/distributions.hpp"

namespace seqest {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_unit(double x, const char* what) {
  if (std::isnan(x) || x < 0.0 || x > 1.0)
    throw std::domain_error(std::string(what) + " must lie in [0,1]");
}

}  // namespace

double m_fn(double z, double mu) {
  require_unit(z, "m_fn: z");
  if (std::isnan(mu)) throw std::domain_error("m_fn: mu is NaN");
  if (!(mu > 0.0 && mu < 1.0)) return kNegInf;
  if (z == mu) return 0.0;
  const double d = mu - z;
  const double s = 2.0 * mu / 3.0 + z / 3.0;
  return d * d / (2.0 * s * (s - 1.0));
}

double m_inv(double z, double mu) {
  require_unit(z, "m_inv: z");
  if (z == 0.0) return kNegInf;
  return m_fn(z, mu) / z;
}

double kl_bernoulli(double z, double theta) {
  require_unit(z, "kl_bernoulli: z");
  require_unit(theta, "kl_bernoulli: theta");
  if (z == theta) return 0.0;
  if (theta == 0.0 || theta == 1.0) return kNegInf;
  if (z == 0.0) return std::log1p(-theta);
  if (z == 1.0) return std::log(theta);
  // log1p forms keep the two pieces accurate when z is close to theta
  const double a = z * std::log1p((theta - z) / z);
  const double b = (1.0 - z) * std::log1p((z - theta) / (1.0 - z));
  const double v = a + b;
  return v > 0.0 ? 0.0 : v;
}

double kl_inverse_binomial(double z, double mu) {
  require_unit(z, "kl_inverse_binomial: z");
  require_unit(mu, "kl_inverse_binomial: mu");
  if (z == 0.0) return kNegInf;
  if (z == 1.0) return mu == 0.0 ? kNegInf : std::log(mu);
  return kl_bernoulli(z, mu) / z;
}

double g_fn(double eps, std::int64_t gamma) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("g_fn: eps must lie in (0,1)");
  if (gamma < 1) throw std::domain_error("g_fn: gamma must be >= 1");
  const double g = static_cast<double>(gamma);
  const double upper = poisson_sf(gamma, g / (1.0 + eps));
  const double lower = poisson_cdf(gamma - 1, g / (1.0 - eps));
  return std::exp(upper) + std::exp(lower);
}

namespace {
double w_sq(double z, double mu) {
  const double w = 2.0 * mu / 3.0 + z / 3.0;
  return (w * (1.0 - w)) * (w * (1.0 - w));
}
}  // namespace

double m_fn_dz(double z, double mu) {
  const double w = 2.0 * mu / 3.0 + z / 3.0;
  return (mu - z) * ((1.0 - mu) * w + (mu - z) / 6.0) / w_sq(z, mu);
}

double m_fn_dmu(double z, double mu) {
  return (z - mu) * (mu * (1.0 - z) + z * (1.0 - mu) + z * (1.0 - z)) / (3.0 * w_sq(z, mu));
}

double m_inv_dmu(double z, double mu) { return m_fn_dmu(z, mu) / z; }

double m_shift_dz(double z, double eps, int sign) {
  const double a = z + sign * 2.0 * eps / 3.0;
  const double d = a * (1.0 - a);
  return eps * eps / (d * d) * (0.5 - sign * 2.0 * eps / 3.0 - z);
}

double m_scale_dz(double z, double eps, int sign) {
  const double e = sign * eps;
  const double d = (1.0 + e) * (1.0 - z) + 2.0 * e * z / 3.0;
  return -eps * eps / (2.0 * (1.0 + e / 3.0)) * (1.0 + e) / (d * d);
}

}  // namespace seqest
