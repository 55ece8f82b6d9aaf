#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles/enumerate.hpp"
#include "seqest/exact.hpp"
#include "seqest/intervals.hpp"
#include "seqest/rules.hpp"

using namespace seqest;

namespace {
SamplingPlan abs_plan(double eps, std::optional<double> zeta = std::nullopt) {
  PrecisionSpec s;
  s.scheme = Scheme::Abs;
  s.eps = eps;
  s.zeta = zeta;
  return build_plan(s);
}
SamplingPlan fw_plan(Scheme sc, double eps) {
  PrecisionSpec s;
  s.scheme = sc;
  s.eps = eps;
  return build_plan(s);
}
}  // namespace

TEST_CASE("single stage is a binomial law") {
  const CompiledRule r(with_stages(abs_plan(0.2), {10}));
  const auto d = stop_distribution(r, 0.3);
  REQUIRE(d.stops.size() == 1);
  double choose = 1.0;
  for (std::int64_t k = 0; k <= 10; ++k) {
    CHECK(d.atom(1, k) == doctest::Approx(choose * std::pow(0.3, k) * std::pow(0.7, 10 - k)).epsilon(1e-13));
    choose = choose * (10 - k) / (k + 1);
  }
  CHECK(coverage(r, 0.5).coverage == doctest::Approx(672.0 / 1024.0).epsilon(1e-14));
}

TEST_CASE("two-stage toy rule") {
  const auto plan = with_stages(abs_plan(0.2), {2, 4});
  const CompiledRule r(plan, [](std::size_t l, std::int64_t k) { return l == 2 || k == 0 || k == 2; });
  const auto d = stop_distribution(r, 0.5);
  CHECK(d.stop_probability(1) == doctest::Approx(0.5).epsilon(1e-15));
  // survivors: k=1 w.p. 1/2, then + Bin(2, 1/2)
  CHECK(d.atom(2, 1) == doctest::Approx(0.125));
  CHECK(d.atom(2, 2) == doctest::Approx(0.25));
  CHECK(d.atom(2, 3) == doctest::Approx(0.125));
  CHECK(d.expected_sample_size == doctest::Approx(3.0));
  const auto e = error_sums(d, [](std::size_t, std::int64_t n, std::int64_t k) {
    return 2 * k > n ? ErrorClass::Over : (2 * k < n ? ErrorClass::Under : ErrorClass::Neither);
  });
  CHECK(e.total_over == doctest::Approx(e.total_under));
  const auto none = error_sums(d, [](std::size_t, std::int64_t, std::int64_t) { return ErrorClass::Neither; });
  CHECK(none.total_over == 0.0);
  const auto brute = oracle::enumerate_fixed({2, 4}, 5, [](std::size_t l, std::int64_t k) {
    return l == 2 || k == 0 || k == 2;
  });
  for (const auto& [key, v] : brute) CHECK(std::fabs(d.atom(key.stage, key.stat) - static_cast<double>(v)) < 1e-15);
}

TEST_CASE("coverage and failure sums partition the outcomes") {
  const CompiledRule r(abs_plan(0.1));
  for (double p : {1e-9, 0.05, 0.2, 0.37, 0.5, 0.81, 0.999}) {
    const auto c = coverage(r, p);
    CHECK(c.coverage + c.over + c.under + c.truncation == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(coverage(r, 1e-9).coverage > 1 - 1e-6);
}

TEST_CASE("Q-sets of the absolute scheme") {
  const auto plan = abs_plan(0.1, 0.125);
  const CompiledRule r(plan);
  const auto q = build_qsets(r);
  const auto& plus = q.get("Q+");
  const auto& minus = q.get("Q-");
  const std::size_t cap = 1 + std::accumulate(plan.stages.begin(), plan.stages.end(), std::size_t{0},
                                              [](std::size_t a, std::int64_t n) { return a + n + 1; });
  CHECK(plus.points.size() <= cap);
  for (const auto& pt : plus.points) CHECK((pt.p.value > 0.0 && pt.p.value <= 0.5));
  double least = 1.0;
  for (auto n : plan.stages)
    for (std::int64_t k = 0; k <= n; ++k) {
      const double v = static_cast<double>(k) / n - 0.1;
      if (v > 1e-12 && v < 0.5) least = std::min(least, v);
    }
  CHECK(minus.points.front().p.value == doctest::Approx(least).epsilon(1e-12));
}

TEST_CASE("Q_L of a fixed-width scheme holds every first-stage lower bound in (0,1)") {
  const auto plan = fw_plan(Scheme::FWCp, 0.1);
  const CompiledRule r(plan);
  const auto sets = build_qsets(r);
  const auto& ql = sets.get("QL");
  for (std::int64_t k = 0; k <= plan.stages[0]; ++k) {
    const double L = cp_bounds(plan.stages[0], k, interval_alpha(plan)).lower;
    if (!(L > 0.0 && L < 1.0)) continue;
    bool found = false;
    for (const auto& pt : ql.points) found = found || pt.p.value == L;
    CHECK(found);
  }
}

TEST_CASE("certification") {
  CHECK(certify(abs_plan(0.1)).valid);
  PrecisionSpec s;
  s.scheme = Scheme::Abs;
  s.eps = 0.1;
  s.zeta = 10.0;
  CHECK_THROWS_AS(build_plan(s), SpecError);
  PrecisionSpec b;
  b.scheme = Scheme::BoundedAbs;
  b.eps = 0.1;
  b.stage_count = 3;
  CHECK_THROWS_AS(certify(build_plan(b)), SpecError);
}

TEST_CASE("certificate sums match enumeration on a toy plan") {
  const auto plan = with_stages(abs_plan(0.2, 0.2), {4, 8, 12, 16});
  const CompiledRule r(plan);
  const auto cert = certify(plan);
  for (const auto& pt : cert.points) {
    // only decimal points have a p = j/10 form
    const double j = pt.p * 10.0;
    if (std::fabs(j - std::round(j)) > 1e-12 || j < 1 || j > 9) continue;
    const auto atoms = oracle::enumerate_fixed(plan.stages, static_cast<int>(std::round(j)),
                                               [&](std::size_t l, std::int64_t k) { return r.stops(l, k); });
    long double s = 0;
    for (const auto& [key, v] : atoms) {
      const long double est = static_cast<long double>(key.stat) / plan.stage_size(key.stage);
      const bool hit = pt.condition == "abs-over" ? est >= pt.p + 0.2L - 1e-15L : est <= pt.p - 0.2L + 1e-15L;
      if (hit) s += v;
    }
    CHECK(std::fabs(static_cast<double>(s) - pt.sum) < 1e-12);
  }
}

TEST_CASE("coverage bounds") {
  const auto plan = fw_plan(Scheme::FWCp, 0.15);
  const CompiledRule r(plan);
  for (double p : {0.2, 0.5, 0.73}) CHECK(coverage_bounds(r, p, p).upper >= coverage_failure(r, p) - 1e-15);
  const auto b = coverage_bounds(r, 0.4, 0.6);
  for (int i = 0; i <= 4; ++i) {
    const double p = 0.4 + 0.05 * i;
    const double c = coverage_failure(r, p);
    CHECK(b.lower <= c + 1e-15);
    CHECK(c <= b.upper + 1e-15);
  }
  // a gap between adjacent support points gets the refined bounds
  std::vector<double> sup;
  for (std::size_t l = 1; l <= plan.stage_count(); ++l)
    for (std::int64_t k = 0; k <= plan.stage_size(l); ++k) {
      sup.push_back(r.interval(l, k).lower);
      sup.push_back(r.interval(l, k).upper);
    }
  std::sort(sup.begin(), sup.end());
  auto it = std::upper_bound(sup.begin(), sup.end(), 0.3);
  const double a = *it + 1e-9, bb = *(it + 1) - 1e-9;
  const auto g = coverage_bounds(r, a, bb);
  CHECK(g.refined);
  CHECK(g.upper <= g.generic_upper);
  CHECK(g.lower >= g.generic_lower);
}

TEST_CASE("inverse lattice matches enumeration") {
  PrecisionSpec s;
  s.scheme = Scheme::RelInverse;
  s.eps = 0.3;
  const auto plan = with_stages(build_plan(s), {1, 2, 3, 4});
  const CompiledRule r(plan);
  for (int j : {1, 3, 5, 7, 9}) {
    const auto d = stop_distribution(r, j / 10.0);
    const auto brute = oracle::enumerate_inverse(plan.stages, j, [&](std::size_t l, std::int64_t n) {
      return r.stops(l, n);
    }, 32);
    for (const auto& [key, v] : brute) CHECK(std::fabs(d.atom(key.stage, key.stat) - static_cast<double>(v)) < 1e-12);
    CHECK(d.total_stop_mass() + d.truncation_error == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tuning") {
  PrecisionSpec s;
  s.scheme = Scheme::Abs;
  s.eps = 0.2;
  const auto res = tune_zeta(s);
  REQUIRE(res.found);
  CHECK(res.zeta >= default_zeta(build_plan(s).tau) * (1 - 1e-9));
  CHECK(res.certificate.valid);
  // dense zeta sweep oracle
  double best = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double z = std::exp(std::log(0.01) + (std::log(0.999999) - std::log(0.01)) * i / 400.0);
    PrecisionSpec t = s;
    t.zeta = z;
    if (certify(build_plan(t)).valid) best = z;
  }
  CHECK(std::fabs(res.zeta - best) / best < 2e-2);
}
