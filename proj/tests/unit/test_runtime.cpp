#include <cmath>
#include <random>

#include "doctest.h"
#include "seqest/plan.hpp"
#include "seqest/rules.hpp"
#include "seqest/runtime.hpp"

using namespace seqest;

namespace {
SamplingPlan abs_plan() {
  PrecisionSpec s;
  s.scheme = Scheme::Abs;
  s.eps = 0.1;
  s.zeta = 0.125;
  return build_plan(s);
}
}  // namespace

TEST_CASE("first decision at the first stage boundary") {
  EstimationSession s(abs_plan());
  for (int i = 0; i < 63; ++i) CHECK(s.feed(0.0) == SessionStatus::Running);
  CHECK(s.state().trajectory.empty());
  CHECK(s.feed(0.0) == SessionStatus::Stopped);  // k = 0 stops at stage 1
  const auto r = s.report();
  CHECK(r.terminal_stage == 1);
  CHECK(r.terminal_sample_size == 64);
  CHECK(r.point_estimate == 0.0);
  CHECK_THROWS_AS(s.feed(1.0), std::logic_error);
}

TEST_CASE("estimate uses every sample") {
  EstimationSession s(abs_plan());
  std::mt19937_64 rng(3);
  std::int64_t k = 0;
  while (s.status() == SessionStatus::Running) {
    const double x = (rng() % 2 == 0) ? 1.0 : 0.0;
    k += x == 1.0;
    s.feed(x);
  }
  const auto r = s.report();
  CHECK(r.point_estimate == static_cast<double>(k) / static_cast<double>(r.terminal_sample_size));
  CHECK(r.terminal_sample_size == abs_plan().stage_size(r.terminal_stage));
}

TEST_CASE("report on a running session and bad samples") {
  EstimationSession s(abs_plan());
  CHECK_THROWS_AS(s.report(), std::logic_error);
  CHECK_THROWS_AS(s.feed(0.5), DataError);
  CHECK_THROWS_AS(s.feed(std::nan("")), DataError);
}

TEST_CASE("inverse sampling decides at successes") {
  PrecisionSpec sp;
  sp.scheme = Scheme::RelInverse;
  sp.eps = 0.2;
  const auto plan = with_stages(build_plan(sp), {1, 2, 3});
  EstimationSession s(plan);
  for (int i = 0; i < 10; ++i) s.feed(0.0);
  CHECK(s.state().trajectory.empty());
  s.feed(1.0);
  REQUIRE(s.state().trajectory.size() == 1);
  CHECK(s.state().trajectory[0].samples == 11);
  EstimationSession z(build_plan(sp), 500);
  while (z.status() == SessionStatus::Running) z.feed(0.0);
  CHECK(z.status() == SessionStatus::Exhausted);
  CHECK_FALSE(z.report().certified);
}

TEST_CASE("fixed-width reports stay within 2 eps") {
  for (auto sc : {Scheme::FWCp, Scheme::FWCh, Scheme::FWMassart}) {
    PrecisionSpec sp;
    sp.scheme = sc;
    sp.eps = 0.1;
    const auto plan = build_plan(sp);
    for (int seed = 0; seed < 40; ++seed) {
      std::mt19937_64 rng(seed);
      const double p = (seed % 10 + 0.5) / 10.0;
      EstimationSession s(plan);
      while (s.status() == SessionStatus::Running) s.feed(std::uniform_real_distribution<>(0, 1)(rng) < p ? 1.0 : 0.0);
      const auto r = s.report();
      REQUIRE(r.interval);
      CHECK(r.interval->width() <= 0.2 + 1e-12);
    }
  }
}

TEST_CASE("general mixed reports on the original scale") {
  PrecisionSpec sp;
  sp.scheme = Scheme::GeneralMixed;
  sp.eps_a = 0.1;
  sp.eps_r = 0.2;
  sp.range_lo = -1;
  sp.range_hi = 1;
  sp.stage_count = 1;
  EstimationSession s(build_plan(sp));
  while (s.status() == SessionStatus::Running) s.feed(0.5);  // normalized 0.75
  CHECK(s.report().point_estimate == doctest::Approx(0.5).epsilon(1e-14));
  EstimationSession t(build_plan(sp));
  CHECK_THROWS_AS(t.feed(1.5), DataError);
}

TEST_CASE("checkpoint and restore") {
  const auto plan = abs_plan();
  std::mt19937_64 rng(11);
  std::vector<double> xs;
  for (int i = 0; i < 300; ++i) xs.push_back(rng() % 3 == 0 ? 1.0 : 0.0);
  EstimationSession a(plan);
  for (double x : xs)
    if (a.status() == SessionStatus::Running) a.feed(x);
  EstimationSession b(plan);
  for (int i = 0; i < 70; ++i) b.feed(xs[i]);
  auto c = EstimationSession::restore(b.state());
  for (std::size_t i = 70; i < xs.size() && c.status() == SessionStatus::Running; ++i) c.feed(xs[i]);
  CHECK(c.report().point_estimate == a.report().point_estimate);
  CHECK(c.report().terminal_stage == a.report().terminal_stage);
}

TEST_CASE("link transform") {
  CHECK(link_transform(1.0, 0.999) == 1);
  CHECK(link_transform(1.0, 1.0) == 1);
  CHECK(link_transform(0.0, 0.3) == 0);
  CHECK_THROWS_AS(link_transform(1.2, 0.3), DataError);
}

TEST_CASE("open-ended runs") {
  PrecisionSpec sp;
  sp.scheme = Scheme::RelFixed;
  sp.eps = 0.2;
  auto ones = [] { return std::optional<double>(1.0); };
  const auto r = run_open_ended(sp, ones, 100000);
  CHECK(r.terminal_stage == 1);
  CHECK(r.certified);
  auto zeros = [] { return std::optional<double>(0.0); };
  const auto z = run_open_ended(sp, zeros, 5000);
  CHECK_FALSE(z.certified);
  // golden: p = 0.5 stream from a fixed seed
  std::mt19937_64 rng(2024);
  auto coin = [&] { return std::optional<double>(static_cast<double>(rng() >> 63)); };
  const auto g = run_open_ended(sp, coin, 1000000);
  CHECK(g.certified);
  CHECK(g.terminal_stage == 9);
  CHECK(g.terminal_sample_size == 821);
}
