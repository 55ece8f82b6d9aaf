#include <cmath>

#include "doctest.h"
#include "seqest/sim.hpp"

using namespace seqest;

namespace {
SimConfig abs_config(double p, std::int64_t reps) {
  SimConfig c;
  c.spec.scheme = Scheme::Abs;
  c.spec.eps = 0.1;
  c.truth = Truth::bernoulli(p);
  c.replications = reps;
  c.seed = 42;
  return c;
}
}  // namespace

TEST_CASE("truth parsing and means") {
  CHECK(Truth::parse("bernoulli:0.3").mean() == 0.3);
  CHECK(Truth::parse("beta:2,2").mean() == 0.5);
  CHECK(Truth::parse("uniform:-1,1").mean() == 0.0);
  CHECK(Truth::parse("constant:0.4").mean() == 0.4);
  CHECK(Truth::parse("mixture:0@1,1@3").mean() == doctest::Approx(0.75));
  CHECK(Truth::parse("mixture:0@1,1@3").binary());
  CHECK_THROWS_AS(Truth::parse("beta:2"), SpecError);
  CHECK_THROWS_AS(Truth::parse("gauss:0,1"), SpecError);
  CHECK_THROWS_AS(Truth::parse("bernoulli:x"), SpecError);
}

TEST_CASE("replication seeds are distinct and stable") {
  CHECK(replication_seed(1, 0) != replication_seed(1, 1));
  CHECK(replication_seed(1, 0) != replication_seed(2, 0));
  CHECK(replication_seed(7, 5) == replication_seed(7, 5));
}

TEST_CASE("simulation is reproducible and independent of jobs") {
  auto c = abs_config(0.3, 3000);
  const auto a = simulate(c);
  c.jobs = 3;
  const auto b = simulate(c);
  CHECK(a.coverage == b.coverage);
  CHECK(a.mean_n == b.mean_n);
  CHECK(a.stage_frequency == b.stage_frequency);
  CHECK(a.mean_estimate == b.mean_estimate);
}

TEST_CASE("simulation agrees with the exact engine") {
  auto c = abs_config(0.5, 20000);
  c.compare_exact = true;
  const auto r = simulate(c);
  REQUIRE(r.exact);
  CHECK(r.exact->max_abs_z < 4.0);
  double s = r.exhausted_fraction;
  for (double f : r.stage_frequency) s += f;
  CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("budget exhaustion is reported") {
  SimConfig c;
  c.spec.scheme = Scheme::RelInverse;
  c.spec.eps = 0.2;
  c.truth = Truth::bernoulli(0.01);
  c.replications = 50;
  c.budget = 100;
  c.seed = 1;
  const auto r = simulate(c);
  CHECK(r.exhausted_fraction == 1.0);
  CHECK(r.coverage == 0.0);
}

TEST_CASE("truth must fit the scheme") {
  auto c = abs_config(0.3, 10);
  c.truth = Truth::uniform(0, 1);
  CHECK_THROWS_AS(simulate(c), SpecError);
  CHECK_NOTHROW(simulate_link(c));
}

TEST_CASE("lemma checks") {
  LemmaCheck l;
  l.event = LemmaEvent::UpperDeviation;
  l.n = 100;
  l.mu = 0.3;
  l.alpha = 0.05;
  l.reps = 20000;
  l.seed = 5;
  const auto r = lemma_event_check(l);
  CHECK(r.ok);
  CHECK(r.frequency <= 0.05 + 4 * r.se);
  l.alpha = 1.5;
  CHECK(lemma_event_check(l).ok);
  l.event = LemmaEvent::UpperTail;
  l.n = 50;
  l.mu = 0.4;
  l.alpha = 0.5;
  const auto t = lemma_event_check(l);
  CHECK(t.ok);
  CHECK(t.bound == doctest::Approx(std::exp(50 * (-0.01 / (2 * (0.8 / 3 + 0.5 / 3) * (1 - 0.8 / 3 - 0.5 / 3))))));
}
