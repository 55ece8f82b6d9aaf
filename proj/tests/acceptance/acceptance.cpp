// One PASS/FAIL line per acceptance criterion.  Usage: acceptance [AC ids...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "oracles/enumerate.hpp"
#include "oracles/mp_kernels.hpp"
#include "seqest/exact.hpp"
#include "seqest/intervals.hpp"
#include "seqest/kernels.hpp"
#include "seqest/plan.hpp"
#include "seqest/rules.hpp"
#include "seqest/runtime.hpp"
#include "seqest/sim.hpp"

using namespace seqest;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::fabs(a - b) / std::max(std::fabs(b), 1e-300);
}

PrecisionSpec spec_of(Scheme sc, double eps, double eps_a = 0.0, double eps_r = 0.0) {
  PrecisionSpec s;
  s.scheme = sc;
  s.eps = eps;
  s.eps_a = eps_a;
  s.eps_r = eps_r;
  return s;
}

// ---------------------------------------------------------------- AC1
// Kernels vs 50-digit evaluations; quoted partials vs central differences.
void ac1(Outcome& o) {
  using oracle::mp;
  double worst = 0.0;
  for (int i = 1; i < 200; ++i)
    for (int j = 1; j < 200; ++j) {
      if (i == j) continue;
      const double z = i / 200.0, mu = j / 200.0 - 0.0013;
      worst = std::max(worst, rel_err(m_fn(z, mu), oracle::m_fn(mp(z), mp(mu)).convert_to<double>()));
      worst = std::max(worst, rel_err(m_inv(z, mu), oracle::m_inv(mp(z), mp(mu)).convert_to<double>()));
      worst = std::max(worst, rel_err(kl_bernoulli(z, mu), oracle::kl(mp(z), mp(mu)).convert_to<double>()));
      worst = std::max(worst, rel_err(kl_inverse_binomial(z, mu), oracle::kl_inv(mp(z), mp(mu)).convert_to<double>()));
    }
  for (double e : {0.05, 0.2, 0.5, 0.8})
    for (std::int64_t g : {1, 2, 5, 17, 100, 1000})
      worst = std::max(worst, rel_err(g_fn(e, g), oracle::g_fn(mp(e), g).convert_to<double>()));
  // worked values
  worst = std::max(worst, rel_err(m_fn(0.3, 0.5), -0.081447963800904977));
  worst = std::max(worst, rel_err(m_inv(0.5, 0.25), -0.28125));
  worst = std::max(worst, rel_err(kl_bernoulli(0.5, 0.25), 0.5 * std::log(0.5) + 0.5 * std::log(1.5)));
  worst = std::max(worst, rel_err(kl_inverse_binomial(0.25, 0.5), std::log(2.0) + 3 * std::log(0.5 / 0.75)));
  worst = std::max(worst, rel_err(g_fn(0.5, 1), 1 - std::exp(-2.0 / 3) + std::exp(-2.0)));
  o.require(worst < 1e-10, "kernel relative error " + std::to_string(worst));

  double dworst = 0.0;
  const double h = 1e-6;
  auto fd = [&](const std::function<double(double)>& f, double x) { return (f(x + h) - f(x - h)) / (2 * h); };
  auto track = [&](double fdv, double an) {
    if (std::fabs(an) > 1e-3) dworst = std::max(dworst, rel_err(fdv, an));
  };
  for (double e : {0.05, 0.1, 0.3})
    for (double z = 0.01; z < 0.99; z += 0.0137) {
      for (int sg : {1, -1}) {
        const double mu = z + sg * e;
        if (mu > 0.01 && mu < 0.99 && std::fabs(z + sg * 2 * e / 3 - 0.5) > 1e-3)
          track(fd([&](double x) { return m_fn(x, x + sg * e); }, z), m_shift_dz(z, e, sg));
        if (z / (1 + sg * e) < 0.99 && (sg > 0 || z < 1 - e - 0.01))
          track(fd([&](double x) { return m_fn(x, x / (1 + sg * e)); }, z), m_scale_dz(z, e, sg));
      }
    }
  for (double z = 0.02; z < 0.98; z += 0.031)
    for (double mu = 0.015; mu < 0.98; mu += 0.029) {
      track(fd([&](double x) { return m_fn(x, mu); }, z), m_fn_dz(z, mu));
      track(fd([&](double x) { return m_fn(z, x); }, mu), m_fn_dmu(z, mu));
      track(fd([&](double x) { return m_inv(z, x); }, mu), m_inv_dmu(z, mu));
    }
  o.require(dworst < 1e-6, "partial derivative relative error " + std::to_string(dworst));
  o.detail << "max kernel rel err " << worst << ", max partial rel err " << dworst;
}

// ---------------------------------------------------------------- AC2
void ac2(Outcome& o) {
  long violations = 0, checks = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++violations;
  };
  const double h = 1e-3;
  auto grid = [&](double lo, double hi, const std::function<void(double)>& f) {
    for (long i = 1;; ++i) {
      const double z = i * h;
      if (z >= hi) break;
      if (z > lo) f(z);
    }
  };
  for (double e : {0.05, 0.1, 0.3}) {
    const double turn_up = 0.5 - 2 * e / 3, turn_dn = 0.5 + 2 * e / 3;
    // increasing / decreasing pieces of z -> M(z, z +- eps)
    grid(0, 1 - e - h, [&](double z) {
      const double d = m_fn(z + h, z + h + e) - m_fn(z, z + e);
      if (z + h < turn_up) expect(d > 0);
      if (z > turn_up) expect(d < 0);
    });
    grid(e, 1 - h, [&](double z) {
      const double d = m_fn(z + h, z + h - e) - m_fn(z, z - e);
      if (z + h < turn_dn) expect(d > 0);
      if (z > turn_dn) expect(d < 0);
    });
    // M(z, z+eps) vs M(z, z-eps) on either side of 1/2
    grid(e, 1 - e, [&](double z) {
      const double a = m_fn(z, z + e), b = m_fn(z, z - e);
      // equality at z = 1/2 holds only up to rounding
      if (z <= 0.5) expect(a >= b - 1e-14 * std::fabs(b));
      if (z > 0.5 + 1e-12) expect(a < b);
    });
    grid(0, 1 - e, [&](double z) { expect(m_fn(z, z / (1 + e)) > m_fn(z, z / (1 - e))); });
    grid(e, 0.5, [&](double mu) {
      if (mu > e && mu < 0.5 && 0.5 < 1 - e) expect(m_fn(mu - e, mu) < m_fn(mu + e, mu));
    });
    grid(0, 1 - h, [&](double z) { expect(m_fn(z + h, (z + h) / (1 + e)) < m_fn(z, z / (1 + e))); });
    grid(0, 1 - e - h, [&](double z) { expect(m_fn(z + h, (z + h) / (1 - e)) < m_fn(z, z / (1 - e))); });
  }
  // fixed z, mu varies; fixed mu, z varies
  for (long i = 1; i < 1000; i += 7) {
    const double z = i * h;
    for (long j = 1; j + 1 < 1000; ++j) {
      const double mu = j * h, mu2 = (j + 1) * h;
      const double d = m_fn(z, mu2) - m_fn(z, mu);
      if (mu2 <= z) expect(d > 0);
      if (mu >= z) expect(d < 0);
      const double dz = m_fn(mu2, z) - m_fn(mu, z);  // here z plays mu's role
      if (mu2 <= z) expect(dz > 0);
      if (mu >= z) expect(dz < 0);
    }
  }
  o.require(violations == 0, std::to_string(violations) + " sign violations");
  o.detail << checks << " sign checks, " << violations << " violations";
}

// ---------------------------------------------------------------- AC3
struct Toy {
  std::string name;
  SamplingPlan plan;
  std::optional<StopPredicate> pred;
};

void ac3(Outcome& o) {
  std::vector<Toy> toys;
  const std::vector<std::int64_t> grid{4, 8, 12, 16};
  toys.push_back({"abs", with_stages(build_plan(spec_of(Scheme::Abs, 0.2)), grid), {}});
  toys.push_back({"mixed", with_stages(build_plan(spec_of(Scheme::Mixed, 0, 0.1, 0.3)), grid), {}});
  toys.push_back({"rel-fixed", with_stages(build_plan(spec_of(Scheme::RelFixed, 0.5)), grid), {}});
  for (auto sc : {Scheme::FWCp, Scheme::FWCh, Scheme::FWMassart})
    toys.push_back({to_string(sc), with_stages(build_plan(spec_of(sc, 0.35)), grid), {}});
  // a dense, irregular stop table exercises every DP branch
  std::mt19937_64 rng(99);
  std::vector<std::vector<bool>> table(4);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::int64_t k = 0; k <= grid[l]; ++k) table[l].push_back(l == 3 || rng() % 3 == 0);
  toys.push_back({"random-table", with_stages(build_plan(spec_of(Scheme::Abs, 0.2)), grid),
                  StopPredicate([table](std::size_t l, std::int64_t k) { return static_cast<bool>(table[l - 1][k]); })});

  double worst = 0.0;
  long atoms = 0;
  EngineOptions opt;
  opt.trim = 0.0;
  for (const auto& t : toys) {
    const CompiledRule rule = t.pred ? CompiledRule(t.plan, *t.pred) : CompiledRule(t.plan);
    for (int j : {1, 3, 5, 7, 9}) {
      const auto d = stop_distribution(rule, j / 10.0, opt);
      long double left = 0;
      const auto brute = oracle::enumerate_fixed(grid, j, [&](std::size_t l, std::int64_t k) { return rule.stops(l, k); },
                                                 &left);
      for (std::size_t l = 1; l <= 4; ++l)
        for (std::int64_t k = 0; k <= grid[l - 1]; ++k) {
          const auto it = brute.find({l, k});
          const double b = it == brute.end() ? 0.0 : static_cast<double>(it->second);
          worst = std::max(worst, std::fabs(d.atom(l, k) - b));
          ++atoms;
        }
      if (t.plan.open_ended()) {
        const double surv = d.survivor_mass.size() > 4 ? d.survivor_mass[4] : 0.0;
        worst = std::max(worst, std::fabs(surv - static_cast<double>(left)));
      }
    }
  }
  // inverse sampling, gamma_s = 4, counts up to 32
  PrecisionSpec is = spec_of(Scheme::RelInverse, 0.3);
  const auto iplan = with_stages(build_plan(is), {1, 2, 3, 4});
  const CompiledRule irule(iplan);
  for (int j : {1, 3, 5, 7, 9}) {
    const auto d = stop_distribution(irule, j / 10.0);
    const auto brute = oracle::enumerate_inverse(iplan.stages, j, [&](std::size_t l, std::int64_t n) {
      return irule.stops(l, n);
    }, 32);
    for (std::size_t l = 1; l <= 4; ++l)
      for (std::int64_t n = 1; n <= 32; ++n) {
        const auto it = brute.find({l, n});
        const double b = it == brute.end() ? 0.0 : static_cast<double>(it->second);
        worst = std::max(worst, std::fabs(d.atom(l, n) - b));
        ++atoms;
      }
  }
  o.require(worst < 1e-12, "max atom difference " + std::to_string(worst));
  o.detail << toys.size() + 1 << " toy rules, " << atoms << " atoms, max |diff| " << worst;
}

// ---------------------------------------------------------------- AC4
void ac4(Outcome& o) {
  struct Case {
    std::string name;
    PrecisionSpec spec;
  };
  std::vector<Case> cases = {
      {"abs", spec_of(Scheme::Abs, 0.1)},
      {"mixed", spec_of(Scheme::Mixed, 0, 0.05, 0.2)},
      {"rel-inverse", spec_of(Scheme::RelInverse, 0.2)},
      {"fw-cp", spec_of(Scheme::FWCp, 0.1)},
      {"fw-ch", spec_of(Scheme::FWCh, 0.1)},
      {"fw-massart", spec_of(Scheme::FWMassart, 0.1)},
  };
  for (const auto& c : cases) {
    const auto plan = build_plan(c.spec);
    const CompiledRule rule(plan);
    const double delta = plan.spec.delta;
    const double cap = 2.0 * static_cast<double>(plan.tau + 1) * plan.zeta * delta;
    CertifyOptions co;
    co.jobs = std::max(1u, std::thread::hardware_concurrency());
    const auto cert = certify(plan, co);
    o.require(cert.valid, c.name + " certificate invalid");
    for (const auto& ch : cert.checks) o.require(ch.ok, c.name + " check " + ch.name);
    if (plan.inverse()) o.require(cert.checks.size() == 3, "rel-inverse extra checks missing");

    std::vector<Threshold> ps;
    for (const auto& qs : build_qsets(rule).sets)
      for (const auto& pt : qs.points) ps.push_back(pt.p);
    for (int i = 1; i <= 99; ++i) ps.push_back(Threshold{i / 100.0, exact_decimal(i / 100.0)});
    double worst_cov = 1.0, worst_err = 0.0;
    for (const auto& p : ps) {
      if (!(p.value > 0.0 && p.value < 1.0)) continue;
      const auto cv = coverage(rule, p);
      worst_cov = std::min(worst_cov, cv.coverage);
      worst_err = std::max(worst_err, cv.over + cv.under + cv.truncation);
    }
    o.require(worst_cov > 1.0 - delta, c.name + " coverage " + std::to_string(worst_cov));
    o.require(worst_err <= cap, c.name + " error " + std::to_string(worst_err) + " above 2(tau+1)zeta*delta");
    o.detail << c.name << ": " << ps.size() << " p, min coverage " << worst_cov << ", max error " << worst_err
             << " (cap " << cap << "); ";
  }
}

// ---------------------------------------------------------------- AC5
void ac5(Outcome& o) {
  int runs = 0, bad = 0;
  const std::int64_t reps = 100000;
  for (LemmaEvent ev : {LemmaEvent::UpperTail, LemmaEvent::UpperDeviation, LemmaEvent::LowerDeviation,
                        LemmaEvent::InverseLower, LemmaEvent::InverseUpper}) {
    const bool inverse = ev == LemmaEvent::InverseLower || ev == LemmaEvent::InverseUpper;
    const std::vector<std::int64_t> ns = inverse ? std::vector<std::int64_t>{2, 10, 40}
                                                 : std::vector<std::int64_t>{10, 50, 200};
    for (std::int64_t n : ns)
      for (double mu : {0.1, 0.3, 0.6})
        for (int a = 0; a < 2; ++a) {
          LemmaCheck c;
          c.event = ev;
          c.n = n;
          c.mu = mu;
          c.alpha = ev == LemmaEvent::UpperTail ? mu + (a == 0 ? 0.05 : 0.15) : (a == 0 ? 0.05 : 0.2);
          c.reps = reps;
          c.seed = 1000 + runs;
          c.jobs = std::max(1u, std::thread::hardware_concurrency());
          const auto r = lemma_event_check(c);
          ++runs;
          if (!r.ok) {
            ++bad;
            o.require(false, to_string(ev) + " n=" + std::to_string(n) + " mu=" + std::to_string(mu));
          }
        }
  }
  o.detail << runs << " (event, n, mu, alpha) cells at " << reps << " reps, " << bad << " above bound + 4 sigma";
}

// ---------------------------------------------------------------- AC6
void ac6(Outcome& o) {
  double worst = 0.0;
  int configs = 0;
  for (auto sc : {Scheme::Abs, Scheme::FWCp, Scheme::RelInverse}) {
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      SimConfig c;
      c.spec = spec_of(sc, sc == Scheme::RelInverse ? 0.2 : 0.1);
      c.truth = Truth::bernoulli(p);
      c.replications = 100000;
      c.seed = 77 + configs;
      c.compare_exact = true;
      c.jobs = std::max(1u, std::thread::hardware_concurrency());
      const auto r = simulate(c);
      ++configs;
      if (!r.exact) {
        o.require(false, "no exact comparison");
        continue;
      }
      worst = std::max(worst, r.exact->max_abs_z);
      o.require(r.exact->max_abs_z < 4.0, to_string(sc) + " p=" + std::to_string(p) + " |z|=" +
                                              std::to_string(r.exact->max_abs_z));
    }
  }
  o.detail << configs << " (scheme, p) configs at 1e5 reps, max |z| " << worst;
}

// ---------------------------------------------------------------- AC7
void ac7(Outcome& o) {
  long sessions = 0, wide = 0;
  for (auto sc : {Scheme::FWCp, Scheme::FWCh, Scheme::FWMassart})
    for (double eps : {0.05, 0.1, 0.2}) {
      const auto plan = build_plan(spec_of(sc, eps));
      // every stopping outcome, then real sessions
      for (std::size_t l = 1; l <= plan.stage_count(); ++l)
        for (std::int64_t k = 0; k <= plan.stage_size(l); ++k)
          if (decide_fw(plan, {l, k}) && plan_interval(plan, plan.stage_size(l), k).width() > 2 * eps) ++wide;
      for (int rep = 0; rep < 200; ++rep) {
        std::mt19937_64 rng(replication_seed(5, rep));
        const double p = (rep % 19 + 0.5) / 19.0;
        EstimationSession s(plan);
        while (s.status() == SessionStatus::Running) s.feed(unit_uniform(rng) < p ? 1.0 : 0.0);
        const auto r = s.report();
        ++sessions;
        if (!r.interval || r.interval->width() > 2 * eps) ++wide;
      }
    }
  o.require(wide == 0, std::to_string(wide) + " stopped outcomes wider than 2 eps");

  long compared = 0, disagree = 0, clamp = 0, ties = 0;
  for (double eps : {0.05, 0.1, 0.2}) {
    const auto plan = build_plan(spec_of(Scheme::FWMassart, eps));
    const double alpha = interval_alpha(plan);
    for (std::int64_t n = 1; n <= 300; ++n)
      for (std::int64_t k = 0; k <= n; ++k) {
        if (massart_clamp_active(n, k, alpha)) {
          ++clamp;
          continue;
        }
        const double w = massart_bounds(n, k, alpha).width();
        if (std::fabs(w - 2 * eps) < 1e-12) {
          ++ties;
          continue;
        }
        ++compared;
        if (massart_width_inequality(n, k, eps, plan.log_zd) != (w <= 2 * eps)) ++disagree;
      }
  }
  o.require(disagree == 0, std::to_string(disagree) + " Massart disagreements");
  o.detail << sessions << " sessions + full stop tables, 0 wider than 2 eps; Massart sweep " << compared
           << " (n,k) compared, " << disagree << " disagreements (" << clamp << " clamp-active, " << ties
           << " ties skipped)";
}

// ---------------------------------------------------------------- AC8
void ac8(Outcome& o) {
  long checks = 0, bad = 0;
  std::mt19937_64 rng(8);
  for (auto sc : {Scheme::FWCp, Scheme::FWCh, Scheme::FWMassart}) {
    const CompiledRule rule(build_plan(spec_of(sc, 0.1)));
    for (int i = 0; i < 20; ++i) {
      const double width = std::exp(std::log(1e-4) + (std::log(0.2) - std::log(1e-4)) * unit_uniform(rng));
      const double a = 0.001 + (0.998 - width) * unit_uniform(rng);
      const double b = a + width;
      const auto bd = coverage_bounds(rule, a, b);
      for (int j = 1; j <= 11; ++j) {
        const double p = a + (b - a) * j / 12.0;
        const double c = coverage_failure(rule, p);
        ++checks;
        if (!(bd.lower <= c + 1e-14 && c <= bd.upper + 1e-14)) ++bad;
      }
    }
  }
  o.require(bad == 0, std::to_string(bad) + " sandwich violations");
  o.detail << checks << " interior points on 60 random intervals, " << bad << " violations";
}

// ---------------------------------------------------------------- AC9
void ac9(Outcome& o) {
  const std::int64_t draws = 1000000;
  for (const auto& t : {Truth::constant(0.3), Truth::uniform(0, 1), Truth::beta(2, 2)}) {
    std::mt19937_64 rng(9);
    double s = 0;
    for (std::int64_t i = 0; i < draws; ++i) s += link_transform(t.draw(rng), unit_uniform(rng));
    const double m = s / draws, mu = t.mean();
    const double sigma = std::sqrt(mu * (1 - mu) / draws);
    o.require(std::fabs(m - mu) <= 4 * sigma, t.describe() + " link mean " + std::to_string(m));
    o.detail << t.describe() << " mean " << m << " (" << (m - mu) / sigma << " sigma); ";

    SimConfig c;
    c.spec = spec_of(Scheme::Abs, 0.1);
    c.truth = t;
    c.replications = 20000;
    c.seed = 909;
    c.jobs = std::max(1u, std::thread::hardware_concurrency());
    const auto r = simulate_link(c);
    const double se = std::sqrt(0.05 * 0.95 / c.replications);
    o.require(r.coverage >= 0.95 - 4 * se, t.describe() + " coverage " + std::to_string(r.coverage));
    o.detail << "coverage " << r.coverage << "; ";
  }
}

// ---------------------------------------------------------------- AC10
void ac10(Outcome& o) {
  struct Case {
    PrecisionSpec spec;
    std::vector<std::string> truths;
  };
  PrecisionSpec b9 = spec_of(Scheme::BoundedAbs, 0.1);
  b9.stage_count = 4;
  PrecisionSpec b10 = spec_of(Scheme::BoundedMixed, 0, 0.05, 0.2);
  b10.stage_count = 4;
  PrecisionSpec b11 = spec_of(Scheme::GeneralMixed, 0, 0.1, 0.2);
  b11.stage_count = 3;
  b11.range_lo = -1;
  b11.range_hi = 1;
  const std::vector<Case> cases = {
      {b9, {"bernoulli:0.3", "uniform:0,1", "beta:2,5"}},
      {b10, {"bernoulli:0.3", "uniform:0,1", "beta:2,5"}},
      {b11, {"mixture:-1@0.3,1@0.7", "uniform:-1,1", "uniform:-0.5,1"}},
  };
  for (const auto& c : cases)
    for (const auto& t : c.truths) {
      SimConfig sc;
      sc.spec = c.spec;
      sc.truth = Truth::parse(t);
      sc.replications = 20000;
      sc.seed = 1010;
      sc.jobs = std::max(1u, std::thread::hardware_concurrency());
      const auto r = simulate(sc);
      const double se = std::sqrt(0.05 * 0.95 / sc.replications);
      o.require(r.coverage >= 0.95 - 4 * se, r.scheme + " " + t + " coverage " + std::to_string(r.coverage));
      o.detail << r.scheme << "/" << t << " " << r.coverage << "; ";
    }
}

// ---------------------------------------------------------------- AC11
#ifdef SEQEST_CLI_PATH
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ac11(Outcome& o) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("seqest_ac11_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = SEQEST_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " 2>/dev/null";
    return std::system(cmd.c_str());
  };
  {
    std::ofstream in(dir / "stream.txt");
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) in << (unit_uniform(rng) < 0.3 ? 1 : 0) << "\n";
  }
  struct Pair {
    std::string name, a, b;
  };
  const std::string d = dir.string();
  const std::vector<Pair> pairs = {
      {"plan", "plan --scheme mixed --eps-a 0.05 --eps-r 0.2 --out " + d + "/plan1.json",
       "plan --scheme mixed --eps-a 0.05 --eps-r 0.2 --out " + d + "/plan2.json"},
      {"certify", "certify --plan " + d + "/plan1.json --jobs 1 --out " + d + "/cert1.json --csv " + d + "/cert1.csv",
       "certify --plan " + d + "/plan1.json --jobs 4 --out " + d + "/cert2.json --csv " + d + "/cert2.csv"},
      {"certify-bnb", "certify --scheme fw-cp --eps 0.1 --method bnb --jobs 1 --out " + d + "/bnb1.json",
       "certify --scheme fw-cp --eps 0.1 --method bnb --jobs 3 --out " + d + "/bnb2.json"},
      {"tune", "tune --scheme abs --eps 0.2 --jobs 1 --out " + d + "/tune1.json",
       "tune --scheme abs --eps 0.2 --jobs 2 --out " + d + "/tune2.json"},
      {"simulate",
       "simulate --scheme abs --eps 0.1 --truth bernoulli:0.3 --reps 5000 --seed 7 --compare-exact --jobs 1 --out " +
           d + "/sim1.json --csv " + d + "/sim1.csv",
       "simulate --scheme abs --eps 0.1 --truth bernoulli:0.3 --reps 5000 --seed 7 --compare-exact --jobs 4 --out " +
           d + "/sim2.json --csv " + d + "/sim2.csv"},
      {"estimate", "estimate --scheme fw-cp --eps 0.1 --input " + d + "/stream.txt --out " + d + "/est1.json",
       "estimate --scheme fw-cp --eps 0.1 --input " + d + "/stream.txt --out " + d + "/est2.json"},
  };
  const std::vector<std::pair<std::string, std::string>> files = {
      {"plan1.json", "plan2.json"}, {"cert1.json", "cert2.json"}, {"cert1.csv", "cert2.csv"},
      {"bnb1.json", "bnb2.json"},   {"tune1.json", "tune2.json"}, {"sim1.json", "sim2.json"},
      {"sim1.csv", "sim2.csv"},     {"est1.json", "est2.json"}};
  for (const auto& p : pairs) {
    const int ra = run(p.a), rb = run(p.b);
    o.require(ra == 0 && rb == 0, p.name + " exit status " + std::to_string(ra) + "/" + std::to_string(rb));
  }
  int same = 0;
  for (const auto& [a, b] : files) {
    const auto x = slurp(dir / a), y = slurp(dir / b);
    const bool ok = !x.empty() && x == y;
    o.require(ok, a + " differs from " + b);
    same += ok;
  }
  o.detail << same << "/" << files.size() << " document pairs byte-identical across runs and --jobs";
  fs::remove_all(dir);
}
#else
void ac11(Outcome& o) { o.require(false, "built without the CLI"); }
#endif

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> all = {
      {"AC1 kernels vs high-precision oracle and partials", ac1},
      {"AC2 monotonicity lemmas", ac2},
      {"AC3 DP equals exhaustive enumeration", ac3},
      {"AC4 exact theorem guarantees", ac4},
      {"AC5 concentration event frequencies", ac5},
      {"AC6 Monte Carlo vs exact engine", ac6},
      {"AC7 fixed-width contract and Massart shortcut", ac7},
      {"AC8 coverage bound sandwich", ac8},
      {"AC9 link transform", ac9},
      {"AC10 bounded-variable schemes", ac10},
      {"AC11 CLI determinism", ac11},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, fn] : all) {
    const std::string id = name.substr(0, name.find(' '));
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s [%.1fs] %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
