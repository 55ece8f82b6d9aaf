#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "seqest/document.hpp"
#include "seqest/exact.hpp"
#include "seqest/plan.hpp"
#include "seqest/runtime.hpp"
#include "seqest/sim.hpp"

using namespace seqest;

namespace {

enum Exit { kOk = 0, kSpec = 2, kCertify = 3, kData = 4 };

struct SpecFlags {
  std::string scheme;
  double eps = 0.0, eps_a = 0.0, eps_r = 0.0, delta = 0.05, rho = 1.0;
  std::optional<double> zeta;
  double range_lo = 0.0, range_hi = 1.0;
  std::int64_t stage_count = 0, tau_free = 1, first_stage = 0;
  double growth = 1.5;
  std::vector<std::int64_t> grid;
  std::string plan_file;

  void attach(CLI::App* app, bool allow_plan) {
    app->add_option("--scheme", scheme, "abs, mixed, rel-inverse, rel-fixed, fw-cp, fw-ch, fw-massart, "
                                        "bounded-abs, bounded-mixed, general-mixed");
    app->add_option("--eps", eps, "margin (abs, relative, fixed-width, bounded-abs)");
    app->add_option("--eps-a", eps_a, "absolute margin of the mixed criteria");
    app->add_option("--eps-r", eps_r, "relative margin of the mixed criteria");
    app->add_option("--delta", delta, "1 - confidence level");
    app->add_option("--rho", rho, "stage growth parameter");
    app->add_option("--zeta", zeta, "confidence tuning parameter");
    app->add_option("--range-lo", range_lo, "general-mixed: lower end a");
    app->add_option("--range-hi", range_hi, "general-mixed: upper end b");
    app->add_option("--stages", stage_count, "bounded schemes: number of stages s");
    app->add_option("--tau", tau_free, "rel-fixed: tau");
    app->add_option("--first-stage", first_stage, "rel-fixed: n_1");
    app->add_option("--growth", growth, "rel-fixed: stage-size ratio");
    app->add_option("--grid", grid, "custom ascending grid")->delimiter(',');
    if (allow_plan) app->add_option("--plan", plan_file, "plan document ('-' for standard input)");
  }

  SamplingPlan plan() const;
};

std::string slurp(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DocumentError("cannot read " + path);
    ss << in.rdbuf();
  }
  return ss.str();
}

SamplingPlan SpecFlags::plan() const {
  if (!plan_file.empty()) return plan_from_document(parse_document(slurp(plan_file), "plan"));
  if (scheme.empty()) throw SpecError("give --scheme (or --plan)");
  PrecisionSpec s;
  s.scheme = scheme_from_string(scheme);
  s.eps = eps;
  s.eps_a = eps_a;
  s.eps_r = eps_r;
  s.delta = delta;
  s.rho = rho;
  s.zeta = zeta;
  s.range_lo = range_lo;
  s.range_hi = range_hi;
  s.stage_count = stage_count;
  s.tau_free = tau_free;
  s.first_stage = first_stage;
  s.growth = growth;
  SamplingPlan p = build_plan(s);
  if (!grid.empty()) p = with_stages(p, grid);
  return p;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DocumentError("cannot write " + path);
  out << text;
}

int cmd_plan(const SpecFlags& f, bool explain, const std::string& out) {
  const auto plan = f.plan();
  emit(render(plan_document(plan, explain)), out);
  if (explain)
    for (const auto& line : explain_plan(plan)) std::cerr << line << "\n";
  return kOk;
}

int cmd_certify(const SpecFlags& f, const std::string& method, unsigned jobs, const std::string& out,
                const std::string& csv) {
  const auto plan = f.plan();
  CoverageCertificate cert;
  if (method == "bnb") {
    BnbOptions o;
    o.jobs = jobs;
    cert = certify_branch_and_bound(plan, o);
  } else {
    CertifyOptions o;
    o.jobs = jobs;
    cert = certify(plan, o);
  }
  emit(render(certificate_document(cert)), out);
  if (!csv.empty()) emit(certificate_csv(cert), csv);
  if (!cert.valid) {
    std::cerr << "certification failed: worst " << cert.worst_condition << " risk " << format_number(cert.worst_risk)
              << " at p=" << format_number(cert.worst_point) << "\n";
    return kCertify;
  }
  return kOk;
}

int cmd_tune(const SpecFlags& f, bool bnb, unsigned jobs, const std::string& out, const std::string& csv) {
  if (!f.plan_file.empty() || !f.grid.empty()) throw SpecError("tune works from spec flags, not a fixed plan");
  PrecisionSpec s = f.plan().spec;
  s.zeta.reset();
  TuneOptions o;
  o.branch_and_bound = bnb;
  o.jobs = jobs;
  const auto r = tune_zeta(s, o);
  emit(render(tune_document(r)), out);
  if (!csv.empty()) emit(certificate_csv(r.certificate), csv);
  if (!r.found) {
    std::cerr << "no certifiable zeta above the floor\n";
    return kCertify;
  }
  return kOk;
}

int cmd_estimate(const SpecFlags& f, const std::string& input, std::optional<std::int64_t> budget,
                 const std::string& resume, const std::string& checkpoint, const std::string& out) {
  std::optional<EstimationSession> s;
  if (!resume.empty())
    s.emplace(EstimationSession::restore(session_from_document(parse_document(slurp(resume), "session"))));
  else
    s.emplace(f.plan(), budget);
  std::istringstream in(slurp(input.empty() ? "-" : input));
  std::string line;
  std::int64_t lineno = 0;
  while (s->status() == SessionStatus::Running && std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string tok = line.substr(first, last - first + 1);
    double x = 0.0;
    std::size_t used = 0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) {
      std::cerr << "line " << lineno << ": not a number: " << tok << "\n";
      return kData;
    }
    try {
      s->feed(x);
    } catch (const DataError& e) {
      std::cerr << "line " << lineno << ": " << e.what() << "\n";
      return kData;
    }
  }
  if (s->status() == SessionStatus::Running) {
    if (checkpoint.empty()) {
      std::cerr << "input ended after " << s->sample_count()
                << " samples before the rule stopped (use --checkpoint to save the session)\n";
      return kData;
    }
    emit(render(session_document(s->state())), checkpoint);
    std::cerr << "session saved after " << s->sample_count() << " samples\n";
    return kOk;
  }
  emit(render(report_document(s->report())), out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqest: multistage sampling plans, certification and estimation"};
  app.require_subcommand(1);

  SpecFlags pf, cf, tf, ef, sf;
  std::string out, csv, method = "grid", input, resume, checkpoint, truth, event = "upper-deviation";
  bool explain = false, bnb = false, link = false, compare = false;
  unsigned jobs = 1;
  std::optional<std::int64_t> budget;
  std::int64_t reps = 10000, lemma_n = 100;
  std::optional<std::uint64_t> seed;
  double mu = 0.5, alpha = 0.05;

  auto* plan = app.add_subcommand("plan", "build a sampling plan");
  pf.attach(plan, false);
  plan->add_flag("--explain", explain, "print the per-stage grid formula");
  plan->add_option("--out", out, "output file (default standard output)");

  auto* cert = app.add_subcommand("certify", "certify a plan's coverage exactly");
  cf.attach(cert, true);
  cert->add_option("--method", method, "grid (Q-set conditions) or bnb (interval bounds)")
      ->check(CLI::IsMember({"grid", "bnb"}));
  cert->add_option("--jobs", jobs, "worker threads");
  cert->add_option("--out", out, "certificate document");
  cert->add_option("--csv", csv, "per-point sums");

  auto* tune = app.add_subcommand("tune", "find the largest certifiable zeta");
  tf.attach(tune, false);
  tune->add_flag("--bnb", bnb, "certify with interval bounds (fixed-width schemes)");
  tune->add_option("--jobs", jobs, "worker threads");
  tune->add_option("--out", out, "tuning document");
  tune->add_option("--csv", csv, "per-point sums of the final certificate");

  auto* est = app.add_subcommand("estimate", "run the stopping rule over a sample stream");
  ef.attach(est, true);
  est->add_option("--input", input, "newline-delimited samples (default standard input)");
  est->add_option("--budget", budget, "maximum number of samples");
  est->add_option("--resume", resume, "session document to continue");
  est->add_option("--checkpoint", checkpoint, "where to save the session if the input ends first");
  est->add_option("--out", out, "report document");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage and sample size");
  sf.attach(sim, true);
  sim->add_option("--truth", truth, "bernoulli:p, beta:a,b, uniform:lo,hi, constant:c, mixture:v@w,...")
      ->required();
  sim->add_option("--reps", reps, "replications");
  sim->add_option("--seed", seed, "generator seed")->required();
  sim->add_option("--budget", budget, "per-replication sample budget");
  sim->add_option("--jobs", jobs, "worker threads");
  sim->add_flag("--link", link, "feed 1{Z >= U} into a binomial scheme");
  sim->add_flag("--compare-exact", compare, "add the exact-engine comparison");
  sim->add_option("--out", out, "simulation document");
  sim->add_option("--csv", csv, "one row per metric");

  auto* lemma = app.add_subcommand("lemma", "empirical frequency of a concentration event");
  lemma->add_option("--event", event, "upper-tail, upper-deviation, lower-deviation, inverse-lower, inverse-upper");
  lemma->add_option("--n", lemma_n, "sample size (gamma for inverse events)");
  lemma->add_option("--mu", mu, "true mean");
  lemma->add_option("--alpha", alpha, "alpha (the threshold z for upper-tail)");
  lemma->add_option("--reps", reps, "replications");
  lemma->add_option("--seed", seed, "generator seed")->required();
  lemma->add_option("--jobs", jobs, "worker threads");
  lemma->add_option("--out", out, "result document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kSpec;
  }

  try {
    if (*plan) return cmd_plan(pf, explain, out);
    if (*cert) return cmd_certify(cf, method, jobs, out, csv);
    if (*tune) return cmd_tune(tf, bnb, jobs, out, csv);
    if (*est) return cmd_estimate(ef, input, budget, resume, checkpoint, out);
    if (*sim) {
      SimConfig c;
      c.spec = sf.plan().spec;
      if (!sf.grid.empty()) throw SpecError("simulate takes a spec, not a custom grid");
      c.truth = Truth::parse(truth);
      c.replications = reps;
      c.seed = *seed;
      c.budget = budget;
      c.jobs = jobs;
      c.link = link;
      c.compare_exact = compare;
      const auto r = simulate(c);
      emit(render(sim_document(r)), out);
      if (!csv.empty()) emit(sim_csv(r), csv);
      return kOk;
    }
    if (*lemma) {
      LemmaCheck c;
      c.event = lemma_event_from_string(event);
      c.n = lemma_n;
      c.mu = mu;
      c.alpha = alpha;
      c.reps = reps;
      c.seed = *seed;
      c.jobs = jobs;
      const auto r = lemma_event_check(c);
      emit(render(lemma_document(c, r)), out);
      return kOk;
    }
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kSpec;
  } catch (const DocumentError& e) {
    std::cerr << "document error: " << e.what() << "\n";
    return kSpec;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
