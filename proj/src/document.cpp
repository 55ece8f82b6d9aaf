#include "seqest/document.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "seqest/rules.hpp"

namespace seqest {
namespace {

Json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return nullptr;
  return x > 0 ? "inf" : "-inf";
}

double read_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw DocumentError("expected a number");
}

Json header(const char* kind) {
  Json d;
  d["format_version"] = kFormatVersion;
  d["kind"] = kind;
  return d;
}

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw DocumentError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DocumentError(std::string("bad field '") + key + "'");
  }
}

double num_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw DocumentError(std::string("missing field '") + key + "'");
  return read_number(j.at(key));
}

Json interval_json(const ConfidenceInterval& ci) {
  return Json{{"kind", to_string(ci.kind)}, {"lower", ci.lower}, {"upper", ci.upper}, {"alpha", ci.alpha}};
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json spec_to_json(const PrecisionSpec& s) {
  Json j;
  j["scheme"] = to_string(s.scheme);
  j["eps"] = s.eps;
  j["eps_a"] = s.eps_a;
  j["eps_r"] = s.eps_r;
  j["delta"] = s.delta;
  j["rho"] = s.rho;
  j["zeta"] = s.zeta ? Json(*s.zeta) : Json(nullptr);
  j["range_lo"] = s.range_lo;
  j["range_hi"] = s.range_hi;
  j["stage_count"] = s.stage_count;
  j["tau_free"] = s.tau_free;
  j["first_stage"] = s.first_stage;
  j["growth"] = s.growth;
  return j;
}

PrecisionSpec spec_from_json(const Json& j) {
  PrecisionSpec s;
  try {
    s.scheme = scheme_from_string(field<std::string>(j, "scheme"));
  } catch (const SpecError& e) {
    throw DocumentError(e.what());
  }
  s.eps = num_field(j, "eps");
  s.eps_a = num_field(j, "eps_a");
  s.eps_r = num_field(j, "eps_r");
  s.delta = num_field(j, "delta");
  s.rho = num_field(j, "rho");
  if (j.contains("zeta") && !j.at("zeta").is_null()) s.zeta = read_number(j.at("zeta"));
  s.range_lo = num_field(j, "range_lo");
  s.range_hi = num_field(j, "range_hi");
  s.stage_count = field<std::int64_t>(j, "stage_count");
  s.tau_free = field<std::int64_t>(j, "tau_free");
  s.first_stage = field<std::int64_t>(j, "first_stage");
  s.growth = num_field(j, "growth");
  return s;
}

Json plan_document(const SamplingPlan& plan, bool explain) {
  Json d = header("plan");
  d["spec"] = spec_to_json(plan.spec);
  d["tau"] = plan.tau;
  d["zeta"] = plan.zeta;
  d["log_zd"] = plan.log_zd;
  d["stages"] = plan.stages;
  d["thresholds"] = Json::array();
  for (double t : plan.thresholds) d["thresholds"].push_back(number(t));
  d["custom_grid"] = plan.custom_grid;
  d["open_ended"] = plan.open_ended();
  d["notes"] = plan.notes;
  if (explain) d["explain"] = explain_plan(plan);
  return d;
}

SamplingPlan plan_from_document(const Json& doc) {
  if (field<std::string>(doc, "kind") != "plan") throw DocumentError("not a plan document");
  PrecisionSpec spec = spec_from_json(doc.at("spec"));
  const auto stages = field<std::vector<std::int64_t>>(doc, "stages");
  const bool custom = field<bool>(doc, "custom_grid");
  // Rebuild from the spec so thresholds and checks come from the builders.
  SamplingPlan plan = build_plan(spec);
  if (custom) plan = with_stages(plan, stages);
  if (plan.stages != stages && !plan.open_ended())
    throw DocumentError("plan stages do not match the ones its spec produces");
  return plan;
}

Json certificate_document(const CoverageCertificate& c) {
  Json d = header("certificate");
  d["scheme"] = to_string(c.scheme);
  d["method"] = c.method;
  d["zeta"] = c.zeta;
  d["delta"] = c.delta;
  d["limit"] = c.limit;
  d["inclusive"] = c.inclusive;
  d["valid"] = c.valid;
  d["worst_point"] = c.worst_point;
  d["worst_risk"] = c.worst_risk;
  d["worst_condition"] = c.worst_condition;
  if (c.method == "branch_and_bound") d["cells"] = c.cells;
  d["checks"] = Json::array();
  for (const auto& ch : c.checks)
    d["checks"].push_back({{"name", ch.name}, {"value", number(ch.value)}, {"bound", number(ch.bound)}, {"ok", ch.ok}});
  d["notes"] = c.notes;
  d["point_count"] = c.points.size();
  return d;
}

Json tune_document(const TuneResult& r) {
  Json d = header("tuning");
  d["found"] = r.found;
  d["zeta"] = r.zeta;
  d["evaluations"] = r.evaluations;
  d["plan"] = plan_document(r.plan);
  d["certificate"] = certificate_document(r.certificate);
  return d;
}

Json report_document(const EstimationReport& r) {
  Json d = header("report");
  d["scheme"] = to_string(r.scheme);
  d["certified"] = r.certified;
  d["point_estimate"] = r.point_estimate;
  d["interval"] = r.interval ? interval_json(*r.interval) : Json(nullptr);
  d["terminal_sample_size"] = r.terminal_sample_size;
  d["terminal_stage"] = r.terminal_stage;
  d["sum"] = r.sum;
  d["spec"] = spec_to_json(r.spec);
  d["trajectory"] = Json::array();
  for (const auto& t : r.trajectory)
    d["trajectory"].push_back({{"stage", t.stage}, {"samples", t.samples}, {"sum", t.sum}, {"stop", t.stop}});
  return d;
}

Json session_document(const SessionState& st) {
  Json d = header("session");
  d["plan"] = plan_document(st.plan);
  d["budget"] = st.budget ? Json(*st.budget) : Json(nullptr);
  d["count"] = st.count;
  d["successes"] = st.successes;
  d["sum"] = st.sum;
  d["stage"] = st.stage;
  d["status"] = to_string(st.status);
  d["trajectory"] = Json::array();
  for (const auto& t : st.trajectory)
    d["trajectory"].push_back({{"stage", t.stage}, {"samples", t.samples}, {"sum", t.sum}, {"stop", t.stop}});
  return d;
}

SessionState session_from_document(const Json& doc) {
  if (field<std::string>(doc, "kind") != "session") throw DocumentError("not a session document");
  SessionState st;
  st.plan = plan_from_document(doc.at("plan"));
  if (doc.contains("budget") && !doc.at("budget").is_null()) st.budget = doc.at("budget").get<std::int64_t>();
  st.count = field<std::int64_t>(doc, "count");
  st.successes = field<std::int64_t>(doc, "successes");
  st.sum = num_field(doc, "sum");
  st.stage = field<std::size_t>(doc, "stage");
  try {
    st.status = session_status_from_string(field<std::string>(doc, "status"));
  } catch (const std::invalid_argument& e) {
    throw DocumentError(e.what());
  }
  for (const auto& t : doc.at("trajectory"))
    st.trajectory.push_back({field<std::size_t>(t, "stage"), field<std::int64_t>(t, "samples"), num_field(t, "sum"),
                             field<bool>(t, "stop")});
  return st;
}

Json sim_document(const SimReport& r) {
  Json d = header("simulation");
  d["scheme"] = r.scheme;
  d["truth"] = r.truth;
  d["true_mean"] = r.true_mean;
  d["replications"] = r.replications;
  d["seed"] = r.seed;
  d["coverage"] = r.coverage;
  d["coverage_se"] = r.coverage_se;
  d["mean_estimate"] = r.mean_estimate;
  d["mean_n"] = r.mean_n;
  d["sd_n"] = r.sd_n;
  d["n_quantiles"] = Json::array();
  for (const auto& [lv, v] : r.n_quantiles) d["n_quantiles"].push_back({{"level", lv}, {"value", v}});
  d["stage_frequency"] = r.stage_frequency;
  d["exhausted_fraction"] = r.exhausted_fraction;
  if (r.exact) {
    const auto& e = *r.exact;
    Json x;
    x["p"] = e.p;
    x["coverage"] = e.coverage;
    x["expected_n"] = e.expected_n;
    x["sd_n"] = e.sd_n;
    x["stage_probability"] = e.stage_probability;
    x["truncation"] = e.truncation;
    x["z_coverage"] = number(e.z_coverage);
    x["z_expected_n"] = number(e.z_expected_n);
    x["z_stage"] = Json::array();
    for (double z : e.z_stage) x["z_stage"].push_back(number(z));
    x["max_abs_z"] = number(e.max_abs_z);
    d["exact"] = x;
  } else {
    d["exact"] = nullptr;
  }
  d["notes"] = r.notes;
  return d;
}

Json lemma_document(const LemmaCheck& c, const LemmaResult& r) {
  Json d = header("lemma_check");
  d["event"] = to_string(c.event);
  d["n"] = c.n;
  d["mu"] = c.mu;
  d[c.event == LemmaEvent::UpperTail ? "z" : "alpha"] = c.alpha;
  d["reps"] = c.reps;
  d["seed"] = c.seed;
  d["frequency"] = r.frequency;
  d["bound"] = r.bound;
  d["se"] = r.se;
  d["ok"] = r.ok;
  return d;
}

std::string render(const Json& doc) { return doc.dump(2) + "\n"; }

Json parse_document(const std::string& text, const std::string& kind) {
  Json d;
  try {
    d = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DocumentError(std::string("document is not valid JSON: ") + e.what());
  }
  if (!d.is_object() || !d.contains("format_version") || !d.at("format_version").is_string())
    throw DocumentError("document has no format_version");
  const auto v = d.at("format_version").get<std::string>();
  if (v.substr(0, v.find('.')) != "1") throw DocumentError("unsupported format_version " + v);
  if (!kind.empty() && (!d.contains("kind") || d.at("kind") != kind))
    throw DocumentError("expected a " + kind + " document");
  return d;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }

void Csv::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::invalid_argument("csv row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += csv_field(fields[i]);
  }
  out_ += "\r\n";
}

std::string Csv::str() const { return out_; }

std::string certificate_csv(const CoverageCertificate& c) {
  if (c.method == "branch_and_bound") {
    Csv csv({"cell", "a", "b", "bound_kind", "upper"});
    for (const auto& p : c.points)
      csv.row({std::to_string(p.origin_index), format_number(p.stage_mass.at(0)), format_number(p.stage_mass.at(1)),
               p.qset, format_number(p.sum)});
    return csv.str();
  }
  Csv csv({"condition", "qset", "p", "origin_stage", "origin_index", "sum", "limit", "ok"});
  for (const auto& p : c.points) {
    const bool ok = c.inclusive ? p.sum <= c.limit : p.sum < c.limit;
    csv.row({p.condition, p.qset, format_number(p.p), std::to_string(p.origin_stage), std::to_string(p.origin_index),
             format_number(p.sum), format_number(c.limit), ok ? "true" : "false"});
  }
  return csv.str();
}

std::string sim_csv(const SimReport& r) {
  Csv csv({"metric", "value", "exact", "z"});
  auto put = [&](const std::string& m, double v, std::optional<double> ex = {}, std::optional<double> z = {}) {
    csv.row({m, format_number(v), ex ? format_number(*ex) : "", z ? format_number(*z) : ""});
  };
  const auto* e = r.exact ? &*r.exact : nullptr;
  put("coverage", r.coverage, e ? std::optional(e->coverage) : std::nullopt,
      e ? std::optional(e->z_coverage) : std::nullopt);
  put("coverage_se", r.coverage_se);
  put("mean_estimate", r.mean_estimate);
  put("mean_n", r.mean_n, e ? std::optional(e->expected_n) : std::nullopt,
      e ? std::optional(e->z_expected_n) : std::nullopt);
  put("sd_n", r.sd_n, e ? std::optional(e->sd_n) : std::nullopt);
  for (const auto& [lv, v] : r.n_quantiles) put("n_q" + format_number(lv), v);
  for (std::size_t i = 0; i < r.stage_frequency.size(); ++i) {
    std::optional<double> ex, z;
    if (e && i < e->stage_probability.size()) {
      ex = e->stage_probability[i];
      z = e->z_stage[i];
    }
    put("stage_" + std::to_string(i + 1), r.stage_frequency[i], ex, z);
  }
  put("exhausted_fraction", r.exhausted_fraction);
  return csv.str();
}

}  // namespace seqest
