#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "seqest/exact.hpp"
#include "seqest/plan.hpp"
#include "seqest/runtime.hpp"
#include "seqest/sim.hpp"

namespace seqest {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "1.0";

// Malformed document, wrong kind, or an unsupported format major.
struct DocumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json spec_to_json(const PrecisionSpec& spec);
PrecisionSpec spec_from_json(const Json& j);

Json plan_document(const SamplingPlan& plan, bool explain = false);
SamplingPlan plan_from_document(const Json& doc);

Json certificate_document(const CoverageCertificate& cert);
Json tune_document(const TuneResult& res);
Json report_document(const EstimationReport& rep);
Json session_document(const SessionState& st);
SessionState session_from_document(const Json& doc);
Json sim_document(const SimReport& rep);
Json lemma_document(const LemmaCheck& check, const LemmaResult& res);

// Pretty-printed with a trailing newline.
std::string render(const Json& doc);
// Parses text and checks format_version (and kind, when given).
Json parse_document(const std::string& text, const std::string& kind = "");

// Shortest round-trip decimal form.
std::string format_number(double x);

// RFC 4180 CSV.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  std::string str() const;

 private:
  std::size_t width_;
  std::string out_;
};

std::string csv_field(const std::string& s);
std::string certificate_csv(const CoverageCertificate& cert);
std::string sim_csv(const SimReport& rep);

}  // namespace seqest
