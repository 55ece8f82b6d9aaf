#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqest {

enum class Scheme {
  Abs,
  Mixed,
  RelInverse,
  RelFixed,
  FWCp,
  FWCh,
  FWMassart,
  BoundedAbs,
  BoundedMixed,
  GeneralMixed
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);
const std::vector<Scheme>& all_schemes();

bool is_fixed_width(Scheme s);
bool is_bounded(Scheme s);

// Invalid user input (bad precision spec, bad grid, ...).
struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PrecisionSpec {
  Scheme scheme = Scheme::Abs;
  double eps = 0.0;
  double eps_a = 0.0;
  double eps_r = 0.0;
  double delta = 0.05;
  double rho = 1.0;
  std::optional<double> zeta;
  double range_lo = 0.0;
  double range_hi = 1.0;
  std::int64_t stage_count = 0;  // user-chosen s for the bounded-variable schemes
  std::int64_t tau_free = 1;     // tau of the open-ended relative scheme
  std::int64_t first_stage = 0;  // open-ended scheme: n_1 (0 selects the default)
  double growth = 1.5;           // open-ended scheme: stage-size ratio
};

struct SamplingPlan {
  PrecisionSpec spec;
  std::int64_t tau = 0;
  double zeta = 0.0;
  // ln(zeta*delta); for the bounded-variable schemes ln(delta/(2s)).
  double log_zd = 0.0;
  // Sample sizes n_l, or success targets gamma_l for RelInverse.  For the
  // open-ended scheme this is only the stored prefix, see stage_size().
  std::vector<std::int64_t> stages;
  // RelInverse: z_l for every stage.
  std::vector<double> thresholds;
  bool custom_grid = false;
  std::vector<std::string> notes;

  Scheme scheme() const { return spec.scheme; }
  bool open_ended() const { return spec.scheme == Scheme::RelFixed; }
  bool inverse() const { return spec.scheme == Scheme::RelInverse; }
  std::size_t stage_count() const { return stages.size(); }
  bool is_last(std::size_t ell) const { return !open_ended() && ell == stages.size(); }
  // 1-based.
  std::int64_t stage_size(std::size_t ell) const;
  // Open-ended scheme: delta_l and ln(zeta*delta_l); log_zd elsewhere.
  double stage_delta(std::size_t ell) const;
  double stage_log_zd(std::size_t ell) const;
};

double default_zeta(std::int64_t tau);

void validate_spec(const PrecisionSpec& spec);

SamplingPlan build_plan(const PrecisionSpec& spec);
SamplingPlan build_abs_plan(const PrecisionSpec& spec);
SamplingPlan build_mixed_plan(const PrecisionSpec& spec);
SamplingPlan build_rel_inverse_plan(const PrecisionSpec& spec);
SamplingPlan build_rel_fixed_plan(const PrecisionSpec& spec);
SamplingPlan build_fw_plan(const PrecisionSpec& spec);
SamplingPlan build_massart_fw_plan(const PrecisionSpec& spec);
SamplingPlan build_bounded_plan(const PrecisionSpec& spec);

// Floor on the final sample size of a bounded-variable scheme.
double bounded_floor(const PrecisionSpec& spec);

// Same scheme and zeta on a caller-chosen ascending grid (toy plans,
// user grids for the bounded and open-ended schemes).
SamplingPlan with_stages(const SamplingPlan& plan, std::vector<std::int64_t> stages);

// Human-readable per-stage instantiation of the grid formula.
std::vector<std::string> explain_plan(const SamplingPlan& plan);

}  // namespace seqest
