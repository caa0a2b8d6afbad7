#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "meander/error.hpp"
#include "meander/quotient.hpp"
#include "meander/series.hpp"
#include "meander/solver.hpp"
#include "meander/sweep.hpp"

namespace meander {

/// Uniform impulse on the excitation field. The inhibitor is never kicked.
struct ShockSpec {
  double amplitude = 0.0;
  /// Steps from the loaded snapshot to the shock.
  std::int64_t at_step = 40000;

  void validate() const {
    if (at_step < 1) throw Error(ErrorKind::Config, "shock at_step must be at least 1");
    if (!std::isfinite(amplitude)) throw Error(ErrorKind::Config, "shock amplitude must be finite");
  }
};

enum class Branch { Forward, Reverse };

inline std::string_view to_string(Branch b) { return b == Branch::Forward ? "forward" : "reverse"; }

inline Branch branch_from_string(std::string_view s) {
  if (s == "forward" || s == "rw") return Branch::Forward;
  if (s == "reverse" || s == "mrw") return Branch::Reverse;
  throw Error(ErrorKind::Config, "unknown branch '" + std::string(s) + "'");
}

/// Converted, Unchanged and Eliminated are the physical outcomes; the last
/// two record runs that could not be judged.
enum class Verdict { Converted, Unchanged, Eliminated, Unresolved, Failed };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Converted: return "Converted";
    case Verdict::Unchanged: return "Unchanged";
    case Verdict::Eliminated: return "Eliminated";
    case Verdict::Unresolved: return "Unresolved";
    case Verdict::Failed: return "Failed";
  }
  return "Failed";
}

struct ShockOutcome {
  Verdict verdict = Verdict::Unresolved;
  Classification pre_class = Classification::UNRESOLVED;
  Classification post_class = Classification::UNRESOLVED;
  QuotientSeries pre_series;
  QuotientSeries post_series;
  double post_q_s = 0.0;
  std::string note;
};

/// Adds the impulse: u1 += A at every grid point, u2 untouched.
inline void apply_shock(SimState& s, const ShockSpec& spec) {
  for (double& v : s.fields.u1.values()) v += spec.amplitude;
}

/// Fields within `tol` of the homogeneous rest state everywhere.
inline bool at_rest(const SimState& s, double tol = 1e-4) { return distance_from_rest(s.fields, s.params) < tol; }

inline Verdict judge(Classification pre, Classification post) {
  const auto definite = [](Classification c) { return c == Classification::RW || c == Classification::MRW; };
  if (!definite(pre) || !definite(post)) return Verdict::Unresolved;
  return pre == post ? Verdict::Unchanged : Verdict::Converted;
}

/// Loads nothing itself: `snapshot` is the settled state of one branch.
/// Runs `spec.at_step` steps at `beta` to confirm the pre-shock class,
/// applies the shock and runs on under `budget` until the class resolves,
/// the wave dies out, or the budget ends.
inline ShockOutcome run_conversion(const SimState& snapshot, double beta, const ShockSpec& spec,
                                   const RunBudget& budget) {
  spec.validate();
  ShockOutcome out;
  SimState s = snapshot;
  s.params.beta = beta;
  out.pre_series.dt = s.numerics.dt();
  out.pre_series.samples.reserve(static_cast<std::size_t>(spec.at_step));
  try {
    for (std::int64_t k = 0; k < spec.at_step; ++k) step(s, &out.pre_series);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BlowUp && e.kind() != ErrorKind::SingularPinning) throw;
    out.verdict = Verdict::Failed;
    out.note = std::string("before the shock: ") + e.what();
    return out;
  }
  out.pre_class = out.pre_series.size() >= kMinSamples ? classify(out.pre_series, budget.tol)
                                                        : Classification::UNRESOLVED;

  apply_shock(s, spec);

  const auto gone = [](const SimState& st) {
    return at_rest(st) || find_tips(st.fields, st.pin.u_star, st.pin.v_star).empty();
  };
  try {
    RunOutcome run = run_until_resolved(s, budget, gone);
    out.post_series = std::move(run.series);
    if (run.stopped) {
      out.verdict = Verdict::Eliminated;
      out.note = "spiral activity died out";
      return out;
    }
    out.post_class = run.analysis.classification;
    out.post_q_s = run.analysis.q_s;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularPinning || e.kind() == ErrorKind::NoTip) {
      out.verdict = Verdict::Eliminated;
      out.note = e.what();
      return out;
    }
    if (e.kind() != ErrorKind::BlowUp) throw;
    out.verdict = Verdict::Failed;
    out.note = e.what();
    return out;
  }
  out.verdict = judge(out.pre_class, out.post_class);
  return out;
}

}  // namespace meander
