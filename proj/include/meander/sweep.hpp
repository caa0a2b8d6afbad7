#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "meander/error.hpp"
#include "meander/io.hpp"
#include "meander/kinetics.hpp"
#include "meander/quotient.hpp"
#include "meander/series.hpp"
#include "meander/solver.hpp"

namespace meander {

/// Stopping rules for a single simulation at fixed parameters.
struct RunBudget {
  std::int64_t max_steps = 200000;
  /// How often (in steps) the rigid-rotation test runs.
  std::int64_t check_every = 100;
  /// How often (in steps) the more expensive limit-cycle test runs.
  std::int64_t cycle_check_every = 2000;
  /// Extra steps taken after constancy is detected.
  std::int64_t rw_tail_steps = 50;
  int transient_periods = 5;
  int measured_periods = 5;
  double tol = kConstancyTol;

  void validate() const {
    if (max_steps < 1) throw Error(ErrorKind::Config, "max_steps must be positive");
    if (check_every < 1 || cycle_check_every < 1) throw Error(ErrorKind::Config, "check intervals must be positive");
    if (rw_tail_steps < 0) throw Error(ErrorKind::Config, "rw_tail_steps must be non-negative");
    if (transient_periods < 0 || measured_periods < 1)
      throw Error(ErrorKind::Config, "need a non-negative transient and at least one measured period");
    if (!(tol > 0.0)) throw Error(ErrorKind::Config, "tolerance must be positive");
  }
};

struct RunOutcome {
  QuotientSeries series;
  QuotientAnalysis analysis;
  std::int64_t steps = 0;
  /// True when the caller's stop predicate ended the run.
  bool stopped = false;
};

namespace detail {

/// Limit-cycle test: enough periods, a trimmed transient, the last
/// `measured` periods agreeing pairwise-consecutively within 1% and a
/// macroscopic size.
inline std::optional<QuotientAnalysis> settled_cycle(const QuotientSeries& qs, const RunBudget& b) {
  if (qs.size() < kMinSamples) return std::nullopt;
  const auto period = detect_period(qs, b.tol);
  if (!period || !(*period > 0.0)) return std::nullopt;
  const double span = static_cast<double>(qs.size()) * qs.dt;
  if (span < static_cast<double>(b.transient_periods + b.measured_periods) * *period) return std::nullopt;
  if (span < 7.0 * *period) return std::nullopt;
  const std::size_t start = trim_transient(qs, *period);
  const auto arcs = period_arc_lengths(qs, *period, start);
  const auto need = static_cast<std::size_t>(b.measured_periods);
  if (arcs.size() < need) return std::nullopt;
  for (std::size_t k = arcs.size() - need + 1; k < arcs.size(); ++k)
    if (relative_difference(arcs[k - 1], arcs[k]) > kCycleAgreement) return std::nullopt;
  QuotientAnalysis a;
  a.period = period;
  a.trimmed_start = start;
  a.n_periods = arcs.size();
  double sum = 0.0;
  for (double q : arcs) sum += q;
  a.q_s = sum / static_cast<double>(arcs.size());
  if (!(a.q_s > 10.0 * b.tol)) return std::nullopt;
  a.classification = Classification::MRW;
  return a;
}

/// Best-effort numbers for a run that hit its cap unresolved.
inline QuotientAnalysis unresolved_analysis(const QuotientSeries& qs, const RunBudget& b) {
  QuotientAnalysis a;
  a.classification = Classification::UNRESOLVED;
  if (qs.size() < kMinSamples) return a;
  const auto period = detect_period(qs, b.tol);
  if (!period || !(*period > 0.0)) return a;
  a.period = period;
  std::size_t start = 0;
  try {
    start = trim_transient(qs, *period);
  } catch (const Error&) {
    start = qs.size() / 2;
  }
  const auto arcs = period_arc_lengths(qs, *period, start);
  a.trimmed_start = start;
  a.n_periods = arcs.size();
  if (!arcs.empty()) {
    double sum = 0.0;
    for (double q : arcs) sum += q;
    a.q_s = sum / static_cast<double>(arcs.size());
  }
  return a;
}

}  // namespace detail

/// Steps `s` at fixed parameters until the quotient data is resolved as
/// rigid rotation (constant over the last quarter, then a short tail), as a
/// settled limit cycle, or the step cap is reached. The series covers every
/// step taken. `stop`, when given, is polled at each rigid-rotation check and
/// ends the run early (the analysis is then whatever the data supports).
inline RunOutcome run_until_resolved(SimState& s, const RunBudget& b,
                                     const std::function<bool(const SimState&)>& stop = {}) {
  b.validate();
  RunOutcome out;
  out.series.dt = s.numerics.dt();
  out.series.samples.reserve(static_cast<std::size_t>(std::min<std::int64_t>(b.max_steps, 400000)) + 64);
  auto& qs = out.series;

  for (std::int64_t k = 1; k <= b.max_steps; ++k) {
    step(s, &qs);
    ++out.steps;
    const bool at_cap = k == b.max_steps;
    if (k % b.check_every != 0 && !at_cap) continue;
    if (stop && stop(s)) {
      out.stopped = true;
      out.analysis = qs.size() >= kMinSamples ? detail::unresolved_analysis(qs, b) : QuotientAnalysis{};
      return out;
    }
    if (qs.size() < kMinSamples) continue;
    const std::size_t n = qs.size();
    if (is_constant(qs, n - n / 4, n, b.tol)) {
      if (!at_cap)
        for (std::int64_t t = 0; t < b.rw_tail_steps; ++t) {
          step(s, &qs);
          ++out.steps;
        }
      out.analysis.classification = Classification::RW;
      out.analysis.q_s = 0.0;
      out.analysis.period = std::nullopt;
      out.analysis.trimmed_start = 0;
      out.analysis.n_periods = 0;
      return out;
    }
    if (k % b.cycle_check_every == 0 || at_cap) {
      if (auto cycle = detail::settled_cycle(qs, b)) {
        out.analysis = *cycle;
        return out;
      }
    }
  }
  out.analysis = detail::unresolved_analysis(qs, b);
  return out;
}

// ---------------------------------------------------------------------------
// Continuation sweeps

enum class Direction { Forward, Reverse };

inline std::string_view to_string(Direction d) { return d == Direction::Forward ? "forward" : "reverse"; }

struct SweepSpec {
  double beta_start = 0.590;
  double beta_end = 0.615;
  double dbeta = 0.001;
  /// Kinetics other than beta.
  ModelParams model;
  NumericalParams numerics;
  std::optional<PinningSpec> pin;
  RunBudget budget;
  /// Fixed-frame steps a fresh spiral takes before the frame is engaged.
  std::int64_t warmup_steps = 2000;
  /// Continuation seed; a fresh spiral at beta_start when empty.
  std::optional<SimState> seed;

  Direction direction() const { return dbeta > 0.0 ? Direction::Forward : Direction::Reverse; }

  void validate() const {
    if (!(dbeta != 0.0) || !std::isfinite(dbeta)) throw Error(ErrorKind::Config, "dbeta must be nonzero");
    if (beta_end != beta_start && (beta_end - beta_start > 0.0) != (dbeta > 0.0))
      throw Error(ErrorKind::Config, "dbeta must point from beta_start toward beta_end");
    if (warmup_steps < 0) throw Error(ErrorKind::Config, "warmup_steps must be non-negative");
    budget.validate();
    model.validate();
  }

  /// The traversal order: beta_start + k * dbeta, plus beta_end itself when
  /// it falls off the grid.
  std::vector<double> betas() const {
    validate();
    std::vector<double> out;
    const double span = (beta_end - beta_start) / dbeta;
    const auto whole = static_cast<std::int64_t>(std::floor(span + 1e-9));
    for (std::int64_t k = 0; k <= whole; ++k) out.push_back(tidy(beta_start + static_cast<double>(k) * dbeta));
    if (span - static_cast<double>(whole) > 1e-6) out.push_back(beta_end);
    return out;
  }

  /// Rounds away the last-bit drift of start + k*dbeta so printed values are
  /// the decimal grid points.
  static double tidy(double beta) { return std::round(beta * 1e12) / 1e12; }
};

struct SweepRecord {
  double beta = 0.0;
  double q_s = 0.0;
  Classification classification = Classification::UNRESOLVED;
  std::optional<double> period;
  std::size_t n_periods = 0;
  std::string snapshot_file;
  std::uint64_t initial_hash = 0;
  std::uint64_t final_hash = 0;
  std::int64_t steps = 0;
  std::string error;
  /// Laboratory pose of the tip when the record started.
  double theta0 = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
};

struct SweepResult {
  Direction direction = Direction::Forward;
  std::vector<SweepRecord> records;
  std::vector<double> bifurcation_points;
  /// Final state of the last good record, for seeding a further sweep.
  std::optional<SimState> final_state;
};

/// Optional callbacks around each record. `on_record` persists a finished
/// record and returns the snapshot reference to store in it. `resume` may
/// supply an already computed record (and its final state) instead of
/// running it. `stop_after` ends the sweep after the given record.
struct SweepHooks {
  std::function<std::string(std::size_t, const SweepRecord&, const SimState&, const QuotientSeries&)> on_record;
  std::function<std::optional<std::pair<SweepRecord, SimState>>(std::size_t, double)> resume;
  std::function<bool(std::size_t, const SweepResult&)> stop_after;
  /// Keep every record's final state in memory (index-aligned with records).
  std::vector<SimState>* keep_states = nullptr;
};

/// Fresh seed: the initial spiral evolved in the fixed frame, then engaged.
inline SimState fresh_seed(const ModelParams& model, const NumericalParams& numerics,
                           const std::optional<PinningSpec>& pin, std::int64_t warmup_steps) {
  SimState s = make_state(model, numerics, init_spiral(model, numerics), pin);
  for (std::int64_t k = 0; k < warmup_steps; ++k) step(s);
  return engage_frame(std::move(s));
}

/// Every beta at which the classification flips between RW and MRW along
/// the traversal, reported as the first beta of the new regime.
/// UNRESOLVED and FAILED records neither start nor break a regime.
inline std::vector<double> find_bifurcation_points(const SweepResult& r) {
  std::vector<double> points;
  std::optional<Classification> last;
  for (const auto& rec : r.records) {
    if (rec.classification != Classification::RW && rec.classification != Classification::MRW) continue;
    if (last && *last != rec.classification) points.push_back(rec.beta);
    last = rec.classification;
  }
  return points;
}

inline SweepResult run_sweep(const SweepSpec& spec, const SweepHooks& hooks = {}) {
  spec.validate();
  const auto betas = spec.betas();
  SweepResult result;
  result.direction = spec.direction();

  ModelParams model = spec.model;
  model.beta = betas.front();
  std::optional<SimState> state = spec.seed;
  if (!state) {
    state = fresh_seed(model, spec.numerics, spec.pin, spec.warmup_steps);
  } else if (!(state->numerics == spec.numerics)) {
    throw Error(ErrorKind::Config, "seed snapshot grid differs from the sweep grid");
  }

  for (std::size_t idx = 0; idx < betas.size(); ++idx) {
    const double beta = betas[idx];
    SweepRecord rec;
    rec.beta = beta;
    rec.initial_hash = state_hash(*state);
    rec.theta0 = state->frame.theta;
    rec.x0 = state->frame.RX;
    rec.y0 = state->frame.RY;

    if (hooks.resume) {
      if (auto done = hooks.resume(idx, beta)) {
        if (done->first.initial_hash != rec.initial_hash)
          throw Error(ErrorKind::Config, "resumed record " + std::to_string(idx) + " does not continue the sweep");
        rec = std::move(done->first);
        if (rec.classification != Classification::FAILED) state = std::move(done->second);
        if (hooks.keep_states) hooks.keep_states->push_back(*state);
        result.records.push_back(std::move(rec));
        if (hooks.stop_after && hooks.stop_after(idx, result)) break;
        continue;
      }
    }

    SimState work = *state;
    work.params.beta = beta;
    QuotientSeries series;
    series.dt = work.numerics.dt();
    try {
      RunOutcome run = run_until_resolved(work, spec.budget);
      rec.classification = run.analysis.classification;
      rec.q_s = rec.classification == Classification::RW ? 0.0 : run.analysis.q_s;
      rec.period = run.analysis.period;
      rec.n_periods = run.analysis.n_periods;
      rec.steps = run.steps;
      series = std::move(run.series);
      state = std::move(work);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BlowUp && e.kind() != ErrorKind::SingularPinning) throw;
      // Keep the previous final state; the next beta continues from it.
      rec.classification = Classification::FAILED;
      rec.q_s = 0.0;
      rec.error = e.what();
    }
    rec.final_hash = state_hash(*state);
    if (hooks.on_record) rec.snapshot_file = hooks.on_record(idx, rec, *state, series);
    if (hooks.keep_states) hooks.keep_states->push_back(*state);
    result.records.push_back(std::move(rec));
    if (hooks.stop_after && hooks.stop_after(idx, result)) break;
  }

  result.bifurcation_points = find_bifurcation_points(result);
  result.final_state = std::move(state);
  return result;
}

/// Open beta interval on which the two traversals disagree.
struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct Hysteresis {
  std::optional<Interval> low_side;
  std::optional<Interval> high_side;
};

namespace detail {

inline double grid_step(const SweepResult& r) {
  if (r.records.size() < 2) return 0.0;
  return std::abs(r.records[1].beta - r.records[0].beta);
}

struct Flip {
  double beta;
  Classification to;
};

inline std::vector<Flip> flips(const SweepResult& r) {
  std::vector<Flip> out;
  std::optional<Classification> last;
  for (const auto& rec : r.records) {
    if (rec.classification != Classification::RW && rec.classification != Classification::MRW) continue;
    if (last && *last != rec.classification) out.push_back({rec.beta, rec.classification});
    last = rec.classification;
  }
  return out;
}

}  // namespace detail

/// Compares a forward and a reverse traversal of the same beta grid. On the
/// low-beta side the interval runs from the beta where the reverse run
/// regains rigid rotation to the forward onset of meander; on the high-beta
/// side from the forward return to rigid rotation to the beta where the
/// reverse run starts to meander. Sides where the flips coincide (or are
/// missing) are empty.
inline Hysteresis hysteresis_region(const SweepResult& fwd, const SweepResult& rev) {
  if (fwd.records.empty() || rev.records.empty()) throw Error(ErrorKind::MismatchedRange, "empty sweep");
  const double hf = detail::grid_step(fwd);
  const double hr = detail::grid_step(rev);
  const double h = hf > 0.0 ? hf : hr;
  if (hf > 0.0 && hr > 0.0 && std::abs(hf - hr) > 1e-9 * std::max(hf, hr))
    throw Error(ErrorKind::MismatchedRange, "forward and reverse sweeps use different beta steps");
  if (h > 0.0) {
    const double offset = (fwd.records.front().beta - rev.records.front().beta) / h;
    if (std::abs(offset - std::round(offset)) > 1e-6)
      throw Error(ErrorKind::MismatchedRange, "forward and reverse beta grids are not aligned");
  }
  const double lo = std::max(std::min(fwd.records.front().beta, fwd.records.back().beta),
                             std::min(rev.records.front().beta, rev.records.back().beta));
  const double hi = std::min(std::max(fwd.records.front().beta, fwd.records.back().beta),
                             std::max(rev.records.front().beta, rev.records.back().beta));
  if (lo > hi + 1e-12) throw Error(ErrorKind::MismatchedRange, "sweeps share no beta range");

  const auto ff = detail::flips(fwd);
  const auto rf = detail::flips(rev);
  std::optional<double> fwd_onset, fwd_return, rev_resume, rev_onset;
  for (const auto& f : ff) {
    if (f.to == Classification::MRW && !fwd_onset) fwd_onset = f.beta;
    if (f.to == Classification::RW) fwd_return = f.beta;
  }
  for (const auto& f : rf) {
    if (f.to == Classification::MRW && !rev_onset) rev_onset = f.beta;
    if (f.to == Classification::RW) rev_resume = f.beta;
  }
  Hysteresis out;
  if (fwd_onset && rev_resume && *rev_resume < *fwd_onset) out.low_side = Interval{*rev_resume, *fwd_onset};
  if (fwd_return && rev_onset && *fwd_return < *rev_onset) out.high_side = Interval{*fwd_return, *rev_onset};
  return out;
}

// ---------------------------------------------------------------------------
// Convergence studies

enum class ConvergenceVariant { VaryDxFixTs, VaryDxFixDt, VaryTsFixDx, VaryL };

inline std::string_view to_string(ConvergenceVariant v) {
  switch (v) {
    case ConvergenceVariant::VaryDxFixTs: return "vary_dx_fix_ts";
    case ConvergenceVariant::VaryDxFixDt: return "vary_dx_fix_dt";
    case ConvergenceVariant::VaryTsFixDx: return "vary_ts_fix_dx";
    case ConvergenceVariant::VaryL: return "vary_L";
  }
  return "vary_dx_fix_ts";
}

inline ConvergenceVariant convergence_variant_from_string(std::string_view s) {
  if (s == "vary_dx_fix_ts") return ConvergenceVariant::VaryDxFixTs;
  if (s == "vary_dx_fix_dt") return ConvergenceVariant::VaryDxFixDt;
  if (s == "vary_ts_fix_dx") return ConvergenceVariant::VaryTsFixDx;
  if (s == "vary_L") return ConvergenceVariant::VaryL;
  throw Error(ErrorKind::Config, "unknown convergence variant '" + std::string(s) + "'");
}

namespace detail {

inline int intervals_for(double L, double dx) {
  const double n = L / dx;
  const double r = std::round(n);
  if (!(r >= 1.0) || std::abs(n - r) > 1e-6 * r)
    throw Error(ErrorKind::InvalidNumerics, "L/dx is not an integer for L=" + format_double(L) +
                                                ", dx=" + format_double(dx));
  return static_cast<int>(r);
}

}  // namespace detail

/// Grids for one convergence family. `values` are dx (the two dx families),
/// ts, or L. The base supplies whatever the family holds fixed.
inline std::vector<NumericalParams> convergence_grids(const NumericalParams& base, ConvergenceVariant v,
                                                      const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::Config, "convergence study needs at least one value");
  std::vector<NumericalParams> out;
  for (double x : values) {
    switch (v) {
      case ConvergenceVariant::VaryDxFixTs:
        out.push_back(make_numerics(base.L(), detail::intervals_for(base.L(), x), base.ts()));
        break;
      case ConvergenceVariant::VaryDxFixDt: {
        const int n = detail::intervals_for(base.L(), x);
        const double dx = base.L() / n;
        out.push_back(make_numerics(base.L(), n, 4.0 * base.dt() / (dx * dx)));
        break;
      }
      case ConvergenceVariant::VaryTsFixDx:
        out.push_back(make_numerics(base.L(), base.N(), x));
        break;
      case ConvergenceVariant::VaryL:
        out.push_back(make_numerics(x, detail::intervals_for(x, base.dx()), base.ts()));
        break;
    }
  }
  return out;
}

struct ConvergenceRun {
  NumericalParams numerics;
  SweepResult result;
};

/// One sweep per grid of the family; the pin is re-centred on every grid
/// and any seed snapshot is dropped (it belongs to the base grid).
inline std::vector<ConvergenceRun> convergence_suite(const SweepSpec& base, ConvergenceVariant v,
                                                     const std::vector<double>& values,
                                                     const std::function<SweepHooks(std::size_t)>& hooks_for = {}) {
  std::vector<ConvergenceRun> out;
  const auto grids = convergence_grids(base.numerics, v, values);
  for (std::size_t k = 0; k < grids.size(); ++k) {
    SweepSpec spec = base;
    spec.numerics = grids[k];
    if (spec.pin) spec.pin = PinningSpec::centred(grids[k], spec.pin->u_star, spec.pin->v_star);
    if (spec.seed && !(spec.seed->numerics == grids[k])) spec.seed.reset();
    out.push_back({grids[k], run_sweep(spec, hooks_for ? hooks_for(k) : SweepHooks{})});
  }
  return out;
}

}  // namespace meander
