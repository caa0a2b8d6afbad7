#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meander/error.hpp"
#include "meander/series.hpp"

namespace meander {

enum class Classification { RW, MRW, UNRESOLVED, FAILED };

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::RW: return "RW";
    case Classification::MRW: return "MRW";
    case Classification::UNRESOLVED: return "UNRESOLVED";
    case Classification::FAILED: return "FAILED";
  }
  return "UNRESOLVED";
}

inline Classification classification_from_string(std::string_view s) {
  if (s == "RW") return Classification::RW;
  if (s == "MRW") return Classification::MRW;
  if (s == "FAILED") return Classification::FAILED;
  if (s == "UNRESOLVED") return Classification::UNRESOLVED;
  throw Error(ErrorKind::Parse, "unknown classification '" + std::string(s) + "'");
}

/// Relative constancy tolerance for rigid rotation.
inline constexpr double kConstancyTol = 1e-4;
/// Minimum number of samples any period/classification analysis accepts.
inline constexpr std::size_t kMinSamples = 2000;
/// Consecutive-period arc lengths closer than this (relative) count as settled.
inline constexpr double kCycleAgreement = 0.01;

struct QuotientAnalysis {
  std::optional<double> period;
  double q_s = 0.0;
  Classification classification = Classification::UNRESOLVED;
  std::size_t trimmed_start = 0;
  std::size_t n_periods = 0;
};

namespace detail {

inline double component(const QuotientSample& s, int k) { return k == 0 ? s.cx : (k == 1 ? s.cy : s.omega); }

inline double step_length(const QuotientSample& a, const QuotientSample& b) {
  const double dx = b.cx - a.cx, dy = b.cy - a.cy, dw = b.omega - a.omega;
  return std::sqrt(dx * dx + dy * dy + dw * dw);
}

inline double period_in_samples(const QuotientSeries& qs, double period) { return period / qs.dt; }

/// Index of the k-th period boundary counted from `start`.
inline std::size_t boundary(std::size_t start, std::size_t k, double samples_per_period) {
  return start + static_cast<std::size_t>(std::llround(static_cast<double>(k) * samples_per_period));
}

inline void require_samples(const QuotientSeries& qs, std::size_t n, const char* what) {
  if (qs.size() < n)
    throw Error(ErrorKind::TooShort, std::string(what) + " needs at least " + std::to_string(n) + " samples, got " +
                                         std::to_string(qs.size()));
}

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace detail

/// Every one of cx, cy, omega varies by less than tol * max(1, |mean|) over
/// samples [from, to).
inline bool is_constant(const QuotientSeries& qs, std::size_t from, std::size_t to, double tol = kConstancyTol) {
  if (from >= to) return true;
  for (int k = 0; k < 3; ++k) {
    double lo = detail::component(qs.samples[from], k), hi = lo, sum = 0.0;
    for (std::size_t i = from; i < to; ++i) {
      const double v = detail::component(qs.samples[i], k);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    const double mean = sum / static_cast<double>(to - from);
    if (!(hi - lo < tol * std::max(1.0, std::abs(mean)))) return false;
  }
  return true;
}

/// Discrete arc length of the (cx, cy, omega) curve over samples [from, to].
inline double arc_length(const QuotientSeries& qs, std::size_t from, std::size_t to) {
  double total = 0.0;
  for (std::size_t i = from; i < to; ++i) total += detail::step_length(qs.samples[i], qs.samples[i + 1]);
  return total;
}

/// Period of the quotient oscillation, from upward mean-crossings of cx in
/// the second half of the series; none for a constant series or when no
/// oscillation can be found.
inline std::optional<double> detect_period(const QuotientSeries& qs, double tol = kConstancyTol) {
  detail::require_samples(qs, kMinSamples, "period detection");
  const std::size_t n = qs.size();
  const std::size_t from = n / 2;
  if (is_constant(qs, from, n, tol)) return std::nullopt;

  double mean = 0.0;
  for (std::size_t i = from; i < n; ++i) mean += qs.samples[i].cx;
  mean /= static_cast<double>(n - from);
  double amplitude = 0.0;
  for (std::size_t i = from; i < n; ++i) amplitude = std::max(amplitude, std::abs(qs.samples[i].cx - mean));
  if (amplitude == 0.0) return std::nullopt;

  // A crossing only counts once the signal has dipped below -band since the
  // previous one, so small ripples riding on the main oscillation do not
  // register as extra cycles.
  const double band = 0.1 * amplitude;
  std::vector<double> crossings;
  bool armed = false;
  for (std::size_t i = from + 1; i < n; ++i) {
    const double a = qs.samples[i - 1].cx - mean;
    const double b = qs.samples[i].cx - mean;
    if (a < -band || b < -band) armed = true;
    if (armed && a < 0.0 && b >= 0.0) {
      crossings.push_back(qs.samples[i - 1].t + (-a / (b - a)) * (qs.samples[i].t - qs.samples[i - 1].t));
      armed = false;
    }
  }
  if (crossings.size() >= 3)
    return (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);

  // Long periods: first autocorrelation maximum after the first zero of the
  // autocorrelation, on a decimated copy.
  const std::size_t len = n - from;
  const std::size_t stride = std::max<std::size_t>(1, len / 4000);
  std::vector<double> x;
  for (std::size_t i = from; i < n; i += stride) x.push_back(qs.samples[i].cx - mean);
  const std::size_t m = x.size();
  auto acf = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < m; ++i) s += x[i] * x[i + lag];
    return s / static_cast<double>(m - lag);
  };
  bool went_negative = false;
  double prev = acf(0);
  for (std::size_t lag = 1; lag < m / 2; ++lag) {
    const double cur = acf(lag);
    if (cur < 0.0) went_negative = true;
    if (went_negative && lag + 1 < m / 2) {
      const double next = acf(lag + 1);
      if (cur > 0.0 && cur >= prev && cur >= next) {
        // Parabolic refinement of the peak.
        const double denom = prev - 2.0 * cur + next;
        const double shift = denom != 0.0 ? 0.5 * (prev - next) / denom : 0.0;
        return (static_cast<double>(lag) + shift) * static_cast<double>(stride) * qs.dt;
      }
    }
    prev = cur;
  }
  return std::nullopt;
}

/// Arc length of each whole period starting at `start`.
inline std::vector<double> period_arc_lengths(const QuotientSeries& qs, double period, std::size_t start) {
  const double spp = detail::period_in_samples(qs, period);
  std::vector<double> arcs;
  if (!(spp >= 1.0)) return arcs;
  for (std::size_t k = 0;; ++k) {
    const std::size_t a = detail::boundary(start, k, spp);
    const std::size_t b = detail::boundary(start, k + 1, spp);
    if (b > qs.size() - 1) break;
    arcs.push_back(arc_length(qs, a, b));
  }
  return arcs;
}

/// Start of the usable part of the series: five periods in, then later by
/// whole periods while consecutive periods still differ by more than 1% in
/// arc length (never past the middle of the series).
inline std::size_t trim_transient(const QuotientSeries& qs, double period) {
  if (!(period > 0.0)) throw Error(ErrorKind::TooShort, "trim needs a positive period");
  const double spp = detail::period_in_samples(qs, period);
  if (static_cast<double>(qs.size()) * qs.dt < 7.0 * period)
    throw Error(ErrorKind::TooShort, "trim needs a series spanning at least 7 periods");
  const std::size_t first = detail::boundary(0, 5, spp);
  const std::size_t half = qs.size() / 2;
  std::size_t k = 0;
  for (;;) {
    const std::size_t a = detail::boundary(first, k, spp);
    const std::size_t b = detail::boundary(first, k + 1, spp);
    const std::size_t c = detail::boundary(first, k + 2, spp);
    if (c > qs.size() - 1) break;
    const double q1 = arc_length(qs, a, b);
    const double q2 = arc_length(qs, b, c);
    if (detail::relative_difference(q1, q2) <= kCycleAgreement) break;
    if (b > half) break;
    ++k;
  }
  return detail::boundary(first, k, spp);
}

/// Mean arc length of the whole periods after `start`.
inline double quotient_size(const QuotientSeries& qs, double period, std::size_t start) {
  const auto arcs = period_arc_lengths(qs, period, start);
  if (arcs.empty()) throw Error(ErrorKind::TooShort, "no complete period after the transient");
  double sum = 0.0;
  for (double a : arcs) sum += a;
  return sum / static_cast<double>(arcs.size());
}

/// RW when the last quarter of the series is constant; MRW when a period is
/// found and the last whole period has a macroscopic arc length; otherwise
/// the run is too short to tell.
inline Classification classify(const QuotientSeries& qs, double tol = kConstancyTol) {
  detail::require_samples(qs, kMinSamples, "classification");
  const std::size_t n = qs.size();
  if (is_constant(qs, n - n / 4, n, tol)) return Classification::RW;
  const auto period = detect_period(qs, tol);
  if (!period) return Classification::UNRESOLVED;
  const double spp = detail::period_in_samples(qs, *period);
  const auto span = static_cast<std::size_t>(std::llround(spp));
  if (span < 1 || span > n - 1) return Classification::UNRESOLVED;
  const double q = arc_length(qs, n - 1 - span, n - 1);
  return q > 10.0 * tol ? Classification::MRW : Classification::UNRESOLVED;
}

}  // namespace meander
