#pragma once

#include <cstddef>
#include <vector>

namespace meander {

/// One record of the quotient data: frame velocities after a step.
struct QuotientSample {
  double t = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double omega = 0.0;

  friend bool operator==(const QuotientSample&, const QuotientSample&) = default;
};

/// Uniformly sampled (cx, cy, omega) history.
struct QuotientSeries {
  double dt = 0.0;
  std::vector<QuotientSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  void push(double t, double cx, double cy, double omega) { samples.push_back({t, cx, cy, omega}); }

  friend bool operator==(const QuotientSeries&, const QuotientSeries&) = default;
};

}  // namespace meander
