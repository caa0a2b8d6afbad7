#pragma once

#include <cmath>
#include <vector>

#include "meander/error.hpp"
#include "meander/series.hpp"

namespace meander {

struct TipPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Laboratory-frame tip path.
struct TipPath {
  std::vector<TipPoint> points;
};

/// Integrates the tip equations of motion explicitly from the quotient data.
/// Each sample (t_k, c_k, omega_k) moves the tip with the pre-update angle
/// theta_k; the first point is the initial pose at the first sample time.
inline TipPath reconstruct_tip(const QuotientSeries& qs, double theta0, double x0, double y0) {
  if (qs.empty()) throw Error(ErrorKind::TooShort, "tip reconstruction needs a nonempty series");
  TipPath path;
  path.points.reserve(qs.size());
  double theta = theta0, x = x0, y = y0;
  const double dt = qs.dt;
  for (const auto& s : qs.samples) {
    path.points.push_back({s.t, x, y, theta});
    const double c = std::cos(theta), sn = std::sin(theta);
    x += dt * (s.cx * c - s.cy * sn);
    y += dt * (s.cx * sn + s.cy * c);
    theta += dt * s.omega;
  }
  return path;
}

}  // namespace meander
