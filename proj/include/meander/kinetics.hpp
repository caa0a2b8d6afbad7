#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "meander/error.hpp"

namespace meander {

/// FitzHugh-Nagumo kinetic parameters and the 2x2 diffusion matrix.
struct ModelParams {
  double beta = 0.7;
  double gamma = 0.5;
  double epsilon = 0.2;
  // Row-major: {{d11, d12}, {d21, d22}}. Excitation diffuses, inhibitor does not.
  std::array<std::array<double, 2>, 2> diff{{{1.0, 0.0}, {0.0, 0.0}}};

  void validate() const {
    if (epsilon == 0.0 || !std::isfinite(epsilon))
      throw Error(ErrorKind::InvalidParams, "epsilon must be finite and nonzero");
    if (!std::isfinite(beta) || !std::isfinite(gamma))
      throw Error(ErrorKind::InvalidParams, "beta and gamma must be finite");
    for (const auto& row : diff)
      for (double d : row)
        if (!std::isfinite(d)) throw Error(ErrorKind::InvalidParams, "diffusion matrix must be finite");
  }

  bool diagonal_diffusion() const { return diff[0][1] == 0.0 && diff[1][0] == 0.0; }
};

struct Rates {
  double f1 = 0.0;
  double f2 = 0.0;
};

inline constexpr double kThird = 1.0 / 3.0;

/// f1 = (u1 - u1^3/3 - u2)/eps,  f2 = eps (u1 + beta - gamma u2).
inline Rates reaction(double u1, double u2, const ModelParams& p) {
  const double inv_eps = 1.0 / p.epsilon;
  return {inv_eps * (u1 - kThird * (u1 * u1 * u1) - u2), p.epsilon * (u1 + p.beta - p.gamma * u2)};
}

struct RestState {
  double u = 0.0;
  double v = 0.0;
};

namespace detail {

// Real roots of t^3 + a t + b = 0, ascending.
inline std::vector<double> depressed_cubic_roots(double a, double b) {
  std::vector<double> roots;
  const double disc = -(4.0 * a * a * a + 27.0 * b * b);
  if (disc > 0.0) {
    const double m = 2.0 * std::sqrt(-a / 3.0);
    const double phi = std::acos(std::clamp(3.0 * b / (a * m), -1.0, 1.0)) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0));
  } else {
    const double s = std::sqrt(b * b / 4.0 + a * a * a / 27.0);
    roots.push_back(std::cbrt(-b / 2.0 + s) + std::cbrt(-b / 2.0 - s));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace detail

/// Homogeneous steady state on the excitable rest branch: the smallest real
/// intersection of the two nullclines.
inline RestState rest_state(const ModelParams& p) {
  if (!std::isfinite(p.beta) || !std::isfinite(p.gamma))
    throw Error(ErrorKind::NoRealRoot, "non-finite kinetic parameters");
  if (p.gamma == 0.0) {
    const double u = -p.beta;
    return {u, u - u * u * u / 3.0};
  }
  // u - u^3/3 = (u + beta)/gamma  <=>  u^3 + 3(1/gamma - 1) u + 3 beta/gamma = 0
  const double a = 3.0 * (1.0 / p.gamma - 1.0);
  const double b = 3.0 * p.beta / p.gamma;
  auto roots = detail::depressed_cubic_roots(a, b);
  if (roots.empty() || !std::isfinite(roots.front()))
    throw Error(ErrorKind::NoRealRoot, "cubic nullcline intersection not bracketed");
  double u = roots.front();
  for (int it = 0; it < 4; ++it) {
    const double g = u * u * u + a * u + b;
    const double dg = 3.0 * u * u + a;
    if (dg == 0.0) break;
    const double next = u - g / dg;
    if (!std::isfinite(next)) break;
    u = next;
  }
  return {u, (u + p.beta) / p.gamma};
}

}  // namespace meander
