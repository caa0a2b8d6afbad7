#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "meander/error.hpp"
#include "meander/grid.hpp"
#include "meander/kinetics.hpp"
#include "meander/series.hpp"

namespace meander {

/// Grid location of the tip and of the orientation point, plus the isoline
/// values the tip is pinned to.
struct PinningSpec {
  double u_star = 0.0;
  double v_star = 0.0;
  int i0 = 75;
  int j0 = 75;
  int i_inc = 1;
  int j_inc = 0;

  /// Pin at the box centre with the +x neighbour as orientation point.
  static PinningSpec centred(const NumericalParams& num, double u_star = 0.0, double v_star = 0.0) {
    PinningSpec pin;
    pin.u_star = u_star;
    pin.v_star = v_star;
    pin.i0 = num.N() / 2;
    pin.j0 = num.N() / 2;
    return pin;
  }

  int i1() const { return i0 + i_inc; }
  int j1() const { return j0 + j_inc; }

  void validate(const NumericalParams& num) const {
    if (i_inc == 0 && j_inc == 0) throw Error(ErrorKind::InvalidParams, "orientation offset must be nonzero");
    const int last = num.N();
    auto inside = [last](int k) { return k >= 2 && k <= last - 2; };
    if (!inside(i0) || !inside(j0) || !inside(i1()) || !inside(j1()))
      throw Error(ErrorKind::InvalidParams, "pin points need two grid points of stencil support to every edge");
    if (!std::isfinite(u_star) || !std::isfinite(v_star))
      throw Error(ErrorKind::InvalidParams, "isoline values must be finite");
  }

  friend bool operator==(const PinningSpec&, const PinningSpec&) = default;
};

/// Comoving-frame velocities and the accumulated tip pose in the lab frame.
/// The rotation generator is the fixed matrix [[0,-1],[1,0]], so exp(tau*theta)
/// is just the rotation by theta and is applied inline.
struct FrameState {
  double cx = 0.0;
  double cy = 0.0;
  double omega = 0.0;
  double theta = 0.0;
  double RX = 0.0;
  double RY = 0.0;
  // omega is held at zero after engagement until the orientation condition
  // is first met.
  bool omega_active = false;

  friend bool operator==(const FrameState&, const FrameState&) = default;
};

struct SimState {
  FieldPair fields;
  FrameState frame;
  std::int64_t step_index = 0;
  bool advection_engaged = false;
  ModelParams params;
  NumericalParams numerics;
  PinningSpec pin;
  // Test hook: drop the kinetic terms entirely.
  bool reaction_enabled = true;

  double time() const { return static_cast<double>(step_index) * numerics.dt(); }

  // Logical equality; the scratch buffer is not part of the state.
  friend bool operator==(const SimState& a, const SimState& b) {
    return a.fields == b.fields && a.frame == b.frame && a.step_index == b.step_index &&
           a.advection_engaged == b.advection_engaged && a.params.beta == b.params.beta &&
           a.params.gamma == b.params.gamma && a.params.epsilon == b.params.epsilon &&
           a.params.diff == b.params.diff && a.numerics == b.numerics && a.pin == b.pin;
  }

  FieldPair scratch;
};

inline SimState make_state(const ModelParams& params, const NumericalParams& numerics, FieldPair fields,
                           std::optional<PinningSpec> pin = std::nullopt) {
  params.validate();
  SimState s;
  s.params = params;
  s.numerics = numerics;
  s.pin = pin ? *pin : PinningSpec::centred(numerics);
  s.pin.validate(numerics);
  if (fields.n() != numerics.points())
    throw Error(ErrorKind::InvalidNumerics, "field size does not match the grid");
  s.fields = std::move(fields);
  return s;
}

// ---------------------------------------------------------------------------
// Reaction-diffusion substep

/// Forward Euler on D*lap(u) + f(u). Returns false if any output is non-finite.
inline bool rd_into(const FieldPair& in, FieldPair& out, const ModelParams& p, const NumericalParams& num,
                    bool reaction_enabled = true) {
  const std::size_t n = in.n();
  if (out.n() != n) out = FieldPair(n);
  const double dt = num.dt();
  const double inv_dx2 = 1.0 / (num.dx() * num.dx());
  const double d11 = p.diff[0][0], d12 = p.diff[0][1], d21 = p.diff[1][0], d22 = p.diff[1][1];
  const bool lap2_needed = d12 != 0.0 || d22 != 0.0;
  const bool cross = d12 != 0.0 || d21 != 0.0;
  bool finite = true;

  auto update = [&](double a, double b, double lap1, double lap2, double& oa, double& ob) {
    Rates f{};
    if (reaction_enabled) f = reaction(a, b, p);
    if (cross) {
      oa = a + dt * (d11 * lap1 + d12 * lap2 + f.f1);
      ob = b + dt * (d21 * lap1 + d22 * lap2 + f.f2);
    } else {
      oa = a + dt * (d11 * lap1 + f.f1);
      ob = lap2_needed ? b + dt * (d22 * lap2 + f.f2) : b + dt * f.f2;
    }
  };
  auto edge_point = [&](std::size_t i, std::size_t j) {
    const double lap1 = laplacian_at(in.u1, i, j, inv_dx2);
    const double lap2 = lap2_needed ? laplacian_at(in.u2, i, j, inv_dx2) : 0.0;
    update(in.u1(i, j), in.u2(i, j), lap1, lap2, out.u1(i, j), out.u2(i, j));
  };

  for (std::size_t j = 0; j < n; ++j) {
    if (j == 0 || j == n - 1) {
      for (std::size_t i = 0; i < n; ++i) edge_point(i, j);
    } else {
      edge_point(0, j);
      const double* a = in.u1.row(j);
      const double* an = in.u1.row(j + 1);
      const double* as = in.u1.row(j - 1);
      const double* b = in.u2.row(j);
      const double* bn = in.u2.row(j + 1);
      const double* bs = in.u2.row(j - 1);
      double* oa = out.u1.row(j);
      double* ob = out.u2.row(j);
      if (!reaction_enabled || cross || lap2_needed) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
          // Same association as laplacian_at.
          const double lap1 = ((a[i + 1] + a[i - 1]) + (an[i] + as[i]) - 4.0 * a[i]) * inv_dx2;
          const double lap2 = lap2_needed ? ((b[i + 1] + b[i - 1]) + (bn[i] + bs[i]) - 4.0 * b[i]) * inv_dx2 : 0.0;
          update(a[i], b[i], lap1, lap2, oa[i], ob[i]);
        }
      } else {
        // Common case: diagonal D with a non-diffusing inhibitor.
        const double eps = p.epsilon, inv_eps = 1.0 / p.epsilon, beta = p.beta, gamma = p.gamma;
        for (std::size_t i = 1; i + 1 < n; ++i) {
          const double lap1 = ((a[i + 1] + a[i - 1]) + (an[i] + as[i]) - 4.0 * a[i]) * inv_dx2;
          const double u = a[i], v = b[i];
          // Same expressions as reaction().
          const double f1 = inv_eps * (u - kThird * (u * u * u) - v);
          const double f2 = eps * (u + beta - gamma * v);
          oa[i] = u + dt * (d11 * lap1 + f1);
          ob[i] = v + dt * f2;
        }
      }
      edge_point(n - 1, j);
    }
    finite = finite && all_finite(out.u1.row(j), n) && all_finite(out.u2.row(j), n);
  }
  return finite;
}

inline FieldPair rd_substep(const SimState& s) {
  FieldPair out(s.fields.n());
  if (!rd_into(s.fields, out, s.params, s.numerics, s.reaction_enabled))
    throw Error(ErrorKind::BlowUp, "non-finite value after reaction-diffusion substep at step " +
                                       std::to_string(s.step_index));
  return out;
}

// ---------------------------------------------------------------------------
// Frame velocity solve

struct FrameVelocities {
  double cx = 0.0;
  double cy = 0.0;
  double omega = 0.0;
  /// Predicted u2 at the orientation point lies below v_star after advection.
  bool orientation_ok = false;
};

namespace detail {

struct Solve3 {
  std::array<double, 3> x{};
  bool ok = false;
};

/// Solves A x = b for a 3x3 system by the adjugate; fails when the 1-norm
/// condition number exceeds max_cond.
inline Solve3 solve3(const std::array<std::array<double, 3>, 3>& A, const std::array<double, 3>& b,
                     double max_cond) {
  const double c00 = A[1][1] * A[2][2] - A[1][2] * A[2][1];
  const double c01 = A[1][2] * A[2][0] - A[1][0] * A[2][2];
  const double c02 = A[1][0] * A[2][1] - A[1][1] * A[2][0];
  const double det = A[0][0] * c00 + A[0][1] * c01 + A[0][2] * c02;
  Solve3 r;
  if (det == 0.0 || !std::isfinite(det)) return r;
  std::array<std::array<double, 3>, 3> inv{};
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (A[0][2] * A[2][1] - A[0][1] * A[2][2]) / det;
  inv[1][1] = (A[0][0] * A[2][2] - A[0][2] * A[2][0]) / det;
  inv[2][1] = (A[0][1] * A[2][0] - A[0][0] * A[2][1]) / det;
  inv[0][2] = (A[0][1] * A[1][2] - A[0][2] * A[1][1]) / det;
  inv[1][2] = (A[0][2] * A[1][0] - A[0][0] * A[1][2]) / det;
  inv[2][2] = (A[0][0] * A[1][1] - A[0][1] * A[1][0]) / det;
  auto norm1 = [](const std::array<std::array<double, 3>, 3>& M) {
    double best = 0.0;
    for (int c = 0; c < 3; ++c) best = std::max(best, std::abs(M[0][c]) + std::abs(M[1][c]) + std::abs(M[2][c]));
    return best;
  };
  const double cond = norm1(A) * norm1(inv);
  if (!(cond <= max_cond)) return r;
  for (int k = 0; k < 3; ++k) r.x[k] = inv[k][0] * b[0] + inv[k][1] * b[1] + inv[k][2] * b[2];
  r.ok = true;
  return r;
}

// Stencil directions at the two pin points: x/y at the tip, x/y at the
// orientation point. Bit set = forward stencil.
using Pattern = unsigned;

inline bool forward_for(double a) { return a >= 0.0; }

inline bool consistent(bool forward, double a) { return a == 0.0 || forward == (a > 0.0); }

}  // namespace detail

constexpr double kMaxPinningCondition = 1e12;

/// Frame velocities that make the advected half-step fields satisfy the
/// pinning equalities u1(tip) = u*, u2(tip) = v*, u1(orientation point) = u*.
/// With solve_omega false only the two tip equalities are imposed and omega
/// is zero. The upwind stencil direction depends on the unknowns, so the
/// solve searches for a direction pattern consistent with its own solution,
/// starting from the one implied by `prev`.
inline FrameVelocities solve_frame_velocities(const FieldPair& half, const PinningSpec& pin, const FrameState& prev,
                                              const NumericalParams& num, bool solve_omega = true) {
  const double dx = num.dx();
  const double dt = num.dt();
  const double inv_dx = 1.0 / dx;
  const double inv_2dx = 1.0 / (2.0 * dx);
  const auto i0 = static_cast<std::size_t>(pin.i0), j0 = static_cast<std::size_t>(pin.j0);
  const auto i1 = static_cast<std::size_t>(pin.i1()), j1 = static_cast<std::size_t>(pin.j1());
  const double x1 = pin.i_inc * dx;
  const double y1 = pin.j_inc * dx;

  auto coefficients = [&](double cx, double cy, double om) {
    return std::array<double, 4>{cx, cy, cx - om * y1, cy + om * x1};
  };
  auto pattern_of = [&](const std::array<double, 4>& a) {
    detail::Pattern p = 0;
    for (int k = 0; k < 4; ++k)
      if (detail::forward_for(a[k])) p |= 1u << k;
    return p;
  };

  struct Attempt {
    FrameVelocities v;
    bool ok = false;
    bool consistent = false;
    bool singular = false;
  };

  auto attempt = [&](detail::Pattern p) {
    Attempt at;
    const bool fx0 = p & 1u, fy0 = p & 2u, fx1 = p & 4u, fy1 = p & 8u;
    const double gx10 = upwind_dx_at(half.u1, i0, j0, fx0, inv_dx, inv_2dx);
    const double gy10 = upwind_dy_at(half.u1, i0, j0, fy0, inv_dx, inv_2dx);
    const double gx20 = upwind_dx_at(half.u2, i0, j0, fx0, inv_dx, inv_2dx);
    const double gy20 = upwind_dy_at(half.u2, i0, j0, fy0, inv_dx, inv_2dx);
    const double gx11 = upwind_dx_at(half.u1, i1, j1, fx1, inv_dx, inv_2dx);
    const double gy11 = upwind_dy_at(half.u1, i1, j1, fy1, inv_dx, inv_2dx);
    if (!std::isfinite(gx10) || !std::isfinite(gy10) || !std::isfinite(gx20) || !std::isfinite(gy20) ||
        !std::isfinite(gx11) || !std::isfinite(gy11))
      throw Error(ErrorKind::BlowUp, "non-finite gradient at a pin point");
    const double r0 = (pin.u_star - half.u1(i0, j0)) / dt;
    const double r1 = (pin.v_star - half.u2(i0, j0)) / dt;
    const double r2 = (pin.u_star - half.u1(i1, j1)) / dt;
    double cx = 0.0, cy = 0.0, om = 0.0;
    if (solve_omega) {
      // Unknown order (cx, cy, omega); advected value = half + dt*[(cx - om y) gx + (cy + om x) gy].
      const std::array<std::array<double, 3>, 3> A{{{gx10, gy10, 0.0},
                                                    {gx20, gy20, 0.0},
                                                    {gx11, gy11, -y1 * gx11 + x1 * gy11}}};
      const auto sol = detail::solve3(A, {r0, r1, r2}, kMaxPinningCondition);
      if (!sol.ok) {
        at.singular = true;
        return at;
      }
      cx = sol.x[0];
      cy = sol.x[1];
      om = sol.x[2];
    } else {
      // Embed the 2x2 tip system as a 3x3 with a decoupled unit row so the
      // same conditioning test applies.
      const std::array<std::array<double, 3>, 3> A{{{gx10, gy10, 0.0}, {gx20, gy20, 0.0}, {0.0, 0.0, 1.0}}};
      const double scale = std::max({std::abs(gx10), std::abs(gy10), std::abs(gx20), std::abs(gy20), 1.0});
      auto B = A;
      B[2][2] = scale;
      const auto sol = detail::solve3(B, {r0, r1, 0.0}, kMaxPinningCondition);
      if (!sol.ok) {
        at.singular = true;
        return at;
      }
      cx = sol.x[0];
      cy = sol.x[1];
    }
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(om))
      throw Error(ErrorKind::BlowUp, "non-finite frame velocity");
    const auto a = coefficients(cx, cy, om);
    at.consistent = detail::consistent(fx0, a[0]) && detail::consistent(fy0, a[1]);
    if (solve_omega) at.consistent = at.consistent && detail::consistent(fx1, a[2]) && detail::consistent(fy1, a[3]);
    // Predicted inhibitor value at the orientation point.
    const double gx21 = upwind_dx_at(half.u2, i1, j1, detail::forward_for(a[2]), inv_dx, inv_2dx);
    const double gy21 = upwind_dy_at(half.u2, i1, j1, detail::forward_for(a[3]), inv_dx, inv_2dx);
    const double v21 = half.u2(i1, j1) + dt * (a[2] * gx21 + a[3] * gy21);
    at.v = {cx, cy, om, v21 < pin.v_star};
    at.ok = true;
    return at;
  };

  const detail::Pattern mask = solve_omega ? 0xFu : 0x3u;
  const detail::Pattern start = pattern_of(coefficients(prev.cx, prev.cy, solve_omega ? prev.omega : 0.0)) & mask;
  const Attempt first = attempt(start);
  if (first.singular)
    throw Error(ErrorKind::SingularPinning, "pinning system is singular or ill-conditioned (tip lost?)");
  if (first.consistent) return first.v;

  // Search the remaining direction patterns, nearest to the starting one first.
  std::optional<Attempt> best;
  int best_distance = 99;
  for (detail::Pattern p = 0; p <= mask; ++p) {
    if ((p & ~mask) != 0 || p == start) continue;
    const Attempt at = attempt(p);
    if (!at.ok || !at.consistent) continue;
    const int d = std::popcount(p ^ start);
    if (d < best_distance) {
      best = at;
      best_distance = d;
    }
  }
  if (best) return best->v;

  // No self-consistent pattern: fall back to a short fixed-point iteration.
  Attempt cur = first;
  for (int it = 0; it < 8; ++it) {
    const auto p = pattern_of(coefficients(cur.v.cx, cur.v.cy, cur.v.omega)) & mask;
    const Attempt next = attempt(p);
    if (!next.ok) break;
    cur = next;
    if (cur.consistent) break;
  }
  return cur.v;
}

/// Applies the von Neumann stability limits: translation saturates at the
/// limit, rotation is reset to zero once it exceeds its limit.
inline FrameVelocities clamp_frame(FrameVelocities v, const NumericalParams& num) {
  const double c_lim = num.c_limit();
  v.cx = std::clamp(v.cx, -c_lim, c_lim);
  v.cy = std::clamp(v.cy, -c_lim, c_lim);
  if (std::abs(v.omega) > num.omega_limit()) v.omega = 0.0;
  return v;
}

// ---------------------------------------------------------------------------
// Advection substep

namespace detail {

// Interior advection update over [lo, hi) of one row with fixed stencil
// directions. Must match one_sided() term for term.
template <bool FX, bool FY>
inline void advect_run(const double* __restrict h1, const double* __restrict h2, double* __restrict o1,
                       double* __restrict o2, std::ptrdiff_t lo, std::ptrdiff_t hi, std::ptrdiff_t stride,
                       double ax, const double* __restrict ay, double dt, double inv_2dx) {
  constexpr std::ptrdiff_t s = FX ? 1 : -1;
  const std::ptrdiff_t t = FY ? stride : -stride;
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    double gx1, gx2, gy1, gy2;
    if constexpr (FX) {
      gx1 = (-3.0 * h1[i] + 4.0 * h1[i + s] - h1[i + 2 * s]) * inv_2dx;
      gx2 = (-3.0 * h2[i] + 4.0 * h2[i + s] - h2[i + 2 * s]) * inv_2dx;
    } else {
      gx1 = (3.0 * h1[i] - 4.0 * h1[i + s] + h1[i + 2 * s]) * inv_2dx;
      gx2 = (3.0 * h2[i] - 4.0 * h2[i + s] + h2[i + 2 * s]) * inv_2dx;
    }
    if constexpr (FY) {
      gy1 = (-3.0 * h1[i] + 4.0 * h1[i + t] - h1[i + 2 * t]) * inv_2dx;
      gy2 = (-3.0 * h2[i] + 4.0 * h2[i + t] - h2[i + 2 * t]) * inv_2dx;
    } else {
      gy1 = (3.0 * h1[i] - 4.0 * h1[i + t] + h1[i + 2 * t]) * inv_2dx;
      gy2 = (3.0 * h2[i] - 4.0 * h2[i + t] + h2[i + 2 * t]) * inv_2dx;
    }
    o1[i] = h1[i] + dt * (ax * gx1 + ay[i] * gy1);
    o2[i] = h2[i] + dt * (ax * gx2 + ay[i] * gy2);
  }
}

}  // namespace detail

/// out = half + dt * [(cx - omega*y) d/dx + (cy + omega*x) d/dy] half, with
/// upwind gradients. x and y are measured from the pin point. Returns false
/// on non-finite output.
inline bool advect_into(const FieldPair& half, FieldPair& out, double cx, double cy, double omega,
                        const NumericalParams& num, const PinningSpec& pin) {
  const std::size_t n = half.n();
  if (out.n() != n) out = FieldPair(n);
  const double dx = num.dx();
  const double dt = num.dt();
  const double inv_dx = 1.0 / dx;
  const double inv_2dx = 1.0 / (2.0 * dx);
  const auto ni = static_cast<std::ptrdiff_t>(n);
  bool finite = true;

  std::vector<double> ay(n);
  std::vector<char> fy(n);
  for (std::ptrdiff_t i = 0; i < ni; ++i) {
    ay[i] = cy + omega * coord(i, pin.i0, dx);
    fy[i] = ay[i] >= 0.0;
  }

  auto edge_point = [&](std::size_t i, std::size_t j, double ax) {
    const bool fx = ax >= 0.0;
    const double gx1 = upwind_dx_at(half.u1, i, j, fx, inv_dx, inv_2dx);
    const double gx2 = upwind_dx_at(half.u2, i, j, fx, inv_dx, inv_2dx);
    const double gy1 = upwind_dy_at(half.u1, i, j, fy[i], inv_dx, inv_2dx);
    const double gy2 = upwind_dy_at(half.u2, i, j, fy[i], inv_dx, inv_2dx);
    out.u1(i, j) = half.u1(i, j) + dt * (ax * gx1 + ay[i] * gy1);
    out.u2(i, j) = half.u2(i, j) + dt * (ax * gx2 + ay[i] * gy2);
  };

  for (std::ptrdiff_t j = 0; j < ni; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double ax = cx - omega * coord(j, pin.j0, dx);
    const bool fx = ax >= 0.0;
    if (j < 2 || j > ni - 3) {
      for (std::size_t i = 0; i < n; ++i) edge_point(i, uj, ax);
    } else {
      for (std::size_t i = 0; i < 2; ++i) edge_point(i, uj, ax);
      const double* h1 = half.u1.row(uj);
      const double* h2 = half.u2.row(uj);
      double* o1 = out.u1.row(uj);
      double* o2 = out.u2.row(uj);
      std::ptrdiff_t lo = 2;
      while (lo < ni - 2) {
        std::ptrdiff_t hi = lo + 1;
        while (hi < ni - 2 && fy[hi] == fy[lo]) ++hi;
        if (fx && fy[lo]) detail::advect_run<true, true>(h1, h2, o1, o2, lo, hi, ni, ax, ay.data(), dt, inv_2dx);
        else if (fx) detail::advect_run<true, false>(h1, h2, o1, o2, lo, hi, ni, ax, ay.data(), dt, inv_2dx);
        else if (fy[lo]) detail::advect_run<false, true>(h1, h2, o1, o2, lo, hi, ni, ax, ay.data(), dt, inv_2dx);
        else detail::advect_run<false, false>(h1, h2, o1, o2, lo, hi, ni, ax, ay.data(), dt, inv_2dx);
        lo = hi;
      }
      for (std::size_t i = n - 2; i < n; ++i) edge_point(i, uj, ax);
    }
    finite = finite && all_finite(out.u1.row(uj), n) && all_finite(out.u2.row(uj), n);
  }
  return finite;
}

inline FieldPair advection_substep(const FieldPair& half, double cx, double cy, double omega,
                                   const NumericalParams& num, const PinningSpec& pin) {
  FieldPair out(half.n());
  if (!advect_into(half, out, cx, cy, omega, num, pin))
    throw Error(ErrorKind::BlowUp, "non-finite value after advection substep");
  return out;
}

// ---------------------------------------------------------------------------
// Full step

/// Advances one timestep in place and appends (t, cx, cy, omega) to `record`
/// when given.
inline void step(SimState& s, QuotientSeries* record = nullptr) {
  const NumericalParams& num = s.numerics;
  FieldPair& half = s.scratch;
  if (!rd_into(s.fields, half, s.params, num, s.reaction_enabled))
    throw Error(ErrorKind::BlowUp, "non-finite value after reaction-diffusion substep at step " +
                                       std::to_string(s.step_index));

  FrameVelocities v;
  if (s.advection_engaged) {
    const PinningSpec& pin = s.pin;
    const auto i1 = static_cast<std::size_t>(pin.i1()), j1 = static_cast<std::size_t>(pin.j1());
    const double before = s.fields.u1(i1, j1) - pin.u_star;
    v = clamp_frame(solve_frame_velocities(half, pin, s.frame, num, s.frame.omega_active), num);
    if (!advect_into(half, s.fields, v.cx, v.cy, v.omega, num, pin))
      throw Error(ErrorKind::BlowUp, "non-finite value after advection substep at step " +
                                         std::to_string(s.step_index));
    if (!s.frame.omega_active) {
      const double after = s.fields.u1(i1, j1) - pin.u_star;
      const bool crossed = after == 0.0 || (before < 0.0) != (after < 0.0);
      if (crossed && s.fields.u2(i1, j1) < pin.v_star) s.frame.omega_active = true;
    }
  } else {
    std::swap(s.fields, half);
  }

  const double dt = num.dt();
  s.frame.cx = v.cx;
  s.frame.cy = v.cy;
  s.frame.omega = v.omega;
  s.frame.theta += dt * v.omega;
  const double c = std::cos(s.frame.theta), sn = std::sin(s.frame.theta);
  s.frame.RX += dt * (c * v.cx - sn * v.cy);
  s.frame.RY += dt * (sn * v.cx + c * v.cy);
  ++s.step_index;
  if (record) {
    record->dt = dt;
    record->push(s.time(), v.cx, v.cy, v.omega);
  }
}

// ---------------------------------------------------------------------------
// Initial conditions and frame engagement

/// Cross-field initial condition: an excited half-plane y < 0 against a
/// recovery gradient in x. The broken front curls into a spiral.
inline FieldPair init_spiral(const ModelParams& p, const NumericalParams& num) {
  const RestState rest = rest_state(p);
  const std::size_t n = num.points();
  const auto origin = static_cast<std::ptrdiff_t>(num.N() / 2);
  FieldPair f(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = coord(static_cast<std::ptrdiff_t>(j), origin, num.dx());
    for (std::size_t i = 0; i < n; ++i) {
      f.u1(i, j) = y < 0.0 ? 2.0 : rest.u;
      f.u2(i, j) = rest.v + static_cast<double>(i) / static_cast<double>(n - 1);
    }
  }
  return f;
}

/// Intersection of the u1 = u_star and u2 = v_star isolines in grid
/// coordinates (fractional indices).
struct TipLocation {
  double fi = 0.0;
  double fj = 0.0;
};

/// All isoline intersections, located by bilinear interpolation within each
/// grid cell.
inline std::vector<TipLocation> find_tips(const FieldPair& f, double u_star, double v_star) {
  std::vector<TipLocation> tips;
  const std::size_t n = f.n();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double a00 = f.u1(i, j) - u_star, a10 = f.u1(i + 1, j) - u_star;
      const double a01 = f.u1(i, j + 1) - u_star, a11 = f.u1(i + 1, j + 1) - u_star;
      const double b00 = f.u2(i, j) - v_star, b10 = f.u2(i + 1, j) - v_star;
      const double b01 = f.u2(i, j + 1) - v_star, b11 = f.u2(i + 1, j + 1) - v_star;
      auto straddles = [](double p, double q, double r, double s) {
        const double lo = std::min({p, q, r, s}), hi = std::max({p, q, r, s});
        return lo <= 0.0 && hi >= 0.0 && hi > lo;
      };
      if (!straddles(a00, a10, a01, a11) || !straddles(b00, b10, b01, b11)) continue;
      // Bilinear forms g(s,t) = g00 + (g10-g00) s + (g01-g00) t + (g11-g10-g01+g00) s t.
      const double A1 = a10 - a00, A2 = a01 - a00, A3 = a11 - a10 - a01 + a00;
      const double B1 = b10 - b00, B2 = b01 - b00, B3 = b11 - b10 - b01 + b00;
      for (const auto& seed : {std::pair{0.5, 0.5}, std::pair{0.1, 0.1}, std::pair{0.9, 0.1},
                               std::pair{0.1, 0.9}, std::pair{0.9, 0.9}}) {
        double s = seed.first, t = seed.second;
        bool converged = false;
        for (int it = 0; it < 30; ++it) {
          const double ga = a00 + A1 * s + A2 * t + A3 * s * t;
          const double gb = b00 + B1 * s + B2 * t + B3 * s * t;
          const double ja_s = A1 + A3 * t, ja_t = A2 + A3 * s;
          const double jb_s = B1 + B3 * t, jb_t = B2 + B3 * s;
          const double det = ja_s * jb_t - ja_t * jb_s;
          if (det == 0.0 || !std::isfinite(det)) break;
          const double ds = (ga * jb_t - gb * ja_t) / det;
          const double dtt = (ja_s * gb - jb_s * ga) / det;
          s -= ds;
          t -= dtt;
          if (std::abs(ds) < 1e-13 && std::abs(dtt) < 1e-13) {
            converged = true;
            break;
          }
        }
        constexpr double slack = 1e-9;
        if (converged && s >= -slack && s <= 1.0 + slack && t >= -slack && t <= 1.0 + slack) {
          tips.push_back({static_cast<double>(i) + std::clamp(s, 0.0, 1.0),
                          static_cast<double>(j) + std::clamp(t, 0.0, 1.0)});
          break;
        }
      }
    }
  }
  return tips;
}

/// The tip nearest to the pin point, if any.
inline std::optional<TipLocation> nearest_tip(const FieldPair& f, const PinningSpec& pin) {
  const auto tips = find_tips(f, pin.u_star, pin.v_star);
  std::optional<TipLocation> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& t : tips) {
    const double d = std::hypot(t.fi - pin.i0, t.fj - pin.j0);
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  return best;
}

/// Integer translation of both fields: out(i, j) = in(i + di, j + dj), with
/// edge values replicated where the source falls outside the grid.
inline FieldPair shift_fields(const FieldPair& in, std::ptrdiff_t di, std::ptrdiff_t dj) {
  const auto n = static_cast<std::ptrdiff_t>(in.n());
  FieldPair out(in.n());
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j + dj, 0, n - 1));
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + di, 0, n - 1));
      out.u1(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = in.u1(si, sj);
      out.u2(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = in.u2(si, sj);
    }
  }
  return out;
}

/// Switches on the comoving frame: moves the tip onto the pin point by an
/// integer grid translation and starts solving for the frame velocities.
/// Omega stays at zero until the orientation condition is first met.
inline SimState engage_frame(SimState s) {
  if (s.advection_engaged) return s;
  const auto tip = nearest_tip(s.fields, s.pin);
  if (!tip) throw Error(ErrorKind::NoTip, "no isoline intersection in the current fields");
  const auto di = static_cast<std::ptrdiff_t>(std::lround(tip->fi)) - s.pin.i0;
  const auto dj = static_cast<std::ptrdiff_t>(std::lround(tip->fj)) - s.pin.j0;
  s.fields = shift_fields(s.fields, di, dj);
  const double dx = s.numerics.dx();
  const double c = std::cos(s.frame.theta), sn = std::sin(s.frame.theta);
  s.frame.RX += c * (di * dx) - sn * (dj * dx);
  s.frame.RY += sn * (di * dx) + c * (dj * dx);
  s.frame.cx = s.frame.cy = s.frame.omega = 0.0;
  s.frame.omega_active = false;
  s.advection_engaged = true;
  return s;
}

/// Largest pointwise deviation from the homogeneous rest state.
inline double distance_from_rest(const FieldPair& f, const ModelParams& p) {
  const RestState rest = rest_state(p);
  double d = 0.0;
  for (double v : f.u1.values()) d = std::max(d, std::abs(v - rest.u));
  for (double v : f.u2.values()) d = std::max(d, std::abs(v - rest.v));
  return d;
}

}  // namespace meander
