#pragma once

#include <cmath>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "meander/error.hpp"

namespace meander {

/// Box size, resolution and timestep. dx and dt are always derived from
/// (L, N, ts); there is no way to set them independently.
class NumericalParams {
 public:
  NumericalParams() : NumericalParams(30.0, 150, 0.1) {}

  double L() const { return L_; }
  int N() const { return N_; }
  double ts() const { return ts_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }
  /// Points per axis.
  std::size_t points() const { return static_cast<std::size_t>(N_) + 1; }

  /// Stability limit for |cx|, |cy|.
  double c_limit() const { return dx_ * dx_ / (2.0 * dt_); }
  /// Stability limit for |omega|.
  double omega_limit() const { return 1.0 / (N_ * dt_); }

  friend NumericalParams make_numerics(double L, int N, double ts);

  friend bool operator==(const NumericalParams&, const NumericalParams&) = default;

 private:
  NumericalParams(double L, int N, double ts)
      : L_(L), N_(N), ts_(ts), dx_(L / N), dt_(ts * (L / N) * (L / N) / 4.0) {}

  double L_;
  int N_;
  double ts_;
  double dx_;
  double dt_;
};

inline NumericalParams make_numerics(double L, int N, double ts) {
  if (!(L > 0.0) || !std::isfinite(L)) throw Error(ErrorKind::InvalidNumerics, "box length L must be positive");
  if (N < 8) throw Error(ErrorKind::InvalidNumerics, "need at least 8 intervals per axis, got " + std::to_string(N));
  if (!(ts > 0.0) || !std::isfinite(ts)) throw Error(ErrorKind::InvalidNumerics, "ts must be positive");
  return NumericalParams(L, N, ts);
}

/// Square (n x n) array of grid values. Element (i, j) is x-index i, y-index j;
/// storage is row-major in j.
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : n_(n), data_(n * n, value) {}

  std::size_t n() const { return n_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * n_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * n_ + i]; }

  double* row(std::size_t j) { return data_.data() + j * n_; }
  const double* row(std::size_t j) const { return data_.data() + j * n_; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct FieldPair {
  Field u1;
  Field u2;

  FieldPair() = default;
  explicit FieldPair(std::size_t n) : u1(n), u2(n) {}

  std::size_t n() const { return u1.n(); }
  bool all_finite() const { return u1.all_finite() && u2.all_finite(); }
  friend bool operator==(const FieldPair&, const FieldPair&) = default;
};

/// True when every value in [first, first + count) is finite. Tests the
/// exponent bits directly so the loop vectorises.
inline bool all_finite(const double* first, std::size_t count) {
  constexpr std::uint64_t exp_mask = 0x7FF0000000000000ULL;
  std::uint64_t bad = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(first[i]);
    bad |= static_cast<std::uint64_t>((bits & exp_mask) == exp_mask);
  }
  return bad == 0;
}

/// Physical coordinate of grid index k relative to the origin index.
inline double coord(std::ptrdiff_t k, std::ptrdiff_t origin, double dx) {
  return static_cast<double>(k - origin) * dx;
}

/// Five-point Laplacian at (i, j), reflecting ghost points across the edges
/// (zero normal derivative).
inline double laplacian_at(const Field& f, std::size_t i, std::size_t j, double inv_dx2) {
  const std::size_t last = f.n() - 1;
  const std::size_t im = i == 0 ? 1 : i - 1;
  const std::size_t ip = i == last ? last - 1 : i + 1;
  const std::size_t jm = j == 0 ? 1 : j - 1;
  const std::size_t jp = j == last ? last - 1 : j + 1;
  // Pairing the opposite neighbours keeps the sum invariant under 90 degree
  // rotations of the grid, bit for bit.
  return ((f(ip, j) + f(im, j)) + (f(i, jp) + f(i, jm)) - 4.0 * f(i, j)) * inv_dx2;
}

inline Field laplacian5(const Field& f, double dx) {
  const double inv_dx2 = 1.0 / (dx * dx);
  Field out(f.n());
  for (std::size_t j = 0; j < f.n(); ++j)
    for (std::size_t i = 0; i < f.n(); ++i) out(i, j) = laplacian_at(f, i, j, inv_dx2);
  return out;
}

/// Discrete integral weights for the reflecting-ghost Laplacian: 1 inside,
/// 1/2 on edges, 1/4 on corners. The weighted sum is exactly what pure
/// Neumann diffusion conserves.
inline double neumann_weighted_sum(const Field& f) {
  const std::size_t last = f.n() - 1;
  double total = 0.0;
  for (std::size_t j = 0; j < f.n(); ++j) {
    const double wj = (j == 0 || j == last) ? 0.5 : 1.0;
    for (std::size_t i = 0; i < f.n(); ++i) {
      const double wi = (i == 0 || i == last) ? 0.5 : 1.0;
      total += wi * wj * f(i, j);
    }
  }
  return total;
}

// One-sided derivative along a single axis. `at(k)` reads the value k steps
// away from the evaluation point along that axis; `room` is how many points
// exist beyond it in the chosen direction. Forward (toward +axis) is the
// upwind side when the coefficient in  dv/dt = a dv/dx  is positive.
namespace detail {

template <class At>
inline double one_sided(At at, std::size_t room, bool forward, double inv_dx, double inv_2dx) {
  if (forward) {
    if (room >= 2) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv_2dx;
    if (room == 1) return (at(1) - at(0)) * inv_dx;
    return 0.0;
  }
  if (room >= 2) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) * inv_2dx;
  if (room == 1) return (at(0) - at(-1)) * inv_dx;
  return 0.0;
}

}  // namespace detail

/// Upwind x-derivative at (i, j) for a transport term  +a * df/dx.
inline double upwind_dx_at(const Field& f, std::size_t i, std::size_t j, bool forward, double inv_dx,
                           double inv_2dx) {
  const std::size_t last = f.n() - 1;
  const std::size_t room = forward ? last - i : i;
  const double* r = f.row(j) + i;
  return detail::one_sided([r](std::ptrdiff_t k) { return r[k]; }, room, forward, inv_dx, inv_2dx);
}

inline double upwind_dy_at(const Field& f, std::size_t i, std::size_t j, bool forward, double inv_dx,
                           double inv_2dx) {
  const std::size_t last = f.n() - 1;
  const std::size_t room = forward ? last - j : j;
  const std::ptrdiff_t stride = static_cast<std::ptrdiff_t>(f.n());
  const double* c = f.row(j) + i;
  return detail::one_sided([c, stride](std::ptrdiff_t k) { return c[k * stride]; }, room, forward, inv_dx,
                           inv_2dx);
}

struct Gradient {
  Field gx;
  Field gy;
};

/// Second-order upwind gradient for the advection term
/// ax * df/dx + ay * df/dy. A non-negative coefficient takes the forward
/// stencil; within two points of the edge the stencil drops to first order,
/// and on the edge itself the normal derivative is zero.
inline Gradient upwind_grad(const Field& f, double dx, const Field& ax, const Field& ay) {
  const double inv_dx = 1.0 / dx;
  const double inv_2dx = 1.0 / (2.0 * dx);
  Gradient g{Field(f.n()), Field(f.n())};
  for (std::size_t j = 0; j < f.n(); ++j)
    for (std::size_t i = 0; i < f.n(); ++i) {
      g.gx(i, j) = upwind_dx_at(f, i, j, ax(i, j) >= 0.0, inv_dx, inv_2dx);
      g.gy(i, j) = upwind_dy_at(f, i, j, ay(i, j) >= 0.0, inv_dx, inv_2dx);
    }
  return g;
}

}  // namespace meander
