#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "meander/grid.hpp"

using namespace meander;

namespace {

constexpr double kPi = std::numbers::pi;

// Fills f(i, j) = fn(x, y) with coordinates measured from the box centre.
template <class Fn>
Field sample(const NumericalParams& num, Fn fn) {
  Field f(num.points());
  const auto origin = static_cast<std::ptrdiff_t>(num.N() / 2);
  for (std::size_t j = 0; j < f.n(); ++j)
    for (std::size_t i = 0; i < f.n(); ++i)
      f(i, j) = fn(coord(static_cast<std::ptrdiff_t>(i), origin, num.dx()),
                   coord(static_cast<std::ptrdiff_t>(j), origin, num.dx()));
  return f;
}

Field rotate90(const Field& f) {
  // (i, j) -> (n-1-j, i)
  Field out(f.n());
  const std::size_t last = f.n() - 1;
  for (std::size_t j = 0; j < f.n(); ++j)
    for (std::size_t i = 0; i < f.n(); ++i) out(last - j, i) = f(i, j);
  return out;
}

double max_interior_laplacian_error(int N) {
  const auto num = make_numerics(30.0, N, 0.1);
  const double k = 2.0 * kPi / 30.0;
  const Field f = sample(num, [k](double x, double y) { return std::sin(k * x) * std::sin(k * y); });
  const Field lap = laplacian5(f, num.dx());
  const auto origin = static_cast<std::ptrdiff_t>(N / 2);
  double err = 0.0;
  for (std::size_t j = 1; j + 1 < f.n(); ++j)
    for (std::size_t i = 1; i + 1 < f.n(); ++i) {
      const double x = coord(static_cast<std::ptrdiff_t>(i), origin, num.dx());
      const double y = coord(static_cast<std::ptrdiff_t>(j), origin, num.dx());
      err = std::max(err, std::abs(lap(i, j) + 2.0 * k * k * std::sin(k * x) * std::sin(k * y)));
    }
  return err;
}

}  // namespace

TEST(Numerics, DefaultGrid) {
  const auto n = make_numerics(30.0, 150, 0.1);
  EXPECT_NEAR(n.dx(), 0.2, 1e-15);
  EXPECT_NEAR(n.dt(), 0.001, 1e-15);
  EXPECT_EQ(n.points(), 151u);
  EXPECT_EQ(n.dt(), n.ts() * n.dx() * n.dx() / 4.0);
}

TEST(Numerics, FinerGrid) {
  const auto n = make_numerics(30.0, 300, 0.1);
  EXPECT_NEAR(n.dx(), 0.1, 1e-15);
  EXPECT_NEAR(n.dt(), 0.00025, 1e-16);
}

TEST(Numerics, RejectsDegenerateGrids) {
  for (int N : {0, -3, 7}) {
    try {
      make_numerics(30.0, N, 0.1);
      FAIL() << "N=" << N;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidNumerics);
    }
  }
  EXPECT_THROW(make_numerics(0.0, 150, 0.1), Error);
  EXPECT_THROW(make_numerics(30.0, 150, 0.0), Error);
}

TEST(Numerics, StabilityLimits) {
  const auto n = make_numerics(30.0, 150, 0.1);
  EXPECT_NEAR(n.c_limit(), 20.0, 1e-12);
  EXPECT_NEAR(n.omega_limit(), 1.0 / 0.15, 1e-12);
}

TEST(Laplacian, ConstantGivesZero) {
  const auto num = make_numerics(30.0, 40, 0.1);
  const Field lap = laplacian5(Field(num.points(), 1.7), num.dx());
  for (double v : lap.values()) EXPECT_EQ(v, 0.0);
}

TEST(Laplacian, ExactOnQuadratic) {
  const auto num = make_numerics(30.0, 60, 0.1);
  const Field f = sample(num, [](double x, double y) { return x * x + y * y; });
  const Field lap = laplacian5(f, num.dx());
  for (std::size_t j = 1; j + 1 < f.n(); ++j)
    for (std::size_t i = 1; i + 1 < f.n(); ++i) EXPECT_NEAR(lap(i, j), 4.0, 1e-9);
}

TEST(Laplacian, SecondOrderOnSinusoid) {
  const double e1 = max_interior_laplacian_error(60);
  const double e2 = max_interior_laplacian_error(120);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
}

TEST(Laplacian, CommutesWithQuarterTurn) {
  const auto num = make_numerics(30.0, 32, 0.1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  Field f(num.points());
  for (double& v : f.values()) v = d(rng);
  EXPECT_EQ(laplacian5(rotate90(f), num.dx()), rotate90(laplacian5(f, num.dx())));
}

TEST(Laplacian, NeumannDiffusionConservesWeightedSum) {
  // With reflecting ghosts the conserved discrete integral is the trapezoid
  // sum (edges 1/2, corners 1/4).
  const auto num = make_numerics(30.0, 50, 0.1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Field f(num.points());
  for (double& v : f.values()) v = d(rng);
  const double before = neumann_weighted_sum(f);
  for (int step = 0; step < 1000; ++step) {
    const Field lap = laplacian5(f, num.dx());
    for (std::size_t k = 0; k < f.size(); ++k) f.values()[k] += num.dt() * lap.values()[k];
  }
  EXPECT_LE(std::abs(neumann_weighted_sum(f) - before) / std::abs(before), 1e-10);
}

TEST(Upwind, ConstantGivesZero) {
  const auto num = make_numerics(30.0, 20, 0.1);
  const Field f(num.points(), -0.4);
  const Field ax(num.points(), 1.0), ay(num.points(), -1.0);
  const Gradient g = upwind_grad(f, num.dx(), ax, ay);
  for (double v : g.gx.values()) EXPECT_NEAR(v, 0.0, 1e-14);
  for (double v : g.gy.values()) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(Upwind, ExactOnLinearsForAnySigns) {
  const auto num = make_numerics(30.0, 40, 0.1);
  const Field f = sample(num, [](double x, double y) { return 3.0 * x + 5.0 * y; });
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field ax(num.points()), ay(num.points());
  for (double& v : ax.values()) v = d(rng);
  for (double& v : ay.values()) v = d(rng);
  const Gradient g = upwind_grad(f, num.dx(), ax, ay);
  for (std::size_t j = 2; j + 2 < f.n(); ++j)
    for (std::size_t i = 2; i + 2 < f.n(); ++i) {
      EXPECT_NEAR(g.gx(i, j), 3.0, 1e-11);
      EXPECT_NEAR(g.gy(i, j), 5.0, 1e-11);
    }
}

TEST(Upwind, SecondOrderOnSinusoid) {
  auto err = [](int N) {
    const auto num = make_numerics(30.0, N, 0.1);
    const double k = 2.0 * kPi / 30.0;
    const Field f = sample(num, [k](double x, double) { return std::sin(k * x); });
    const Field ax(num.points(), 1.0), ay(num.points(), 1.0);
    const Gradient g = upwind_grad(f, num.dx(), ax, ay);
    const auto origin = static_cast<std::ptrdiff_t>(N / 2);
    double e = 0.0;
    for (std::size_t j = 0; j < f.n(); ++j)
      for (std::size_t i = 0; i + 2 < f.n(); ++i) {
        const double x = coord(static_cast<std::ptrdiff_t>(i), origin, num.dx());
        e = std::max(e, std::abs(g.gx(i, j) - k * std::cos(k * x)));
      }
    return e;
  };
  EXPECT_GE(std::log2(err(60) / err(120)), 1.9);
}

TEST(Upwind, ReducesToOneDimensionalStencil) {
  const auto num = make_numerics(30.0, 24, 0.1);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> row(num.points());
  for (double& v : row) v = d(rng);
  Field f(num.points());
  for (std::size_t j = 0; j < f.n(); ++j)
    for (std::size_t i = 0; i < f.n(); ++i) f(i, j) = row[i];
  const Field pos(num.points(), 1.0), neg(num.points(), -1.0);
  const double h = num.dx();
  const std::size_t last = f.n() - 1;
  for (const Field* a : {&pos, &neg}) {
    const Gradient g = upwind_grad(f, h, *a, pos);
    const bool fwd = (*a)(0, 0) > 0.0;
    for (std::size_t i = 0; i < f.n(); ++i) {
      double expect;
      if (fwd) {
        if (last - i >= 2) expect = (-3.0 * row[i] + 4.0 * row[i + 1] - row[i + 2]) / (2.0 * h);
        else if (last - i == 1) expect = (row[i + 1] - row[i]) / h;
        else expect = 0.0;
      } else {
        if (i >= 2) expect = (3.0 * row[i] - 4.0 * row[i - 1] + row[i - 2]) / (2.0 * h);
        else if (i == 1) expect = (row[i] - row[i - 1]) / h;
        else expect = 0.0;
      }
      for (std::size_t j = 0; j < f.n(); ++j) {
        EXPECT_NEAR(g.gx(i, j), expect, 1e-12);
        EXPECT_NEAR(g.gy(i, j), 0.0, 1e-13);
      }
    }
  }
}

TEST(Field, FiniteCheck) {
  Field f(10, 1.0);
  EXPECT_TRUE(f.all_finite());
  EXPECT_TRUE(all_finite(f.values().data(), f.size()));
  f(3, 4) = std::nan("");
  EXPECT_FALSE(f.all_finite());
  EXPECT_FALSE(all_finite(f.values().data(), f.size()));
  f(3, 4) = INFINITY;
  EXPECT_FALSE(all_finite(f.values().data(), f.size()));
}
