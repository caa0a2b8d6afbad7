#include <gtest/gtest.h>

#include <random>

#include "meander/shock.hpp"

using namespace meander;

TEST(Shock, AddsToExcitationOnly) {
  const auto num = make_numerics(6.0, 30, 0.1);
  FieldPair f(num.points());
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-2, 2);
  for (double& x : f.u1.values()) x = d(rng);
  for (double& x : f.u2.values()) x = d(rng);
  SimState s = make_state(ModelParams{}, num, f);
  apply_shock(s, ShockSpec{0.75, 1});
  for (std::size_t j = 0; j < f.n(); ++j)
    for (std::size_t i = 0; i < f.n(); ++i) {
      EXPECT_EQ(s.fields.u1(i, j), f.u1(i, j) + 0.75);
      EXPECT_EQ(s.fields.u2(i, j), f.u2(i, j));
    }
}

TEST(Shock, SpecValidation) {
  EXPECT_THROW((ShockSpec{0.1, 0}.validate()), Error);
  EXPECT_THROW((ShockSpec{std::nan(""), 10}.validate()), Error);
  EXPECT_NO_THROW((ShockSpec{-1.0, 10}.validate()));
}

TEST(Shock, Judge) {
  using C = Classification;
  EXPECT_EQ(judge(C::RW, C::MRW), Verdict::Converted);
  EXPECT_EQ(judge(C::MRW, C::RW), Verdict::Converted);
  EXPECT_EQ(judge(C::MRW, C::MRW), Verdict::Unchanged);
  EXPECT_EQ(judge(C::RW, C::RW), Verdict::Unchanged);
  EXPECT_EQ(judge(C::UNRESOLVED, C::MRW), Verdict::Unresolved);
  EXPECT_EQ(judge(C::RW, C::FAILED), Verdict::Unresolved);
}

TEST(Shock, BranchNames) {
  EXPECT_EQ(branch_from_string("forward"), Branch::Forward);
  EXPECT_EQ(branch_from_string(to_string(Branch::Reverse)), Branch::Reverse);
  EXPECT_THROW(branch_from_string("up"), Error);
}

TEST(Shock, HomogeneousMediumHasNoSpiralToKeep) {
  // Without a tip the post-shock run ends at the first check.
  const auto num = make_numerics(10.0, 50, 0.1);
  ModelParams p;
  p.beta = 0.6;
  const auto r = rest_state(p);
  FieldPair f(num.points());
  for (double& x : f.u1.values()) x = r.u;
  for (double& x : f.u2.values()) x = r.v;
  const SimState s = make_state(p, num, std::move(f));
  RunBudget b;
  const auto out = run_conversion(s, 0.6, ShockSpec{1.0, 2500}, b);
  EXPECT_EQ(out.pre_class, Classification::RW);
  EXPECT_EQ(out.verdict, Verdict::Eliminated);
  EXPECT_EQ(out.pre_series.size(), 2500u);
  EXPECT_EQ(out.post_series.size(), static_cast<std::size_t>(b.check_every));
}

TEST(Shock, ZeroAmplitudeLeavesTrajectoryUntouched) {
  // A zero shock must not perturb the continuation: the post-shock series
  // equals the tail of an unshocked run.
  const auto num = make_numerics(30.0, 150, 0.1);
  ModelParams p;
  p.beta = 0.6;
  SimState seed = fresh_seed(p, num, std::nullopt, 500);
  RunBudget b;
  b.max_steps = 1000;
  const auto out = run_conversion(seed, 0.6, ShockSpec{0.0, 200}, b);
  SimState ref = seed;
  QuotientSeries qs;
  qs.dt = num.dt();
  for (int k = 0; k < 1200; ++k) step(ref, &qs);
  ASSERT_EQ(out.post_series.size(), 1000u);
  for (std::size_t k = 0; k < 1000; ++k) EXPECT_EQ(out.post_series.samples[k], qs.samples[200 + k]);
}
