#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "meander/io.hpp"
#include "meander/output.hpp"

using namespace meander;

namespace {

SimState random_state(std::uint64_t seed) {
  const auto num = make_numerics(6.0, 30, 0.1);
  ModelParams p;
  p.beta = 0.6017;
  FieldPair f(num.points());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  for (double& x : f.u1.values()) x = d(rng);
  for (double& x : f.u2.values()) x = d(rng) * 1e-7;
  SimState s = make_state(p, num, std::move(f));
  s.frame = FrameState{0.123456789, -1.0 / 3.0, -0.6, 17.25, 1e-300, -4.5, true};
  s.step_index = 123456;
  s.advection_engaged = true;
  s.pin.u_star = 0.1;
  s.pin.v_star = -0.05;
  return s;
}

}  // namespace

TEST(Numbers, ShortestRoundTrip) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = d(rng);
    EXPECT_EQ(parse_double(format_double(x), "x"), x);
  }
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min()), "x"),
            std::numeric_limits<double>::denorm_min());
}

TEST(Numbers, Errors) {
  EXPECT_THROW(parse_double("0.5x", "x"), Error);
  EXPECT_THROW(parse_double("", "x"), Error);
  EXPECT_EQ(parse_double("  2.5 ", "x"), 2.5);
  EXPECT_THROW(parse_integer("3.0", "n"), Error);
  EXPECT_TRUE(parse_bool("true", "b"));
  EXPECT_FALSE(parse_bool("0", "b"));
  EXPECT_THROW(parse_bool("maybe", "b"), Error);
}

TEST(Snapshot, RoundTripIsBitwise) {
  const SimState s = random_state(1);
  std::stringstream ss;
  write_snapshot(ss, s);
  const SimState back = read_snapshot(ss);
  EXPECT_TRUE(back == s);
  EXPECT_EQ(state_hash(back), state_hash(s));
}

TEST(Snapshot, HeaderStartsWithCoreKeysInOrder) {
  std::stringstream ss;
  write_snapshot(ss, random_state(2));
  const char* keys[] = {"format_version", "L", "N", "ts", "dt", "beta", "gamma", "epsilon", "u_star", "v_star",
                        "theta", "RX", "RY", "cx", "cy", "omega", "step_index", "advection_engaged"};
  std::string line;
  for (const char* k : keys) {
    ASSERT_TRUE(std::getline(ss, line));
    EXPECT_EQ(line.substr(0, line.find('=')), k);
  }
}

TEST(Snapshot, RejectsInconsistentDt) {
  std::stringstream ss;
  write_snapshot(ss, random_state(3));
  std::string text = ss.str();
  const auto pos = text.find("\ndt=");
  text.replace(pos, text.find('\n', pos + 1) - pos, "\ndt=0.5");
  std::stringstream bad(text);
  EXPECT_THROW(read_snapshot(bad), Error);
}

TEST(Snapshot, RejectsTruncatedData) {
  std::stringstream ss;
  write_snapshot(ss, random_state(5));
  std::string text = ss.str();
  text.erase(text.rfind('\n', text.size() - 2) + 1);
  std::stringstream bad(text);
  try {
    read_snapshot(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
  }
}

TEST(Snapshot, MissingFile) {
  try {
    load_snapshot("/nonexistent/snap.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingSnapshot);
  }
}

TEST(Snapshot, HashSeesEveryField) {
  const SimState s = random_state(6);
  SimState t = s;
  t.fields.u2(3, 4) = std::nextafter(t.fields.u2(3, 4), 1.0);
  EXPECT_NE(state_hash(s), state_hash(t));
  t = s;
  t.frame.theta += 1e-12;
  EXPECT_NE(state_hash(s), state_hash(t));
  t = s;
  t.step_index += 1;
  EXPECT_NE(state_hash(s), state_hash(t));
}

TEST(Csv, QuotientRoundTrip) {
  QuotientSeries qs;
  qs.dt = 0.001;
  for (int k = 1; k <= 50; ++k) qs.push(k * 0.001, std::sin(k), std::cos(k) / 3, -0.6 + 1e-9 * k);
  std::stringstream ss;
  write_quotient_csv(ss, qs);
  const auto back = read_quotient_csv(ss);
  EXPECT_EQ(back.samples, qs.samples);
  EXPECT_NEAR(back.dt, 0.001, 1e-15);
}

TEST(Csv, QuotientHeaderChecked) {
  std::stringstream ss("time,cx,cy,omega\n0,1,2,3\n");
  EXPECT_THROW(read_quotient_csv(ss), Error);
  std::stringstream short_row("t,cx,cy,omega\n0,1,2\n");
  EXPECT_THROW(read_quotient_csv(short_row), Error);
}

TEST(Csv, TipRoundTrip) {
  TipPath p;
  for (int k = 0; k < 20; ++k) p.points.push_back({k * 0.1, std::exp(0.1 * k), -k / 7.0, 0.3 * k});
  std::stringstream ss;
  write_tip_csv(ss, p);
  const auto back = read_tip_csv(ss);
  ASSERT_EQ(back.points.size(), p.points.size());
  for (std::size_t k = 0; k < p.points.size(); ++k) {
    EXPECT_EQ(back.points[k].x, p.points[k].x);
    EXPECT_EQ(back.points[k].theta, p.points[k].theta);
  }
}

TEST(Summary, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "meander_io_summary";
  std::filesystem::create_directories(dir);
  SweepRecord r;
  r.beta = 0.597;
  r.q_s = 0.5002;
  r.classification = Classification::MRW;
  r.period = 7.206;
  r.n_periods = 5;
  r.steps = 74000;
  r.initial_hash = 0xdeadbeef01234567ULL;
  r.final_hash = 42;
  r.theta0 = 1.5;
  r.x0 = -2;
  r.y0 = 3;
  write_summary(dir / "summary.txt", r);
  const auto back = read_summary(dir / "summary.txt");
  EXPECT_EQ(back.beta, r.beta);
  EXPECT_EQ(back.q_s, r.q_s);
  EXPECT_EQ(back.classification, r.classification);
  EXPECT_EQ(back.period, r.period);
  EXPECT_EQ(back.initial_hash, r.initial_hash);
  EXPECT_EQ(back.final_hash, r.final_hash);
  EXPECT_EQ(back.steps, r.steps);
  std::filesystem::remove_all(dir);
}
