#include <gtest/gtest.h>

#include <sstream>

#include "meander/config.hpp"

using namespace meander;

namespace {

Config from(const std::string& text, std::filesystem::path base = {}) {
  std::istringstream is(text);
  return Config::parse(is, std::move(base));
}

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
  const auto c = from(
      "# comment\n"
      "\n"
      "model.beta = 0.6\n"
      "  numerics.N=100\r\n"
      "sweep.reverse = true\n"
      "shock.amplitudes = 0.1, -0.2 ,0.5\n");
  EXPECT_EQ(model_from(c).beta, 0.6);
  EXPECT_EQ(numerics_from(c).N(), 100);
  EXPECT_TRUE(c.flag("sweep.reverse", false));
  EXPECT_EQ(c.numbers("shock.amplitudes"), (std::vector<double>{0.1, -0.2, 0.5}));
  EXPECT_NO_THROW(c.require_all_used());
}

TEST(Config, DefaultsWhenAbsent) {
  const auto c = from("");
  const auto m = model_from(c);
  EXPECT_EQ(m.beta, ModelParams{}.beta);
  EXPECT_EQ(m.gamma, 0.5);
  EXPECT_EQ(m.epsilon, 0.2);
  const auto n = numerics_from(c);
  EXPECT_EQ(n.N(), 150);
  EXPECT_NEAR(n.dt(), 0.001, 1e-15);
  const auto pin = pin_from(c, n);
  EXPECT_EQ(pin.i0, 75);
  EXPECT_EQ(pin.u_star, 0.0);
  EXPECT_EQ(budget_from(c).max_steps, 200000);
}

TEST(Config, StatedDerivedValuesAreIgnored) {
  const auto c = from("numerics.dt=0.5\nnumerics.dx=3\n");
  const auto n = numerics_from(c);
  EXPECT_NEAR(n.dx(), 0.2, 1e-15);
  EXPECT_NO_THROW(c.require_all_used());
}

TEST(Config, UnknownKeysAreReported) {
  const auto c = from("model.beta=0.6\nmodel.bta=0.7\n");
  model_from(c);
  try {
    c.require_all_used();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("model.bta"), std::string::npos);
  }
}

TEST(Config, Errors) {
  EXPECT_THROW(from("no equals sign\n"), Error);
  EXPECT_THROW(from("a=1\na=2\n"), Error);
  EXPECT_THROW(from("=3\n"), Error);
  EXPECT_THROW(model_from(from("model.epsilon=0\n")), Error);
  EXPECT_THROW(model_from(from("model.beta=abc\n")), Error);
  EXPECT_THROW(numerics_from(from("numerics.ts=-0.1\n")), Error);
  EXPECT_THROW(pin_from(from("pin.i0=1\n"), NumericalParams{}), Error);
  EXPECT_THROW(budget_from(from("run.max_steps=0\n")), Error);
}

TEST(Config, RelativePathsFollowTheFile) {
  const auto c = from("seed.snapshot=snaps/a.txt\nother=/abs/b.txt\n", "/data/run");
  EXPECT_EQ(*c.path("seed.snapshot"), std::filesystem::path("/data/run/snaps/a.txt"));
  EXPECT_EQ(*c.path("other"), std::filesystem::path("/abs/b.txt"));
  EXPECT_FALSE(c.path("missing").has_value());
}
