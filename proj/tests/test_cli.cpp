#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MEANDER_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[512];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("meander_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MissingConfigNamesThePath) {
  const auto r = run("simulate --config " + (dir_ / "absent.conf").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find((dir_ / "absent.conf").string()), std::string::npos);
}

TEST_F(Cli, NoSubcommandIsAUsageError) { EXPECT_EQ(run("").code, 2); }

TEST_F(Cli, UnknownKeyIsAConfigError) {
  const auto conf = write("bad.conf", "model.beta=0.6\nmodel.betta=0.61\n");
  const auto r = run("simulate --config " + conf.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("model.betta"), std::string::npos);
}

TEST_F(Cli, EmptyConvergenceValuesPrintsUsage) {
  const auto conf = write("conv.conf", "convergence.variant=vary_dx_fix_ts\nconvergence.values=\n");
  const auto r = run("convergence --config " + conf.string() + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("usage"), std::string::npos);
}

TEST_F(Cli, ReconstructCircle) {
  // Constant velocities: the tip runs on a circle of radius |cx/omega|.
  std::ostringstream csv;
  csv << "t,cx,cy,omega\n";
  const double dt = 0.001;
  for (int k = 1; k <= 20000; ++k) csv << k * dt << ",0.5,0,-0.5\n";
  write("q.csv", csv.str());
  const auto conf = write("rec.conf", "reconstruct.series=q.csv\nreconstruct.x0=1\n");
  const auto r = run("reconstruct --config " + conf.string() + " --out " + (dir_ / "o").string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream is(dir_ / "o" / "tip.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x,y,theta");
  // Centre at (1, -1) for theta0 = 0, cx/omega = -1.
  int rows = 0;
  double worst = 0.0;
  while (std::getline(is, line)) {
    double t, x, y, th;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &x, &y, &th), 4);
    worst = std::max(worst, std::abs(std::hypot(x - 1.0, y + 1.0) - 1.0));
    ++rows;
  }
  EXPECT_EQ(rows, 20000);
  EXPECT_LT(worst, 0.01);
  EXPECT_NE(slurp(dir_ / "o" / "MANIFEST").find("status=complete"), std::string::npos);
}

TEST_F(Cli, ShortSimulationIsUnresolvedAndReproducible) {
  const auto conf = write("sim.conf", "model.beta=0.6\nseed.warmup_steps=200\n");
  const auto a = run("simulate --config " + conf.string() + " --max-steps 600 --out " + (dir_ / "a").string());
  EXPECT_EQ(a.code, 4) << a.output;
  const auto b = run("simulate --config " + conf.string() + " --max-steps 600 --out " + (dir_ / "b").string());
  EXPECT_EQ(b.code, 4);
  for (const char* f : {"quotient.csv", "tip.csv", "snapshot.txt", "summary.txt"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  const auto summary = slurp(dir_ / "a" / "summary.txt");
  EXPECT_NE(summary.find("classification=UNRESOLVED"), std::string::npos);
  EXPECT_NE(summary.find("steps=600"), std::string::npos);
  const auto manifest = slurp(dir_ / "a" / "MANIFEST");
  EXPECT_NE(manifest.find("status=complete"), std::string::npos);
  EXPECT_NE(manifest.find("file=snapshot.txt"), std::string::npos);
}

TEST_F(Cli, SimulationContinuesFromSnapshot) {
  // 300 + 300 steps via a snapshot equal 600 steps in one go.
  const auto one = write("one.conf", "model.beta=0.6\nseed.warmup_steps=200\n");
  ASSERT_EQ(run("simulate --config " + one.string() + " --max-steps 600 --out " + (dir_ / "full").string()).code, 4);
  ASSERT_EQ(run("simulate --config " + one.string() + " --max-steps 300 --out " + (dir_ / "half").string()).code, 4);
  const auto two = write("two.conf", "model.beta=0.6\nseed.snapshot=half/snapshot.txt\n");
  ASSERT_EQ(run("simulate --config " + two.string() + " --max-steps 300 --out " + (dir_ / "rest").string()).code, 4);
  EXPECT_EQ(slurp(dir_ / "full" / "snapshot.txt"), slurp(dir_ / "rest" / "snapshot.txt"));
}

TEST_F(Cli, SweepWritesTables) {
  const auto conf = write("sw.conf",
                          "sweep.beta_start=0.600\nsweep.beta_end=0.601\nseed.warmup_steps=200\n"
                          "sweep.reverse=true\n");
  const auto r = run("sweep --config " + conf.string() + " --max-steps 400 --out " + (dir_ / "s").string());
  EXPECT_EQ(r.code, 4) << r.output;
  std::size_t found = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "s"))
    if (e.path().filename() == "sweep.csv" || e.path().filename() == "bifurcation.json") ++found;
  EXPECT_GE(found, 3u);
}
