// Command-line driver: simulate | sweep | shock | convergence | reconstruct.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meander/config.hpp"
#include "meander/io.hpp"
#include "meander/output.hpp"
#include "meander/quotient.hpp"
#include "meander/shock.hpp"
#include "meander/sweep.hpp"
#include "meander/trajectory.hpp"

namespace fs = std::filesystem;
using namespace meander;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUnresolved = 4;

struct Options {
  std::string config;
  std::string out;
  bool resume = false;
  std::optional<long long> max_steps;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Completion record for an output directory. Written as "running" before
/// any work and rewritten at the end, so a crash leaves an honest trail.
class Manifest {
 public:
  Manifest(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    fs::create_directories(dir_);
    started_ = utc_now();
    write("running", "");
  }

  void add(const std::string& file) { files_.push_back(file); }

  void finish(const std::string& status, const std::string& note = "") { write(status, note); }

 private:
  void write(const std::string& status, const std::string& note) {
    std::ofstream os(dir_ / "MANIFEST");
    os << "command=" << command_ << '\n' << "status=" << status << '\n' << "started=" << started_ << '\n';
    if (status != "running") os << "finished=" << utc_now() << '\n';
    if (!note.empty()) os << "note=" << note << '\n';
    for (const auto& f : files_) os << "file=" << f << '\n';
  }

  fs::path dir_;
  std::string command_;
  std::string started_;
  std::vector<std::string> files_;
};

Config load_config(const Options& o) {
  if (!fs::exists(o.config)) throw Error(ErrorKind::Config, "config file not found: " + o.config);
  return Config::load(o.config);
}

fs::path output_dir(const Options& o, const Config& c) {
  if (!o.out.empty()) return o.out;
  if (auto p = c.path("output.dir")) return *p;
  return "out";
}

RunBudget budget(const Options& o, const Config& c) {
  RunBudget b = budget_from(c);
  if (o.max_steps) b.max_steps = *o.max_steps;
  b.validate();
  return b;
}

/// Fresh spiral or snapshot, as the config's seed block says.
SimState seed_state(const Config& c, const ModelParams& model, const NumericalParams& num, const PinningSpec& pin) {
  const auto warmup = c.integer("seed.warmup_steps", 2000);
  if (auto snap = c.path("seed.snapshot")) {
    SimState s = load_snapshot(*snap);
    s.params.beta = model.beta;
    return s;
  }
  return fresh_seed(model, num, pin, warmup);
}

SweepSpec sweep_spec(const Options& o, const Config& c) {
  SweepSpec spec;
  spec.model = model_from(c);
  spec.numerics = numerics_from(c);
  spec.pin = pin_from(c, spec.numerics);
  spec.budget = budget(o, c);
  spec.beta_start = c.number("sweep.beta_start", spec.beta_start);
  spec.beta_end = c.number("sweep.beta_end", spec.beta_end);
  spec.dbeta = c.number("sweep.dbeta", spec.dbeta);
  spec.warmup_steps = c.integer("seed.warmup_steps", spec.warmup_steps);
  if (auto snap = c.path("seed.snapshot")) spec.seed = load_snapshot(*snap);
  spec.validate();
  return spec;
}

int status_for(const std::vector<SweepRecord>& records) {
  bool unresolved = false;
  for (const auto& r : records) {
    if (r.classification == Classification::FAILED) return kExitNumerical;
    if (r.classification == Classification::UNRESOLVED) unresolved = true;
  }
  return unresolved ? kExitUnresolved : kExitOk;
}

int cmd_simulate(const Options& o) {
  const Config c = load_config(o);
  const ModelParams model = model_from(c);
  const NumericalParams num = numerics_from(c);
  const PinningSpec pin = pin_from(c, num);
  const RunBudget b = budget(o, c);
  const fs::path out = output_dir(o, c);
  SimState s = seed_state(c, model, num, pin);
  c.require_all_used();

  Manifest manifest(out, "simulate");
  SweepRecord rec;
  rec.beta = model.beta;
  rec.initial_hash = state_hash(s);
  rec.theta0 = s.frame.theta;
  rec.x0 = s.frame.RX;
  rec.y0 = s.frame.RY;
  RunOutcome run;
  int status = kExitOk;
  try {
    run = run_until_resolved(s, b);
    rec.classification = run.analysis.classification;
    rec.q_s = rec.classification == Classification::RW ? 0.0 : run.analysis.q_s;
    rec.period = run.analysis.period;
    rec.n_periods = run.analysis.n_periods;
    rec.steps = run.steps;
    if (rec.classification == Classification::UNRESOLVED) status = kExitUnresolved;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BlowUp && e.kind() != ErrorKind::SingularPinning) throw;
    rec.classification = Classification::FAILED;
    rec.error = e.what();
    status = kExitNumerical;
  }
  rec.final_hash = state_hash(s);
  write_record_dir(out, rec, s, run.series);
  for (const char* f : {"quotient.csv", "tip.csv", "snapshot.txt", "summary.txt"}) manifest.add(f);
  manifest.finish(status == kExitNumerical ? "failed" : "complete", rec.error);
  std::cout << "classification=" << to_string(rec.classification) << " q_s=" << format_double(rec.q_s) << '\n';
  return status;
}

int cmd_sweep(const Options& o) {
  const Config c = load_config(o);
  SweepSpec spec = sweep_spec(o, c);
  const bool reverse = c.flag("sweep.reverse", false);
  const double reverse_end = c.number("sweep.reverse_end", spec.beta_start);
  const std::string reverse_seed = c.text("sweep.reverse_seed").value_or("forward");
  if (reverse_seed != "forward" && reverse_seed != "fresh")
    throw Error(ErrorKind::Config, "sweep.reverse_seed must be forward or fresh");
  const fs::path out = output_dir(o, c);
  c.require_all_used();

  Manifest manifest(out, "sweep");
  const SweepResult fwd = run_sweep(spec, directory_hooks(out / "forward", o.resume));
  write_sweep_tables(out / "forward", fwd);
  manifest.add("forward/sweep.csv");
  manifest.add("forward/beta_qs.txt");
  std::vector<SweepRecord> all = fwd.records;

  std::optional<SweepResult> rev;
  std::optional<Hysteresis> h;
  if (reverse) {
    SweepSpec back = spec;
    back.beta_start = spec.betas().back();
    back.beta_end = reverse_end;
    back.dbeta = -std::abs(spec.dbeta);
    back.seed.reset();
    if (reverse_seed == "forward") back.seed = fwd.final_state;
    rev = run_sweep(back, directory_hooks(out / "reverse", o.resume));
    write_sweep_tables(out / "reverse", *rev);
    manifest.add("reverse/sweep.csv");
    manifest.add("reverse/beta_qs.txt");
    all.insert(all.end(), rev->records.begin(), rev->records.end());
    h = hysteresis_region(fwd, *rev);
  }
  std::vector<const SweepResult*> list{&fwd};
  if (rev) list.push_back(&*rev);
  write_bifurcation_summary(out / "bifurcation.json", list, h);
  manifest.add("bifurcation.json");
  const int status = status_for(all);
  manifest.finish("complete");
  return status;
}

int cmd_shock(const Options& o) {
  const Config c = load_config(o);
  const RunBudget b = budget(o, c);
  const double beta = c.number("shock.beta", 0.595);
  const auto at_step = c.integer("shock.at_step", 40000);
  const auto amplitudes = c.numbers("shock.amplitudes");
  if (amplitudes.empty()) throw Error(ErrorKind::Config, "shock.amplitudes must list at least one amplitude");
  std::vector<std::pair<Branch, fs::path>> branches;
  if (auto p = c.path("shock.forward_snapshot")) branches.emplace_back(Branch::Forward, *p);
  if (auto p = c.path("shock.reverse_snapshot")) branches.emplace_back(Branch::Reverse, *p);
  if (branches.empty()) throw Error(ErrorKind::Config, "need shock.forward_snapshot and/or shock.reverse_snapshot");
  const fs::path out = output_dir(o, c);
  c.require_all_used();

  Manifest manifest(out, "shock");
  std::ofstream matrix(out / "matrix.csv");
  write_shock_matrix_header(matrix);
  manifest.add("matrix.csv");
  int status = kExitOk;
  for (const auto& [branch, path] : branches) {
    const SimState snap = load_snapshot(path);
    for (double a : amplitudes) {
      ShockSpec spec{a, at_step};
      const ShockOutcome r = run_conversion(snap, beta, spec, b);
      write_shock_matrix_row(matrix, beta, branch, spec, r.verdict);
      matrix.flush();
      const std::string cell = std::string("cells/") + std::string(to_string(branch)) + "_A" + format_double(a);
      fs::create_directories(out / cell);
      std::ofstream q(out / cell / "quotient.csv");
      write_quotient_csv(q, r.post_series);
      std::ofstream s(out / cell / "summary.txt");
      s << "verdict=" << to_string(r.verdict) << "\npre_class=" << to_string(r.pre_class)
        << "\npost_class=" << to_string(r.post_class) << "\npost_q_s=" << format_double(r.post_q_s)
        << "\nnote=" << r.note << '\n';
      manifest.add(cell + "/quotient.csv");
      manifest.add(cell + "/summary.txt");
      if (r.verdict == Verdict::Failed) status = kExitNumerical;
      else if (r.verdict == Verdict::Unresolved && status == kExitOk) status = kExitUnresolved;
    }
  }
  manifest.finish("complete");
  return status;
}

int cmd_convergence(const Options& o) {
  const Config c = load_config(o);
  SweepSpec base = sweep_spec(o, c);
  const auto variant_name = c.text("convergence.variant");
  if (!variant_name) throw Error(ErrorKind::Config, "convergence.variant is required");
  const ConvergenceVariant variant = convergence_variant_from_string(*variant_name);
  const auto values = c.numbers("convergence.values");
  if (values.empty())
    throw Error(ErrorKind::Config,
                "convergence.values is empty; usage: convergence.variant=<family> convergence.values=v1,v2,...");
  const fs::path out = output_dir(o, c);
  c.require_all_used();

  Manifest manifest(out, "convergence");
  const auto dir_for = [&](std::size_t k) { return out / (std::string(to_string(variant)) + "_" + std::to_string(k)); };
  const auto runs = convergence_suite(base, variant, values,
                                      [&](std::size_t k) { return directory_hooks(dir_for(k), o.resume); });
  std::ofstream table(out / "convergence.csv");
  table << "index,L,N,ts,dx,dt,points\n";
  std::vector<SweepRecord> all;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    write_sweep_tables(dir_for(k), runs[k].result);
    const auto& n = runs[k].numerics;
    table << k << ',' << format_double(n.L()) << ',' << n.N() << ',' << format_double(n.ts()) << ','
          << format_double(n.dx()) << ',' << format_double(n.dt()) << ',';
    for (std::size_t p = 0; p < runs[k].result.bifurcation_points.size(); ++p)
      table << (p ? ";" : "") << format_double(runs[k].result.bifurcation_points[p]);
    table << '\n';
    manifest.add(dir_for(k).filename().string() + "/sweep.csv");
    all.insert(all.end(), runs[k].result.records.begin(), runs[k].result.records.end());
  }
  manifest.add("convergence.csv");
  manifest.finish("complete");
  return status_for(all);
}

int cmd_reconstruct(const Options& o) {
  const Config c = load_config(o);
  const auto series_path = c.path("reconstruct.series");
  if (!series_path) throw Error(ErrorKind::Config, "reconstruct.series is required");
  const double theta0 = c.number("reconstruct.theta0", 0.0);
  const double x0 = c.number("reconstruct.x0", 0.0);
  const double y0 = c.number("reconstruct.y0", 0.0);
  const fs::path out = output_dir(o, c);
  c.require_all_used();

  std::ifstream is(*series_path);
  if (!is) throw Error(ErrorKind::Config, "cannot open series " + series_path->string());
  const QuotientSeries qs = read_quotient_csv(is);
  Manifest manifest(out, "reconstruct");
  std::ofstream os(out / "tip.csv");
  write_tip_csv(os, reconstruct_tip(qs, theta0, x0, y0));
  manifest.add("tip.csv");
  manifest.finish("complete");
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::BlowUp:
    case ErrorKind::SingularPinning:
    case ErrorKind::NoTip:
    case ErrorKind::NoRealRoot:
    case ErrorKind::TooShort:
      return kExitNumerical;
    default:
      return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiral-wave meander simulations in the comoving frame"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key=value configuration file")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_flag("--resume", o.resume, "reuse records already present in the output directory");
    sub->add_option("--max-steps", o.max_steps, "override run.max_steps")->check(CLI::PositiveNumber);
  };
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Command commands[] = {
      {"simulate", "single run at fixed parameters", cmd_simulate},
      {"sweep", "beta continuation, optionally forward then reverse", cmd_sweep},
      {"shock", "single-shock conversion matrix", cmd_shock},
      {"convergence", "sweeps over a family of grids", cmd_convergence},
      {"reconstruct", "laboratory tip path from a quotient series", cmd_reconstruct},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub);
    subs.emplace_back(sub, &cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) return cmd->fn(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
