#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meander/error.hpp"
#include "meander/io.hpp"
#include "meander/quotient.hpp"
#include "meander/shock.hpp"
#include "meander/sweep.hpp"
#include "meander/trajectory.hpp"

namespace meander {

namespace fs = std::filesystem;

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + path.string());
  return os;
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

}  // namespace detail

/// Key=value analysis summary of a single run.
inline void write_summary(const fs::path& path, const SweepRecord& r) {
  auto os = detail::open_out(path);
  os << "beta=" << format_double(r.beta) << '\n'
     << "classification=" << to_string(r.classification) << '\n'
     << "q_s=" << format_double(r.q_s) << '\n'
     << "period=" << detail::optional_number(r.period) << '\n'
     << "n_periods=" << r.n_periods << '\n'
     << "steps=" << r.steps << '\n'
     << "initial_hash=" << hex_hash(r.initial_hash) << '\n'
     << "final_hash=" << hex_hash(r.final_hash) << '\n'
     << "theta0=" << format_double(r.theta0) << '\n'
     << "x0=" << format_double(r.x0) << '\n'
     << "y0=" << format_double(r.y0) << '\n'
     << "error=" << r.error << '\n';
}

inline SweepRecord read_summary(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::MissingSnapshot, "no summary at " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::Parse, path.string() + " lacks '" + key + "'");
    return it->second;
  };
  const auto hash = [&](const char* key) {
    const std::string& h = get(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), v, 16);
    if (ec != std::errc() || ptr != h.data() + h.size()) throw Error(ErrorKind::Parse, "bad hash in " + path.string());
    return v;
  };
  SweepRecord r;
  r.beta = parse_double(get("beta"), "beta");
  r.classification = classification_from_string(get("classification"));
  r.q_s = parse_double(get("q_s"), "q_s");
  if (get("period") != "none") r.period = parse_double(get("period"), "period");
  r.n_periods = static_cast<std::size_t>(parse_integer(get("n_periods"), "n_periods"));
  r.steps = parse_integer(get("steps"), "steps");
  r.initial_hash = hash("initial_hash");
  r.final_hash = hash("final_hash");
  r.theta0 = parse_double(get("theta0"), "theta0");
  r.x0 = parse_double(get("x0"), "x0");
  r.y0 = parse_double(get("y0"), "y0");
  r.error = get("error");
  return r;
}

/// One directory per run: quotient.csv, tip.csv, snapshot.txt, summary.txt.
/// Returns the snapshot path.
inline fs::path write_record_dir(const fs::path& dir, const SweepRecord& r, const SimState& final_state,
                                 const QuotientSeries& series) {
  fs::create_directories(dir);
  {
    auto os = detail::open_out(dir / "quotient.csv");
    write_quotient_csv(os, series);
  }
  {
    auto os = detail::open_out(dir / "tip.csv");
    if (!series.empty()) write_tip_csv(os, reconstruct_tip(series, r.theta0, r.x0, r.y0));
    else os << "t,x,y,theta\n";
  }
  save_snapshot(dir / "snapshot.txt", final_state);
  write_summary(dir / "summary.txt", r);
  return dir / "snapshot.txt";
}

inline std::string record_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "record_%04zu", index);
  return buf;
}

/// Hooks that persist every record under `dir` and, with `resume`, reuse
/// records whose summary and snapshot already exist there.
inline SweepHooks directory_hooks(const fs::path& dir, bool resume) {
  SweepHooks hooks;
  hooks.on_record = [dir](std::size_t idx, const SweepRecord& r, const SimState& s, const QuotientSeries& q) {
    const fs::path rec_dir = dir / record_dir_name(idx);
    write_record_dir(rec_dir, r, s, q);
    return (fs::path(record_dir_name(idx)) / "snapshot.txt").generic_string();
  };
  if (resume)
    hooks.resume = [dir](std::size_t idx, double beta) -> std::optional<std::pair<SweepRecord, SimState>> {
      const fs::path rec_dir = dir / record_dir_name(idx);
      if (!fs::exists(rec_dir / "summary.txt") || !fs::exists(rec_dir / "snapshot.txt")) return std::nullopt;
      SweepRecord r = read_summary(rec_dir / "summary.txt");
      if (std::abs(r.beta - beta) > 1e-12) return std::nullopt;
      r.snapshot_file = (fs::path(record_dir_name(idx)) / "snapshot.txt").generic_string();
      return std::make_pair(std::move(r), load_snapshot(rec_dir / "snapshot.txt"));
    };
  return hooks;
}

/// Sweep table plus the two-column beta vs q_s file.
inline void write_sweep_tables(const fs::path& dir, const SweepResult& r) {
  fs::create_directories(dir);
  auto os = detail::open_out(dir / "sweep.csv");
  os << "beta,q_s,classification,period,n_periods,snapshot_file\n";
  auto two = detail::open_out(dir / "beta_qs.txt");
  for (const auto& rec : r.records) {
    os << format_double(rec.beta) << ',' << format_double(rec.q_s) << ',' << to_string(rec.classification) << ','
       << (rec.period ? format_double(*rec.period) : std::string()) << ',' << rec.n_periods << ','
       << rec.snapshot_file << '\n';
    two << format_double(rec.beta) << ' ' << format_double(rec.q_s) << '\n';
  }
}

namespace detail {

inline std::string number_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
  return s + "]";
}

inline std::string interval_text(const std::optional<Interval>& i) {
  return i ? "[" + format_double(i->low) + ", " + format_double(i->high) + "]" : "null";
}

}  // namespace detail

/// Bifurcation summary: one line per traversal plus the hysteresis sides.
inline void write_bifurcation_summary(const fs::path& path, const std::vector<const SweepResult*>& sweeps,
                                      const std::optional<Hysteresis>& h) {
  auto os = detail::open_out(path);
  os << "{\n  \"sweeps\": [\n";
  for (std::size_t k = 0; k < sweeps.size(); ++k)
    os << "    {\"direction\": \"" << to_string(sweeps[k]->direction)
       << "\", \"points\": " << detail::number_list(sweeps[k]->bifurcation_points) << "}"
       << (k + 1 < sweeps.size() ? "," : "") << '\n';
  os << "  ],\n";
  os << "  \"hysteresis_low\": " << detail::interval_text(h ? h->low_side : std::nullopt) << ",\n";
  os << "  \"hysteresis_high\": " << detail::interval_text(h ? h->high_side : std::nullopt) << "\n}\n";
}

inline void write_shock_matrix_header(std::ostream& os) { os << "beta,branch,amplitude,at_step,verdict\n"; }

inline void write_shock_matrix_row(std::ostream& os, double beta, Branch branch, const ShockSpec& spec, Verdict v) {
  os << format_double(beta) << ',' << to_string(branch) << ',' << format_double(spec.amplitude) << ',' << spec.at_step
     << ',' << to_string(v) << '\n';
}

}  // namespace meander
