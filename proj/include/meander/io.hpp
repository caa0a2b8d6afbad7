#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "meander/error.hpp"
#include "meander/series.hpp"
#include "meander/solver.hpp"
#include "meander/trajectory.hpp"

namespace meander {

inline constexpr int kSnapshotFormatVersion = 1;

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    throw Error(ErrorKind::Parse, "bad number '" + std::string(text) + "' for " + std::string(what));
  return v;
}

inline long long parse_integer(std::string_view text, std::string_view what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorKind::Parse, "bad integer '" + std::string(text) + "' for " + std::string(what));
  return v;
}

inline bool parse_bool(std::string_view text, std::string_view what) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw Error(ErrorKind::Parse, "bad flag '" + std::string(text) + "' for " + std::string(what));
}

// ---------------------------------------------------------------------------
// Snapshots

inline void write_snapshot(std::ostream& os, const SimState& s) {
  const auto kv = [&os](std::string_view key, const std::string& value) { os << key << '=' << value << '\n'; };
  const auto& n = s.numerics;
  kv("format_version", std::to_string(kSnapshotFormatVersion));
  kv("L", format_double(n.L()));
  kv("N", std::to_string(n.N()));
  kv("ts", format_double(n.ts()));
  kv("dt", format_double(n.dt()));
  kv("beta", format_double(s.params.beta));
  kv("gamma", format_double(s.params.gamma));
  kv("epsilon", format_double(s.params.epsilon));
  kv("u_star", format_double(s.pin.u_star));
  kv("v_star", format_double(s.pin.v_star));
  kv("theta", format_double(s.frame.theta));
  kv("RX", format_double(s.frame.RX));
  kv("RY", format_double(s.frame.RY));
  kv("cx", format_double(s.frame.cx));
  kv("cy", format_double(s.frame.cy));
  kv("omega", format_double(s.frame.omega));
  kv("step_index", std::to_string(s.step_index));
  kv("advection_engaged", s.advection_engaged ? "1" : "0");
  // Beyond the core keys: what a bitwise continuation also depends on.
  kv("omega_active", s.frame.omega_active ? "1" : "0");
  kv("d11", format_double(s.params.diff[0][0]));
  kv("d12", format_double(s.params.diff[0][1]));
  kv("d21", format_double(s.params.diff[1][0]));
  kv("d22", format_double(s.params.diff[1][1]));
  kv("i0", std::to_string(s.pin.i0));
  kv("j0", std::to_string(s.pin.j0));
  kv("i_inc", std::to_string(s.pin.i_inc));
  kv("j_inc", std::to_string(s.pin.j_inc));
  const std::size_t m = s.fields.n();
  std::string line;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      line.clear();
      line += std::to_string(i);
      line += ' ';
      line += std::to_string(j);
      line += ' ';
      line += format_double(s.fields.u1(i, j));
      line += ' ';
      line += format_double(s.fields.u2(i, j));
      line += '\n';
      os << line;
    }
}

inline SimState read_snapshot(std::istream& is) {
  std::map<std::string, std::string, std::less<>> header;
  std::string line;
  bool have_row = false;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      have_row = true;
      break;
    }
    header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto get = [&header](std::string_view key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorKind::Parse, "snapshot header lacks '" + std::string(key) + "'");
    return it->second;
  };
  const auto optional_double = [&](std::string_view key, double fallback) {
    const auto it = header.find(key);
    return it == header.end() ? fallback : parse_double(it->second, key);
  };
  const auto optional_int = [&](std::string_view key, long long fallback) {
    const auto it = header.find(key);
    return it == header.end() ? fallback : parse_integer(it->second, key);
  };

  if (parse_integer(get("format_version"), "format_version") != kSnapshotFormatVersion)
    throw Error(ErrorKind::Parse, "unsupported snapshot format_version " + get("format_version"));

  const auto num = make_numerics(parse_double(get("L"), "L"), static_cast<int>(parse_integer(get("N"), "N")),
                                 parse_double(get("ts"), "ts"));
  if (parse_double(get("dt"), "dt") != num.dt())
    throw Error(ErrorKind::Parse, "snapshot dt disagrees with ts*dx^2/4");

  ModelParams p;
  p.beta = parse_double(get("beta"), "beta");
  p.gamma = parse_double(get("gamma"), "gamma");
  p.epsilon = parse_double(get("epsilon"), "epsilon");
  p.diff[0][0] = optional_double("d11", p.diff[0][0]);
  p.diff[0][1] = optional_double("d12", p.diff[0][1]);
  p.diff[1][0] = optional_double("d21", p.diff[1][0]);
  p.diff[1][1] = optional_double("d22", p.diff[1][1]);

  PinningSpec pin = PinningSpec::centred(num, parse_double(get("u_star"), "u_star"),
                                         parse_double(get("v_star"), "v_star"));
  pin.i0 = static_cast<int>(optional_int("i0", pin.i0));
  pin.j0 = static_cast<int>(optional_int("j0", pin.j0));
  pin.i_inc = static_cast<int>(optional_int("i_inc", pin.i_inc));
  pin.j_inc = static_cast<int>(optional_int("j_inc", pin.j_inc));

  const std::size_t m = num.points();
  FieldPair fields(m);
  // The header loop stopped on the first data row.
  if (!have_row) throw Error(ErrorKind::Parse, "snapshot has no data lines");
  std::size_t count = 0;
  do {
    if (line.empty() || line == "\r") continue;
    std::string_view rest(line);
    std::string_view tok[4];
    for (int k = 0; k < 4; ++k) {
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      const auto sp = rest.find(' ');
      tok[k] = rest.substr(0, sp);
      rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
    }
    const auto i = parse_integer(tok[0], "i");
    const auto j = parse_integer(tok[1], "j");
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= m || static_cast<std::size_t>(j) >= m)
      throw Error(ErrorKind::Parse, "snapshot index out of range: " + line);
    fields.u1(i, j) = parse_double(tok[2], "u1");
    fields.u2(i, j) = parse_double(tok[3], "u2");
    ++count;
  } while (std::getline(is, line));
  if (count != m * m)
    throw Error(ErrorKind::Parse, "snapshot has " + std::to_string(count) + " data lines, expected " +
                                      std::to_string(m * m));

  SimState s = make_state(p, num, std::move(fields), pin);
  s.frame.theta = parse_double(get("theta"), "theta");
  s.frame.RX = parse_double(get("RX"), "RX");
  s.frame.RY = parse_double(get("RY"), "RY");
  s.frame.cx = parse_double(get("cx"), "cx");
  s.frame.cy = parse_double(get("cy"), "cy");
  s.frame.omega = parse_double(get("omega"), "omega");
  s.frame.omega_active = optional_int("omega_active", 1) != 0;
  s.step_index = parse_integer(get("step_index"), "step_index");
  s.advection_engaged = parse_bool(get("advection_engaged"), "advection_engaged");
  return s;
}

inline void save_snapshot(const std::filesystem::path& path, const SimState& s) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot write snapshot " + path.string());
  write_snapshot(os, s);
  if (!os) throw Error(ErrorKind::Config, "failed writing snapshot " + path.string());
}

inline SimState load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::MissingSnapshot, "no snapshot at " + path.string());
  return read_snapshot(is);
}

/// FNV-1a over the dynamic part of a state (fields, frame, step counter and
/// engagement). Parameters are left out on purpose: a continuation changes
/// beta but must start from exactly the previous final state.
inline std::uint64_t state_hash(const SimState& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= b[k];
      h *= 0x100000001b3ULL;
    }
  };
  const auto mix_field = [&](const Field& f) { mix(f.values().data(), f.values().size_bytes()); };
  mix_field(s.fields.u1);
  mix_field(s.fields.u2);
  const double frame[6] = {s.frame.cx, s.frame.cy, s.frame.omega, s.frame.theta, s.frame.RX, s.frame.RY};
  mix(frame, sizeof frame);
  const unsigned char flags[2] = {static_cast<unsigned char>(s.frame.omega_active),
                                  static_cast<unsigned char>(s.advection_engaged)};
  mix(flags, sizeof flags);
  mix(&s.step_index, sizeof s.step_index);
  return h;
}

inline std::string hex_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV series

inline void write_quotient_csv(std::ostream& os, const QuotientSeries& qs) {
  os << "t,cx,cy,omega\n";
  for (const auto& s : qs.samples)
    os << format_double(s.t) << ',' << format_double(s.cx) << ',' << format_double(s.cy) << ','
       << format_double(s.omega) << '\n';
}

namespace detail {

inline std::vector<double> split_row(std::string_view line, std::size_t expected, std::string_view what) {
  std::vector<double> out;
  out.reserve(expected);
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    out.push_back(parse_double(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos), what));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.size() != expected) throw Error(ErrorKind::Parse, std::string(what) + " row has wrong column count");
  return out;
}

}  // namespace detail

/// Reads a quotient CSV. The sampling interval is taken from the first two
/// timestamps (zero for a single row).
inline QuotientSeries read_quotient_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Parse, "empty quotient file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,cx,cy,omega") throw Error(ErrorKind::Parse, "quotient file header must be t,cx,cy,omega");
  QuotientSeries qs;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto v = detail::split_row(line, 4, "quotient");
    qs.push(v[0], v[1], v[2], v[3]);
  }
  if (qs.size() >= 2) qs.dt = qs.samples[1].t - qs.samples[0].t;
  return qs;
}

inline void write_tip_csv(std::ostream& os, const TipPath& path) {
  os << "t,x,y,theta\n";
  for (const auto& p : path.points)
    os << format_double(p.t) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
       << format_double(p.theta) << '\n';
}

inline TipPath read_tip_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Parse, "empty tip file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,theta") throw Error(ErrorKind::Parse, "tip file header must be t,x,y,theta");
  TipPath path;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto v = detail::split_row(line, 4, "tip");
    path.points.push_back({v[0], v[1], v[2], v[3]});
  }
  return path;
}

}  // namespace meander
