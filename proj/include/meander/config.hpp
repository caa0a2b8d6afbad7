#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "meander/error.hpp"
#include "meander/io.hpp"
#include "meander/kinetics.hpp"
#include "meander/solver.hpp"
#include "meander/sweep.hpp"

namespace meander {

/// Flat key=value configuration with dotted section prefixes
/// (model.beta=0.595). Blank lines and lines starting with '#' are ignored.
/// Every key must be consumed by the command that reads the file, so typos
/// surface as errors instead of silently falling back to defaults.
class Config {
 public:
  static Config parse(std::istream& is, std::filesystem::path base_dir = {}) {
    Config c;
    c.base_dir_ = std::move(base_dir);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto text = trim(line);
      if (text.empty() || text.front() == '#') continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos)
        throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key=value");
      const std::string key(trim(text.substr(0, eq)));
      if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key");
      if (c.values_.count(key)) throw Error(ErrorKind::Config, "duplicate key '" + key + "'");
      c.values_[key] = std::string(trim(text.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Config, "cannot open config file " + path.string());
    return parse(is, path.parent_path());
  }

  bool has(std::string_view key) const { return values_.count(std::string(key)) != 0; }

  std::optional<std::string> text(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) return std::nullopt;
    used_.insert(it->first);
    return it->second;
  }

  double number(std::string_view key, double fallback) const {
    const auto v = text(key);
    return v ? as_number(*v, key) : fallback;
  }

  long long integer(std::string_view key, long long fallback) const {
    const auto v = text(key);
    if (!v) return fallback;
    try {
      return parse_integer(*v, key);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.what());
    }
  }

  bool flag(std::string_view key, bool fallback) const {
    const auto v = text(key);
    if (!v) return fallback;
    try {
      return parse_bool(*v, key);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.what());
    }
  }

  /// Comma-separated list of numbers.
  std::vector<double> numbers(std::string_view key) const {
    std::vector<double> out;
    const auto v = text(key);
    if (!v) return out;
    std::string_view rest(*v);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) out.push_back(as_number(item, key));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return out;
  }

  /// A path, resolved against the directory of the config file.
  std::optional<std::filesystem::path> path(std::string_view key) const {
    const auto v = text(key);
    if (!v || v->empty()) return std::nullopt;
    std::filesystem::path p(*v);
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
  }

  /// Keys present in the file but never read.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  void require_all_used() const {
    const auto left = unused();
    if (left.empty()) return;
    std::string msg = "unknown or unused config keys:";
    for (const auto& k : left) msg += " " + k;
    throw Error(ErrorKind::Config, msg);
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

  static double as_number(std::string_view v, std::string_view key) {
    try {
      return parse_double(v, key);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, e.what());
    }
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::filesystem::path base_dir_;
};

inline ModelParams model_from(const Config& c) {
  ModelParams p;
  p.beta = c.number("model.beta", p.beta);
  p.gamma = c.number("model.gamma", p.gamma);
  p.epsilon = c.number("model.epsilon", p.epsilon);
  p.diff[0][0] = c.number("model.d11", p.diff[0][0]);
  p.diff[0][1] = c.number("model.d12", p.diff[0][1]);
  p.diff[1][0] = c.number("model.d21", p.diff[1][0]);
  p.diff[1][1] = c.number("model.d22", p.diff[1][1]);
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return p;
}

/// dx and dt are always derived; if the file states them anyway they are
/// read (so they do not trip the unused-key check) and ignored.
inline NumericalParams numerics_from(const Config& c) {
  const NumericalParams d;
  (void)c.text("numerics.dx");
  (void)c.text("numerics.dt");
  try {
    return make_numerics(c.number("numerics.L", d.L()), static_cast<int>(c.integer("numerics.N", d.N())),
                         c.number("numerics.ts", d.ts()));
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
}

inline PinningSpec pin_from(const Config& c, const NumericalParams& num) {
  PinningSpec pin = PinningSpec::centred(num, c.number("pin.u_star", 0.0), c.number("pin.v_star", 0.0));
  pin.i0 = static_cast<int>(c.integer("pin.i0", pin.i0));
  pin.j0 = static_cast<int>(c.integer("pin.j0", pin.j0));
  pin.i_inc = static_cast<int>(c.integer("pin.i_inc", pin.i_inc));
  pin.j_inc = static_cast<int>(c.integer("pin.j_inc", pin.j_inc));
  try {
    pin.validate(num);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return pin;
}

inline RunBudget budget_from(const Config& c) {
  RunBudget b;
  b.max_steps = c.integer("run.max_steps", b.max_steps);
  b.check_every = c.integer("run.check_every", b.check_every);
  b.cycle_check_every = c.integer("run.cycle_check_every", b.cycle_check_every);
  b.rw_tail_steps = c.integer("run.rw_tail_steps", b.rw_tail_steps);
  b.transient_periods = static_cast<int>(c.integer("run.transient_periods", b.transient_periods));
  b.measured_periods = static_cast<int>(c.integer("run.measured_periods", b.measured_periods));
  b.tol = c.number("run.tol", b.tol);
  b.validate();
  return b;
}

}  // namespace meander
