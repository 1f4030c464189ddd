#include "flab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "flab/json_io.hpp"

namespace flab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Ctx {
  const std::string& origin;
  int line;
  const std::string& key;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(origin + ":" + std::to_string(line) + ": " + key + ": " + msg);
  }
};

double to_double(const std::string& v, const Ctx& c) {
  const std::string s = trim(v);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) c.fail("expected a number, got '" + s + "'");
  if (!std::isfinite(x)) c.fail("value must be finite");
  return x;
}

long long to_int(const std::string& v, const Ctx& c) {
  const std::string s = trim(v);
  char* end = nullptr;
  const long long x = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) c.fail("expected an integer, got '" + s + "'");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& v, const Ctx& c) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(item, c));
  return out;
}

void require_positive(double x, const Ctx& c) {
  if (!(x > 0.0)) c.fail("must be > 0 (got " + format_double(x) + ")");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + format_double(v[k]);
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + v[k];
  return s;
}

using Cfg = ExperimentConfig;

struct KeyDef {
  std::string name;
  std::function<void(Cfg&, const std::string&, const Ctx&)> set;
  std::function<std::string(const Cfg&)> show;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"potential.kind",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         static const std::set<std::string> kinds{"quadratic", "quartic", "double_well", "abs",
                                                  "custom_poly"};
         if (!kinds.count(v)) {
           x.fail("unknown kind '" + v +
                  "' (expected quadratic, quartic, double_well, abs or custom_poly)");
         }
         c.potential.kind = v;
       },
       [](const Cfg& c) { return c.potential.kind; }},
      {"potential.params",
       [](Cfg& c, const std::string& v, const Ctx& x) { c.potential.params = to_doubles(v, x); },
       [](const Cfg& c) { return join(c.potential.params); }},
      {"scheme.b_function",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         if (v != "scharfetter-gummel" && v != "exponential") {
           x.fail("unknown B function '" + v + "' (expected scharfetter-gummel or exponential)");
         }
         c.scheme.b_function = v;
       },
       [](const Cfg& c) { return c.scheme.b_function; }},
      {"scheme.s_max",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         c.scheme.s_max = to_double(v, x);
         require_positive(c.scheme.s_max, x);
       },
       [](const Cfg& c) { return format_double(c.scheme.s_max); }},
      {"scheme.s_points",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         const auto n = to_int(v, x);
         if (n < 3 || n > 10'000'000) x.fail("must be in [3, 10000000]");
         c.scheme.s_points = static_cast<int>(n);
       },
       [](const Cfg& c) { return std::to_string(c.scheme.s_points); }},
      {"grid.h",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         c.grid.h = to_double(v, x);
         require_positive(c.grid.h, x);
       },
       [](const Cfg& c) { return format_double(c.grid.h); }},
      {"grid.radius",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         if (v == "auto") {
           c.grid.radius.reset();
           return;
         }
         const double r = to_double(v, x);
         require_positive(r, x);
         c.grid.radius = r;
       },
       [](const Cfg& c) { return c.grid.radius ? format_double(*c.grid.radius) : "auto"; }},
      {"grid.h_list",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         auto hs = to_doubles(v, x);
         if (hs.empty()) x.fail("needs at least one value");
         for (double h : hs) require_positive(h, x);
         c.grid.h_list = hs;
       },
       [](const Cfg& c) { return join(c.grid.h_list); }},
      {"time.horizon",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         c.time.horizon = to_double(v, x);
         require_positive(c.time.horizon, x);
       },
       [](const Cfg& c) { return format_double(c.time.horizon); }},
      {"time.dt",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         if (v == "auto") {
           c.time.dt.reset();
           return;
         }
         const double dt = to_double(v, x);
         require_positive(dt, x);
         c.time.dt = dt;
       },
       [](const Cfg& c) { return c.time.dt ? format_double(*c.time.dt) : "auto"; }},
      {"time.method",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         if (v != "rk4" && v != "trapezoidal") x.fail("expected rk4 or trapezoidal, got '" + v + "'");
         c.time.method = v;
       },
       [](const Cfg& c) { return c.time.method; }},
      {"time.start",
       [](Cfg& c, const std::string& v, const Ctx& x) { c.time.start = to_double(v, x); },
       [](const Cfg& c) { return format_double(c.time.start); }},
      {"time.outputs",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         const auto n = to_int(v, x);
         if (n < 2 || n > 1'000'000) x.fail("must be in [2, 1000000]");
         c.time.outputs = static_cast<int>(n);
       },
       [](const Cfg& c) { return std::to_string(c.time.outputs); }},
      {"time.burn_in",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         const double b = to_double(v, x);
         if (!(b >= 0.0 && b < 1.0)) x.fail("must be in [0, 1)");
         c.time.burn_in = b;
       },
       [](const Cfg& c) { return format_double(c.time.burn_in); }},
      {"sim.n_paths",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         const auto n = to_int(v, x);
         if (n < 1 || n > 1'000'000'000) x.fail("must be in [1, 1000000000]");
         c.sim.n_paths = static_cast<int>(n);
       },
       [](const Cfg& c) { return std::to_string(c.sim.n_paths); }},
      {"sim.seed",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         const std::string s = trim(v);
         char* end = nullptr;
         if (s.empty() || s[0] == '-') x.fail("must be a nonnegative integer");
         const unsigned long long seed = std::strtoull(s.c_str(), &end, 10);
         if (end != s.c_str() + s.size()) x.fail("expected an integer, got '" + s + "'");
         c.sim.seed = seed;
       },
       [](const Cfg& c) { return std::to_string(c.sim.seed); }},
      {"sim.horizon",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         c.sim.horizon = to_double(v, x);
         if (c.sim.horizon < 0.0) x.fail("must be >= 0");
       },
       [](const Cfg& c) { return format_double(c.sim.horizon); }},
      {"sim.start",
       [](Cfg& c, const std::string& v, const Ctx& x) { c.sim.start = to_double(v, x); },
       [](const Cfg& c) { return format_double(c.sim.start); }},
      {"outputs.dir",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         if (v.empty()) x.fail("must not be empty");
         c.outputs.dir = v;
       },
       [](const Cfg& c) { return c.outputs.dir; }},
      {"outputs.formats",
       [](Cfg& c, const std::string& v, const Ctx& x) {
         auto f = split_list(v);
         for (const auto& s : f) {
           if (s != "json" && s != "csv") x.fail("unknown format '" + s + "' (expected json, csv)");
         }
         c.outputs.formats = f;
       },
       [](const Cfg& c) { return join(c.outputs.formats); }},
  };
  return defs;
}

void check_potential(const Cfg& c, const std::string& origin) {
  const auto& p = c.potential;
  auto fail = [&](const std::string& msg) {
    throw Error(origin + ": potential.params: " + msg);
  };
  std::size_t want = 0;
  if (p.kind == "quadratic" || p.kind == "quartic" || p.kind == "abs") want = 1;
  if (p.kind == "double_well") want = 2;
  if (want && p.params.size() != want) {
    fail(p.kind + " takes " + std::to_string(want) + " parameter(s), got " +
         std::to_string(p.params.size()));
  }
  if (p.kind == "custom_poly" && p.params.empty()) fail("custom_poly needs at least one coefficient");
  if ((p.kind == "quadratic" || p.kind == "quartic" || p.kind == "abs") && !(p.params[0] > 0.0)) {
    fail(p.kind + " coefficient must be > 0");
  }
  if (p.kind == "double_well" && !(p.params[0] > 0.0)) fail("double_well quartic coefficient must be > 0");
}

}  // namespace

bool ExperimentConfig::wants(const std::string& format) const {
  return std::find(outputs.formats.begin(), outputs.formats.end(), format) != outputs.formats.end();
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& d : key_defs()) k.push_back(d.name);
    return k;
  }();
  return keys;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw Error(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(origin + ":" + std::to_string(line_no) + ": missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto& defs = key_defs();
    auto it = std::find_if(defs.begin(), defs.end(), [&](const KeyDef& d) { return d.name == full; });
    if (it == defs.end()) {
      std::string nearest;
      std::size_t best = std::string::npos;
      for (const auto& d : defs) {
        const std::size_t dist = edit_distance(full, d.name);
        if (dist < best) {
          best = dist;
          nearest = d.name;
        }
      }
      throw Error(origin + ":" + std::to_string(line_no) + ": unknown key '" + full +
                  "'; did you mean '" + nearest + "'?");
    }
    if (!seen.insert(full).second) {
      throw Error(origin + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
    }
    it->set(cfg, value, Ctx{origin, line_no, full});
  }
  check_potential(cfg, origin);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& d : key_defs()) {
    const auto dot = d.name.find('.');
    const std::string sec = d.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += d.name.substr(dot + 1) + " = " + d.show(cfg) + "\n";
  }
  return out;
}

Potential make_potential(const ExperimentConfig::PotentialSpec& spec) {
  const auto& p = spec.params;
  if (spec.kind == "quadratic") return Potential::quadratic(p.at(0));
  if (spec.kind == "quartic") return Potential::quartic(p.at(0));
  if (spec.kind == "double_well") return Potential::double_well(p.at(0), p.at(1));
  if (spec.kind == "abs") return Potential::abs(p.at(0));
  if (spec.kind == "custom_poly") return Potential::polynomial(p);
  throw Error("unknown potential kind '" + spec.kind + "'");
}

Lattice make_lattice(const Potential& u, double h, const std::optional<double>& radius) {
  if (radius) {
    const double steps = *radius / h;
    const int n = static_cast<int>(std::lround(steps));
    if (std::abs(steps - n) > 1e-9 * std::max(1.0, steps)) {
      throw Error("grid.radius " + format_double(*radius) + " is not a multiple of h = " +
                  format_double(h));
    }
    return Lattice::make(h, n);
  }
  const double min_radius = u.convexity_lambda ? 4.0 / std::sqrt(*u.convexity_lambda) : 4.0;
  return auto_lattice(u, h, 40.0, min_radius);
}

}  // namespace flab
