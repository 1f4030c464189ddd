#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flab/lattice.hpp"

namespace flab {

/// Experiment description read from an INI-like file:
///
///   # comment
///   [section]
///   key = value          lists are comma separated
///
/// Every key is optional; see `config_keys()` for the full set.
struct ExperimentConfig {
  struct PotentialSpec {
    std::string kind = "quadratic";  // quadratic | quartic | double_well | abs | custom_poly
    std::vector<double> params{0.5};
    bool operator==(const PotentialSpec&) const = default;
  } potential;

  struct Scheme {
    std::string b_function = "scharfetter-gummel";
    double s_max = 30.0;   // validate-b sample range
    int s_points = 2001;
    bool operator==(const Scheme&) const = default;
  } scheme;

  struct Grid {
    double h = 0.1;
    std::optional<double> radius;  // empty means auto
    std::vector<double> h_list{0.5, 0.2, 0.1, 0.05};
    bool operator==(const Grid&) const = default;
  } grid;

  struct Time {
    double horizon = 8.0;
    std::optional<double> dt;  // empty means auto
    std::string method = "trapezoidal";
    double start = 2.0;   // position of the initial point mass
    int outputs = 64;
    double burn_in = 0.25;
    bool operator==(const Time&) const = default;
  } time;

  struct Sim {
    int n_paths = 200000;
    std::uint64_t seed = 42;
    double horizon = 10.0;
    double start = 0.0;
    bool operator==(const Sim&) const = default;
  } sim;

  struct Outputs {
    std::string dir = "flab_out";
    std::vector<std::string> formats{"json", "csv"};
    bool operator==(const Outputs&) const = default;
  } outputs;

  bool operator==(const ExperimentConfig&) const = default;

  bool wants(const std::string& format) const;
};

/// All accepted dotted keys, e.g. "grid.h".
const std::vector<std::string>& config_keys();

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "config");
ExperimentConfig parse_config(const std::string& path);

/// Fully resolved config in the same grammar; parses back to an equal value.
std::string to_ini(const ExperimentConfig& cfg);

std::size_t edit_distance(const std::string& a, const std::string& b);

Potential make_potential(const ExperimentConfig::PotentialSpec& spec);

/// Explicit radius, or the smallest grid multiple R with u(+-R) - min u >= 40
/// and R >= 4 / sqrt(lambda) (R >= 4 without a convexity constant).
Lattice make_lattice(const Potential& u, double h, const std::optional<double>& radius);

}  // namespace flab
