#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flab {

/// Raised for contract violations (bad input, non-finite values, broken preconditions).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real values on the lattice nodes, stored left to right (node i = -N .. N).
using GridFunction = std::vector<double>;

// ---------------------------------------------------------------------------
// Flux weight B(s)
// ---------------------------------------------------------------------------

enum class BKind { scharfetter_gummel, exponential, custom };

std::string to_string(BKind kind);

/// Weight function B(s) of a two-point flux scheme together with B'(s).
///
/// Builtins:
///  - scharfetter-gummel: B(s) = s / (e^s - 1), series branch for |s| < 1e-5
///  - exponential:        B(s) = e^{-s/2}, not globally Lipschitz
class BFunction {
 public:
  using Fn = std::function<double(double)>;

  static BFunction scharfetter_gummel();
  static BFunction exponential();

  /// User supplied pair. Rejected unless B(0) = 1 to 1e-14 and B(0) > 0.
  static BFunction custom(Fn eval, Fn deriv, bool lipschitz_ok, std::string tag = "custom");

  double operator()(double s) const { return eval_(s); }
  double deriv(double s) const { return deriv_(s); }

  BKind kind() const { return kind_; }
  bool lipschitz_ok() const { return lipschitz_ok_; }
  const std::string& tag() const { return tag_; }

 private:
  BFunction(BKind kind, Fn eval, Fn deriv, bool lipschitz_ok, std::string tag);

  BKind kind_;
  Fn eval_;
  Fn deriv_;
  bool lipschitz_ok_;
  std::string tag_;
};

/// Builds a builtin B by name ("scharfetter-gummel" | "exponential").
/// The builtins take no parameters; any key in `params` is rejected.
BFunction make_b_function(std::string_view kind, const std::map<std::string, double>& params = {});

struct PropertyCheck {
  bool pass = false;
  double max_residual = 0.0;
};

/// Outcome of screening B against the structural assumptions. Failures are
/// recorded here, never thrown.
struct BValidationReport {
  PropertyCheck unit_at_zero;    // |B(0) - 1| <= 1e-14
  PropertyCheck positive;        // residual = -min B (<= 0 passes)
  PropertyCheck log_identity;    // |ln B(-s) - ln B(s) - s| <= 1e-12
  PropertyCheck monotone;        // largest increase between sorted neighbours
  PropertyCheck slope_at_zero;   // |central difference B'(0) + 1/2| <= 1e-6
  PropertyCheck lipschitz;       // declared flag; residual = sampled max |B'|

  bool all_pass() const {
    return unit_at_zero.pass && positive.pass && log_identity.pass && monotone.pass &&
           slope_at_zero.pass && lipschitz.pass;
  }
};

BValidationReport validate_b(const BFunction& b, const std::vector<double>& s_grid);

/// Symmetric sample grid on [-s_max, s_max] with `points` nodes.
std::vector<double> symmetric_grid(double s_max, int points);

// ---------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------

struct DriftConstants {
  double a;  // x u'(x) >= a x^2
  double m;  // for |x| > m
};

struct Potential {
  std::function<double(double)> eval;
  std::function<double(double)> deriv2;  // may be empty
  std::optional<DriftConstants> drift;
  std::optional<double> convexity_lambda;  // u'' >= lambda everywhere
  std::string tag;

  double operator()(double x) const { return eval(x); }

  /// u(x) = c x^2
  static Potential quadratic(double c);
  /// u(x) = c x^4
  static Potential quartic(double c);
  /// u(x) = a x^4 - b x^2
  static Potential double_well(double a, double b);
  /// u(x) = c |x|
  static Potential abs(double c);
  /// u(x) = sum_k coeffs[k] x^k
  static Potential polynomial(std::vector<double> coeffs);
  /// u(x) = 0
  static Potential flat();
  /// Arbitrary u without side information.
  static Potential from_function(std::function<double(double)> u, std::string tag);

  /// Returns a copy of this potential shifted by a constant.
  Potential shifted(double c) const;
};

struct PotentialReport {
  PropertyCheck drift;      // min over |x| > M of x u'(x) - a x^2 (>= 0 passes)
  PropertyCheck convexity;  // min over samples of u''(x) - lambda
};

/// Checks the optional side information of `u` on `samples`. Absent
/// constants are reported as passing with zero residual.
PotentialReport validate_potential(const Potential& u, const std::vector<double>& samples);

// ---------------------------------------------------------------------------
// Lattice, rates, stationary measure
// ---------------------------------------------------------------------------

/// Truncated uniform grid x_i = i h for i in [-N, N] with reflecting ends.
struct Lattice {
  double h = 0.0;
  int n_half = 0;

  static Lattice make(double h, int n_half);

  int size() const { return 2 * n_half + 1; }
  /// Position of storage slot k (0-based, left to right).
  double x(int k) const { return (k - n_half) * h; }
  /// Storage slot of signed node index i.
  int slot(int i) const { return i + n_half; }
  double radius() const { return n_half * h; }
  std::vector<double> nodes() const;
};

/// Smallest window with u(x_{+-N}) - min u >= `depth` and N h >= `min_radius`.
Lattice auto_lattice(const Potential& u, double h, double depth = 40.0, double min_radius = 0.0);

/// Jump rates: alpha to the right, beta to the left, both in 1/time.
struct RateField {
  std::vector<double> alpha;
  std::vector<double> beta;
  double h = 0.0;

  int size() const { return static_cast<int>(alpha.size()); }
  double max_exit_rate() const;
};

RateField build_rates(const Potential& u, const BFunction& b, const Lattice& lat);

struct StationaryMeasure {
  std::vector<double> weights;
  std::vector<double> log_weights;

  int size() const { return static_cast<int>(weights.size()); }
};

StationaryMeasure stationary_measure(const Potential& u, const Lattice& lat);

/// Max over neighbours of |alpha_{i-1} pi_{i-1} - beta_i pi_i| / (beta_i pi_i).
double check_detailed_balance(const RateField& r, const StationaryMeasure& m);

struct Summability {
  double value = 0.0;          // sum (alpha_i + beta_i) pi_i
  double tail_fraction = 0.0;  // share of the outermost 10% of nodes
};

Summability summability_report(const RateField& r, const StationaryMeasure& m);

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

MeanVar mean_var(const StationaryMeasure& m, const GridFunction& f);

/// <f, g> without weights.
double dot(const GridFunction& f, const GridFunction& g);
/// <f, pi>.
double expect(const StationaryMeasure& m, const GridFunction& f);

void require_same_size(std::size_t a, std::size_t b, const char* what);

}  // namespace flab
