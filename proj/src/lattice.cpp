#include "flab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace flab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sg_eval(double s) {
  if (std::abs(s) < 1e-5) return 1.0 - s / 2.0 + s * s / 12.0;
  // Positive branch written with e^{-s} so that large s underflows gracefully.
  if (s > 0.0) return s * std::exp(-s) / -std::expm1(-s);
  return s / std::expm1(s);
}

double sg_deriv(double s) {
  if (std::abs(s) < 0.1) {
    const double s2 = s * s;
    return -0.5 + s / 6.0 - s * s2 / 180.0 + s * s2 * s2 / 5040.0;
  }
  const double b = sg_eval(s);
  return b * (1.0 - s - b) / s;
}

double logsumexp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

std::vector<double> eval_nodes(const Potential& u, const Lattice& lat) {
  if (!u.eval) throw Error("potential has no evaluator");
  std::vector<double> out(lat.size());
  for (int k = 0; k < lat.size(); ++k) {
    out[k] = u(lat.x(k));
    if (!std::isfinite(out[k])) {
      throw Error("potential is not finite at node x = " + std::to_string(lat.x(k)));
    }
  }
  return out;
}

}  // namespace

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                std::to_string(b) + ")");
  }
}

std::string to_string(BKind kind) {
  switch (kind) {
    case BKind::scharfetter_gummel: return "scharfetter-gummel";
    case BKind::exponential: return "exponential";
    case BKind::custom: return "custom";
  }
  return "unknown";
}

BFunction::BFunction(BKind kind, Fn eval, Fn deriv, bool lipschitz_ok, std::string tag)
    : kind_(kind), eval_(std::move(eval)), deriv_(std::move(deriv)),
      lipschitz_ok_(lipschitz_ok), tag_(std::move(tag)) {}

BFunction BFunction::scharfetter_gummel() {
  return BFunction(BKind::scharfetter_gummel, sg_eval, sg_deriv, true, "scharfetter-gummel");
}

BFunction BFunction::exponential() {
  return BFunction(
      BKind::exponential, [](double s) { return std::exp(-0.5 * s); },
      [](double s) { return -0.5 * std::exp(-0.5 * s); }, false, "exponential");
}

BFunction BFunction::custom(Fn eval, Fn deriv, bool lipschitz_ok, std::string tag) {
  if (!eval || !deriv) throw Error("custom B function needs both B and B'");
  const double b0 = eval(0.0);
  if (!(std::abs(b0 - 1.0) <= 1e-14)) {
    throw Error("custom B function fails B(0) = 1 (got " + std::to_string(b0) + ")");
  }
  return BFunction(BKind::custom, std::move(eval), std::move(deriv), lipschitz_ok, std::move(tag));
}

BFunction make_b_function(std::string_view kind, const std::map<std::string, double>& params) {
  if (!params.empty()) {
    throw Error("B function '" + std::string(kind) + "' takes no parameters, got '" +
                params.begin()->first + "'");
  }
  if (kind == "scharfetter-gummel") return BFunction::scharfetter_gummel();
  if (kind == "exponential") return BFunction::exponential();
  throw Error("unknown B function kind '" + std::string(kind) +
              "' (expected scharfetter-gummel or exponential)");
}

std::vector<double> symmetric_grid(double s_max, int points) {
  if (points < 2 || !(s_max > 0.0)) throw Error("symmetric_grid: need s_max > 0 and >= 2 points");
  std::vector<double> s(points);
  for (int k = 0; k < points; ++k) {
    s[k] = -s_max + 2.0 * s_max * k / (points - 1);
  }
  if (points % 2 == 1) s[points / 2] = 0.0;
  return s;
}

BValidationReport validate_b(const BFunction& b, const std::vector<double>& s_grid) {
  BValidationReport rep;

  rep.unit_at_zero.max_residual = std::abs(b(0.0) - 1.0);
  rep.unit_at_zero.pass = rep.unit_at_zero.max_residual <= 1e-14;

  std::vector<double> s = s_grid;
  std::sort(s.begin(), s.end());

  bool positive = true;
  double neg = 0.0;
  for (double si : s) {
    const double v = b(si);
    if (!(v > 0.0) || !std::isfinite(v)) {
      positive = false;
      if (std::isfinite(v)) neg = std::max(neg, -v);
    }
  }
  rep.positive = {positive, neg};

  double log_res = 0.0;
  for (double si : s) {
    const double bp = b(si);
    const double bm = b(-si);
    if (!(bp > 0.0) || !(bm > 0.0) || !std::isfinite(bp) || !std::isfinite(bm)) {
      log_res = kInf;
      break;
    }
    log_res = std::max(log_res, std::abs(std::log(bm) - std::log(bp) - si));
  }
  rep.log_identity = {log_res <= 1e-12, log_res};

  double rise = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double d = b(s[k + 1]) - b(s[k]);
    if (std::isnan(d)) {
      rise = kInf;
      break;
    }
    rise = std::max(rise, d);
  }
  rep.monotone = {rise <= 0.0, rise};

  const double delta = 1e-4;
  const double slope = (b(delta) - b(-delta)) / (2.0 * delta);
  rep.slope_at_zero.max_residual = std::abs(slope + 0.5);
  rep.slope_at_zero.pass = rep.slope_at_zero.max_residual <= 1e-6;

  double lip = 0.0;
  for (double si : s) lip = std::max(lip, std::abs(b.deriv(si)));
  rep.lipschitz = {b.lipschitz_ok(), lip};
  return rep;
}

// ---------------------------------------------------------------------------

Potential Potential::quadratic(double c) {
  Potential p;
  p.eval = [c](double x) { return c * x * x; };
  p.deriv2 = [c](double) { return 2.0 * c; };
  if (c > 0.0) {
    p.convexity_lambda = 2.0 * c;
    p.drift = DriftConstants{2.0 * c, 1.0};
  }
  p.tag = "quadratic(" + std::to_string(c) + ")";
  return p;
}

Potential Potential::quartic(double c) {
  Potential p;
  p.eval = [c](double x) { return c * x * x * x * x; };
  p.deriv2 = [c](double x) { return 12.0 * c * x * x; };
  if (c > 0.0) p.drift = DriftConstants{4.0 * c, 1.0};
  p.tag = "quartic(" + std::to_string(c) + ")";
  return p;
}

Potential Potential::double_well(double a, double b) {
  Potential p;
  p.eval = [a, b](double x) { return a * x * x * x * x - b * x * x; };
  p.deriv2 = [a, b](double x) { return 12.0 * a * x * x - 2.0 * b; };
  if (a > 0.0) {
    // 4a x^4 - 2b x^2 >= 2a x^2 once x^2 >= (a + b) / (2a)
    p.drift = DriftConstants{2.0 * a, std::sqrt(std::max(1.0, (a + b) / (2.0 * a)))};
  }
  p.tag = "double_well(" + std::to_string(a) + "," + std::to_string(b) + ")";
  return p;
}

Potential Potential::abs(double c) {
  Potential p;
  p.eval = [c](double x) { return c * std::abs(x); };
  p.tag = "abs(" + std::to_string(c) + ")";
  return p;
}

Potential Potential::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  std::vector<double> d2;
  for (std::size_t k = 2; k < coeffs.size(); ++k) {
    d2.push_back(static_cast<double>(k * (k - 1)) * coeffs[k]);
  }
  auto horner = [](const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  Potential p;
  p.eval = [coeffs, horner](double x) { return horner(coeffs, x); };
  p.deriv2 = [d2, horner](double x) { return d2.empty() ? 0.0 : horner(d2, x); };
  if (coeffs.size() == 3 && coeffs[2] > 0.0) {
    const double c1 = std::abs(coeffs[1]);
    p.convexity_lambda = 2.0 * coeffs[2];
    p.drift = DriftConstants{coeffs[2], c1 / coeffs[2] + 1.0};
  }
  p.tag = "custom_poly(";
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    p.tag += (k ? "," : "") + std::to_string(coeffs[k]);
  }
  p.tag += ")";
  return p;
}

Potential Potential::flat() {
  Potential p;
  p.eval = [](double) { return 0.0; };
  p.deriv2 = [](double) { return 0.0; };
  p.tag = "flat";
  return p;
}

Potential Potential::from_function(std::function<double(double)> u, std::string tag) {
  Potential p;
  p.eval = std::move(u);
  p.tag = std::move(tag);
  return p;
}

Potential Potential::shifted(double c) const {
  Potential p = *this;
  auto base = eval;
  p.eval = [base, c](double x) { return base(x) + c; };
  p.tag = tag + "+" + std::to_string(c);
  return p;
}

PotentialReport validate_potential(const Potential& u, const std::vector<double>& samples) {
  PotentialReport rep{{true, 0.0}, {true, 0.0}};
  if (u.drift) {
    double worst = kInf;
    for (double x : samples) {
      if (std::abs(x) <= u.drift->m) continue;
      const double step = 1e-5 * std::max(1.0, std::abs(x));
      const double du = (u(x + step) - u(x - step)) / (2.0 * step);
      worst = std::min(worst, (x * du - u.drift->a * x * x) / (x * x));
    }
    if (worst == kInf) worst = 0.0;
    rep.drift = {worst >= -1e-6, worst};
  }
  if (u.convexity_lambda) {
    double worst = kInf;
    for (double x : samples) {
      double d2;
      if (u.deriv2) {
        d2 = u.deriv2(x);
      } else {
        const double step = 1e-4 * std::max(1.0, std::abs(x));
        d2 = (u(x + step) - 2.0 * u(x) + u(x - step)) / (step * step);
      }
      worst = std::min(worst, d2 - *u.convexity_lambda);
    }
    if (worst == kInf) worst = 0.0;
    rep.convexity = {worst >= -1e-9, worst};
  }
  return rep;
}

// ---------------------------------------------------------------------------

Lattice Lattice::make(double h, int n_half) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("lattice step h must be positive and finite");
  if (n_half < 0) throw Error("lattice half-width N must be non-negative");
  return Lattice{h, n_half};
}

std::vector<double> Lattice::nodes() const {
  std::vector<double> out(size());
  for (int k = 0; k < size(); ++k) out[k] = x(k);
  return out;
}

Lattice auto_lattice(const Potential& u, double h, double depth, double min_radius) {
  Lattice::make(h, 0);
  const int min_n = static_cast<int>(std::ceil(min_radius / h - 1e-9));
  double lowest = u(0.0);
  constexpr int kMaxHalfWidth = 5'000'000;
  for (int n = 1; n <= kMaxHalfWidth; ++n) {
    const double right = u(n * h);
    const double left = u(-n * h);
    if (!std::isfinite(right) || !std::isfinite(left)) {
      throw Error("potential is not finite while sizing the window");
    }
    lowest = std::min({lowest, right, left});
    if (n >= min_n && right - lowest >= depth && left - lowest >= depth) {
      return Lattice::make(h, n);
    }
  }
  throw Error("potential does not grow by " + std::to_string(depth) +
              " within the maximum window; choose an explicit radius");
}

double RateField::max_exit_rate() const {
  double mx = 0.0;
  for (int k = 0; k < size(); ++k) mx = std::max(mx, alpha[k] + beta[k]);
  return mx;
}

RateField build_rates(const Potential& u, const BFunction& b, const Lattice& lat) {
  const auto uv = eval_nodes(u, lat);
  const int n = lat.size();
  const double inv_h2 = 1.0 / (lat.h * lat.h);
  RateField r;
  r.h = lat.h;
  r.alpha.assign(n, 0.0);
  r.beta.assign(n, 0.0);
  for (int k = 0; k + 1 < n; ++k) r.alpha[k] = inv_h2 * b(uv[k + 1] - uv[k]);
  for (int k = 1; k < n; ++k) r.beta[k] = inv_h2 * b(uv[k - 1] - uv[k]);
  for (int k = 0; k < n; ++k) {
    if (!std::isfinite(r.alpha[k]) || !std::isfinite(r.beta[k]) || r.alpha[k] < 0.0 ||
        r.beta[k] < 0.0) {
      throw Error("rate at x = " + std::to_string(lat.x(k)) + " is negative or not finite");
    }
  }
  return r;
}

StationaryMeasure stationary_measure(const Potential& u, const Lattice& lat) {
  const auto uv = eval_nodes(u, lat);
  StationaryMeasure m;
  m.log_weights.resize(uv.size());
  for (std::size_t k = 0; k < uv.size(); ++k) m.log_weights[k] = -uv[k];
  const double log_z = logsumexp(m.log_weights);
  m.weights.resize(uv.size());
  for (std::size_t k = 0; k < uv.size(); ++k) {
    m.log_weights[k] -= log_z;
    m.weights[k] = std::exp(m.log_weights[k]);
    if (m.weights[k] == 0.0) {
      throw Error("stationary weight underflows at x = " + std::to_string(lat.x(int(k))) +
                  "; the window is too wide for this potential");
    }
  }
  // Second pass pins the sum to 1 at rounding level.
  const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
  const double log_total = std::log(total);
  for (std::size_t k = 0; k < uv.size(); ++k) {
    m.weights[k] /= total;
    m.log_weights[k] -= log_total;
  }
  return m;
}

double check_detailed_balance(const RateField& r, const StationaryMeasure& m) {
  require_same_size(r.alpha.size(), m.weights.size(), "check_detailed_balance");
  double worst = 0.0;
  for (int k = 1; k < r.size(); ++k) {
    const double in = r.alpha[k - 1] * m.weights[k - 1];
    const double out = r.beta[k] * m.weights[k];
    const double res = out > 0.0 ? std::abs(in - out) / out : (in == 0.0 ? 0.0 : kInf);
    worst = std::max(worst, res);
  }
  return worst;
}

Summability summability_report(const RateField& r, const StationaryMeasure& m) {
  require_same_size(r.alpha.size(), m.weights.size(), "summability_report");
  const int n = r.size();
  const int tail = n >= 2 ? (n + 19) / 20 : 0;
  Summability s;
  double tail_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double c = (r.alpha[k] + r.beta[k]) * m.weights[k];
    s.value += c;
    if (k < tail || k >= n - tail) tail_sum += c;
  }
  s.tail_fraction = s.value > 0.0 ? tail_sum / s.value : 0.0;
  return s;
}

MeanVar mean_var(const StationaryMeasure& m, const GridFunction& f) {
  require_same_size(m.weights.size(), f.size(), "mean_var");
  MeanVar out;
  out.mean = expect(m, f);
  double v = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double d = f[k] - out.mean;
    v += m.weights[k] * d * d;
  }
  out.variance = std::max(0.0, v);
  return out;
}

double dot(const GridFunction& f, const GridFunction& g) {
  require_same_size(f.size(), g.size(), "dot");
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += f[k] * g[k];
  return acc;
}

double expect(const StationaryMeasure& m, const GridFunction& f) { return dot(m.weights, f); }

}  // namespace flab
