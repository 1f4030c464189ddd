#include "flab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flab/gamma.hpp"

namespace flab {

SymmetricTridiagonal symmetrize(const RateField& r, const StationaryMeasure& m) {
  require_same_size(r.alpha.size(), m.weights.size(), "symmetrize");
  const double db = check_detailed_balance(r, m);
  if (!(db <= 1e-10)) {
    throw Error("symmetrize: detailed balance residual " + std::to_string(db) +
                " exceeds 1e-10; rates and measure do not match");
  }
  const int n = r.size();
  SymmetricTridiagonal s;
  s.diag.resize(n);
  s.offdiag.resize(n > 0 ? n - 1 : 0);
  s.sqrt_weights.resize(n);
  for (int k = 0; k < n; ++k) {
    s.diag[k] = -(r.alpha[k] + r.beta[k]);
    s.sqrt_weights[k] = std::exp(0.5 * m.log_weights[k]);
  }
  for (int k = 0; k + 1 < n; ++k) s.offdiag[k] = std::sqrt(r.alpha[k] * r.beta[k + 1]);
  return s;
}

std::vector<double> offdiag_from_measure(const RateField& r, const StationaryMeasure& m) {
  require_same_size(r.alpha.size(), m.weights.size(), "offdiag_from_measure");
  std::vector<double> out(r.size() > 0 ? r.size() - 1 : 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = r.alpha[k] * std::exp(0.5 * (m.log_weights[k] - m.log_weights[k + 1]));
  }
  return out;
}

double symmetry_residual(const RateField& r, const StationaryMeasure& m) {
  require_same_size(r.alpha.size(), m.weights.size(), "symmetry_residual");
  double worst = 0.0;
  for (int k = 0; k + 1 < r.size(); ++k) {
    const double half_log_ratio = 0.5 * (m.log_weights[k] - m.log_weights[k + 1]);
    const double upper = r.alpha[k] * std::exp(half_log_ratio);
    const double lower = r.beta[k + 1] * std::exp(-half_log_ratio);
    worst = std::max(worst, std::abs(upper - lower) / std::max({1.0, upper, lower}));
  }
  return worst;
}

double zero_mode_residual(const SymmetricTridiagonal& s) {
  const int n = s.size();
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    double v = s.diag[k] * s.sqrt_weights[k];
    if (k > 0) v += s.offdiag[k - 1] * s.sqrt_weights[k - 1];
    if (k + 1 < n) v += s.offdiag[k] * s.sqrt_weights[k + 1];
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

int sturm_count_below(const SymmetricTridiagonal& s, double x) {
  const int n = s.size();
  double scale = 0.0;
  for (int k = 0; k < n; ++k) scale = std::max(scale, std::abs(s.diag[k]));
  const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, scale * scale);
  int count = 0;
  double q = 1.0;
  for (int k = 0; k < n; ++k) {
    // -S has diagonal -diag and off-diagonal magnitude offdiag.
    q = -s.diag[k] - x - (k > 0 ? s.offdiag[k - 1] * s.offdiag[k - 1] / q : 0.0);
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

std::vector<double> solve_tridiagonal_pivoted(std::vector<double> sub, std::vector<double> diag,
                                              std::vector<double> sup, std::vector<double> rhs) {
  const int n = static_cast<int>(diag.size());
  if (n == 0) return {};
  std::vector<double> sup2(n > 2 ? n - 2 : 0, 0.0);
  double scale = 0.0;
  for (double d : diag) scale = std::max(scale, std::abs(d));
  const double tiny = std::max(scale, 1.0) * std::numeric_limits<double>::epsilon();
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(diag[i]) >= std::abs(sub[i])) {
      if (diag[i] == 0.0) diag[i] = tiny;
      const double fact = sub[i] / diag[i];
      diag[i + 1] -= fact * sup[i];
      rhs[i + 1] -= fact * rhs[i];
    } else {
      const double fact = diag[i] / sub[i];
      diag[i] = sub[i];
      const double tmp = sup[i];
      sup[i] = diag[i + 1];
      diag[i + 1] = tmp - fact * diag[i + 1];
      if (i + 2 < n) {
        sup2[i] = sup[i + 1];
        sup[i + 1] = -fact * sup[i + 1];
      }
      std::swap(rhs[i], rhs[i + 1]);
      rhs[i + 1] -= fact * rhs[i];
    }
  }
  if (diag[n - 1] == 0.0) diag[n - 1] = tiny;
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double v = rhs[i];
    if (i + 1 < n) v -= sup[i] * x[i + 1];
    if (i + 2 < n) v -= sup2[i] * x[i + 2];
    x[i] = v / diag[i];
  }
  return x;
}

namespace {

void project_out(std::vector<double>& v, const std::vector<double>& unit) {
  double c = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) c += v[k] * unit[k];
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * unit[k];
}

double normalize(std::vector<double>& v) {
  double nrm = 0.0;
  for (double x : v) nrm += x * x;
  nrm = std::sqrt(nrm);
  if (nrm > 0.0) {
    for (double& x : v) x /= nrm;
  }
  return nrm;
}

}  // namespace

SpectralGap spectral_gap(const SymmetricTridiagonal& s, double tol) {
  const int n = s.size();
  if (n < 2) throw Error("spectral_gap: the window needs at least two nodes");

  double hi = 0.0;
  for (int k = 0; k < n; ++k) {
    double radius = std::abs(s.diag[k]);
    if (k > 0) radius += std::abs(s.offdiag[k - 1]);
    if (k + 1 < n) radius += std::abs(s.offdiag[k]);
    hi = std::max(hi, radius);
  }
  double lo = 0.0;
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count_below(s, mid) >= 2) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  SpectralGap out;
  out.lower = lo;
  out.upper = hi;
  out.gap = 0.5 * (lo + hi);

  // Inverse iteration in the symmetric frame, starting from a generic vector
  // with the zero mode removed.
  std::vector<double> unit = s.sqrt_weights;
  normalize(unit);
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) {
    v[k] = s.sqrt_weights[k] * ((k - 0.5 * (n - 1)) + 0.3 * std::sin(1.7 * k + 0.2));
  }
  project_out(v, unit);
  normalize(v);
  std::vector<double> sub(n - 1), sup(n - 1), diag(n);
  for (int pass = 0; pass < 3; ++pass) {
    for (int k = 0; k < n; ++k) diag[k] = -s.diag[k] - out.gap;
    for (int k = 0; k + 1 < n; ++k) sub[k] = sup[k] = -s.offdiag[k];
    std::vector<double> next = solve_tridiagonal_pivoted(sub, diag, sup, v);
    project_out(next, unit);
    normalize(next);
    double dotp = 0.0;
    for (int k = 0; k < n; ++k) dotp += next[k] * v[k];
    v = std::move(next);
    if (std::abs(std::abs(dotp) - 1.0) < 1e-15) break;
  }
  double orient = 0.0;
  for (int k = 0; k < n; ++k) orient += v[k] * (k - 0.5 * (n - 1));
  const double sign = orient < 0.0 ? -1.0 : 1.0;
  out.eigenfunction.resize(n);
  for (int k = 0; k < n; ++k) out.eigenfunction[k] = sign * v[k] / s.sqrt_weights[k];
  return out;
}

double rayleigh_quotient(const RateField& r, const StationaryMeasure& m, const GridFunction& f) {
  const MeanVar mv = mean_var(m, f);
  const bool constant =
      std::all_of(f.begin(), f.end(), [&](double v) { return v == f.front(); });
  if (constant || !(mv.variance > 0.0)) {
    throw Error("rayleigh_quotient: f has zero variance under pi");
  }
  return dirichlet_energy(r, m, f) / mv.variance;
}

}  // namespace flab
