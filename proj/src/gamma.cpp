#include "flab/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Forward difference with a zero ghost past the right edge; callers only use
// it where the matching rate is nonzero.
inline double dplus(const GridFunction& f, int k) {
  return k + 1 < static_cast<int>(f.size()) ? f[k + 1] - f[k] : 0.0;
}
inline double dminus(const GridFunction& f, int k) { return k > 0 ? f[k] - f[k - 1] : 0.0; }

}  // namespace

GridFunction apply_generator(const RateField& r, const GridFunction& f) {
  require_same_size(r.alpha.size(), f.size(), "apply_generator");
  const int n = r.size();
  GridFunction out(n);
  for (int k = 0; k < n; ++k) out[k] = r.alpha[k] * dplus(f, k) - r.beta[k] * dminus(f, k);
  return out;
}

GridFunction apply_forward(const RateField& r, const GridFunction& rho) {
  require_same_size(r.alpha.size(), rho.size(), "apply_forward");
  const int n = r.size();
  GridFunction out(n);
  for (int k = 0; k < n; ++k) {
    const double from_left = k > 0 ? r.alpha[k - 1] * rho[k - 1] : 0.0;
    const double from_right = k + 1 < n ? r.beta[k + 1] * rho[k + 1] : 0.0;
    out[k] = (from_left - r.beta[k] * rho[k]) - (r.alpha[k] * rho[k] - from_right);
  }
  return out;
}

GridFunction gamma(const RateField& r, const GridFunction& f, const GridFunction& g) {
  require_same_size(r.alpha.size(), f.size(), "gamma");
  require_same_size(f.size(), g.size(), "gamma");
  const int n = r.size();
  GridFunction out(n);
  for (int k = 0; k < n; ++k) {
    out[k] = 0.5 * r.alpha[k] * dplus(f, k) * dplus(g, k) +
             0.5 * r.beta[k] * dminus(f, k) * dminus(g, k);
  }
  return out;
}

GridFunction gamma2_first_order(const RateField& r, const GridFunction& f, const GridFunction& g) {
  require_same_size(r.alpha.size(), f.size(), "gamma2_first_order");
  require_same_size(f.size(), g.size(), "gamma2_first_order");
  const int n = r.size();
  const auto& a = r.alpha;
  const auto& b = r.beta;
  GridFunction out(n, kNaN);
  for (int k = kGamma2Margin; k < n - kGamma2Margin; ++k) {
    const double plus_coef = 3.0 * (b[k + 1] - b[k]) - (a[k + 1] - a[k]);
    const double minus_coef = (b[k] - b[k - 1]) - 3.0 * (a[k] - a[k - 1]);
    out[k] = 0.25 * a[k] * plus_coef * dplus(f, k) * dplus(g, k) +
             0.25 * b[k] * minus_coef * dminus(f, k) * dminus(g, k);
  }
  return out;
}

GridFunction gamma2_closed(const RateField& r, const GridFunction& f, const GridFunction& g) {
  GridFunction out = gamma2_first_order(r, f, g);
  const int n = r.size();
  const auto& a = r.alpha;
  const auto& b = r.beta;
  for (int k = kGamma2Margin; k < n - kGamma2Margin; ++k) {
    const double ppf = f[k + 2] - 2.0 * f[k + 1] + f[k];
    const double ppg = g[k + 2] - 2.0 * g[k + 1] + g[k];
    const double mmf = f[k] - 2.0 * f[k - 1] + f[k - 2];
    const double mmg = g[k] - 2.0 * g[k - 1] + g[k - 2];
    const double pmf = f[k + 1] - 2.0 * f[k] + f[k - 1];
    const double pmg = g[k + 1] - 2.0 * g[k] + g[k - 1];
    out[k] += 0.25 * a[k] * a[k + 1] * ppf * ppg + 0.25 * b[k] * b[k - 1] * mmf * mmg +
              0.5 * a[k] * b[k] * pmf * pmg;
  }
  return out;
}

GridFunction gamma2_definitional(const RateField& r, const GridFunction& f, const GridFunction& g) {
  const GridFunction lf = apply_generator(r, f);
  const GridFunction lg = apply_generator(r, g);
  const GridFunction l_gamma = apply_generator(r, gamma(r, f, g));
  const GridFunction g_f_lg = gamma(r, f, lg);
  const GridFunction g_lf_g = gamma(r, lf, g);
  GridFunction out(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    out[k] = 0.5 * (l_gamma[k] - g_f_lg[k] - g_lf_g[k]);
  }
  return out;
}

GridFunction quotient_defect(const RateField& r, const GridFunction& f, const GridFunction& w) {
  require_same_size(r.alpha.size(), f.size(), "quotient_defect");
  require_same_size(f.size(), w.size(), "quotient_defect");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!(w[k] > 0.0)) throw Error("quotient_defect: W must be positive at every node");
  }
  const int n = r.size();
  GridFunction out(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    if (k + 1 < n) {
      const double num = f[k + 1] * w[k] - f[k] * w[k + 1];
      acc += r.alpha[k] * num * num / (w[k] * w[k + 1]);
    }
    if (k > 0) {
      const double num = f[k - 1] * w[k] - f[k] * w[k - 1];
      acc += r.beta[k] * num * num / (w[k] * w[k - 1]);
    }
    out[k] = -0.5 * acc;
  }
  return out;
}

double dirichlet_energy(const RateField& r, const StationaryMeasure& m, const GridFunction& f) {
  return expect(m, gamma(r, f, f));
}

double dirichlet_identity_check(const RateField& r, const StationaryMeasure& m,
                                const GridFunction& f) {
  const double energy = dirichlet_energy(r, m, f);
  const GridFunction lf = apply_generator(r, f);
  double cross = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) cross += m.weights[k] * f[k] * lf[k];
  return std::abs(energy + cross) / std::max(energy, 1e-300);
}

}  // namespace flab
