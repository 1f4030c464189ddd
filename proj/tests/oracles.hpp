// Independent reference computations for the tests. Nothing here calls the
// library routines under test beyond building rates and lattices.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "flab/lattice.hpp"

namespace oracle {

using flab::GridFunction;

/// Dense generator: (A f)_i = alpha_i (f_{i+1} - f_i) + beta_i (f_{i-1} - f_i).
inline Eigen::MatrixXd generator_matrix(const flab::RateField& r) {
  const int n = r.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) a(i, i + 1) = r.alpha[i];
    if (i > 0) a(i, i - 1) = r.beta[i];
    a(i, i) = -(r.alpha[i] + r.beta[i]);
  }
  return a;
}

/// e^{-u(x_i)} / sum, accumulated in long double.
inline std::vector<double> brute_pi(const flab::Potential& u, const flab::Lattice& lat) {
  std::vector<long double> w(lat.size());
  long double lo = 1e300L;
  for (int k = 0; k < lat.size(); ++k) lo = std::min(lo, static_cast<long double>(u(lat.x(k))));
  long double z = 0.0L;
  for (int k = 0; k < lat.size(); ++k) {
    w[k] = std::exp(-(static_cast<long double>(u(lat.x(k))) - lo));
    z += w[k];
  }
  std::vector<double> out(lat.size());
  for (int k = 0; k < lat.size(); ++k) out[k] = static_cast<double>(w[k] / z);
  return out;
}

/// Eigenvalues of -L in ascending order from a dense symmetric eigensolve of
/// D^{1/2} A D^{-1/2}, with pi from brute_pi.
inline std::vector<double> dense_spectrum(const flab::RateField& r, const flab::Potential& u,
                                          const flab::Lattice& lat) {
  const Eigen::MatrixXd a = generator_matrix(r);
  const std::vector<double> pi = brute_pi(u, lat);
  const int n = r.size();
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = a(i, j) * std::sqrt(pi[i] / pi[j]);
  }
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = -es.eigenvalues()(i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double dense_gap(const flab::RateField& r, const flab::Potential& u, const flab::Lattice& lat) {
  return dense_spectrum(r, u, lat).at(1);
}

inline double variance(const std::vector<double>& pi, const GridFunction& f) {
  long double mean = 0.0L;
  for (std::size_t k = 0; k < f.size(); ++k) mean += pi[k] * static_cast<long double>(f[k]);
  long double v = 0.0L;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const long double d = f[k] - mean;
    v += pi[k] * d * d;
  }
  return static_cast<double>(v);
}

/// Dirichlet form as a sum over bonds: sum_i alpha_i pi_i (f_{i+1} - f_i)^2.
inline double bond_energy(const flab::RateField& r, const std::vector<double>& pi,
                          const GridFunction& f) {
  long double e = 0.0L;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    const long double d = f[k + 1] - f[k];
    e += r.alpha[k] * static_cast<long double>(pi[k]) * d * d;
  }
  return static_cast<double>(e);
}

/// A mix of rough, smooth and polynomial test functions.
inline GridFunction random_function(std::mt19937_64& rng, const flab::Lattice& lat) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = lat.size();
  GridFunction f(n);
  const int mode = pick(rng);
  const double span = std::max(lat.radius(), lat.h);
  if (mode == 0) {
    for (auto& v : f) v = g(rng);
  } else if (mode == 1) {
    const double a = g(rng), b = g(rng), w = 0.5 + std::abs(g(rng));
    for (int k = 0; k < n; ++k) f[k] = a * std::sin(w * lat.x(k)) + b * std::cos(0.7 * w * lat.x(k));
  } else if (mode == 2) {
    const double c1 = g(rng), c2 = g(rng), c3 = g(rng);
    for (int k = 0; k < n; ++k) {
      const double x = lat.x(k) / span;
      f[k] = c1 * x + c2 * x * x + c3 * x * x * x;
    }
  } else {
    double acc = 0.0;
    for (auto& v : f) v = (acc += g(rng));
  }
  return f;
}

/// Composite Simpson rule on [0, 1] with `points` (odd) nodes.
template <class F>
double simpson01(F&& fn, int points = 65) {
  const int m = points - 1;
  const double h = 1.0 / m;
  double acc = fn(0.0) + fn(1.0);
  for (int k = 1; k < m; ++k) acc += (k % 2 ? 4.0 : 2.0) * fn(k * h);
  return acc * h / 3.0;
}

}  // namespace oracle
