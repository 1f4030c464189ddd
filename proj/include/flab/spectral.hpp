#pragma once

#include "flab/lattice.hpp"

namespace flab {

/// S = D^{1/2} A D^{-1/2}, D = diag(pi), A the generator matrix, in
/// tridiagonal storage. S is negative semidefinite with S (D^{1/2} 1) = 0.
struct SymmetricTridiagonal {
  std::vector<double> diag;          // -(alpha_i + beta_i)
  std::vector<double> offdiag;       // sqrt(alpha_i beta_{i+1})
  std::vector<double> sqrt_weights;  // D^{1/2} 1

  int size() const { return static_cast<int>(diag.size()); }
};

/// Throws if the detailed balance residual exceeds 1e-10.
SymmetricTridiagonal symmetrize(const RateField& r, const StationaryMeasure& m);

/// Off-diagonal entries through the measure route alpha_i sqrt(pi_i / pi_{i+1}).
std::vector<double> offdiag_from_measure(const RateField& r, const StationaryMeasure& m);

/// max_i |S_{i,i+1} - S_{i+1,i}| / max(1, |S_{i,i+1}|, |S_{i+1,i}|) with both
/// entries formed by the similarity transform (not by the symmetric formula).
double symmetry_residual(const RateField& r, const StationaryMeasure& m);

/// Max norm of S (D^{1/2} 1).
double zero_mode_residual(const SymmetricTridiagonal& s);

/// Number of eigenvalues of -S strictly below x (Sturm sequence count).
int sturm_count_below(const SymmetricTridiagonal& s, double x);

struct SpectralGap {
  double gap = 0.0;
  double lower = 0.0;  // bisection bracket
  double upper = 0.0;
  GridFunction eigenfunction;  // mean zero, unit variance under pi
};

/// Smallest nonzero eigenvalue of -S by bisection to `tol` (absolute), and
/// the matching eigenfunction of -L by inverse iteration mapped back through D^{-1/2}.
SpectralGap spectral_gap(const SymmetricTridiagonal& s, double tol = 1e-10);

/// <Gamma(f,f), pi> / Var_pi(f). Throws on zero variance.
double rayleigh_quotient(const RateField& r, const StationaryMeasure& m, const GridFunction& f);

/// Solves the tridiagonal system (sub, diag, sup) x = rhs with partial pivoting.
/// sub[k] couples row k+1 to column k, sup[k] couples row k to column k+1.
std::vector<double> solve_tridiagonal_pivoted(std::vector<double> sub, std::vector<double> diag,
                                              std::vector<double> sup, std::vector<double> rhs);

}  // namespace flab
