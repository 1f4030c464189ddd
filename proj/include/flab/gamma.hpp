#pragma once

#include "flab/lattice.hpp"

namespace flab {

/// Stencil half-widths. Entries of a stencil result closer than its margin
/// to either window edge are left as NaN ("undefined").
inline constexpr int kGeneratorMargin = 1;
inline constexpr int kGamma2Margin = 2;

/// True if slot k lies at least `margin` nodes away from both edges.
inline bool in_interior(int k, int n, int margin) { return k >= margin && k < n - margin; }

/// Backward generator: (Lf)_i = alpha_i (f_{i+1} - f_i) - beta_i (f_i - f_{i-1}).
/// Zero edge rates make the formula closed on the window.
GridFunction apply_generator(const RateField& r, const GridFunction& f);

/// Forward (Fokker-Planck) operator, the l2 adjoint of apply_generator.
GridFunction apply_forward(const RateField& r, const GridFunction& rho);

/// Carre du champ: 1/2 alpha_i D+f D+g + 1/2 beta_i D-f D-g.
GridFunction gamma(const RateField& r, const GridFunction& f, const GridFunction& g);

/// Iterated carre du champ from its five-term closed form. NaN within
/// kGamma2Margin of the edges.
GridFunction gamma2_closed(const RateField& r, const GridFunction& f, const GridFunction& g);

/// The two first-order terms of the closed form; the remaining three terms
/// are products of second differences and are nonnegative when f = g.
GridFunction gamma2_first_order(const RateField& r, const GridFunction& f, const GridFunction& g);

/// 1/2 (L Gamma(f,g) - Gamma(f, Lg) - Gamma(Lf, g)) assembled from
/// apply_generator and gamma. Defined on every node.
GridFunction gamma2_definitional(const RateField& r, const GridFunction& f, const GridFunction& g);

/// Gamma(f^2/W, W) - Gamma(f, f) through its closed form
///   -1/2 [alpha_i (f_{i+1} W_i - f_i W_{i+1})^2 / (W_i W_{i+1})
///        + beta_i (f_{i-1} W_i - f_i W_{i-1})^2 / (W_i W_{i-1})].
/// Every entry is <= 0. Throws if some W_i <= 0.
GridFunction quotient_defect(const RateField& r, const GridFunction& f, const GridFunction& w);

/// |<Gamma(f,f), pi> + <f Lf, pi>| / max(<Gamma(f,f), pi>, 1e-300).
double dirichlet_identity_check(const RateField& r, const StationaryMeasure& m,
                                const GridFunction& f);

/// <Gamma(f,f), pi>.
double dirichlet_energy(const RateField& r, const StationaryMeasure& m, const GridFunction& f);

}  // namespace flab
