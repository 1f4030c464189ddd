#pragma once

#include <string>
#include <vector>

#include "flab/lattice.hpp"

namespace flab {

enum class Integrator { rk4, trapezoidal };

std::string to_string(Integrator m);
Integrator integrator_from_string(const std::string& name);

/// Output times: `log_outputs` log-spaced times in [horizon/1000, horizon]
/// plus t = 0, or every step when `every_step` is set.
struct OutputSchedule {
  int log_outputs = 64;
  bool every_step = false;
  bool keep_snapshots = false;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<GridFunction> snapshots;  // filled only with keep_snapshots
  /// Forward runs: Var_pi(rho/pi), sum rho, min rho, sup |rho/pi|.
  /// Backward runs: Var_pi(f), <f, pi>, min f, sup |f|.
  std::vector<double> variance_series;
  std::vector<double> mass_series;
  std::vector<double> min_series;
  std::vector<double> sup_series;
  GridFunction final_state;
  int steps = 0;
  int clamped_entries = 0;
};

/// Time step used when none is given:
///   rk4          0.4 / max(alpha + beta)
///   trapezoidal  min(0.05 / kappa_estimate, 0.1, 2 / max(alpha + beta))
double default_dt(const RateField& r, Integrator method, double kappa_estimate);

/// rho' = L* rho. Needs rho0 >= 0 with unit mass (1e-12), and for rk4
/// dt max(alpha + beta) <= 0.5. Entries in [-1e-12, 0) after a step are set
/// to 0 and the mass is restored; anything more negative throws.
EvolutionResult evolve_forward(const RateField& r, const StationaryMeasure& m,
                               const GridFunction& rho0, double horizon, double dt,
                               Integrator method, const OutputSchedule& sched = {});

/// f' = L f with the same stepping as evolve_forward, so the two are exact
/// transposes of each other for matching (horizon, dt, schedule).
EvolutionResult evolve_backward(const RateField& r, const StationaryMeasure& m,
                                const GridFunction& f0, double horizon, double dt,
                                Integrator method, const OutputSchedule& sched = {});

struct DecayFit {
  double rate = 0.0;
  double half_width = 0.0;  // standard error of the slope
  int points = 0;
};

/// Minus the least-squares slope of ln(values) against times, using points
/// with t >= t_0 + burn_in (t_last - t_0). Needs 10 points after burn-in.
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                        double burn_in);

struct DissipationResult {
  double lhs = 0.0;  // centred difference of <(P_t f)^2, pi> at t = dt
  double rhs = 0.0;  // -2 <Gamma(P_dt f, P_dt f), pi>
  double variance_at_dt = 0.0;
  double residual = 0.0;  // |lhs - rhs| / |rhs|, 0 when both vanish
};

/// Throws if dt max(alpha + beta) > 0.5. Internally substeps RK4 so that
/// each substep times the max rate is at most 0.05.
DissipationResult dissipation_check(const RateField& r, const StationaryMeasure& m,
                                    const GridFunction& f, double dt);

struct H1Decay {
  double measured_rate = 0.0;  // +inf when E vanishes identically
  double half_width = 0.0;
  double certified_theta = 0.0;  // 2 lambda~
  double worst_ratio = 0.0;      // max_t E(t) / (e^{-2 lambda~ t} E(0))
  bool pass = false;
  std::vector<double> times;
  std::vector<double> energy;
};

/// E(t) = <(P_t f - mean)^2 + Gamma(P_t f, P_t f), pi> along a trapezoidal
/// backward run; pass iff E(t) <= e^{-2 lambda~ t} E(0) (1 + 1e-6) at every
/// output time. Throws when the curvature certificate is not valid.
H1Decay h1_decay_check(const RateField& r, const StationaryMeasure& m, const GridFunction& f0,
                       double horizon, double dt);

/// CSV with header t,variance,mass,min_rho,sup_norm and 17 significant digits.
std::string evolution_csv(const EvolutionResult& e);

}  // namespace flab
