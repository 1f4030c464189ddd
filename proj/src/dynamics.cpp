#include "flab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "flab/certificates.hpp"
#include "flab/gamma.hpp"
#include "flab/json_io.hpp"

namespace flab {

namespace {

constexpr double kClampFloor = -1e-12;

std::vector<double> output_times(double horizon, const OutputSchedule& sched) {
  std::vector<double> t{0.0};
  if (sched.every_step) return t;
  const int n = std::max(sched.log_outputs, 2);
  for (int k = 0; k < n; ++k) {
    const double e = -3.0 * (1.0 - static_cast<double>(k) / (n - 1));
    t.push_back(k == n - 1 ? horizon : horizon * std::pow(10.0, e));
  }
  return t;
}

// y' = A y with A the generator matrix (backward) or its transpose (forward).
GridFunction apply(const RateField& r, const GridFunction& y, bool forward) {
  return forward ? apply_forward(r, y) : apply_generator(r, y);
}

GridFunction rk4_step(const RateField& r, const GridFunction& y, double dt, bool forward) {
  const int n = static_cast<int>(y.size());
  GridFunction tmp(n);
  const GridFunction k1 = apply(r, y, forward);
  for (int i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
  const GridFunction k2 = apply(r, tmp, forward);
  for (int i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
  const GridFunction k3 = apply(r, tmp, forward);
  for (int i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
  const GridFunction k4 = apply(r, tmp, forward);
  GridFunction out(n);
  for (int i = 0; i < n; ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Trapezoidal step (I - dt/2 A) y+ = (I + dt/2 A) y. The left matrix is
// diagonally dominant by columns (forward) or rows (backward), so the Thomas
// sweep needs no pivoting.
GridFunction trapezoidal_step(const RateField& r, const GridFunction& y, double dt, bool forward) {
  const int n = static_cast<int>(y.size());
  const GridFunction ay = apply(r, y, forward);
  GridFunction rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = y[i] + 0.5 * dt * ay[i];
  if (n == 1) return rhs;
  const double c = 0.5 * dt;
  std::vector<double> diag(n), sub(n), sup(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = 1.0 + c * (r.alpha[i] + r.beta[i]);
    // sub[i]: row i, column i-1; sup[i]: row i, column i+1.
    if (forward) {
      sub[i] = i > 0 ? -c * r.alpha[i - 1] : 0.0;
      sup[i] = i + 1 < n ? -c * r.beta[i + 1] : 0.0;
    } else {
      sub[i] = i > 0 ? -c * r.beta[i] : 0.0;
      sup[i] = i + 1 < n ? -c * r.alpha[i] : 0.0;
    }
  }
  std::vector<double> cp(n);
  GridFunction x(n);
  double denom = diag[0];
  cp[0] = sup[0] / denom;
  x[0] = rhs[0] / denom;
  for (int i = 1; i < n; ++i) {
    denom = diag[i] - sub[i] * cp[i - 1];
    cp[i] = i + 1 < n ? sup[i] / denom : 0.0;
    x[i] = (rhs[i] - sub[i] * x[i - 1]) / denom;
  }
  for (int i = n - 2; i >= 0; --i) x[i] -= cp[i] * x[i + 1];
  return x;
}

struct Recorder {
  const StationaryMeasure& m;
  bool forward;
  bool keep;
  EvolutionResult& out;

  void record(double t, const GridFunction& y) {
    const int n = static_cast<int>(y.size());
    double mass = 0.0, lo = std::numeric_limits<double>::infinity(), sup = 0.0;
    for (int i = 0; i < n; ++i) lo = std::min(lo, y[i]);
    double var = 0.0;
    if (forward) {
      for (int i = 0; i < n; ++i) mass += y[i];
      for (int i = 0; i < n; ++i) {
        const double q = y[i] / m.weights[i];
        sup = std::max(sup, std::abs(q));
        var += m.weights[i] * (q - mass) * (q - mass);
      }
    } else {
      const MeanVar mv = mean_var(m, y);
      mass = mv.mean;
      var = mv.variance;
      for (int i = 0; i < n; ++i) sup = std::max(sup, std::abs(y[i]));
    }
    out.times.push_back(t);
    out.variance_series.push_back(var);
    out.mass_series.push_back(mass);
    out.min_series.push_back(lo);
    out.sup_series.push_back(sup);
    if (keep) out.snapshots.push_back(y);
  }
};

void check_common(const RateField& r, const StationaryMeasure& m, const GridFunction& y0,
                  double horizon, double dt, Integrator method, const char* who) {
  require_same_size(r.alpha.size(), y0.size(), who);
  require_same_size(m.weights.size(), y0.size(), who);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(std::string(who) + ": horizon must be positive and finite");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(std::string(who) + ": dt must be positive and finite");
  }
  if (method == Integrator::rk4 && dt * r.max_exit_rate() > 0.5) {
    throw Error(std::string(who) + ": rk4 needs dt * max(alpha + beta) <= 0.5, got " +
                format_double(dt * r.max_exit_rate()));
  }
  for (double v : y0) {
    if (!std::isfinite(v)) throw Error(std::string(who) + ": initial data is not finite");
  }
}

EvolutionResult evolve(const RateField& r, const StationaryMeasure& m, const GridFunction& y0,
                       double horizon, double dt, Integrator method, const OutputSchedule& sched,
                       bool forward) {
  EvolutionResult out;
  Recorder rec{m, forward, sched.keep_snapshots, out};
  const double mass0 = forward ? std::accumulate(y0.begin(), y0.end(), 0.0) : 0.0;
  GridFunction y = y0;
  rec.record(0.0, y);
  const std::vector<double> targets =
      sched.every_step ? std::vector<double>{horizon} : output_times(horizon, sched);
  double t = 0.0;
  for (double target : targets) {
    if (target <= t) continue;
    while (t < target) {
      double step = std::min(dt, target - t);
      // Absorb a sliver left by rounding into the current step.
      if (target - (t + step) < 1e-12 * dt) step = target - t;
      y = method == Integrator::rk4 ? rk4_step(r, y, step, forward)
                                    : trapezoidal_step(r, y, step, forward);
      t = (target - (t + step) < 1e-12 * dt) ? target : t + step;
      ++out.steps;
      if (forward) {
        bool clamped = false;
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (y[i] < 0.0) {
            if (y[i] < kClampFloor) {
              throw Error("evolve_forward: density " + format_double(y[i]) + " at slot " +
                          std::to_string(i) + ", t = " + format_double(t) +
                          "; reduce dt (positivity needs dt <= 2 / max(alpha + beta))");
            }
            y[i] = 0.0;
            ++out.clamped_entries;
            clamped = true;
          }
        }
        if (clamped) {
          const double mass = std::accumulate(y.begin(), y.end(), 0.0);
          for (double& v : y) v *= mass0 / mass;
        }
      }
      if (sched.every_step) rec.record(t, y);
    }
    if (!sched.every_step) rec.record(t, y);
  }
  out.final_state = y;
  return out;
}

}  // namespace

std::string to_string(Integrator m) { return m == Integrator::rk4 ? "rk4" : "trapezoidal"; }

Integrator integrator_from_string(const std::string& name) {
  if (name == "rk4") return Integrator::rk4;
  if (name == "trapezoidal") return Integrator::trapezoidal;
  throw Error("unknown integrator '" + name + "' (expected rk4 or trapezoidal)");
}

double default_dt(const RateField& r, Integrator method, double kappa_estimate) {
  const double rate = r.max_exit_rate();
  if (method == Integrator::rk4) return rate > 0.0 ? 0.4 / rate : 0.1;
  double dt = 0.1;
  if (kappa_estimate > 0.0) dt = std::min(dt, 0.05 / kappa_estimate);
  if (rate > 0.0) dt = std::min(dt, 2.0 / rate);
  return dt;
}

EvolutionResult evolve_forward(const RateField& r, const StationaryMeasure& m,
                               const GridFunction& rho0, double horizon, double dt,
                               Integrator method, const OutputSchedule& sched) {
  check_common(r, m, rho0, horizon, dt, method, "evolve_forward");
  double mass = 0.0;
  for (double v : rho0) {
    if (v < 0.0) throw Error("evolve_forward: initial density has a negative entry");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-12) {
    throw Error("evolve_forward: initial mass " + format_double(mass) + " is not 1");
  }
  return evolve(r, m, rho0, horizon, dt, method, sched, true);
}

EvolutionResult evolve_backward(const RateField& r, const StationaryMeasure& m,
                                const GridFunction& f0, double horizon, double dt,
                                Integrator method, const OutputSchedule& sched) {
  check_common(r, m, f0, horizon, dt, method, "evolve_backward");
  return evolve(r, m, f0, horizon, dt, method, sched, false);
}

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                        double burn_in) {
  require_same_size(times.size(), values.size(), "fit_decay_rate");
  if (times.empty()) throw Error("fit_decay_rate: empty series");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw Error("fit_decay_rate: burn_in must be in [0, 1)");
  const double cut = times.front() + burn_in * (times.back() - times.front());
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < cut) continue;
    if (!(values[i] > 0.0)) {
      throw Error("fit_decay_rate: nonpositive value " + format_double(values[i]) +
                  " at t = " + format_double(times[i]));
    }
    xs.push_back(times[i]);
    ys.push_back(std::log(values[i]));
  }
  const int n = static_cast<int>(xs.size());
  if (n < 10) throw Error("fit_decay_rate: need at least 10 points after burn-in, got " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("fit_decay_rate: times after burn-in are all equal");
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - my - slope * (xs[i] - mx);
    rss += e * e;
  }
  DecayFit fit;
  fit.rate = -slope;
  fit.half_width = std::sqrt(rss / (n - 2) / sxx);
  fit.points = n;
  return fit;
}

DissipationResult dissipation_check(const RateField& r, const StationaryMeasure& m,
                                    const GridFunction& f, double dt) {
  require_same_size(r.alpha.size(), f.size(), "dissipation_check");
  const double rate = r.max_exit_rate();
  if (!(dt > 0.0) || dt * rate > 0.5) {
    throw Error("dissipation_check: dt must be positive with dt * max(alpha + beta) <= 0.5");
  }
  const int sub = std::max(1, static_cast<int>(std::ceil(dt * rate / 0.05)));
  const double h = dt / sub;
  auto second_moment = [&](const GridFunction& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += m.weights[i] * g[i] * g[i];
    return s;
  };
  GridFunction g = f;
  const double v0 = second_moment(g);
  for (int k = 0; k < sub; ++k) g = rk4_step(r, g, h, false);
  const GridFunction g_dt = g;
  for (int k = 0; k < sub; ++k) g = rk4_step(r, g, h, false);
  const double v2 = second_moment(g);
  DissipationResult out;
  out.lhs = (v2 - v0) / (2.0 * dt);
  out.rhs = -2.0 * dirichlet_energy(r, m, g_dt);
  out.variance_at_dt = mean_var(m, g_dt).variance;
  const double scale = std::abs(out.rhs);
  const double diff = std::abs(out.lhs - out.rhs);
  out.residual = scale > 0.0 ? diff / scale : (diff == 0.0 ? 0.0 : diff);
  return out;
}

H1Decay h1_decay_check(const RateField& r, const StationaryMeasure& m, const GridFunction& f0,
                       double horizon, double dt) {
  const CurvatureCertificate cc = curvature_estimate(r);
  if (!cc.valid) {
    throw Error("h1_decay_check: curvature certificate is not valid (lambda_tilde = " +
                format_double(cc.lambda_tilde) + ")");
  }
  OutputSchedule sched;
  sched.keep_snapshots = true;
  const EvolutionResult ev = evolve_backward(r, m, f0, horizon, dt, Integrator::trapezoidal, sched);
  H1Decay out;
  out.certified_theta = 2.0 * cc.lambda_tilde;
  out.times = ev.times;
  for (std::size_t k = 0; k < ev.times.size(); ++k) {
    out.energy.push_back(ev.variance_series[k] + dirichlet_energy(r, m, ev.snapshots[k]));
  }
  const double e0 = out.energy.front();
  out.pass = true;
  // Rounding floor for Var of a constant.
  double scale = 0.0;
  for (double v : f0) scale = std::max(scale, v * v);
  const double floor = 1e-24 * std::max(1.0, scale);
  if (e0 <= floor) {
    for (double e : out.energy) out.pass = out.pass && e <= floor;
    out.measured_rate = std::numeric_limits<double>::infinity();
    return out;
  }
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    const double bound = std::exp(-out.certified_theta * out.times[k]) * e0;
    out.worst_ratio = std::max(out.worst_ratio, out.energy[k] / bound);
    if (out.energy[k] > bound * (1.0 + 1e-6)) out.pass = false;
  }
  bool positive = std::all_of(out.energy.begin(), out.energy.end(), [](double e) { return e > 0.0; });
  if (positive) {
    const DecayFit fit = fit_decay_rate(out.times, out.energy, 0.25);
    out.measured_rate = fit.rate;
    out.half_width = fit.half_width;
  } else {
    out.measured_rate = std::numeric_limits<double>::infinity();
  }
  return out;
}

std::string evolution_csv(const EvolutionResult& e) {
  std::ostringstream os;
  os << "t,variance,mass,min_rho,sup_norm\n";
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    os << format_double(e.times[k]) << ',' << format_double(e.variance_series[k]) << ','
       << format_double(e.mass_series[k]) << ',' << format_double(e.min_series[k]) << ','
       << format_double(e.sup_series[k]) << '\n';
  }
  return os.str();
}

}  // namespace flab
