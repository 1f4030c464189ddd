#include "flab/app.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "flab/certificates.hpp"
#include "flab/dynamics.hpp"
#include "flab/json_io.hpp"
#include "flab/spectral.hpp"
#include "flab/stochastic.hpp"

namespace flab {

namespace {

struct Setup {
  Potential u;
  BFunction b;
  Lattice lat;
  RateField r;
  StationaryMeasure m;
};

Setup setup(const ExperimentConfig& cfg, double h) {
  Potential u = make_potential(cfg.potential);
  BFunction b = make_b_function(cfg.scheme.b_function);
  Lattice lat = make_lattice(u, h, cfg.grid.radius);
  RateField r = build_rates(u, b, lat);
  StationaryMeasure m = stationary_measure(u, lat);
  return {std::move(u), std::move(b), lat, std::move(r), std::move(m)};
}

int nearest_node(const Lattice& lat, double x, const char* key) {
  const long i = std::lround(x / lat.h);
  if (i < -lat.n_half || i > lat.n_half) {
    throw Error(std::string(key) + " = " + format_double(x) + " lies outside the window |x| <= " +
                format_double(lat.radius()));
  }
  return static_cast<int>(i);
}

Json lattice_json(const Lattice& lat) { return Json{{"h", lat.h}, {"N", lat.n_half}}; }

class Writer {
 public:
  Writer(const ExperimentConfig& cfg, bool quiet) : cfg_(cfg), quiet_(quiet) {
    std::filesystem::create_directories(cfg.outputs.dir);
    put("resolved.ini", to_ini(cfg));
  }

  void json(const std::string& name, const Json& j) {
    if (cfg_.wants("json")) put(name, dump_json(j));
  }
  void csv(const std::string& name, const std::string& body) {
    if (cfg_.wants("csv")) put(name, body);
  }
  void say(const std::string& line) const {
    if (!quiet_) std::cout << line << '\n';
  }

 private:
  void put(const std::string& name, const std::string& body) {
    write_file_atomic((std::filesystem::path(cfg_.outputs.dir) / name).string(), body);
  }

  const ExperimentConfig& cfg_;
  bool quiet_;
};

SpectralGap gap_of(const Setup& s) { return spectral_gap(symmetrize(s.r, s.m)); }

int cmd_certify(const ExperimentConfig& cfg, Writer& w) {
  const Setup s = setup(cfg, cfg.grid.h);
  const CertificateBundle bundle = certify_all(s.u, s.b, s.lat);
  const SpectralGap g = gap_of(s);
  const PoincareCertificate curv = to_poincare(bundle.curvature, s.lat, s.u.tag, s.b.tag());
  const PoincareCertificate lyap = to_poincare(bundle.lyapunov, s.lat, s.u.tag, s.b.tag());
  bool consistent = true;
  for (const auto* c : {&curv, &lyap}) {
    if (c->valid && c->kappa > g.gap + 1e-9) consistent = false;
  }
  Json j;
  j["best"] = to_json(bundle.best);
  j["curvature"] = to_json(curv);
  j["lyapunov"] = to_json(lyap);
  j["spectral"] = Json{{"gap", g.gap}, {"lower", g.lower}, {"upper", g.upper}};
  j["lower_bound_consistent"] = consistent;
  w.json("certificate.json", j);
  std::ostringstream os;
  os << "certify: method=" << to_string(bundle.best.method) << " kappa=" << format_double(bundle.best.kappa)
     << " valid=" << (bundle.best.valid ? "true" : "false") << " gap=" << format_double(g.gap);
  w.say(os.str());
  if (!consistent) throw Error("certify: a certificate exceeds the spectral gap");
  return bundle.best.valid ? kExitOk : kExitNegative;
}

int cmd_gap(const ExperimentConfig& cfg, Writer& w) {
  const Setup s = setup(cfg, cfg.grid.h);
  const SpectralGap g = gap_of(s);
  w.json("gap.json", Json{{"gap", g.gap},
                          {"lower", g.lower},
                          {"upper", g.upper},
                          {"lattice", lattice_json(s.lat)},
                          {"potential_tag", s.u.tag},
                          {"b_function_tag", s.b.tag()}});
  std::ostringstream csv;
  csv << "x,phi\n";
  for (int k = 0; k < s.lat.size(); ++k) {
    csv << format_double(s.lat.x(k)) << ',' << format_double(g.eigenfunction[k]) << '\n';
  }
  w.csv("eigenfunction.csv", csv.str());
  w.say("gap: " + format_double(g.gap));
  return kExitOk;
}

int cmd_evolve(const ExperimentConfig& cfg, Writer& w) {
  const Setup s = setup(cfg, cfg.grid.h);
  const SpectralGap g = gap_of(s);
  const Integrator method = integrator_from_string(cfg.time.method);
  const double dt = cfg.time.dt ? *cfg.time.dt : default_dt(s.r, method, g.gap);
  GridFunction rho0(s.lat.size(), 0.0);
  rho0[s.lat.slot(nearest_node(s.lat, cfg.time.start, "time.start"))] = 1.0;
  OutputSchedule sched;
  sched.log_outputs = cfg.time.outputs;
  const EvolutionResult ev = evolve_forward(s.r, s.m, rho0, cfg.time.horizon, dt, method, sched);
  const DecayFit fit = fit_decay_rate(ev.times, ev.variance_series, cfg.time.burn_in);
  w.csv("timeseries.csv", evolution_csv(ev));
  w.json("evolve.json", Json{{"fitted_rate", fit.rate},
                             {"half_width", fit.half_width},
                             {"fit_points", fit.points},
                             {"twice_gap", 2.0 * g.gap},
                             {"dt", dt},
                             {"method", to_string(method)},
                             {"steps", ev.steps},
                             {"clamped_entries", ev.clamped_entries},
                             {"lattice", lattice_json(s.lat)}});
  w.say("evolve: fitted variance decay rate " + format_double(fit.rate) + " +- " +
        format_double(fit.half_width) + " (2 gap = " + format_double(2.0 * g.gap) + ")");
  return kExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg, Writer& w) {
  const Setup s = setup(cfg, cfg.grid.h);
  const int start = nearest_node(s.lat, cfg.sim.start, "sim.start");
  const TrajectoryEnsemble e =
      simulate(s.r, s.lat, start, cfg.sim.horizon, cfg.sim.n_paths, cfg.sim.seed);
  const Json j = ensemble_summary(e, s.r, s.lat, s.m);
  w.json("ensemble.json", j);
  w.say("simulate: " + std::to_string(e.n_paths) + " paths, TV to stationary " +
        format_double(j["tv_to_stationary"].get<double>()));
  return kExitOk;
}

struct SweepRow {
  double h = 0.0;
  int n_half = 0;
  CertificateBundle bundle;
  double gap = 0.0;
  std::string error;
};

int cmd_sweep(const ExperimentConfig& cfg, Writer& w) {
  const auto& hs = cfg.grid.h_list;
  std::vector<SweepRow> rows(hs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < static_cast<int>(hs.size()); ++k) {
    SweepRow& row = rows[k];
    row.h = hs[k];
    try {
      const Setup s = setup(cfg, hs[k]);
      row.n_half = s.lat.n_half;
      row.bundle = certify_all(s.u, s.b, s.lat, Exec::serial);
      row.gap = gap_of(s).gap;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
  }
  for (const auto& row : rows) {
    if (!row.error.empty()) throw Error("h = " + format_double(row.h) + ": " + row.error);
  }
  std::ostringstream csv;
  csv << "h,N,lambda_tilde,theta,b,R,kappa_R,kappa,method,valid,gap\n";
  bool all_valid = true;
  for (const auto& row : rows) {
    const auto& c = row.bundle;
    all_valid = all_valid && c.best.valid;
    csv << format_double(row.h) << ',' << row.n_half << ',' << format_double(c.curvature.lambda_tilde)
        << ',' << format_double(c.lyapunov.theta) << ',' << format_double(c.lyapunov.b) << ','
        << format_double(c.lyapunov.radius) << ',' << format_double(c.lyapunov.kappa_R) << ','
        << format_double(c.best.kappa) << ',' << to_string(c.best.method) << ','
        << (c.best.valid ? "true" : "false") << ',' << format_double(row.gap) << '\n';
  }
  w.csv("sweep.csv", csv.str());

  // Empirical h0 per route over the listed h values.
  Json routes = Json::object();
  for (const char* route : {"curvature", "lyapunov"}) {
    Json failing = nullptr, largest_valid = nullptr;
    for (const auto& row : rows) {
      const bool ok = std::string(route) == "curvature" ? row.bundle.curvature.valid
                                                        : row.bundle.lyapunov.valid;
      if (!ok && (failing.is_null() || row.h < failing.get<double>())) failing = row.h;
      if (ok && (largest_valid.is_null() || row.h > largest_valid.get<double>())) largest_valid = row.h;
    }
    routes[route] = Json{{"smallest_failing_h", failing}, {"largest_valid_h", largest_valid}};
  }
  w.json("sweep.json", Json{{"h_list", hs}, {"routes", routes}});
  w.say("sweep: " + std::to_string(rows.size()) + " rows");
  return all_valid ? kExitOk : kExitNegative;
}

Json check_json(const PropertyCheck& c) {
  return Json{{"pass", c.pass}, {"max_residual", c.max_residual}};
}

int cmd_validate_b(const ExperimentConfig& cfg, Writer& w) {
  const BFunction b = make_b_function(cfg.scheme.b_function);
  const BValidationReport rep = validate_b(b, symmetric_grid(cfg.scheme.s_max, cfg.scheme.s_points));
  Json j;
  j["b_function"] = b.tag();
  j["s_max"] = cfg.scheme.s_max;
  j["s_points"] = cfg.scheme.s_points;
  j["unit_at_zero"] = check_json(rep.unit_at_zero);
  j["positive"] = check_json(rep.positive);
  j["log_identity"] = check_json(rep.log_identity);
  j["monotone"] = check_json(rep.monotone);
  j["slope_at_zero"] = check_json(rep.slope_at_zero);
  j["lipschitz"] = check_json(rep.lipschitz);
  j["all_pass"] = rep.all_pass();
  w.json("b_validation.json", j);
  w.say(std::string("validate-b: ") + b.tag() + (rep.all_pass() ? " passes" : " fails") +
        " the structural checks");
  return rep.all_pass() ? kExitOk : kExitNegative;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> cmds{"certify", "gap",   "evolve",
                                             "simulate", "sweep", "validate-b"};
  return cmds;
}

int run_subcommand(const std::string& cmd, const ExperimentConfig& cfg, bool quiet) {
  try {
    Writer w(cfg, quiet);
    if (cmd == "certify") return cmd_certify(cfg, w);
    if (cmd == "gap") return cmd_gap(cfg, w);
    if (cmd == "evolve") return cmd_evolve(cfg, w);
    if (cmd == "simulate") return cmd_simulate(cfg, w);
    if (cmd == "sweep") return cmd_sweep(cfg, w);
    if (cmd == "validate-b") return cmd_validate_b(cfg, w);
  } catch (const std::exception& ex) {
    throw Error(cmd + " [" + cfg.potential.kind + ", h = " + format_double(cfg.grid.h) + "]: " + ex.what());
  }
  throw Error("unknown subcommand '" + cmd + "'");
}

}  // namespace flab
