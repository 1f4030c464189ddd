#include "flab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kLogOverflowGuard = std::log(1e300);

// Per-node tables reused by every candidate ball: log pi = -u and the log of
// B across the right and left bonds.
struct BallTables {
  std::vector<double> log_pi;
  std::vector<double> log_b_plus;
  std::vector<double> log_b_minus;
};

BallTables ball_tables(const Potential& u, const BFunction& b, const Lattice& lat) {
  const int n = lat.size();
  BallTables t;
  t.log_pi.resize(n);
  t.log_b_plus.resize(n);
  t.log_b_minus.resize(n);
  for (int k = 0; k < n; ++k) {
    const double x = lat.x(k);
    const double ux = u(x);
    const double up = u(x + lat.h);
    const double um = u(x - lat.h);
    if (!std::isfinite(ux) || !std::isfinite(up) || !std::isfinite(um)) {
      throw Error("local constant: potential not finite near x = " + std::to_string(x));
    }
    t.log_pi[k] = -ux;
    t.log_b_plus[k] = std::log(b(up - ux));
    t.log_b_minus[k] = std::log(b(um - ux));
  }
  return t;
}

LocalPoincare local_from_tables(const BallTables& t, const Lattice& lat, int radius_nodes) {
  double log_sup = -kInf, log_inf = kInf, lbp = kInf, lbm = kInf;
  for (int k = lat.n_half - radius_nodes; k <= lat.n_half + radius_nodes; ++k) {
    log_sup = std::max(log_sup, t.log_pi[k]);
    log_inf = std::min(log_inf, t.log_pi[k]);
    lbp = std::min(lbp, t.log_b_plus[k]);
    lbm = std::min(lbm, t.log_b_minus[k]);
  }
  const double radius = radius_nodes * lat.h;
  const double log_4r2 = std::log(4.0 * radius * radius);
  LocalPoincare out;
  out.c1 = std::exp(log_4r2 + log_sup - lbp);
  out.c2 = std::exp(log_4r2 + log_sup - lbm);
  out.kappa_R = std::exp(log_inf - log_sup) * std::exp(std::min(lbp, lbm)) /
                (8.0 * radius * radius);
  return out;
}

struct Candidate {
  double theta = 0.0;
  double b = 0.0;
  LocalPoincare local;
  double kappa = 0.0;
  bool ok = false;
};

Candidate evaluate_radius(const std::vector<double>& d, const std::vector<double>& outside_max,
                          const BallTables& t, const Lattice& lat, int k) {
  Candidate c;
  c.theta = -outside_max[k];
  if (!(c.theta > 0.0)) return c;
  double log_b = -kInf;
  for (int j = lat.n_half - k; j <= lat.n_half + k; ++j) {
    const double excess = d[j] + c.theta;
    if (excess > 0.0) log_b = std::max(log_b, std::log(excess) + std::abs(lat.x(j)));
  }
  if (log_b > kLogOverflowGuard) return c;
  // Round b up by a few ulps so that b / W_i never falls below d_i + theta.
  c.b = log_b == -kInf ? 0.0 : std::exp(log_b) * (1.0 + 8 * std::numeric_limits<double>::epsilon());
  c.local = local_from_tables(t, lat, k);
  if (!(c.local.kappa_R > 0.0)) return c;
  c.kappa = assemble_global(c.theta, c.b, c.local.kappa_R);
  c.ok = c.kappa > 0.0 && std::isfinite(c.kappa);
  return c;
}

}  // namespace

CurvatureCertificate curvature_estimate(const RateField& r) {
  const int n = r.size();
  if (n < 5) throw Error("curvature_estimate: the window needs at least 5 nodes");
  const auto& a = r.alpha;
  const auto& be = r.beta;
  CurvatureCertificate c;
  double lo = kInf;
  for (int k = 2; k < n - 2; ++k) {
    const double plus = 3.0 * (be[k + 1] - be[k]) - (a[k + 1] - a[k]);
    const double minus = (be[k] - be[k - 1]) - 3.0 * (a[k] - a[k - 1]);
    c.plus_margins.push_back(plus);
    c.minus_margins.push_back(minus);
    lo = std::min({lo, plus, minus});
  }
  c.lambda_tilde = 0.5 * lo;
  c.valid = c.lambda_tilde > 0.0;
  return c;
}

std::vector<double> lyapunov_drift_ratio(const RateField& r, const Lattice& lat) {
  require_same_size(r.alpha.size(), static_cast<std::size_t>(lat.size()), "lyapunov_drift_ratio");
  const int n = lat.size();
  std::vector<double> d(n);
  for (int k = 0; k < n; ++k) {
    const double ax = std::abs(lat.x(k));
    double v = 0.0;
    if (k + 1 < n) v += r.alpha[k] * std::expm1(std::abs(lat.x(k + 1)) - ax);
    if (k > 0) v += r.beta[k] * std::expm1(std::abs(lat.x(k - 1)) - ax);
    d[k] = v;
  }
  return d;
}

LocalPoincare local_poincare_constant(const Potential& u, const BFunction& b, const Lattice& lat,
                                      double radius) {
  const double steps = radius / lat.h;
  const int radius_nodes = static_cast<int>(std::lround(steps));
  if (!(radius > 0.0) || std::abs(steps - radius_nodes) > 1e-9 * std::max(1.0, steps)) {
    throw Error("local_poincare_constant: radius " + std::to_string(radius) +
                " is not a positive multiple of h = " + std::to_string(lat.h));
  }
  if (radius_nodes > lat.n_half) {
    throw Error("local_poincare_constant: radius exceeds the window");
  }
  return local_from_tables(ball_tables(u, b, lat), lat, radius_nodes);
}

double assemble_global(double theta, double b, double kappa_R) {
  if (!std::isfinite(theta) || !std::isfinite(kappa_R) || std::isnan(b)) {
    throw Error("assemble_global: inputs must be finite");
  }
  if (!(theta > 0.0)) throw Error("assemble_global: theta must be positive");
  if (!(kappa_R > 0.0)) throw Error("assemble_global: kappa_R must be positive");
  if (b < 0.0) throw Error("assemble_global: b must be nonnegative");
  if (b == kInf) return 0.0;
  return theta * kappa_R / (kappa_R + b);
}

LyapunovCertificate lyapunov_certificate(const Potential& u, const BFunction& b,
                                         const RateField& r, const Lattice& lat, Exec exec) {
  const std::vector<double> d = lyapunov_drift_ratio(r, lat);
  const int nh = lat.n_half;
  const int kmax = nh / 2;
  LyapunovCertificate cert;
  cert.slack.assign(lat.size(), kNaN);
  if (kmax < 1) return cert;

  // outside_max[k] = max of d over |i| > k.
  std::vector<double> outside_max(nh + 1, -kInf);
  for (int k = nh - 1; k >= 0; --k) {
    outside_max[k] = std::max({outside_max[k + 1], d[nh + k + 1], d[nh - k - 1]});
  }
  const BallTables tables = ball_tables(u, b, lat);
  std::vector<Candidate> cands(kmax + 1);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int k = 1; k <= kmax; ++k) cands[k] = evaluate_radius(d, outside_max, tables, lat, k);
  } else {
    for (int k = 1; k <= kmax; ++k) cands[k] = evaluate_radius(d, outside_max, tables, lat, k);
  }
  cert.candidates_tried = kmax;
  int best = 0;
  for (int k = 1; k <= kmax; ++k) {
    if (cands[k].ok && (best == 0 || cands[k].kappa > cands[best].kappa)) best = k;
  }
  if (best == 0) return cert;
  const Candidate& c = cands[best];
  cert.theta = c.theta;
  cert.b = c.b;
  cert.radius_nodes = best;
  cert.radius = best * lat.h;
  cert.kappa_R = c.local.kappa_R;
  cert.c1 = c.local.c1;
  cert.c2 = c.local.c2;
  cert.kappa = c.kappa;
  cert.valid = true;
  for (int k = 0; k < lat.size(); ++k) {
    if (std::abs(k - nh) > best) cert.slack[k] = -d[k] - c.theta;
  }
  return cert;
}

double lyapunov_residual(const LyapunovCertificate& c, const RateField& r, const Lattice& lat) {
  const std::vector<double> d = lyapunov_drift_ratio(r, lat);
  double worst = -kInf;
  for (int k = 0; k < lat.size(); ++k) {
    const bool inside = std::abs(k - lat.n_half) <= c.radius_nodes;
    const double bump = inside ? c.b * std::exp(-std::abs(lat.x(k))) : 0.0;
    worst = std::max(worst, d[k] + c.theta - bump);
  }
  return worst;
}

std::string to_string(CertMethod m) {
  switch (m) {
    case CertMethod::curvature: return "curvature";
    case CertMethod::lyapunov: return "lyapunov";
    case CertMethod::perturbation: return "perturbation";
  }
  return "unknown";
}

double PoincareCertificate::component(const std::string& key) const {
  for (const auto& [k, v] : components) {
    if (k == key) return v;
  }
  throw Error("certificate has no component '" + key + "'");
}

PoincareCertificate to_poincare(const CurvatureCertificate& c, const Lattice& lat,
                                const std::string& potential_tag, const std::string& b_tag) {
  PoincareCertificate p;
  p.method = CertMethod::curvature;
  p.kappa = c.valid ? c.lambda_tilde : 0.0;
  p.valid = c.valid;
  p.components = {{"lambda_tilde", c.lambda_tilde}};
  if (!c.valid) p.diagnostics.push_back("curvature: lambda_tilde = " + format_double(c.lambda_tilde) + " is not positive");
  p.lattice = lat;
  p.potential_tag = potential_tag;
  p.b_function_tag = b_tag;
  return p;
}

PoincareCertificate to_poincare(const LyapunovCertificate& c, const Lattice& lat,
                                const std::string& potential_tag, const std::string& b_tag) {
  PoincareCertificate p;
  p.method = CertMethod::lyapunov;
  p.kappa = c.valid ? c.kappa : 0.0;
  p.valid = c.valid;
  p.components = {{"theta", c.theta}, {"b", c.b},   {"R", c.radius},
                  {"kappa_R", c.kappa_R}, {"C1", c.c1}, {"C2", c.c2}};
  if (!c.valid) {
    p.diagnostics.push_back("lyapunov: none of " + std::to_string(c.candidates_tried) +
                            " candidate radii gives theta > 0 with finite b");
  }
  p.lattice = lat;
  p.potential_tag = potential_tag;
  p.b_function_tag = b_tag;
  return p;
}

PoincareCertificate perturbation_transfer(const PoincareCertificate& base,
                                          const Potential& u_tilde, const Potential& u,
                                          const BFunction& b, const Lattice& lat) {
  if (!base.valid || !(base.kappa > 0.0)) {
    throw Error("perturbation_transfer: base certificate is not valid");
  }
  const int n = lat.size();
  if (n < 2) throw Error("perturbation_transfer: the window needs at least 2 nodes");
  std::vector<double> lw(n), lwt(n);
  for (int k = 0; k < n; ++k) {
    lw[k] = -u(lat.x(k));
    lwt[k] = -u_tilde(lat.x(k));
    if (!std::isfinite(lw[k]) || !std::isfinite(lwt[k])) {
      throw Error("perturbation_transfer: potential not finite at x = " +
                  std::to_string(lat.x(k)));
    }
  }
  auto normalize = [](std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    const double lz = mx + std::log(acc);
    for (double& x : v) x -= lz;
  };
  normalize(lw);
  normalize(lwt);
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int k = 0; k < n; ++k) {
    s1 = std::max(s1, std::exp(lw[k] - lwt[k]));
    s2 = std::max(s2, std::exp(lwt[k] - lw[k]));
  }
  const RateField r = build_rates(u, b, lat);
  const RateField rt = build_rates(u_tilde, b, lat);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    if (k + 1 < n) s += rt.alpha[k] / r.alpha[k];
    if (k > 0) s += rt.beta[k] / r.beta[k];
    s3 = std::max(s3, s);
  }
  if (!std::isfinite(s1) || !std::isfinite(s2) || !std::isfinite(s3) || !(s3 > 0.0)) {
    throw Error("perturbation_transfer: ratio suprema are not finite (s1 = " + format_double(s1) +
                ", s2 = " + format_double(s2) + ", s3 = " + format_double(s3) +
                "); the perturbation is not bounded on this window");
  }
  PoincareCertificate p;
  p.method = CertMethod::perturbation;
  p.kappa = base.kappa / (s1 * s2 * s3);
  p.valid = p.kappa > 0.0;
  p.components = {{"s1", s1}, {"s2", s2}, {"s3", s3}, {"base_kappa", base.kappa}};
  p.lattice = lat;
  p.potential_tag = u.tag;
  p.b_function_tag = b.tag();
  return p;
}

CertificateBundle certify_all(const Potential& u, const BFunction& b, const Lattice& lat,
                              Exec exec) {
  const RateField r = build_rates(u, b, lat);
  CertificateBundle out;
  PoincareCertificate curv;
  if (lat.size() >= 5) {
    out.curvature = curvature_estimate(r);
    curv = to_poincare(out.curvature, lat, u.tag, b.tag());
  } else {
    out.curvature.lambda_tilde = kNaN;
    curv = to_poincare(out.curvature, lat, u.tag, b.tag());
    curv.diagnostics = {"curvature: window has fewer than 5 nodes"};
  }
  out.lyapunov = lyapunov_certificate(u, b, r, lat, exec);
  const PoincareCertificate lyap = to_poincare(out.lyapunov, lat, u.tag, b.tag());

  if (curv.valid && (!lyap.valid || curv.kappa >= lyap.kappa)) {
    out.best = curv;
  } else if (lyap.valid) {
    out.best = lyap;
  } else {
    out.best = curv;
    out.best.components.emplace_back("lyapunov_candidates", out.lyapunov.candidates_tried);
    out.best.diagnostics.insert(out.best.diagnostics.end(), lyap.diagnostics.begin(),
                                lyap.diagnostics.end());
  }
  return out;
}

PoincareCertificate best_certificate(const Potential& u, const BFunction& b, const Lattice& lat,
                                     Exec exec) {
  return certify_all(u, b, lat, exec).best;
}

Json to_json(const PoincareCertificate& c) {
  Json j;
  j["method"] = to_string(c.method);
  j["kappa"] = c.kappa;
  j["valid"] = c.valid;
  Json comp = Json::object();
  for (const auto& [k, v] : c.components) comp[k] = v;
  j["components"] = comp;
  j["lattice"] = Json{{"h", c.lattice.h}, {"N", c.lattice.n_half}};
  j["potential_tag"] = c.potential_tag;
  j["b_function_tag"] = c.b_function_tag;
  if (!c.diagnostics.empty()) j["diagnostics"] = c.diagnostics;
  return j;
}

}  // namespace flab
