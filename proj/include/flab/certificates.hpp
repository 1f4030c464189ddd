#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flab/exec.hpp"
#include "flab/json_io.hpp"
#include "flab/lattice.hpp"

namespace flab {

// ---------------------------------------------------------------------------
// Curvature route
// ---------------------------------------------------------------------------

struct CurvatureCertificate {
  double lambda_tilde = 0.0;
  /// 3 D+beta_i - D+alpha_i and D-beta_i - 3 D-alpha_i on interior nodes
  /// (slots 2 .. n-3, in order).
  std::vector<double> plus_margins;
  std::vector<double> minus_margins;
  bool valid = false;
};

/// lambda~ = 1/2 min over slots 2..n-3 of both margins. Needs n >= 5.
/// Nonpositive values are reported as is with valid = false.
CurvatureCertificate curvature_estimate(const RateField& r);

// ---------------------------------------------------------------------------
// Lyapunov route
// ---------------------------------------------------------------------------

struct LyapunovCertificate {
  double theta = 0.0;
  double b = 0.0;
  double radius = 0.0;
  int radius_nodes = 0;        // R = radius_nodes * h
  std::vector<double> slack;   // -L W_i / W_i - theta outside the ball, NaN inside
  double kappa_R = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double kappa = 0.0;
  int candidates_tried = 0;
  bool valid = false;
};

/// d_i = L W_i / W_i for W = e^{|x|}, evaluated without forming W.
std::vector<double> lyapunov_drift_ratio(const RateField& r, const Lattice& lat);

/// Scans R in {h, 2h, .., floor(N/2) h} and keeps the radius with the largest
/// theta kappa_R / (kappa_R + b); ties go to the smaller R.
LyapunovCertificate lyapunov_certificate(const Potential& u, const BFunction& b,
                                         const RateField& r, const Lattice& lat,
                                         Exec exec = Exec::parallel);

/// max_i (d_i + theta - b 1{|x_i| <= R} / W_i), i.e. the drift inequality
/// divided by W_i. Nonpositive (up to rounding) for a sound certificate.
double lyapunov_residual(const LyapunovCertificate& c, const RateField& r, const Lattice& lat);

struct LocalPoincare {
  double kappa_R = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Local constant on the ball |x| <= radius with pi = e^{-u} unnormalized:
///   C1 = 4 R^2 sup pi / inf B(u(x+h) - u(x)),  C2 the same with -h,
///   kappa_R = inf pi / (2 max(C1, C2)).
/// Throws unless radius is a positive grid multiple not exceeding the window.
LocalPoincare local_poincare_constant(const Potential& u, const BFunction& b, const Lattice& lat,
                                      double radius);

/// theta kappa_R / (kappa_R + b). Throws on nonpositive theta or kappa_R.
double assemble_global(double theta, double b, double kappa_R);

// ---------------------------------------------------------------------------
// Combined certificate
// ---------------------------------------------------------------------------

enum class CertMethod { curvature, lyapunov, perturbation };

std::string to_string(CertMethod m);

struct PoincareCertificate {
  double kappa = 0.0;
  CertMethod method = CertMethod::curvature;
  std::vector<std::pair<std::string, double>> components;
  bool valid = false;
  std::vector<std::string> diagnostics;
  Lattice lattice;
  std::string potential_tag;
  std::string b_function_tag;

  /// Value of a component; throws if absent.
  double component(const std::string& key) const;
};

PoincareCertificate to_poincare(const CurvatureCertificate& c, const Lattice& lat,
                                const std::string& potential_tag, const std::string& b_tag);
PoincareCertificate to_poincare(const LyapunovCertificate& c, const Lattice& lat,
                                const std::string& potential_tag, const std::string& b_tag);

/// Transfers `base` (certified for u_tilde) to u through
///   s1 = sup pi/pi~, s2 = sup pi~/pi, s3 = sup (alpha~/alpha + beta~/beta),
/// kappa = base.kappa / (s1 s2 s3). Edge nodes use their single defined ratio.
/// Throws if base is invalid or any ratio is not finite.
PoincareCertificate perturbation_transfer(const PoincareCertificate& base,
                                          const Potential& u_tilde, const Potential& u,
                                          const BFunction& b, const Lattice& lat);

struct CertificateBundle {
  CurvatureCertificate curvature;
  LyapunovCertificate lyapunov;
  PoincareCertificate best;
};

/// Runs both routes and keeps the valid one with the larger kappa.
CertificateBundle certify_all(const Potential& u, const BFunction& b, const Lattice& lat,
                              Exec exec = Exec::parallel);

PoincareCertificate best_certificate(const Potential& u, const BFunction& b, const Lattice& lat,
                                     Exec exec = Exec::parallel);

/// {method, kappa, valid, components{..}, lattice{h,N}, potential_tag, b_function_tag}
Json to_json(const PoincareCertificate& c);

}  // namespace flab
