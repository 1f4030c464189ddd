#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "flab/certificates.hpp"
#include "flab/gamma.hpp"
#include "flab/spectral.hpp"
#include "oracles.hpp"

using namespace flab;
using Catch::Approx;

namespace {

const BFunction kSG = BFunction::scharfetter_gummel();

double lambda_at(double h, int n_half) {
  const Lattice lat = Lattice::make(h, n_half);
  return curvature_estimate(build_rates(Potential::quadratic(0.5), kSG, lat)).lambda_tilde;
}

Potential bumped() {
  return Potential::from_function([](double x) { return 0.5 * x * x + 0.5 * std::exp(-x * x); },
                                  "quadratic+bump");
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("curvature: flat potential has zero curvature", "[curvature]") {
  const Lattice lat = Lattice::make(0.1, 20);
  const auto c = curvature_estimate(build_rates(Potential::flat(), kSG, lat));
  CHECK(c.lambda_tilde == 0.0);
  CHECK_FALSE(c.valid);
  CHECK(c.plus_margins.size() == static_cast<std::size_t>(lat.size() - 4));
}

TEST_CASE("curvature: quadratic potential across h", "[curvature]") {
  const double l05 = lambda_at(0.5, 16);
  const double l02 = lambda_at(0.2, 40);
  const double l01 = lambda_at(0.1, 80);
  const double l005 = lambda_at(0.05, 160);
  CHECK(l005 > 0.85);
  CHECK(l005 <= 1.0);
  for (double l : {l05, l02, l01, l005}) CHECK(l >= 0.125);
  CHECK(l05 < l02);
  CHECK(l02 < l01);
  CHECK(l01 < l005);
}

TEST_CASE("curvature is the minimum of the reported margins", "[curvature]") {
  const Lattice lat = Lattice::make(0.1, 40);
  const auto c = curvature_estimate(build_rates(Potential::double_well(0.25, 1.0), kSG, lat));
  double lo = 1e300;
  for (double v : c.plus_margins) lo = std::min(lo, v);
  for (double v : c.minus_margins) lo = std::min(lo, v);
  CHECK(c.lambda_tilde == 0.5 * lo);
  CHECK_FALSE(c.valid);
  CHECK(c.lambda_tilde < 0.0);
  CHECK_THROWS_AS(curvature_estimate(build_rates(Potential::flat(), kSG, Lattice::make(0.1, 1))), Error);
}

TEST_CASE("curvature soundness: Gamma2 >= lambda Gamma pointwise", "[curvature][property]") {
  std::mt19937_64 rng(8);
  for (const auto& u : {Potential::quadratic(0.5), Potential::quartic(0.1),
                        Potential::polynomial({0.0, 0.5, 1.0, 0.0, 0.05})}) {
    const Lattice lat = Lattice::make(0.1, 40);
    const RateField r = build_rates(u, kSG, lat);
    const auto c = curvature_estimate(r);
    if (!c.valid) continue;
    double worst = 1e300;
    for (int rep = 0; rep < 1000; ++rep) {
      const GridFunction f = oracle::random_function(rng, lat);
      const auto g2 = gamma2_closed(r, f, f);
      const auto g1 = gamma(r, f, f);
      for (int k = kGamma2Margin; k < lat.size() - kGamma2Margin; ++k) {
        worst = std::min(worst, (g2[k] - c.lambda_tilde * g1[k]) / std::max(1.0, g2[k]));
      }
    }
    CHECK(worst >= -1e-10);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("local constant: flat potential scales as 1/(8 R^2)", "[local]") {
  const Lattice lat = Lattice::make(0.25, 40);
  const auto one = local_poincare_constant(Potential::flat(), kSG, lat, 1.0);
  CHECK(one.kappa_R == 0.125);
  CHECK(one.c1 == 4.0);
  CHECK(one.c2 == 4.0);
  const auto two = local_poincare_constant(Potential::flat(), kSG, lat, 2.0);
  CHECK(two.kappa_R == Approx(1.0 / 32.0).epsilon(1e-15));
  for (int k = 1; k <= 40; ++k) {
    const double radius = k * lat.h;
    CHECK(local_poincare_constant(Potential::flat(), kSG, lat, radius).kappa_R ==
          Approx(1.0 / (8.0 * radius * radius)).epsilon(1e-14));
  }
}

TEST_CASE("local constant rejects radii off the grid", "[local]") {
  const Lattice lat = Lattice::make(0.1, 30);
  CHECK_THROWS_AS(local_poincare_constant(Potential::flat(), kSG, lat, 0.15), Error);
  CHECK_THROWS_AS(local_poincare_constant(Potential::flat(), kSG, lat, 4.0), Error);
  CHECK_THROWS_AS(local_poincare_constant(Potential::flat(), kSG, lat, -0.1), Error);
}

TEST_CASE("local constant stays below the reflected ball chain gap", "[local][oracle]") {
  const Potential u = Potential::quadratic(0.5);
  for (double radius : {1.0, 2.0, 4.0}) {
    const Lattice wide = Lattice::make(0.1, 90);
    const auto loc = local_poincare_constant(u, kSG, wide, radius);
    const Lattice ball = Lattice::make(0.1, static_cast<int>(std::lround(radius / 0.1)));
    const double gap = oracle::dense_gap(build_rates(u, kSG, ball), u, ball);
    CHECK(loc.kappa_R > 0.0);
    CHECK(loc.kappa_R <= gap);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("assemble_global arithmetic", "[assemble]") {
  CHECK(assemble_global(1.0, 0.0, 2.0) == 1.0);
  CHECK(assemble_global(0.5, 3.0, 1.0) == 0.125);
  double prev = 1e300;
  for (double b : {1.0, 10.0, 1e3, 1e6, 1e12}) {
    const double k = assemble_global(2.0, b, 1.0);
    CHECK(k < prev);
    prev = k;
  }
  CHECK(prev < 1e-11);
  CHECK_THROWS_AS(assemble_global(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(assemble_global(1.0, 1.0, -1.0), Error);
  CHECK_THROWS_AS(assemble_global(NAN, 1.0, 1.0), Error);
}

// ---------------------------------------------------------------------------

TEST_CASE("Lyapunov: flat potential admits no certificate", "[lyapunov]") {
  const Lattice lat = Lattice::make(0.1, 40);
  const auto r = build_rates(Potential::flat(), kSG, lat);
  const auto d = lyapunov_drift_ratio(r, lat);
  for (int k = 1; k < lat.size() - 1; ++k) {
    if (k == lat.n_half) continue;
    CHECK(d[k] == Approx(100.0 * (std::exp(0.1) + std::exp(-0.1) - 2.0)).epsilon(1e-12));
  }
  const auto c = lyapunov_certificate(Potential::flat(), kSG, r, lat);
  CHECK_FALSE(c.valid);
}

TEST_CASE("Lyapunov: quadratic potential is certified at small h", "[lyapunov]") {
  const Potential u = Potential::quadratic(0.5);
  for (double h : {0.1, 0.05}) {
    const Lattice lat = Lattice::make(h, static_cast<int>(std::lround(8.0 / h)));
    const RateField r = build_rates(u, kSG, lat);
    const auto c = lyapunov_certificate(u, kSG, r, lat);
    REQUIRE(c.valid);
    CHECK(c.theta > 0.0);
    CHECK(c.b >= 0.0);
    CHECK(c.radius == Approx(c.radius_nodes * h));
    CHECK(c.kappa == Approx(assemble_global(c.theta, c.b, c.kappa_R)).epsilon(1e-15));
    CHECK(lyapunov_residual(c, r, lat) <= 1e-12);
    const auto loc = local_poincare_constant(u, kSG, lat, c.radius);
    CHECK(loc.kappa_R == c.kappa_R);
    for (int k = 0; k < lat.size(); ++k) {
      if (std::abs(k - lat.n_half) > c.radius_nodes) CHECK(c.slack[k] >= -1e-12);
    }
  }
}

TEST_CASE("Lyapunov: coarse grid is reported, never thrown", "[lyapunov]") {
  const Potential u = Potential::quadratic(0.5);
  const Lattice lat = Lattice::make(2.0, 6);
  CHECK_NOTHROW(lyapunov_certificate(u, kSG, build_rates(u, kSG, lat), lat));
}

TEST_CASE("Lyapunov: serial and parallel scans agree exactly", "[lyapunov]") {
  const Potential u = Potential::double_well(0.25, 1.0);
  const Lattice lat = Lattice::make(0.05, 120);
  const RateField r = build_rates(u, kSG, lat);
  const auto a = lyapunov_certificate(u, kSG, r, lat, Exec::serial);
  const auto b = lyapunov_certificate(u, kSG, r, lat, Exec::parallel);
  CHECK(a.valid == b.valid);
  CHECK(a.kappa == b.kappa);
  CHECK(a.radius_nodes == b.radius_nodes);
  CHECK(a.b == b.b);
}

TEST_CASE("Lyapunov soundness for several potentials", "[lyapunov][property]") {
  for (const auto& u : {Potential::quadratic(0.5), Potential::quartic(0.25),
                        Potential::double_well(0.25, 1.0), Potential::abs(2.0)}) {
    const Lattice lat = Lattice::make(0.1, 60);
    const RateField r = build_rates(u, kSG, lat);
    const auto c = lyapunov_certificate(u, kSG, r, lat);
    if (c.valid) CHECK(lyapunov_residual(c, r, lat) <= 1e-12);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("best certificate picks curvature for the quadratic potential", "[best]") {
  const Potential u = Potential::quadratic(0.5);
  const Lattice lat = Lattice::make(0.05, 160);
  const auto c = best_certificate(u, kSG, lat);
  CHECK(c.valid);
  CHECK(c.method == CertMethod::curvature);
  CHECK(c.kappa > 0.85);
  CHECK(c.kappa == c.component("lambda_tilde"));
}

TEST_CASE("best certificate picks Lyapunov for the double well", "[best]") {
  const Potential u = Potential::double_well(0.25, 1.0);
  const Lattice lat = Lattice::make(0.1, 50);
  const auto c = best_certificate(u, kSG, lat);
  CHECK(c.valid);
  CHECK(c.method == CertMethod::lyapunov);
  CHECK(c.kappa == Approx(assemble_global(c.component("theta"), c.component("b"),
                                          c.component("kappa_R"))).epsilon(1e-15));
}

TEST_CASE("best certificate on the flat potential is invalid with diagnostics", "[best]") {
  const Lattice lat = Lattice::make(0.1, 40);
  const auto c = best_certificate(Potential::flat(), kSG, lat);
  CHECK_FALSE(c.valid);
  CHECK(c.diagnostics.size() == 2);
  const Json j = to_json(c);
  CHECK(j["valid"] == false);
  CHECK(j.contains("diagnostics"));
}

TEST_CASE("certificate JSON field names", "[best]") {
  const Potential u = Potential::quadratic(0.5);
  const Lattice lat = Lattice::make(0.1, 90);
  const Json j = to_json(best_certificate(u, kSG, lat));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"method", "kappa", "valid", "components", "lattice",
                                         "potential_tag", "b_function_tag"});
  CHECK(j["lattice"]["N"] == 90);
  CHECK(j["b_function_tag"] == "scharfetter-gummel");
  // 17 significant digits survive a text round trip.
  const Json back = Json::parse(dump_json(j));
  CHECK(back["kappa"].get<double>() == j["kappa"].get<double>());
}

// ---------------------------------------------------------------------------

TEST_CASE("every valid certificate is a sound Poincare constant", "[soundness][property]") {
  std::mt19937_64 rng(31);
  const std::vector<std::pair<Potential, double>> cases{
      {Potential::quadratic(0.5), 0.1}, {Potential::quadratic(0.5), 0.05},
      {Potential::double_well(0.25, 1.0), 0.1}, {Potential::quartic(0.25), 0.1}};
  for (const auto& [u, h] : cases) {
    const Lattice lat = auto_lattice(u, h, 40.0, 4.0);
    const RateField r = build_rates(u, kSG, lat);
    const StationaryMeasure m = stationary_measure(u, lat);
    const double gap = spectral_gap(symmetrize(r, m)).gap;
    const auto pi = oracle::brute_pi(u, lat);
    const CertificateBundle all = certify_all(u, kSG, lat);
    for (const auto& c : {to_poincare(all.curvature, lat, u.tag, kSG.tag()),
                          to_poincare(all.lyapunov, lat, u.tag, kSG.tag())}) {
      if (!c.valid) continue;
      CHECK(c.kappa <= gap + 1e-9);
      double worst = 1e300;
      for (int rep = 0; rep < 1000; ++rep) {
        const GridFunction f = oracle::random_function(rng, lat);
        const double var = oracle::variance(pi, f);
        const double energy = oracle::bond_energy(r, pi, f);
        worst = std::min(worst, energy / c.kappa - var);
      }
      CHECK(worst >= -1e-12);
    }
  }
}

TEST_CASE("h-independence of the curvature constant on |x| <= 8", "[curvature][property]") {
  const double a = lambda_at(0.2, 40), b = lambda_at(0.1, 80), c = lambda_at(0.05, 160);
  const double hi = std::max({a, b, c}), lo = std::min({a, b, c});
  CHECK((hi - lo) / hi <= 0.20);
}

// ---------------------------------------------------------------------------

TEST_CASE("perturbation: zero perturbation halves the constant", "[perturbation]") {
  const Potential u = Potential::quadratic(0.5);
  const Lattice lat = Lattice::make(0.1, 90);
  const auto base = best_certificate(u, kSG, lat);
  const auto p = perturbation_transfer(base, u, u, kSG, lat);
  CHECK(p.component("s1") == 1.0);
  CHECK(p.component("s2") == 1.0);
  CHECK(p.component("s3") == 2.0);
  CHECK(p.kappa == base.kappa / 2.0);
  CHECK(p.method == CertMethod::perturbation);
}

TEST_CASE("perturbation: Gaussian bump stays below the measured gap", "[perturbation][oracle]") {
  const Potential ut = Potential::quadratic(0.5);
  const Potential u = bumped();
  const Lattice lat = Lattice::make(0.1, 90);
  const auto base = best_certificate(ut, kSG, lat);
  const auto p = perturbation_transfer(base, ut, u, kSG, lat);
  const RateField r = build_rates(u, kSG, lat);
  const double gap = spectral_gap(symmetrize(r, stationary_measure(u, lat))).gap;
  CHECK(p.kappa > 0.0);
  CHECK(p.kappa <= gap);
  Lattice small = Lattice::make(0.1, 60);
  CHECK(p.kappa <= oracle::dense_gap(build_rates(u, kSG, small), u, small) + 1e-9);
}

TEST_CASE("perturbation: unbounded perturbation is an error", "[perturbation]") {
  const Potential ut = Potential::quadratic(0.5);
  const Lattice lat = Lattice::make(0.1, 90);
  const auto base = best_certificate(ut, kSG, lat);
  CHECK_THROWS_AS(perturbation_transfer(base, ut, Potential::quartic(1.0), kSG, lat), Error);
  PoincareCertificate invalid = base;
  invalid.valid = false;
  CHECK_THROWS_AS(perturbation_transfer(invalid, ut, ut, kSG, lat), Error);
}
