#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "su11/interferometer.hpp"
#include "su11/jointdecomp.hpp"
#include "su11/report.hpp"
#include "test_helpers.hpp"

using namespace su11;
using namespace su11::test;

namespace {

TransferPair scalar_pair(double r, double phase = 0) {
  TransferPair tp;
  tp.lat = unit_lattice(1);
  tp.H = MatrixXcd::Constant(1, 1, std::cosh(r));
  tp.B = MatrixXcd::Constant(1, 1, std::sinh(r) * std::polar(1.0, phase));
  return tp;
}

// second pass of a balanced fully compensated device, built from the
// mirror relations beta2 = e^{i phi} beta1^T, eta2 = conj(eta1^T)
TransferPair mirrored_pass(const TransferPair& p1, double phi) {
  TransferPair p2;
  p2.lat = p1.lat;
  p2.B = std::polar(1.0, phi) * p1.B.transpose();
  p2.H = p1.H.transpose().conjugate();
  p2.meta.pass = "second";
  return p2;
}

}  // namespace

TEST_CASE("compose with the identity is a no-op") {
  TransferPair p = small_bbo_pair(32, 2.0);
  TransferPair id = identity_pair(p.lat);
  TransferPair a = compose(id, p);
  TransferPair b = compose(p, id);
  CHECK((a.H - p.H).norm() < 1e-12 * p.H.norm());
  CHECK((a.B - p.B).norm() < 1e-12 * p.B.norm());
  CHECK((b.H - p.H).norm() < 1e-12 * p.H.norm());
  CHECK((b.B - p.B).norm() < 1e-12 * p.B.norm());
}

TEST_CASE("scalar passes add their squeeze parameters in phase") {
  const double r1 = 0.7, r2 = 1.1;
  TransferPair c = compose(scalar_pair(r1), scalar_pair(r2));
  SchmidtBasis basis = joint_decompose(c);
  const double want = std::pow(std::sinh(r1 + r2), 2);
  CHECK(basis.lambda(0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("composition stays on the symplectic group") {
  TransferPair p1 = small_bbo_pair(40, 1.0);
  TransferPair p2 = small_bbo_pair(40, 4.0, 0.05, 0, 0, Pass::second, false);
  TransferPair c = compose(p1, p2);
  for (double r : symplectic_residuals(c)) CHECK(r < 1e-6);
}

TEST_CASE("compose is associative") {
  TransferPair a = small_bbo_pair(32, 0.8);
  TransferPair b = small_bbo_pair(32, 1.5);
  TransferPair c = small_bbo_pair(32, 2.5);
  TransferPair left = compose(compose(a, b), c);
  TransferPair right = compose(a, compose(b, c));
  CHECK((left.H - right.H).norm() / right.H.norm() < 1e-8);
  CHECK((left.B - right.B).norm() / right.B.norm() < 1e-8);
}

TEST_CASE("lattice mismatch rejected") {
  TransferPair a = small_bbo_pair(24, 1.0);
  TransferPair b = small_bbo_pair(32, 1.0);
  CHECK_THROWS_AS(compose(a, b), numeric_error);
}

TEST_CASE("balanced closed-form spectrum") {
  VectorXd lam(3);
  lam << 2.0, 0.5, 0.1;

  SUBCASE("dark fringe extinguishes") {
    BalancedSpectrum s = balanced_su_spectrum(lam, pi);
    CHECK(s.lambda_su.cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("bright fringe at phi = 0") {
    BalancedSpectrum s = balanced_su_spectrum(lam, 0.0);
    for (int i = 0; i < 3; ++i)
      CHECK(s.lambda_su(i) == doctest::Approx(4 * lam(i) * (lam(i) + 1)).epsilon(1e-12));
    CHECK(s.mu == 0.0);
    CHECK(s.zeta.cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("generic phi") {
    const double phi = pi / 3;
    BalancedSpectrum s = balanced_su_spectrum(lam, phi);
    const double c = std::cos(phi / 2);
    for (int i = 0; i < 3; ++i)
      CHECK(s.lambda_su(i) ==
            doctest::Approx(4 * c * c * lam(i) * (lam(i) + 1)).epsilon(1e-12));
    CHECK(s.mu == doctest::Approx(phi / 2));
    for (int i = 0; i < 3; ++i)
      CHECK(s.zeta(i) ==
            doctest::Approx(std::arg(1.0 + lam(i) * (1.0 + std::polar(1.0, phi)))));
  }
}

TEST_CASE("integrated second pass obeys the mirror relations when balanced") {
  const int n = 40;
  TransferPair p1 = small_bbo_pair(n, 2.0);
  TransferPair p2 = small_bbo_pair(n, 2.0, 0.05, 0, 0, Pass::second, false);
  CHECK((p2.B - p1.B.transpose()).norm() / p1.B.norm() < 1e-7);
  CHECK((p2.H - p1.H.transpose().conjugate()).norm() / p1.H.norm() < 1e-7);
}

TEST_CASE("numerical composition matches the balanced closed forms") {
  const int n = 48;
  TransferPair p1 = small_bbo_pair(n, 2.0);
  SchmidtBasis b1 = joint_decompose(p1);
  for (double phi : {0.0, pi / 3, pi}) {
    TransferPair su = compose(p1, mirrored_pass(p1, phi));
    BalancedSpectrum closed = balanced_su_spectrum(b1.lambda, phi);
    if (phi == pi) {
      CHECK(su.B.norm() / p1.B.norm() < 1e-8);  // nothing leaves the dark fringe
      continue;
    }
    SchmidtBasis bsu = joint_decompose(su);
    for (int i = 0; i < 10; ++i)
      CHECK(std::abs(bsu.lambda(i) - closed.lambda_su(i)) <
            1e-6 * closed.lambda_su(i));
    // whole-device output modes coincide with first-pass input modes
    for (int i = 0; i < 10; ++i) {
      const double ov =
          std::abs((bsu.U.col(i).adjoint() * b1.Psi.col(i))(0, 0)) * p1.lat.weight();
      CHECK(ov > 1.0 - 1e-5);
    }
  }
}

TEST_CASE("phase split reassembles the composition") {
  const int n = 40;
  TransferPair p1 = small_bbo_pair(n, 1.0);
  TransferPair p2 = small_bbo_pair(n, 4.0, 0.05, 2e-4, 0, Pass::second, false);
  SuSetup setup{p1, p2, 2e-4, 0.0};
  XySplit s = xy_split(setup);

  for (double phi : {0.0, pi / 3, pi}) {
    // pass with the phase folded in: beta2 -> e^{i phi} beta2
    TransferPair p2phi = p2;
    p2phi.B *= std::polar(1.0, phi);
    TransferPair direct = compose(p1, p2phi);
    CHECK((s.beta_su(phi) - direct.B).norm() / direct.B.norm() < 1e-8);
    CHECK((s.eta_su(phi) - direct.H).norm() / direct.H.norm() < 1e-8);
  }
}

TEST_CASE("xy split with an inert second pass") {
  TransferPair p1 = small_bbo_pair(32, 1.0);
  TransferPair id = identity_pair(p1.lat);
  SuSetup setup{p1, id, 0.0, 0.0};
  XySplit s = xy_split(setup);
  CHECK(s.Y.norm() == 0.0);
  CHECK(std::abs(s.C) == 0.0);
  CHECK(visibility(s) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fringe_offset(s), numeric_error);
}

TEST_CASE("balanced device: fringe constants and visibility") {
  const int n = 48;
  TransferPair p1 = small_bbo_pair(n, 2.0);
  TransferPair p2 = mirrored_pass(p1, 0.0);
  SuSetup setup{p1, p2, 0.0, 0.0};
  XySplit s = xy_split(setup);
  SchmidtBasis b1 = joint_decompose(p1);

  const double aa = (b1.lambda.array() * (b1.lambda.array() + 1)).sum();
  CHECK(std::abs(s.C) == doctest::Approx(aa).epsilon(1e-8));
  CHECK(s.xx == doctest::Approx(aa).epsilon(1e-8));
  CHECK(s.yy == doctest::Approx(aa).epsilon(1e-8));
  CHECK(std::abs(fringe_offset(s)) < 1e-8);
  CHECK(visibility(s) == doctest::Approx(100.0).epsilon(1e-8));

  // dark fringe intensity vanishes relative to the bright fringe
  const double bf = total_intensity(s, phi_bright(s));
  const double df = total_intensity(s, phi_dark(s));
  CHECK(df < 1e-8 * bf);

  // bright fringe maximizes a phi scan
  for (int k = 0; k < 32; ++k)
    CHECK(total_intensity(s, 2 * pi * k / 32) <= bf + 1e-9 * bf);
}

TEST_CASE("two routes to the total intensity agree") {
  const int n = 40;
  TransferPair p1 = small_bbo_pair(n, 1.0);
  TransferPair p2 = small_bbo_pair(n, 4.0, 0.05, 1.5e-4, 0, Pass::second, false);
  SuSetup setup{p1, p2, 1.5e-4, 0.0};
  XySplit s = xy_split(setup);
  for (double phi : {0.3, 2.0}) {
    TransferPair su = s.pair_at(phi);
    const double via_density =
        photon_number_density(su).sum() * su.lat.weight();
    CHECK(total_intensity(s, phi) == doctest::Approx(via_density).epsilon(1e-6));
  }
}

TEST_CASE("visibility equals the two-fringe contrast") {
  const int n = 40;
  TransferPair p1 = small_bbo_pair(n, 1.0);
  TransferPair p2 = small_bbo_pair(n, 4.0, 0.05, 1e-4, 0, Pass::second, false);
  SuSetup setup{p1, p2, 1e-4, 0.0};
  XySplit s = xy_split(setup);
  const double bf = total_intensity(s, phi_bright(s));
  const double df = total_intensity(s, phi_dark(s));
  const double two_point = 100.0 * (bf - df) / (bf + df);
  CHECK(visibility(s) == doctest::Approx(two_point).epsilon(1e-10));
}

TEST_CASE("conjugating the split flips the fringe offset") {
  const int n = 32;
  TransferPair p1 = small_bbo_pair(n, 1.0);
  TransferPair p2 = small_bbo_pair(n, 4.0, 0.05, 1e-4, 0, Pass::second, false);
  SuSetup setup{p1, p2, 1e-4, 0.0};
  XySplit s = xy_split(setup);
  XySplit conj = s;
  conj.X = s.X.conjugate();
  conj.Y = s.Y.conjugate();
  conj.C = (conj.X.conjugate().cwiseProduct(conj.Y)).sum();
  CHECK(fringe_offset(conj) == doctest::Approx(-fringe_offset(s)).epsilon(1e-12));
}

TEST_CASE("delta_z optimization on a balanced device") {
  const int n = 32;
  Dispersion d = bbo_dispersion();
  Lattice lat = make_lattice_theta(n, 0.05, d);
  PumpProfile pump;
  const double gamma = 2.0 / 147.0;
  CrystalGeometry g1;
  TransferPair p1 = integrate_rk(coupling_kernel(lat, gamma, pump, d, g1, Pass::first));

  auto make_split = [&](double dz) {
    CrystalGeometry g2;
    g2.delta_z = dz;
    TransferPair p2 = integrate_rk(
        coupling_kernel(lat, gamma, pump, d, g2, Pass::second, false));
    return xy_split(SuSetup{p1, p2, dz, 0.0});
  };

  DeltaZCurve curve = optimize_deltaz(make_split, -2e-4, 2e-4, 9, 3e-6);
  CHECK(std::abs(curve.dz_star) < 5e-6);  // optimum at zero offset
  CHECK(curve.vis_star == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(!curve.boundary);

  // visibility curve is smooth: bounded second differences
  for (std::size_t i = 1; i + 1 < curve.vis.size(); ++i) {
    const double dd = curve.vis[i + 1] - 2 * curve.vis[i] + curve.vis[i - 1];
    CHECK(std::abs(dd) < 5.0);
  }

  // a range that excludes the optimum reports a boundary hit
  DeltaZCurve off = optimize_deltaz(make_split, 1e-4, 3e-4, 5, 3e-6);
  CHECK(off.boundary);
}
