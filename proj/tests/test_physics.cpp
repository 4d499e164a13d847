#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "su11/dispersion.hpp"
#include "su11/lattice.hpp"
#include "su11/physics.hpp"
#include "test_helpers.hpp"

using namespace su11;

namespace {
// independent high-precision evaluation of the mismatch
long double mismatch_ld(long double qs, long double qi, long double kp,
                        long double ks, long double ki) {
  const long double s = qs + qi;
  return sqrtl(kp * kp - s * s) - sqrtl(ks * ks - qs * qs) -
         sqrtl(ki * ki - qi * qi);
}
}  // namespace

TEST_CASE("lattice construction") {
  Lattice lat = make_lattice(64, 1e5, 1e7);
  CHECK(lat.n() == 64);
  // uniform spacing
  for (int j = 0; j + 1 < lat.n(); ++j)
    CHECK(std::abs(lat.q(j + 1) - lat.q(j) - lat.dq) < 1e-12 * lat.dq);
  // symmetric about zero
  for (int j = 0; j < lat.n(); ++j)
    CHECK(std::abs(lat.q(j) + lat.q(lat.n() - 1 - j)) < 1e-12 * lat.dq);
  CHECK_THROWS_AS(make_lattice(64, 0.96e7, 1e7), numeric_error);
  CHECK_THROWS_AS(make_lattice(1, 1e5, 1e7), config_error);
}

TEST_CASE("delta_k on collinear-matched dispersion") {
  Dispersion d = toy_dispersion(1e7);
  CHECK(delta_k(0, 0, d) == doctest::Approx(0.0).epsilon(1e-14));

  // pump term loses q-dependence when qs + qi = 0
  const double q = 3e5;
  const double expect = d.k_p - 2 * std::sqrt(d.k_s * d.k_s - q * q);
  CHECK(delta_k(q, -q, d) == doctest::Approx(expect).epsilon(1e-14));

  // random points inside the cone against the long-double oracle
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-0.3e7, 0.3e7);
  for (int it = 0; it < 200; ++it) {
    const double qs = u(gen), qi = u(gen);
    const double got = delta_k(qs, qi, d);
    const double want =
        static_cast<double>(mismatch_ld(qs, qi, d.k_p, d.k_s, d.k_i));
    CHECK(std::abs(got - want) < 1e-6 + 1e-12 * std::abs(want));
    CHECK(delta_k(qs, qi, d) == delta_k(qi, qs, d));  // k_s == k_i
  }

  CHECK_THROWS_AS(delta_k(0.999e7 * std::sqrt(2.0), 0.999e7, d), numeric_error);
}

TEST_CASE("delta_k_air matches air moduli") {
  Dispersion d = bbo_dispersion();
  CHECK(delta_k_air(0, 0, d) == doctest::Approx(0.0).epsilon(1e-14));
  std::mt19937 gen(8);
  std::uniform_real_distribution<double> u(-4e5, 4e5);
  for (int it = 0; it < 100; ++it) {
    const double qs = u(gen), qi = u(gen);
    const double want = static_cast<double>(
        mismatch_ld(qs, qi, d.k_p_air, d.k_s_air, d.k_i_air));
    CHECK(std::abs(delta_k_air(qs, qi, d) - want) < 1e-6 + 1e-12 * std::abs(want));
  }
}

TEST_CASE("pump kernel") {
  PumpProfile p;  // sigma = 70/sqrt(2) um
  CHECK(pump_kernel(2.5e5, -2.5e5, p) == doctest::Approx(1.0));
  const double s = std::sqrt(2.0) / p.sigma;
  CHECK(pump_kernel(s / 2, s / 2, p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(pump_kernel(2e4, 0, p) == doctest::Approx(std::exp(-0.49)).epsilon(1e-4));
  // depends on qs, qi only through the sum
  CHECK(pump_kernel(1e4, 3e4, p) == doctest::Approx(pump_kernel(4e4, 0, p)));
}

TEST_CASE("phase matching, first pass") {
  Dispersion d = bbo_dispersion();
  CHECK(phasematch_first(2e5, 1e5, 0, d) == cplx(1, 0));
  const double q = 2.3e5;
  const double dk = delta_k(q, -0.4 * q, d);
  const double Lpi = pi / dk;
  CHECK(std::abs(phasematch_first(q, -0.4 * q, Lpi, d) - cplx(-1, 0)) < 1e-10);
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(-4e5, 4e5);
  for (int it = 0; it < 100; ++it) {
    const double qs = u(gen), qi = u(gen), L = 3e-3 * (it / 100.0);
    CHECK(std::abs(std::abs(phasematch_first(qs, qi, L, d)) - 1.0) < 1e-14);
    CHECK(std::abs(phasematch_first(qs, qi, L, d) - phasematch_first(qi, qs, L, d)) < 1e-12);
  }
}

TEST_CASE("phase matching, second pass") {
  Dispersion d = bbo_dispersion();
  CrystalGeometry g;
  g.L1 = 3e-3;

  SUBCASE("balanced limit mirrors the first pass") {
    g.delta_z = 0;
    g.phi = 0;
    std::mt19937 gen(10);
    std::uniform_real_distribution<double> u(-4e5, 4e5);
    for (int it = 0; it < 60; ++it) {
      const double qs = u(gen), qi = u(gen);
      const double L = g.L1 * (1.0 + it / 60.0);  // global second-pass span
      const cplx h2 = phasematch_second(qs, qi, L, g, d);
      const cplx h1m = phasematch_first(qs, qi, 2 * g.L1 - L, d);
      CHECK(std::abs(h2 - h1m) < 1e-9);
      // continuity of the two passes where the mirror folds them together
      CHECK(std::abs(phasematch_second(qs, qi, g.L1, g, d) -
                     phasematch_first(qs, qi, g.L1, d)) < 1e-9);
    }
  }

  SUBCASE("phi = pi flips the sign") {
    g.delta_z = 0;
    g.phi = 0;
    const cplx base = phasematch_second(1e5, -2e5, 1e-3, g, d);
    g.phi = pi;
    const cplx flipped = phasematch_second(1e5, -2e5, 1e-3, g, d);
    CHECK(std::abs(flipped + base) < 1e-12);
  }

  SUBCASE("collinear point feels only phi under matched air moduli") {
    g.delta_z = 515.3e-6;
    g.phi = 0.7;
    const cplx h = phasematch_second(0, 0, 2 * g.L1, g, d);
    // L = 2 L1 makes the crystal term vanish as well
    CHECK(std::abs(h - std::polar(1.0, g.phi)) < 1e-12);
  }

  SUBCASE("phase-free convention omits exp(i phi)") {
    g.delta_z = 2e-4;
    g.phi = 1.1;
    const cplx with = phasematch_second(1e5, 5e4, 1e-3, g, d, true);
    const cplx without = phasematch_second(1e5, 5e4, 1e-3, g, d, false);
    CHECK(std::abs(with - without * std::polar(1.0, g.phi)) < 1e-12);
  }
}

TEST_CASE("coupling kernel") {
  Dispersion d = bbo_dispersion();
  Lattice lat = make_lattice_theta(24, 0.04, d);
  PumpProfile pump;
  CrystalGeometry g;

  SUBCASE("zero gain gives the zero kernel") {
    CouplingKernel k = coupling_kernel(lat, 0.0, pump, d, g, Pass::first);
    CHECK(k.at(1e-3).norm() == 0.0);
  }

  SUBCASE("entries match direct evaluation, both passes") {
    g.delta_z = 3e-4;
    g.phi = 0.4;
    for (Pass pass : {Pass::first, Pass::second}) {
      CouplingKernel k = coupling_kernel(lat, 0.05, pump, d, g, pass);
      const double L = pass == Pass::first ? 1.7e-3 : 4.2e-3;
      MatrixXcd K = k.at(L);
      for (int i = 0; i < lat.n(); i += 5)
        for (int j = 0; j < lat.n(); j += 5) {
          const cplx h = pass == Pass::first
                             ? phasematch_first(lat.q(i), lat.q(j), L, d)
                             : phasematch_second(lat.q(i), lat.q(j), L, g, d);
          const cplx want =
              0.05 * lat.weight() * pump_kernel(lat.q(i), lat.q(j), pump) * h;
          CHECK(std::abs(K(i, j) - want) < 1e-14 * std::abs(want) + 1e-18);
        }
    }
  }

  SUBCASE("kernel symmetry under the quadrature measure") {
    CouplingKernel k = coupling_kernel(lat, 0.04, pump, d, g, Pass::first);
    MatrixXcd K = k.at(2.2e-3);
    const double w = lat.weight();
    const double scale = K.cwiseAbs().maxCoeff() * w;
    for (int i = 0; i < lat.n(); ++i)
      for (int j = 0; j < lat.n(); ++j)
        CHECK(std::abs(K(i, j) * w - K(j, i) * w) < 1e-13 * scale);
  }

  SUBCASE("layer integral matches fine quadrature of the kernel") {
    g.delta_z = 1e-4;
    CouplingKernel k = coupling_kernel(lat, 0.05, pump, d, g, Pass::second);
    const double L0 = 3.4e-3, h = 0.8e-3;
    MatrixXcd direct = MatrixXcd::Zero(lat.n(), lat.n());
    const int steps = 4000;  // Simpson rule
    for (int s = 0; s <= steps; ++s) {
      const double w = (s == 0 || s == steps) ? 1.0 : (s % 2 ? 4.0 : 2.0);
      direct += w * k.at(L0 + h * s / steps);
    }
    direct *= h / (3.0 * steps);
    MatrixXcd fast = k.integral(L0, h);
    CHECK((fast - direct).norm() / direct.norm() < 1e-9);
  }
}

TEST_CASE("angle_of") {
  Dispersion d = bbo_dispersion();
  CHECK(angle_of(0, d) == 0.0);
  CHECK(angle_of(d.k_vac * 0.04, d) == doctest::Approx(0.04));
  CHECK(angle_of(2e5, d) > angle_of(1e5, d));
}

TEST_CASE("dispersion validation") {
  Dispersion d = bbo_dispersion();
  d.k_i *= 1.001;  // breaks degenerate symmetry
  CHECK_THROWS_AS(d.validate(), config_error);
  Dispersion d2 = bbo_dispersion();
  d2.k_p = 0;
  CHECK_THROWS_AS(d2.validate(), config_error);
}
