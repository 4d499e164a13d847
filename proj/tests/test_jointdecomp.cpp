#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "su11/jointdecomp.hpp"
#include "su11/propagator.hpp"
#include "test_helpers.hpp"

using namespace su11;
using namespace su11::test;

namespace {

// weighted mode overlap |<a, b>|
double mode_overlap(const Lattice& lat, const VectorXcd& a, const VectorXcd& b) {
  return std::abs((a.adjoint() * b)(0, 0)) * lat.weight();
}

void check_basis_contract(const TransferPair& tp, const SchmidtBasis& basis,
                          double tol = 1e-8) {
  const int n = tp.n();
  const double dq = tp.lat.weight();
  // weighted unitarity
  MatrixXcd gram_u = dq * (basis.U.adjoint() * basis.U);
  MatrixXcd gram_p = dq * (basis.Psi.adjoint() * basis.Psi);
  CHECK((gram_u - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < tol);
  CHECK((gram_p - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < tol);
  // descending eigenvalues
  for (int i = 0; i + 1 < n; ++i) CHECK(basis.lambda(i) >= basis.lambda(i + 1) - 1e-12);
  // reconstruction
  auto [rb, rh] = reconstruction_residuals(tp, basis);
  CHECK(rb < 1e-6);
  CHECK(rh < 1e-6);
  // lambda_tilde - lambda = 1, relative to the eigenvalue scale
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(basis.lambda_tilde(i) - basis.lambda(i) - 1.0) <
          1e-8 * (1.0 + basis.lambda(i)));
}

}  // namespace

TEST_CASE("scalar pair") {
  Lattice lat = unit_lattice(1);
  const double r = 0.8;
  TransferPair tp;
  tp.lat = lat;
  tp.H = MatrixXcd::Constant(1, 1, std::cosh(r));
  tp.B = MatrixXcd::Constant(1, 1, std::sinh(r));
  SchmidtBasis basis = joint_decompose(tp);
  CHECK(basis.lambda(0) == doctest::Approx(std::sinh(r) * std::sinh(r)).epsilon(1e-12));
  CHECK(std::abs(basis.U(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(basis.Psi(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("identity pair decomposes to vacuum") {
  Lattice lat = unit_lattice(12);
  TransferPair tp = identity_pair(lat);
  SchmidtBasis basis = joint_decompose(tp);
  CHECK(basis.lambda.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(basis.blocks.size() == 1);  // one fully degenerate block
  check_basis_contract(tp, basis);
}

TEST_CASE("planted 6x6 oracle, non-degenerate") {
  Lattice lat = unit_lattice(6);
  MatrixXcd U0 = random_unitary(6, 101);
  MatrixXcd P0 = random_unitary(6, 202);
  VectorXd lam(6);
  lam << 9.0, 4.0, 1.5, 0.6, 0.2, 0.05;
  TransferPair tp = planted_pair(lat, U0, P0, lam);
  SchmidtBasis basis = joint_decompose(tp);

  for (int i = 0; i < 6; ++i)
    CHECK(std::abs(basis.lambda(i) - lam(i)) < 1e-10);
  check_basis_contract(tp, basis);

  // recovered modes match the planted ones up to a simultaneous sign
  for (int i = 0; i < 6; ++i) {
    CHECK(mode_overlap(lat, basis.U.col(i), U0.col(i)) > 1.0 - 1e-8);
    CHECK(mode_overlap(lat, basis.Psi.col(i), P0.col(i)) > 1.0 - 1e-8);
    const cplx su = (U0.col(i).adjoint() * basis.U.col(i))(0, 0);
    const cplx sp = (P0.col(i).adjoint() * basis.Psi.col(i))(0, 0);
    // simultaneous flip: same sign on u and psi
    CHECK(std::abs(su - std::conj(sp)) < 1e-8);
  }

  // after canonicalizing both bases the match is exact
  SchmidtBasis planted;
  planted.lat = lat;
  planted.U = U0;
  planted.Psi = P0;
  planted.lambda = lam;
  planted.lambda_tilde = (lam.array() + 1).matrix();
  planted.blocks = block_partition(lam.cwiseSqrt(), 1e-8);
  canonicalize_signs(planted);
  for (int i = 0; i < 6; ++i) {
    CHECK((basis.U.col(i) - planted.U.col(i)).norm() < 1e-8);
    CHECK((basis.Psi.col(i) - planted.Psi.col(i)).norm() < 1e-8);
  }
}

TEST_CASE("planted oracle with a 2-fold degenerate block") {
  Lattice lat = unit_lattice(6);
  MatrixXcd U0 = random_unitary(6, 303);
  MatrixXcd P0 = random_unitary(6, 404);
  VectorXd lam(6);
  lam << 4.0, 2.0, 2.0, 1.0, 0.5, 0.1;
  TransferPair tp = planted_pair(lat, U0, P0, lam);
  SchmidtBasis basis = joint_decompose(tp);

  for (int i = 0; i < 6; ++i) CHECK(std::abs(basis.lambda(i) - lam(i)) < 1e-10);
  check_basis_contract(tp, basis);
  REQUIRE(basis.blocks.size() == 5);
  CHECK(basis.blocks[1] == std::pair<int, int>(1, 3));
  CHECK(basis.mode_degenerate(1));
  CHECK(!basis.mode_degenerate(0));

  // non-degenerate modes match up to sign
  for (int i : {0, 3, 4, 5})
    CHECK(mode_overlap(lat, basis.U.col(i), U0.col(i)) > 1.0 - 1e-8);

  // the degenerate pair spans the planted subspace
  MatrixXcd S_got = basis.U.middleCols(1, 2);
  MatrixXcd S_want = U0.middleCols(1, 2);
  MatrixXcd proj = S_want * S_want.adjoint() * lat.weight();
  CHECK((proj * S_got - S_got).norm() < 1e-8);
}

TEST_CASE("planted 64x64 oracle") {
  const int n = 64;
  Lattice lat = unit_lattice(n);
  MatrixXcd U0 = random_unitary(n, 505);
  MatrixXcd P0 = random_unitary(n, 606);
  VectorXd lam(n);
  for (int i = 0; i < n; ++i) lam(i) = 50.0 * std::exp(-0.35 * i);
  lam(10) = lam(9);  // one planted degeneracy
  std::sort(lam.data(), lam.data() + n, std::greater<double>());
  TransferPair tp = planted_pair(lat, U0, P0, lam);
  SchmidtBasis basis = joint_decompose(tp);
  for (int i = 0; i < n; ++i) CHECK(std::abs(basis.lambda(i) - lam(i)) < 1e-10);
  check_basis_contract(tp, basis);
  for (int i = 0; i < 20; ++i) {
    if (basis.mode_degenerate(i)) continue;
    CHECK(mode_overlap(lat, basis.U.col(i), U0.col(i)) > 1.0 - 1e-8);
  }
}

TEST_CASE("block partition") {
  VectorXd a(3);
  a << 3, 2, 1;
  auto p1 = block_partition(a, 1e-8);
  CHECK(p1.size() == 3);

  VectorXd b(3);
  b << 2, 2, 1;
  auto p2 = block_partition(b, 1e-8);
  REQUIRE(p2.size() == 2);
  CHECK(p2[0] == std::pair<int, int>(0, 2));
  CHECK(p2[1] == std::pair<int, int>(2, 3));

  // all-zero spectrum collapses to a single block
  VectorXd c = VectorXd::Zero(5);
  auto p3 = block_partition(c, 1e-8);
  REQUIRE(p3.size() == 1);
  CHECK(p3[0] == std::pair<int, int>(0, 5));
}

TEST_CASE("takagi factor of a unitary symmetric matrix") {
  SUBCASE("identity") {
    MatrixXcd D = takagi_unitary(MatrixXcd::Identity(4, 4));
    CHECK((D - MatrixXcd::Identity(4, 4)).norm() < 1e-12);
  }
  SUBCASE("1x1 phase halves") {
    MatrixXcd G = MatrixXcd::Constant(1, 1, std::polar(1.0, 1.3));
    MatrixXcd D = takagi_unitary(G);
    CHECK(std::abs(D(0, 0) - std::polar(1.0, 0.65)) < 1e-14);
  }
  SUBCASE("random 3x3 built as Q Q^T") {
    MatrixXcd Q = random_unitary(3, 707);
    MatrixXcd G = Q * Q.transpose();
    MatrixXcd D = takagi_unitary(G);
    CHECK((D * D.transpose() - G).norm() < 1e-10);
    CHECK((D * D.adjoint() - MatrixXcd::Identity(3, 3)).norm() < 1e-12);
  }
  SUBCASE("rejects non-symmetric input") {
    MatrixXcd Z = random_unitary(3, 808);  // generic unitary, not symmetric
    CHECK_THROWS_AS(takagi_unitary(Z), numeric_error);
  }
}

TEST_CASE("unitary block square root") {
  SUBCASE("identity and diagonal phases") {
    std::vector<std::pair<int, int>> singletons = {{0, 1}, {1, 2}};
    MatrixXcd Z = MatrixXcd::Zero(2, 2);
    Z(0, 0) = std::polar(1.0, 0.4);
    Z(1, 1) = std::polar(1.0, -2.2);
    MatrixXcd S = unitary_block_sqrt(Z, singletons);
    CHECK(std::abs(S(0, 0) - std::polar(1.0, 0.2)) < 1e-14);
    CHECK(std::abs(S(1, 1) - std::polar(1.0, -1.1)) < 1e-14);
    MatrixXcd I = MatrixXcd::Identity(3, 3);
    CHECK((unitary_block_sqrt(I, {{0, 3}}) - I).norm() < 1e-12);
  }
  SUBCASE("general 2x2 unitary block squares back") {
    MatrixXcd Z = random_unitary(2, 909);
    MatrixXcd S = unitary_block_sqrt(Z, {{0, 2}});
    CHECK((S * S - Z).norm() < 1e-12);
    CHECK((S * S.adjoint() - MatrixXcd::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("non-unitary input rejected") {
    MatrixXcd Z = 2.0 * MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(unitary_block_sqrt(Z, {{0, 2}}), numeric_error);
  }
}

TEST_CASE("sign canonicalization") {
  Lattice lat = unit_lattice(6);
  MatrixXcd U0 = random_unitary(6, 111);
  MatrixXcd P0 = random_unitary(6, 222);
  VectorXd lam(6);
  lam << 5, 3, 2, 1, 0.5, 0.25;
  TransferPair tp = planted_pair(lat, U0, P0, lam);
  SchmidtBasis basis = joint_decompose(tp);

  SchmidtBasis twice = basis;
  canonicalize_signs(twice);
  CHECK((twice.U - basis.U).norm() == 0.0);  // idempotent
  CHECK((twice.Psi - basis.Psi).norm() == 0.0);

  auto before = reconstruction_residuals(tp, basis);
  SchmidtBasis flipped = basis;
  flipped.U.col(2) = -flipped.U.col(2);
  flipped.Psi.col(2) = -flipped.Psi.col(2);
  auto after = reconstruction_residuals(tp, flipped);
  CHECK(before.first == doctest::Approx(after.first).epsilon(1e-12));
  CHECK(before.second == doctest::Approx(after.second).epsilon(1e-12));
}

TEST_CASE("svd route agrees with the eigendecomposition route") {
  TransferPair tp = small_bbo_pair(48, 4.0);
  SchmidtBasis a = joint_decompose(tp);
  SchmidtBasis b = joint_decompose_bbh(tp);
  for (int i = 0; i < 10; ++i) {
    if (a.mode_degenerate(i)) continue;
    CHECK(mode_overlap(tp.lat, a.U.col(i), b.U.col(i)) > 1.0 - 1e-6);
    CHECK(mode_overlap(tp.lat, a.Psi.col(i), b.Psi.col(i)) > 1.0 - 1e-6);
    CHECK(std::abs(a.lambda(i) - b.lambda(i)) < 1e-8 * (1 + a.lambda(i)));
  }
}

TEST_CASE("propagated pair satisfies the full contract") {
  for (double G : {0.01, 1.0, 8.0}) {
    TransferPair tp = small_bbo_pair(48, G);
    SchmidtBasis basis = joint_decompose(tp);
    check_basis_contract(tp, basis);
  }
}

TEST_CASE("non-symplectic input is rejected") {
  Lattice lat = unit_lattice(5);
  TransferPair tp = identity_pair(lat);
  tp.B = test::random_complex(5, 5, 999);  // arbitrary, breaks the conditions
  CHECK_THROWS_AS(joint_decompose(tp), numeric_error);
}

TEST_CASE("basis binary round trip") {
  TransferPair tp = small_bbo_pair(24, 2.0);
  SchmidtBasis basis = joint_decompose(tp);
  save_basis(basis, "/tmp/su11_basis_test.bin");
  SchmidtBasis back = load_basis("/tmp/su11_basis_test.bin");
  CHECK((back.U - basis.U).norm() < 1e-15 * basis.U.norm());
  CHECK((back.Psi - basis.Psi).norm() < 1e-15 * basis.Psi.norm());
  CHECK((back.lambda - basis.lambda).norm() == 0.0);
}
