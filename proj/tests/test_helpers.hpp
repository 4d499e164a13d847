#pragma once

#include <random>

#include <Eigen/Dense>

#include "su11/common.hpp"
#include "su11/dispersion.hpp"
#include "su11/lattice.hpp"
#include "su11/propagator.hpp"

namespace su11::test {

inline std::mt19937& rng(unsigned seed = 0) {
  static std::mt19937 gen(12345);
  if (seed) gen.seed(seed);
  return gen;
}

inline MatrixXcd random_complex(int rows, int cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXcd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = cplx(g(gen), g(gen));
  return M;
}

inline MatrixXcd random_unitary(int n, unsigned seed) {
  MatrixXcd M = random_complex(n, n, seed);
  Eigen::HouseholderQR<MatrixXcd> qr(M);
  MatrixXcd Q = qr.householderQ();
  // fix column phases so Q is unique given M
  MatrixXcd R = Q.adjoint() * M;
  for (int j = 0; j < n; ++j) {
    const cplx d = R(j, j);
    if (std::abs(d) > 0) Q.col(j) *= d / std::abs(d);
  }
  return Q;
}

inline Lattice unit_lattice(int n) {
  Lattice lat;
  lat.dq = 1.0;
  lat.q.setLinSpaced(n, -(n - 1) / 2.0, (n - 1) / 2.0);
  return lat;
}

// symplectic pair planted from known frames and eigenvalues
inline TransferPair planted_pair(const Lattice& lat, const MatrixXcd& U0,
                                 const MatrixXcd& Psi0, const VectorXd& lambda) {
  VectorXd sb = lambda.cwiseSqrt();
  VectorXd sh = (lambda.array() + 1.0).sqrt().matrix();
  TransferPair tp;
  tp.lat = lat;
  tp.B = U0 * sb.asDiagonal() * Psi0.transpose();
  tp.H = U0 * sh.asDiagonal() * Psi0.adjoint();
  tp.meta.integrator = "planted";
  return tp;
}

// small fast BBO-like propagation for tests
inline TransferPair small_bbo_pair(int n, double G_exp, double theta_max = 0.05,
                                   double delta_z = 0, double phi = 0,
                                   Pass pass = Pass::first,
                                   bool include_phi = true) {
  Dispersion d = bbo_dispersion();
  Lattice lat = make_lattice_theta(n, theta_max, d);
  PumpProfile pump;
  CrystalGeometry geom;
  geom.delta_z = delta_z;
  geom.phi = phi;
  const double gamma = G_exp / 147.0;
  CouplingKernel k = coupling_kernel(lat, gamma, pump, d, geom, pass, include_phi);
  return integrate_rk(k);
}

}  // namespace su11::test
