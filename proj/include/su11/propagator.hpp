#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "su11/common.hpp"
#include "su11/lattice.hpp"
#include "su11/physics.hpp"

namespace su11 {

struct PairMeta {
  double gamma = 0;
  std::string pass = "first";
  double phi = 0;
  double delta_z = 0;
  std::string integrator = "none";
  double rtol = 0, atol = 0;
  int n_steps = 0;
};

// Discretized transfer functions of one pass (or a composed device).
// H and B hold the kernels scaled by the lattice weight,
//   H[j,k] = dq * eta(q_j, q_k),   B[j,k] = dq * beta(q_j, q_k),
// so that operator composition is a plain matrix product and the identity
// channel is exactly H = I. The raw kernel samples are H/dq and B/dq.
struct TransferPair {
  Lattice lat;
  MatrixXcd H, B;
  PairMeta meta;

  int n() const { return lat.n(); }
};

inline TransferPair identity_pair(const Lattice& lat) {
  TransferPair tp;
  tp.lat = lat;
  tp.H = MatrixXcd::Identity(lat.n(), lat.n());
  tp.B = MatrixXcd::Zero(lat.n(), lat.n());
  tp.meta.integrator = "identity";
  return tp;
}

// Relative Frobenius norms of the four symplectic conditions
//   H H+ - B B+ = I,   H B^T - B H^T = 0,
//   H+ H - B^T B* = I, H+ B - B^T H* = 0,
// each normalized by |H H+|. All four vanish exactly for any transfer
// pair realizing a bosonic Bogoliubov transformation.
inline std::array<double, 4> symplectic_residuals(const TransferPair& tp) {
  const int n = tp.n();
  const MatrixXcd I = MatrixXcd::Identity(n, n);
  const MatrixXcd HH = tp.H * tp.H.adjoint();
  const double scale = HH.norm();
  std::array<double, 4> r;
  r[0] = (HH - tp.B * tp.B.adjoint() - I).norm() / scale;
  r[1] = (tp.H * tp.B.transpose() - tp.B * tp.H.transpose()).norm() / scale;
  r[2] = (tp.H.adjoint() * tp.H - tp.B.transpose() * tp.B.conjugate() - I).norm() / scale;
  r[3] = (tp.H.adjoint() * tp.B - tp.B.transpose() * tp.H.conjugate()).norm() / scale;
  return r;
}

// mean photon number density (photons per rad/m) for vacuum input
inline VectorXd photon_number_density(const TransferPair& tp) {
  VectorXd N(tp.n());
  for (int j = 0; j < tp.n(); ++j)
    N(j) = tp.B.row(j).squaredNorm() / tp.lat.weight();
  return N;
}

inline double total_photon_number(const TransferPair& tp) {
  return tp.B.squaredNorm();
}

namespace detail {

// right-hand side dH = K conj(B), dB = K conj(H) on the stacked [H | B]
inline void pair_rhs(const MatrixXcd& K, const MatrixXcd& Y, MatrixXcd& out) {
  const Eigen::Index n = K.rows();
  out.leftCols(n).noalias() = K * Y.rightCols(n).conjugate();
  out.rightCols(n).noalias() = K * Y.leftCols(n).conjugate();
}

}  // namespace detail

// Adaptive Dormand-Prince 5(4) integration of the transfer-function
// equations over [kernel.L_a, kernel.L_b], starting from the identity
// channel. Error control is per matrix entry with scale atol + rtol*|y|.
inline TransferPair integrate_rk(const CouplingKernel& kernel,
                                 double rtol = 1e-9, double atol = 1e-12) {
  const int n = kernel.n();
  const double La = kernel.L_a, Lb = kernel.L_b;
  if (!(Lb > La)) throw config_error("integrate_rk: empty integration span");

  static constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
  static constexpr double a21 = 1. / 5;
  static constexpr double a31 = 3. / 40, a32 = 9. / 40;
  static constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
  static constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187,
                          a53 = 64448. / 6561, a54 = -212. / 729;
  static constexpr double a61 = 9017. / 3168, a62 = -355. / 33,
                          a63 = 46732. / 5247, a64 = 49. / 176,
                          a65 = -5103. / 18656;
  static constexpr double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192,
                          b5 = -2187. / 6784, b6 = 11. / 84;
  static constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920,
                          e5 = -17253. / 339200, e6 = 22. / 525, e7 = -1. / 40;

  MatrixXcd Y(n, 2 * n);
  Y.setZero();
  Y.leftCols(n).setIdentity();
  MatrixXcd k1(n, 2 * n), k2(n, 2 * n), k3(n, 2 * n), k4(n, 2 * n),
      k5(n, 2 * n), k6(n, 2 * n), k7(n, 2 * n), Yt(n, 2 * n), E(n, 2 * n);

  double L = La;
  double h = (Lb - La) / 64;
  const double h_min = (Lb - La) * 1e-14;
  int accepted = 0;

  detail::pair_rhs(kernel.at(L), Y, k1);
  while (L < Lb) {
    if (h < h_min)
      throw numeric_error("integrate_rk: step size underflow at L = " +
                          std::to_string(L));
    if (L + h > Lb) h = Lb - L;

    Yt = Y + h * a21 * k1;
    detail::pair_rhs(kernel.at(L + c2 * h), Yt, k2);
    Yt = Y + h * (a31 * k1 + a32 * k2);
    detail::pair_rhs(kernel.at(L + c3 * h), Yt, k3);
    Yt = Y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    detail::pair_rhs(kernel.at(L + c4 * h), Yt, k4);
    Yt = Y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    detail::pair_rhs(kernel.at(L + c5 * h), Yt, k5);
    Yt = Y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    detail::pair_rhs(kernel.at(L + h), Yt, k6);
    Yt = Y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    detail::pair_rhs(kernel.at(L + h), Yt, k7);

    E = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err2 = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2 * n; ++j) {
        const double sc = atol + rtol * std::abs(Yt(i, j));
        const double e = std::abs(E(i, j)) / sc;
        err2 += e * e;
      }
    const double err = std::sqrt(err2 / (2.0 * n * n));

    if (err <= 1.0) {
      L += h;
      Y.swap(Yt);
      k1.swap(k7);  // first-same-as-last
      ++accepted;
    }
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
  }

  TransferPair tp;
  tp.lat = kernel.lat;
  tp.H = Y.leftCols(n);
  tp.B = Y.rightCols(n);
  tp.meta.pass = kernel.label;
  tp.meta.integrator = "rk45";
  tp.meta.rtol = rtol;
  tp.meta.atol = atol;
  tp.meta.n_steps = accepted;
  return tp;
}

// Structure-preserving integrator: each of the n_steps applies the exact
// exponential of the generator assembled from the layer average of K, so
// the running transfer pair stays exactly on the symplectic group. For the
// block generator [[0, M], [M*, 0]] the exponential reduces to cosh/sinh
// series in M M*, evaluated to machine precision.
inline TransferPair integrate_lie_euler(const CouplingKernel& kernel,
                                        int n_steps) {
  if (n_steps < 1) throw config_error("integrate_lie_euler: n_steps must be >= 1");
  const int n = kernel.n();
  const double h = (kernel.L_b - kernel.L_a) / n_steps;

  MatrixXcd H = MatrixXcd::Identity(n, n), B = MatrixXcd::Zero(n, n);
  MatrixXcd M(n, n), X(n, n), C(n, n), S(n, n), T(n, n), SM(n, n), Hn(n, n),
      Bn(n, n);

  for (int s = 0; s < n_steps; ++s) {
    M = kernel.integral(kernel.L_a + s * h, h);
    X.noalias() = M * M.conjugate();
    // cosh-like and sinh-like series in X; X is small per step, so the
    // series reach machine precision after a few terms
    const double nx = X.norm();
    int terms = 2;
    {
      double t = nx;
      while (t > 1e-18 && terms < 40) {
        t *= nx / ((2.0 * terms + 1) * (2.0 * terms + 2));
        ++terms;
      }
    }
    C = MatrixXcd::Identity(n, n);
    S = MatrixXcd::Identity(n, n);
    MatrixXcd Tc = MatrixXcd::Identity(n, n), Ts = MatrixXcd::Identity(n, n);
    for (int m = 1; m <= terms; ++m) {
      T.noalias() = Tc * X;
      Tc = T / ((2.0 * m - 1) * (2.0 * m));
      T.noalias() = Ts * X;
      Ts = T / ((2.0 * m) * (2.0 * m + 1));
      C += Tc;
      S += Ts;
    }
    if (terms >= 40)
      throw numeric_error("integrate_lie_euler: generator exponential did not converge");
    SM.noalias() = S * M;
    Hn.noalias() = C * H;
    Hn.noalias() += SM * B.conjugate();
    Bn.noalias() = C * B;
    Bn.noalias() += SM * H.conjugate();
    H.swap(Hn);
    B.swap(Bn);
  }

  TransferPair tp;
  tp.lat = kernel.lat;
  tp.H = std::move(H);
  tp.B = std::move(B);
  tp.meta.pass = kernel.label;
  tp.meta.integrator = "lie-euler";
  tp.meta.n_steps = n_steps;
  return tp;
}

// --- binary container -------------------------------------------------
//
// Layout: magic "SU11TP1\0", n (u64), dq, q0, then H and B row-major as
// raw kernel samples (eta, beta; i.e. divided by dq) in complex doubles.
// Meta travels in a JSON sidecar written by the pipeline layer.

inline void save_pair(const TransferPair& tp, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("save_pair: cannot open " + path);
  const char magic[8] = {'S', 'U', '1', '1', 'T', 'P', '1', '\0'};
  f.write(magic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(tp.n());
  f.write(reinterpret_cast<const char*>(&n), 8);
  const double dq = tp.lat.dq, q0 = tp.lat.q(0);
  f.write(reinterpret_cast<const char*>(&dq), 8);
  f.write(reinterpret_cast<const char*>(&q0), 8);
  auto write_mat = [&](const MatrixXcd& M) {
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j) {
        const cplx v = M(i, j) / dq;
        const double re = v.real(), im = v.imag();
        f.write(reinterpret_cast<const char*>(&re), 8);
        f.write(reinterpret_cast<const char*>(&im), 8);
      }
  };
  write_mat(tp.H);
  write_mat(tp.B);
  if (!f) throw config_error("save_pair: write failed for " + path);
}

inline TransferPair load_pair(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw config_error("load_pair: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::string(magic, 7) != "SU11TP1")
    throw config_error("load_pair: bad magic in " + path);
  std::uint64_t n64 = 0;
  f.read(reinterpret_cast<char*>(&n64), 8);
  const int n = static_cast<int>(n64);
  double dq = 0, q0 = 0;
  f.read(reinterpret_cast<char*>(&dq), 8);
  f.read(reinterpret_cast<char*>(&q0), 8);
  TransferPair tp;
  tp.lat.dq = dq;
  tp.lat.q.resize(n);
  for (int j = 0; j < n; ++j) tp.lat.q(j) = q0 + j * dq;
  tp.H.resize(n, n);
  tp.B.resize(n, n);
  auto read_mat = [&](MatrixXcd& M) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double re = 0, im = 0;
        f.read(reinterpret_cast<char*>(&re), 8);
        f.read(reinterpret_cast<char*>(&im), 8);
        M(i, j) = cplx(re, im) * dq;
      }
  };
  read_mat(tp.H);
  read_mat(tp.B);
  if (!f) throw config_error("load_pair: truncated file " + path);
  return tp;
}

}  // namespace su11
