#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "su11/common.hpp"
#include "su11/propagator.hpp"

namespace su11 {

// Joint Schmidt decomposition of a transfer pair,
//   beta(q,q') = sum_n sqrt(L_n)   u_n(q) psi_n(q'),
//   eta(q,q')  = sum_n sqrt(L_n+1) u_n(q) psi_n*(q').
// Columns of U and Psi hold the mode samples with weighted normalization
// sum_j |u(q_j)|^2 dq = 1; lambda is sorted descending. blocks partitions
// the mode indices into degeneracy groups; within a block of size > 1 the
// modes are an arbitrary orthonormal choice of the degenerate subspace.
struct SchmidtBasis {
  Lattice lat;
  MatrixXcd U, Psi;
  VectorXd lambda;
  VectorXd lambda_tilde;
  std::vector<std::pair<int, int>> blocks;  // [begin, end)
  double deg_tol = 1e-8;

  int n() const { return static_cast<int>(lambda.size()); }

  bool mode_degenerate(int k) const {
    for (auto [b, e] : blocks)
      if (k >= b && k < e) return e - b > 1;
    return false;
  }
};

// Contiguous degeneracy groups of a descending singular-value list:
// adjacent entries are linked when |sv_i - sv_{i+1}| <= tol * max(1, sv_i).
inline std::vector<std::pair<int, int>> block_partition(const VectorXd& sv,
                                                        double tol) {
  const int n = static_cast<int>(sv.size());
  std::vector<std::pair<int, int>> blocks;
  int b = 0;
  for (int i = 1; i <= n; ++i) {
    const bool linked =
        i < n && std::abs(sv(i - 1) - sv(i)) <= tol * std::max(1.0, sv(i - 1));
    if (!linked) {
      blocks.emplace_back(b, i);
      b = i;
    }
  }
  return blocks;
}

namespace detail {

// Principal square root of a (numerically) unitary symmetric matrix via
// simultaneous diagonalization of its commuting real and imaginary parts.
// The result is unitary, symmetric and satisfies D D^T = D^2 = G.
inline MatrixXcd sym_unitary_sqrt(const MatrixXcd& G) {
  const int m = static_cast<int>(G.rows());
  if (m == 1) return MatrixXcd::Constant(1, 1, std::polar(1.0, std::arg(G(0, 0)) / 2));
  MatrixXd X = 0.5 * (G.real() + G.real().transpose());
  MatrixXd Y = 0.5 * (G.imag() + G.imag().transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> ex(X);
  if (ex.info() != Eigen::Success)
    throw numeric_error("sym_unitary_sqrt: eigendecomposition failed");
  MatrixXd O = ex.eigenvectors();
  const VectorXd xv = ex.eigenvalues();
  // X-eigenvalues lie in [-1, 1]; rotate degenerate groups so Y is
  // diagonal there as well
  const double gtol = 1e-7;
  int b = 0;
  while (b < m) {
    int e = b + 1;
    while (e < m && xv(e) - xv(e - 1) <= gtol) ++e;
    if (e - b > 1) {
      MatrixXd Ob = O.middleCols(b, e - b);
      MatrixXd Yb = Ob.transpose() * Y * Ob;
      Eigen::SelfAdjointEigenSolver<MatrixXd> ey(0.5 * (Yb + Yb.transpose()));
      if (ey.info() != Eigen::Success)
        throw numeric_error("sym_unitary_sqrt: eigendecomposition failed");
      O.middleCols(b, e - b) = Ob * ey.eigenvectors();
    }
    b = e;
  }
  VectorXcd half(m);
  for (int j = 0; j < m; ++j) {
    const double x = O.col(j).dot(X * O.col(j));
    const double y = O.col(j).dot(Y * O.col(j));
    half(j) = std::polar(1.0, 0.5 * std::atan2(y, x));
  }
  return O * half.asDiagonal() * O.transpose();
}

// Principal square root of a general unitary matrix via Schur form plus
// the Parlett recurrence on the triangular factor.
inline MatrixXcd schur_unitary_sqrt(const MatrixXcd& Z) {
  Eigen::ComplexSchur<MatrixXcd> sch(Z);
  if (sch.info() != Eigen::Success)
    throw numeric_error("unitary_block_sqrt: Schur decomposition failed");
  const MatrixXcd& T = sch.matrixT();
  const MatrixXcd& Q = sch.matrixU();
  const int m = static_cast<int>(T.rows());
  MatrixXcd S = MatrixXcd::Zero(m, m);
  for (int i = 0; i < m; ++i) S(i, i) = std::sqrt(T(i, i));
  for (int d = 1; d < m; ++d)
    for (int i = 0; i + d < m; ++i) {
      const int j = i + d;
      cplx s = T(i, j);
      for (int k = i + 1; k < j; ++k) s -= S(i, k) * S(k, j);
      const cplx den = S(i, i) + S(j, j);
      S(i, j) = std::abs(den) > 1e-300 ? s / den : cplx(0, 0);
    }
  return Q * S * Q.adjoint();
}

}  // namespace detail

// Principal square root of a unitary block-diagonal matrix, computed for
// each block separately so the result keeps the block structure (and hence
// commutes with any diagonal matrix constant on the blocks). A naive
// square root of the full matrix could leave the unitary group; the
// per-block eigenstructure route cannot.
inline MatrixXcd unitary_block_sqrt(const MatrixXcd& Z,
                                    const std::vector<std::pair<int, int>>& blocks,
                                    double tol = 1e-8) {
  const int n = static_cast<int>(Z.rows());
  MatrixXcd S = MatrixXcd::Zero(n, n);
  for (auto [b, e] : blocks) {
    const int m = e - b;
    MatrixXcd Zb = Z.block(b, b, m, m);
    const double scale = std::max(1.0, Zb.norm());
    if ((Zb * Zb.adjoint() - MatrixXcd::Identity(m, m)).norm() >
        std::max(tol, 1e-10) * scale * 20)
      throw numeric_error("unitary_block_sqrt: block is not unitary");
    MatrixXcd Sb = (Zb - Zb.transpose()).norm() <= 1e-8 * scale
                       ? detail::sym_unitary_sqrt(Zb)
                       : detail::schur_unitary_sqrt(Zb);
    if ((Sb * Sb - Zb).norm() > std::max(tol, 1e-9) * scale * 10)
      throw numeric_error("unitary_block_sqrt: square root verification failed");
    S.block(b, b, m, m) = Sb;
  }
  return S;
}

// Takagi factor of a unitary symmetric matrix: unitary D with G = D D^T.
inline MatrixXcd takagi_unitary(const MatrixXcd& G, double tol = 1e-8) {
  const int m = static_cast<int>(G.rows());
  const double scale = std::max(1.0, G.norm());
  if ((G - G.transpose()).norm() > tol * scale)
    throw numeric_error("takagi_unitary: matrix is not symmetric");
  if ((G * G.adjoint() - MatrixXcd::Identity(m, m)).norm() > tol * scale * 10)
    throw numeric_error("takagi_unitary: matrix is not unitary");
  MatrixXcd Gs = 0.5 * (G + G.transpose());
  MatrixXcd D = detail::sym_unitary_sqrt(Gs);
  if ((D * D.transpose() - Gs).norm() > std::max(tol, 1e-10) * 10 * scale)
    throw numeric_error("takagi_unitary: factorization verification failed");
  return D;
}

// Relative Frobenius residuals of the two reconstructions (beta, eta).
inline std::pair<double, double> reconstruction_residuals(
    const TransferPair& tp, const SchmidtBasis& basis) {
  const double dq = tp.lat.weight();
  const MatrixXcd Q = std::sqrt(dq) * basis.U;
  const MatrixXcd P = std::sqrt(dq) * basis.Psi;
  const VectorXd sb = basis.lambda.cwiseMax(0.0).cwiseSqrt();
  const VectorXd sh = basis.lambda_tilde.cwiseMax(0.0).cwiseSqrt();
  const MatrixXcd Brec = Q * sb.asDiagonal() * P.transpose();
  const MatrixXcd Hrec = Q * sh.asDiagonal() * P.adjoint();
  const double nb = tp.B.norm();
  const double rb = (Brec - tp.B).norm() / (nb > 0 ? nb : 1.0);
  const double rh = (Hrec - tp.H).norm() / tp.H.norm();
  return {rb, rh};
}

// Flip simultaneous (u_n, psi_n) signs so each non-degenerate u_n has a
// nonnegative real part at its largest-modulus sample. The joint flip
// leaves both reconstructions unchanged; degenerate blocks are left alone.
inline SchmidtBasis& canonicalize_signs(SchmidtBasis& basis) {
  for (auto [b, e] : basis.blocks) {
    if (e - b != 1) continue;
    const int k = b;
    int jmax = 0;
    double best = -1;
    for (int j = 0; j < basis.U.rows(); ++j) {
      const double a = std::abs(basis.U(j, k));
      if (a > best) {
        best = a;
        jmax = j;
      }
    }
    const cplx pivot = basis.U(jmax, k);
    const bool flip =
        pivot.real() < 0 || (pivot.real() == 0 && pivot.imag() < 0);
    if (flip) {
      basis.U.col(k) = -basis.U.col(k);
      basis.Psi.col(k) = -basis.Psi.col(k);
    }
  }
  return basis;
}

namespace detail {

// Core of the joint decomposition, shared by the SVD route and the
// eigendecomposition cross-check route. Uc, V0, sig must satisfy
// B = Uc diag(sig) V0^+ with unitary Uc, V0 and sig sorted descending.
//
// The eta matrix enters only through M = Uc^+ H conj(V0). For an exactly
// symplectic pair M is block-diagonal on the degeneracy blocks of sig and
// each diagonal block is sqrt(1+Lambda_b) times a unitary symmetric
// matrix, whose Takagi factor rotates both frames into the joint basis.
// Working in the beta frames keeps modes with tiny, nearly equal
// eta-singular-values (the Lambda ~ 0 tail) correctly paired, which an
// independent SVD of eta cannot resolve in floating point.
inline SchmidtBasis decompose_from_frames(const TransferPair& tp,
                                          const MatrixXcd& Uc,
                                          const MatrixXcd& V0,
                                          const VectorXd& sig, double deg_tol,
                                          double recon_tol = 1e-6) {
  const int n = tp.n();
  const MatrixXcd M = Uc.adjoint() * tp.H * V0.conjugate();
  const auto blocks = block_partition(sig, deg_tol);
  const double smax = sig.size() ? sig(0) : 0.0;
  const double zero_cut = 1e-7 * smax;

  MatrixXcd U = Uc;
  MatrixXcd Psi(n, n);
  VectorXd lam(n), lamt(n);
  for (int i = 0; i < n; ++i) lam(i) = sig(i) * sig(i);

  for (auto [b, e] : blocks) {
    const int m = e - b;
    const MatrixXcd Mb = M.block(b, b, m, m);
    const double st = std::sqrt(1.0 + lam.segment(b, m).mean());
    if (st <= 0 || !std::isfinite(st))
      throw numeric_error("joint_decompose: invalid eta singular scale");
    const MatrixXcd G = Mb / st;

    // A block whose beta singular values sit at the noise floor carries no
    // resolvable pairing; there the eta channel alone fixes the split and
    // any unitary factorization G = D E^T serves (D = I below). The same
    // fallback catches noise blocks whose G lost its symmetry: the
    // reconstruction gate at the end remains the arbiter.
    const bool zero_block =
        sig(b) <= zero_cut ||
        (G - G.transpose()).norm() > 1e-5 * std::sqrt(double(m));
    if (zero_block) {
      Psi.middleCols(b, m) = V0.middleCols(b, m).conjugate() * G.adjoint();
      for (int j = 0; j < m; ++j) lamt(b + j) = st * st;
    } else {
      const MatrixXcd D = detail::sym_unitary_sqrt(0.5 * (G + G.transpose()));
      U.middleCols(b, m) = Uc.middleCols(b, m) * D;
      Psi.middleCols(b, m) = V0.middleCols(b, m).conjugate() * D.conjugate();
      const MatrixXcd W = D.adjoint() * Mb * D.conjugate();
      for (int j = 0; j < m; ++j) {
        const double sj = W(j, j).real();
        lamt(b + j) = sj * sj;
      }
    }
  }

  // blocks of beta and eta singular values must agree: a beta-degenerate
  // pair whose measured eta values split apart signals a broken pair
  for (auto [b, e] : blocks)
    for (int i = b; i + 1 < e; ++i) {
      const double s0 = std::sqrt(lamt(i)), s1 = std::sqrt(lamt(i + 1));
      if (std::abs(s0 - s1) > 100 * deg_tol * std::max(1.0, s0))
        throw numeric_error(
            "joint_decompose: degeneracy blocks of beta and eta disagree");
    }

  SchmidtBasis basis;
  basis.lat = tp.lat;
  const double rs = 1.0 / std::sqrt(tp.lat.weight());
  basis.U = rs * U;
  basis.Psi = rs * Psi;
  basis.lambda = lam;
  basis.lambda_tilde = lamt;
  basis.blocks = blocks;
  basis.deg_tol = deg_tol;
  canonicalize_signs(basis);

  // Reconstruction gate. The pair itself pins the transfer functions only
  // to the accuracy of its own symplectic consistency, so errors below
  // sqrt of that inconsistency cannot be improved upon and do not fail
  // the gate (the fully extinguished dark fringe is the canonical case:
  // beta is pure integration noise there).
  auto [rb, rh] = reconstruction_residuals(tp, basis);
  const double incons =
      (tp.H * tp.H.adjoint() - tp.B * tp.B.adjoint() -
       MatrixXcd::Identity(n, n))
          .norm();
  const double floor_abs = 10.0 * std::sqrt(incons);
  const double db = rb * std::max(tp.B.norm(), 1.0e-300);
  const double dh = rh * tp.H.norm();
  if ((rb > recon_tol && db > floor_abs) || (rh > recon_tol && dh > floor_abs))
    throw numeric_error("joint_decompose: reconstruction residual " +
                        std::to_string(std::max(rb, rh)) + " exceeds tolerance");
  return basis;
}

}  // namespace detail

// Joint Schmidt decomposition. Requires an (approximately) symplectic
// pair; the decomposition does not exist otherwise.
inline SchmidtBasis joint_decompose(const TransferPair& tp,
                                    double deg_tol = 1e-8,
                                    bool check_symplectic = true) {
  if (check_symplectic) {
    const auto r = symplectic_residuals(tp);
    const double worst = *std::max_element(r.begin(), r.end());
    if (worst > 1e-4)
      throw numeric_error(
          "joint_decompose: symplectic residual " + std::to_string(worst) +
          " exceeds 1e-4; no joint decomposition to tolerance");
  }
  Eigen::BDCSVD<MatrixXcd> svd(tp.B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return detail::decompose_from_frames(tp, svd.matrixU(), svd.matrixV(),
                                       svd.singularValues(), deg_tol);
}

// Cross-check route: frames from the eigendecomposition of B B^+ (equal to
// H H^+ - I for a symplectic pair). Squaring halves the attainable digits
// in the small-singular-value tail, so the reconstruction gate is laxer
// than for the SVD route. Test use only.
inline SchmidtBasis joint_decompose_bbh(const TransferPair& tp,
                                        double deg_tol = 1e-8) {
  const int n = tp.n();
  const MatrixXcd BB = tp.B * tp.B.adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (BB + BB.adjoint()));
  if (es.info() != Eigen::Success)
    throw numeric_error("joint_decompose_bbh: eigendecomposition failed");
  MatrixXcd Uc(n, n);
  VectorXd sig(n);
  for (int j = 0; j < n; ++j) {  // ascending -> descending
    Uc.col(j) = es.eigenvectors().col(n - 1 - j);
    sig(j) = std::sqrt(std::max(0.0, es.eigenvalues()(n - 1 - j)));
  }
  const double cut = sig(0) * 3e-7;  // noise floor of the squared problem
  int head = 0;
  while (head < n && sig(head) > cut) ++head;
  MatrixXcd V0(n, n);
  for (int j = 0; j < head; ++j) V0.col(j) = tp.B.adjoint() * Uc.col(j) / sig(j);
  if (head < n) {
    // orthonormal completion of the null space
    Eigen::HouseholderQR<MatrixXcd> qr(V0.leftCols(std::max(head, 1)));
    MatrixXcd Q = qr.householderQ();
    V0.rightCols(n - head) = Q.rightCols(n - head);
  }
  return detail::decompose_from_frames(tp, Uc, V0, sig, deg_tol, 1e-4);
}

// --- binary container --------------------------------------------------

inline void save_basis(const SchmidtBasis& basis, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("save_basis: cannot open " + path);
  const char magic[8] = {'S', 'U', '1', '1', 'S', 'B', '1', '\0'};
  f.write(magic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(basis.n());
  f.write(reinterpret_cast<const char*>(&n), 8);
  const double dq = basis.lat.dq, q0 = basis.lat.q(0);
  f.write(reinterpret_cast<const char*>(&dq), 8);
  f.write(reinterpret_cast<const char*>(&q0), 8);
  auto wmat = [&](const MatrixXcd& M) {
    f.write(reinterpret_cast<const char*>(M.data()),
            static_cast<std::streamsize>(sizeof(cplx) * M.size()));
  };
  wmat(basis.U);
  wmat(basis.Psi);
  f.write(reinterpret_cast<const char*>(basis.lambda.data()), 8 * basis.n());
  f.write(reinterpret_cast<const char*>(basis.lambda_tilde.data()), 8 * basis.n());
  if (!f) throw config_error("save_basis: write failed for " + path);
}

inline SchmidtBasis load_basis(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw config_error("load_basis: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::string(magic, 7) != "SU11SB1")
    throw config_error("load_basis: bad magic in " + path);
  std::uint64_t n64 = 0;
  f.read(reinterpret_cast<char*>(&n64), 8);
  const int n = static_cast<int>(n64);
  SchmidtBasis basis;
  double dq = 0, q0 = 0;
  f.read(reinterpret_cast<char*>(&dq), 8);
  f.read(reinterpret_cast<char*>(&q0), 8);
  basis.lat.dq = dq;
  basis.lat.q.resize(n);
  for (int j = 0; j < n; ++j) basis.lat.q(j) = q0 + j * dq;
  basis.U.resize(n, n);
  basis.Psi.resize(n, n);
  basis.lambda.resize(n);
  basis.lambda_tilde.resize(n);
  f.read(reinterpret_cast<char*>(basis.U.data()),
         static_cast<std::streamsize>(sizeof(cplx) * basis.U.size()));
  f.read(reinterpret_cast<char*>(basis.Psi.data()),
         static_cast<std::streamsize>(sizeof(cplx) * basis.Psi.size()));
  f.read(reinterpret_cast<char*>(basis.lambda.data()), 8 * n);
  f.read(reinterpret_cast<char*>(basis.lambda_tilde.data()), 8 * n);
  if (!f) throw config_error("load_basis: truncated file " + path);
  basis.blocks = block_partition(basis.lambda.cwiseSqrt(), basis.deg_tol);
  return basis;
}

}  // namespace su11
