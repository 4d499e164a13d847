#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

#include "su11/common.hpp"
#include "su11/jointdecomp.hpp"
#include "su11/overlaps.hpp"

namespace su11 {

// largest asymmetry of the modulus relative to the peak value
inline double asymmetry_metric(const MatrixXcd& B) {
  if (B.rows() != B.cols()) throw numeric_error("asymmetry_metric: matrix not square");
  double peak = 0, asym = 0;
  for (int i = 0; i < B.rows(); ++i)
    for (int j = 0; j < B.cols(); ++j) {
      peak = std::max(peak, std::abs(B(i, j)));
      asym = std::max(asym, std::abs(std::abs(B(i, j)) - std::abs(B(j, i))));
    }
  return peak > 0 ? asym / peak : 0.0;
}

// Plain Schmidt decomposition of the modulus |beta|. The returned basis is
// not a joint decomposition: lambda holds the squared singular values of
// |beta| and lambda_tilde is filled with lambda + 1 for uniformity.
inline SchmidtBasis modulus_decomposition(const MatrixXcd& B, const Lattice& lat) {
  Eigen::BDCSVD<MatrixXcd> svd(B.cwiseAbs().cast<cplx>(),
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  SchmidtBasis basis;
  basis.lat = lat;
  const double rs = 1.0 / std::sqrt(lat.weight());
  basis.U = rs * svd.matrixU();
  basis.Psi = rs * svd.matrixV().conjugate();
  basis.lambda = svd.singularValues().array().square();
  basis.lambda_tilde = basis.lambda.array() + 1.0;
  basis.blocks = block_partition(svd.singularValues(), 1e-8);
  canonicalize_signs(basis);
  return basis;
}

// Separable polynomial fit of the phase of beta,
//   arg beta(q, q') ~ Phi_1(q) + Phi_2(q'),
//   Phi_j(q) = a_j1 + a_j2 q^2 + a_j3 q^4 + a_j4 q^6,
// restricted to the support region |beta| >= support_frac * peak. The
// constant split is gauged by Phi_2(0) = arg beta(0, 0) / 2. Coefficients
// are in SI units (rad / (rad/m)^(2(k-1))); residual is the rms misfit in
// rad over the support region.
struct PhaseFit {
  std::array<double, 4> a1{};
  std::array<double, 4> a2{};
  double residual = 0;
  int support_count = 0;
};

inline double phase_fit_eval(const std::array<double, 4>& a, double q) {
  const double q2 = q * q;
  return a[0] + a[1] * q2 + a[2] * q2 * q2 + a[3] * q2 * q2 * q2;
}

namespace detail {

// Unwraps arg(B) over the support mask, visiting pixels in order of
// decreasing modulus from the peak so each new pixel is matched against
// its strongest already-visited neighbour. Outside the support the phase
// carries random jumps and stays untouched.
inline MatrixXd unwrap_support(const MatrixXcd& B, const Eigen::ArrayXXd& mod,
                               double threshold, std::vector<uint8_t>& mask_out) {
  const int n = static_cast<int>(B.rows());
  MatrixXd ph(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) ph(i, j) = std::arg(B(i, j));
  mask_out.assign(static_cast<std::size_t>(n) * n, 0);
  std::vector<uint8_t> done(static_cast<std::size_t>(n) * n, 0);
  auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };

  using Item = std::pair<double, std::pair<int, int>>;
  std::priority_queue<Item> heap;
  int peak_i = 0, peak_j = 0;
  mod.maxCoeff(&peak_i, &peak_j);
  heap.push({mod(peak_i, peak_j), {peak_i, peak_j}});
  while (!heap.empty()) {
    auto [m, pos] = heap.top();
    heap.pop();
    auto [i, j] = pos;
    if (done[idx(i, j)]) continue;
    done[idx(i, j)] = 1;
    mask_out[idx(i, j)] = 1;
    // match against the strongest unwrapped neighbour
    double best = -1;
    double ref = 0;
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int ii = i + di[d], jj = j + dj[d];
      if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
      if (done[idx(ii, jj)] && mod(ii, jj) > best) {
        best = mod(ii, jj);
        ref = ph(ii, jj);
      }
    }
    if (best >= 0)
      ph(i, j) = ref + std::remainder(ph(i, j) - ref, 2 * pi);
    for (int d = 0; d < 4; ++d) {
      const int ii = i + di[d], jj = j + dj[d];
      if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
      if (!done[idx(ii, jj)] && mod(ii, jj) >= threshold)
        heap.push({mod(ii, jj), {ii, jj}});
    }
  }
  return ph;
}

}  // namespace detail

// order = number of polynomial terms per axis (1..4); terms beyond the
// requested order stay zero in the result.
inline PhaseFit separable_phase_fit(const MatrixXcd& B, const Lattice& lat,
                                    double support_frac = 1e-3,
                                    int order = 4) {
  const int n = lat.n();
  if (B.rows() != n) throw numeric_error("separable_phase_fit: lattice mismatch");
  if (order < 1 || order > 4)
    throw config_error("separable_phase_fit: order must be in 1..4");
  const Eigen::ArrayXXd mod = B.cwiseAbs().array();
  const double peak = mod.maxCoeff();
  if (peak <= 0) return PhaseFit{};
  const double threshold = support_frac * peak;

  std::vector<uint8_t> mask;
  MatrixXd ph = detail::unwrap_support(B, mod, threshold, mask);

  // gauge: Phi_2(0) = arg beta(0, 0) / 2, with the unwrapped value
  const int c = lat.center_index();
  if (!mask[static_cast<std::size_t>(c) * n + c])
    throw numeric_error("separable_phase_fit: collinear point below support");
  const double a21 = ph(c, c) / 2;

  // scaled abscissa keeps the normal equations well conditioned
  const double qs = lat.q_max();
  const int np = 2 * order - 1;  // a11..a1r, a22..a2r (a21 is gauged)
  auto fill_row = [&](double qi, double qj, VectorXd& row) {
    const double xi = (qi / qs) * (qi / qs), xj = (qj / qs) * (qj / qs);
    row(0) = 1.0;
    double pi_ = 1.0, pj_ = 1.0;
    for (int k = 1; k < order; ++k) {
      pi_ *= xi;
      pj_ *= xj;
      row(k) = pi_;
      row(order - 1 + k) = pj_;
    }
  };

  MatrixXd AtA = MatrixXd::Zero(np, np);
  VectorXd Atb = VectorXd::Zero(np);
  VectorXd row(np);
  int count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!mask[static_cast<std::size_t>(i) * n + j]) continue;
      fill_row(lat.q(i), lat.q(j), row);
      AtA += row * row.transpose();
      Atb += row * (ph(i, j) - a21);
      ++count;
    }
  if (count < np + 1)
    throw numeric_error("separable_phase_fit: support region too small");
  VectorXd x = AtA.ldlt().solve(Atb);

  PhaseFit fit;
  fit.support_count = count;
  fit.a1[0] = x(0);
  fit.a2[0] = a21;
  double scale = 1.0;
  for (int k = 1; k < order; ++k) {
    scale /= qs * qs;
    fit.a1[k] = x(k) * scale;
    fit.a2[k] = x(order - 1 + k) * scale;
  }

  double ss = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!mask[static_cast<std::size_t>(i) * n + j]) continue;
      const double model = phase_fit_eval(fit.a1, lat.q(i)) +
                           phase_fit_eval(fit.a2, lat.q(j));
      ss += (ph(i, j) - model) * (ph(i, j) - model);
    }
  fit.residual = std::sqrt(ss / count);
  return fit;
}

// Modes assembled from the modulus decomposition and the fitted phases,
//   u_fit = u_abs e^{i Phi_1},  psi_fit = psi_abs e^{i Phi_2},
// compared against an exact basis through the same-crystal overlap.
inline OverlapMatrix fit_mode_comparison(const SchmidtBasis& absbasis,
                                         const PhaseFit& fit) {
  const int n = absbasis.lat.n();
  MatrixXcd Uf = absbasis.U, Pf = absbasis.Psi;
  for (int j = 0; j < n; ++j) {
    const cplx e1 = std::polar(1.0, phase_fit_eval(fit.a1, absbasis.lat.q(j)));
    const cplx e2 = std::polar(1.0, phase_fit_eval(fit.a2, absbasis.lat.q(j)));
    Uf.row(j) *= e1;
    Pf.row(j) *= e2;
  }
  SchmidtBasis fitted = absbasis;
  fitted.U = Uf;
  fitted.Psi = Pf;
  OverlapMatrix om = c_matrix(fitted);
  om.provenance = "fit";
  return om;
}

}  // namespace su11
