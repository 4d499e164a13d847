#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "su11/common.hpp"
#include "su11/overlaps.hpp"

namespace su11 {

// Gaussian moments of one Schmidt-mode operator: n_mean = <A+ A>,
// anom = <A A>. Vacuum is (0, 0).
struct ModeMoments {
  double n_mean = 0;
  cplx anom = 0;
  int mode_index = 0;
};

// variance of the generic quadrature P_theta = A e^{-i theta/2} + h.c.
inline double quad_variance(const ModeMoments& m, double theta) {
  return 1.0 + 2.0 * m.n_mean +
         2.0 * std::real(m.anom * std::polar(1.0, -theta));
}

struct ExtremalVariances {
  double vmin = 1, vmax = 1;
  double theta_min = 0, theta_max = 0;
};

// The variance extrema 1 + 2 n_mean -+ 2|anom|. The maximum sits at
// theta = arg(anom) and the minimum half a turn away.
inline ExtremalVariances extremal_variances(const ModeMoments& m) {
  ExtremalVariances ev;
  const double a = std::abs(m.anom);
  ev.vmin = 1.0 + 2.0 * m.n_mean - 2.0 * a;
  ev.vmax = 1.0 + 2.0 * m.n_mean + 2.0 * a;
  ev.theta_max = a > 0 ? std::arg(m.anom) : 0.0;
  ev.theta_min = wrap_pi(ev.theta_max + pi);
  return ev;
}

// squeezing / anti-squeezing levels in dB relative to vacuum variance 1
inline std::pair<double, double> levels(double vmin, double vmax) {
  if (!(vmin > 0) || !(vmax > 0))
    throw numeric_error("levels: nonpositive quadrature variance");
  return {10.0 * std::log10(vmin), 10.0 * std::log10(vmax)};
}

// direct per-mode levels -/+ (20/ln 10) r with r = asinh(sqrt(Lambda))
inline std::vector<std::pair<double, double>> direct_levels(
    const VectorXd& lambda1) {
  std::vector<std::pair<double, double>> out;
  out.reserve(lambda1.size());
  for (int i = 0; i < lambda1.size(); ++i) {
    if (lambda1(i) < 0) throw numeric_error("direct_levels: negative eigenvalue");
    const double r = std::asinh(std::sqrt(lambda1(i)));
    out.emplace_back(-db_per_r * r, db_per_r * r);
  }
  return out;
}

// Moments of the first-pass output mode l reconstructed from the device
// output: expands A_l^(1,out) over the device output operators through the
// g and h overlaps and the inverse Bogoliubov transform of the second
// pass, then evaluates the Gaussian moments of the device output state.
// g, h must belong to the same phase and offset as lambda_su (checked via
// the overlap provenance phases). n_modes = 0 sums over everything.
inline ModeMoments exact_moments(const OverlapMatrix& g,
                                 const OverlapMatrix& h,
                                 const VectorXd& lambda2,
                                 const VectorXd& lambda_su, int l,
                                 int n_modes = 0) {
  if (std::abs(wrap_pi(g.phi - h.phi)) > 1e-12)
    throw numeric_error("exact_moments: g and h were computed at different phases");
  const int N2 = static_cast<int>(lambda2.size());
  const int NSU = static_cast<int>(lambda_su.size());
  int N = n_modes > 0 ? n_modes : N2;
  if (N > N2 || N > g.cols() || N > h.rows())
    throw numeric_error("exact_moments: truncation order exceeds available modes");
  const int K = std::min(NSU, h.cols());

  // P_k = sum_n g_ln h_nk sqrt(L2_n + 1), Q_k = sum_n g_ln h*_nk sqrt(L2_n)
  VectorXcd gp(N), gq(N);
  for (int n = 0; n < N; ++n) {
    gp(n) = g.entries(l, n) * std::sqrt(lambda2(n) + 1.0);
    gq(n) = g.entries(l, n) * std::sqrt(lambda2(n));
  }
  VectorXcd P = h.entries.topLeftCorner(N, K).transpose() * gp;
  VectorXcd Q = h.entries.topLeftCorner(N, K).adjoint() * gq;

  ModeMoments m;
  m.mode_index = l;
  cplx anom = 0;
  double nmean = 0;
  for (int k = 0; k < K; ++k) {
    const double L = lambda_su(k);
    const double sL = std::sqrt(L), sLp = std::sqrt(L + 1.0);
    const cplx d = sL * P(k) - sLp * Q(k);
    nmean += std::norm(d);
    anom += (sLp * P(k) - sL * Q(k)) * (sL * P(k) - sLp * Q(k));
  }
  m.n_mean = nmean;
  m.anom = anom;
  return m;
}

// Same reconstruction but through the large-eigenvalue expansion of the
// inverse Bogoliubov factors, keeping all four expansion terms and the
// full h matrix. Used to ablate the high-gain approximation term by term.
inline ModeMoments approx_moments_full(const OverlapMatrix& g,
                                       const OverlapMatrix& h,
                                       const VectorXd& lambda2,
                                       const VectorXd& lambda_su, int l,
                                       bool keep_im_h_term = true,
                                       bool keep_small_term = true,
                                       double eig_floor = 0.5) {
  // The expansion replaces sqrt(Lambda+1) by sqrt(Lambda)(1 + 1/(2 Lambda)),
  // which turns the benign weak-mode contributions of the exact sums into
  // 1/sqrt(Lambda) artifacts; modes below eig_floor are excluded, as the
  // large-eigenvalue regime assumes.
  const int N = static_cast<int>(lambda2.size());
  const int K = std::min(static_cast<int>(lambda_su.size()),
                         static_cast<int>(h.cols()));
  VectorXcd a = VectorXcd::Zero(K), b = VectorXcd::Zero(K);
  for (int k = 0; k < K; ++k) {
    const double LSU = lambda_su(k);
    if (LSU <= eig_floor) continue;
    for (int n = 0; n < N; ++n) {
      const double L2 = lambda2(n);
      if (L2 <= eig_floor) continue;
      const cplx gh = g.entries(l, n);
      const cplx hnk = h.entries(n, k);
      const double r2su = std::sqrt(L2 / LSU), rsu2 = std::sqrt(LSU / L2);
      if (keep_im_h_term) {
        const cplx t = 2.0 * cplx(0, 1) * gh * std::sqrt(L2 * LSU) *
                       std::imag(hnk);
        a(k) += t;
        b(k) += t;
      }
      a(k) += 0.5 * gh * r2su * hnk;
      b(k) += -0.5 * gh * r2su * std::conj(hnk);
      a(k) += 0.5 * gh * rsu2 * hnk;
      b(k) += 0.5 * gh * rsu2 * hnk;
      if (keep_small_term)
        a(k) += 0.25 * gh * hnk / std::sqrt(L2 * LSU);
    }
  }
  // vacuum moments of the device input operators
  ModeMoments m;
  m.mode_index = l;
  m.n_mean = b.squaredNorm();
  m.anom = (a.cwiseProduct(b)).sum();
  return m;
}

// Quadrature variance in the high-gain amplifier regime with a diagonal h
// matrix: only |g-check| entries and eigenvalue ratios enter.
// Modes with eigenvalues below validity_floor are collected as warnings.
struct HighGainVariance {
  double value = 0;
  std::vector<int> flagged;  // modes violating the large-eigenvalue regime
};

inline HighGainVariance highgain_variance(const OverlapMatrix& g_check,
                                          const VectorXd& lambda2,
                                          const VectorXd& lambda_su_phi,
                                          double phi, double theta, int l,
                                          double validity_floor = 10.0) {
  HighGainVariance out;
  const int N = std::min<int>(lambda2.size(), g_check.cols());
  double v = 0;
  for (int n = 0; n < N; ++n) {
    const double L2 = lambda2(n), LSU = lambda_su_phi(n);
    const double w2 = std::norm(g_check.entries(l, n));
    if (w2 == 0) continue;
    if (L2 <= 0 || LSU <= 0) {
      out.flagged.push_back(n);
      continue;
    }
    if (L2 < validity_floor || LSU < validity_floor) out.flagged.push_back(n);
    const double ang = std::arg(g_check.entries(l, n)) + 0.5 * (phi - theta);
    const double c = std::cos(ang), s = std::sin(ang);
    v += w2 * (c * c * LSU / L2 + s * s * L2 / LSU);
  }
  out.value = v;
  return out;
}

// Per-mode high-gain levels from the eigenvalue ratios at the two fringes.
// Dark fringe: S = 10 log10 sum |g|^2 Lsu_df/L2, AS with the inverse
// ratio; bright fringe: the roles of the eigenvalues swap. Returns -inf
// when a fringe ratio sum vanishes (perfectly extinguished dark fringe).
struct HighGainLevels {
  std::vector<double> S_df, AS_df, S_bf, AS_bf;
  std::vector<int> ordering_violations;  // modes with Lsu_df < L2 < Lsu_bf broken
};

inline HighGainLevels highgain_levels(const OverlapMatrix& g,
                                      const VectorXd& lambda2,
                                      const VectorXd& lambda_su_df,
                                      const VectorXd& lambda_su_bf,
                                      int n_report) {
  HighGainLevels out;
  const int N = std::min<int>(lambda2.size(), g.cols());
  for (int n = 0; n < N; ++n) {
    if (lambda2(n) <= 0) continue;
    if (!(lambda_su_df(n) < lambda2(n) && lambda2(n) < lambda_su_bf(n)))
      out.ordering_violations.push_back(n);
  }
  auto level = [](double ratio_sum) {
    return ratio_sum > 0 ? 10.0 * std::log10(ratio_sum)
                         : -std::numeric_limits<double>::infinity();
  };
  for (int l = 0; l < n_report; ++l) {
    double rdf = 0, rdf_inv = 0, rbf = 0, rbf_inv = 0;
    for (int n = 0; n < N; ++n) {
      const double w2 = std::norm(g.entries(l, n));
      if (w2 == 0 || lambda2(n) <= 0) continue;
      rdf += w2 * lambda_su_df(n) / lambda2(n);
      rdf_inv += w2 * lambda2(n) / lambda_su_df(n);
      rbf += w2 * lambda2(n) / lambda_su_bf(n);
      rbf_inv += w2 * lambda_su_bf(n) / lambda2(n);
    }
    out.S_df.push_back(level(rdf));
    out.AS_df.push_back(level(rdf_inv));
    out.S_bf.push_back(level(rbf));
    out.AS_bf.push_back(level(rbf_inv));
  }
  return out;
}

// One row of the method-comparison report.
struct SqueezingRow {
  int mode = 0;
  double S_direct = 0, AS_direct = 0;
  double S_exact = 0, AS_exact = 0;
  double S_hg = 0, AS_hg = 0;        // dark-fringe forms
  double S_hg_bf = 0, AS_hg_bf = 0;  // bright-fringe forms
  double theta_min = 0, theta_max = 0;
  bool hg_valid = true;
};

struct SqueezingReport {
  std::vector<SqueezingRow> rows;
  double phi_bf = 0, phi_df = 0;
  double delta_z = 0;
  double upsilon = 0;
  double truncation_defect = 0;  // relative change when dropping a decade
  std::string setup;
};

}  // namespace su11
