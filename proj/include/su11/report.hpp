#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "su11/common.hpp"
#include "su11/interferometer.hpp"
#include "su11/jointdecomp.hpp"
#include "su11/overlaps.hpp"
#include "su11/squeezing.hpp"

namespace su11 {

// Fully decomposed interferometer at its two fringes: the one-stop input
// for overlap plots, eigenvalue comparisons and the squeezing report.
struct AssembledSu {
  SuSetup setup;
  XySplit split;
  double upsilon = 0, vis = 0;
  double phi_bf = 0, phi_df = 0;
  SchmidtBasis basis1, basis2_nophase, basisSU_bf, basisSU_df;
  OverlapMatrix g_bf, g_df, h_bf, h_df;
};

inline AssembledSu assemble_su(const TransferPair& pass1,
                               const TransferPair& pass2_nophase,
                               double delta_z, double deg_tol = 1e-8) {
  AssembledSu a;
  a.setup.pass1 = pass1;
  a.setup.pass2_nophase = pass2_nophase;
  a.setup.delta_z = delta_z;
  a.split = xy_split(a.setup);
  // a dead first pass has no fringes; any phase pair then serves
  a.upsilon = std::abs(a.split.C) < 1e-12 * a.split.A_norm
                  ? 0.0
                  : fringe_offset(a.split);
  a.vis = visibility(a.split);
  a.phi_bf = -a.upsilon;
  a.phi_df = pi - a.upsilon;
  a.basis1 = joint_decompose(pass1, deg_tol);
  a.basis2_nophase = joint_decompose(pass2_nophase, deg_tol);
  a.basisSU_bf = joint_decompose(a.split.pair_at(a.phi_bf), deg_tol, false);
  a.basisSU_df = joint_decompose(a.split.pair_at(a.phi_df), deg_tol, false);
  a.g_bf = g_matrix(a.basis1, a.basis2_nophase, a.phi_bf);
  a.g_df = g_matrix(a.basis1, a.basis2_nophase, a.phi_df);
  a.h_bf = h_matrix(a.basis2_nophase, a.basisSU_bf, a.phi_bf, a.phi_bf);
  a.h_df = h_matrix(a.basis2_nophase, a.basisSU_df, a.phi_df, a.phi_df);
  return a;
}

struct ReportOptions {
  int n_report = 10;           // modes in the report
  int n_sum = 0;               // truncation of the reconstruction sums;
                               // 0 = all modes (the factored sums are cheap)
  double validity_floor = 10;  // large-eigenvalue regime threshold
};

// Per-mode comparison of the three squeezing determinations: directly from
// the first-pass eigenvalues, reconstructed exactly from the device output,
// and through the high-gain amplifier approximation at the two fringes.
inline SqueezingReport build_report(const AssembledSu& a,
                                    const ReportOptions& opt = {}) {
  SqueezingReport rep;
  rep.phi_bf = a.phi_bf;
  rep.phi_df = a.phi_df;
  rep.delta_z = a.setup.delta_z;
  rep.upsilon = a.upsilon;

  const int n = a.basis1.n();
  const int n_report = std::min(opt.n_report, n);
  const int n_sum = std::min(opt.n_sum > 0 ? opt.n_sum : n, n);

  const auto direct = direct_levels(a.basis1.lambda.head(n_report));
  HighGainLevels hg =
      highgain_levels(a.g_df, a.basis2_nophase.lambda, a.basisSU_df.lambda,
                      a.basisSU_bf.lambda, n_report);

  double defect = 0;
  for (int l = 0; l < n_report; ++l) {
    SqueezingRow row;
    row.mode = l;
    row.S_direct = direct[l].first;
    row.AS_direct = direct[l].second;

    ModeMoments m = exact_moments(a.g_df, a.h_df, a.basis2_nophase.lambda,
                                  a.basisSU_df.lambda, l, n_sum);
    ExtremalVariances ev = extremal_variances(m);
    auto [S, AS] = levels(ev.vmin, ev.vmax);
    row.S_exact = S;
    row.AS_exact = AS;
    row.theta_min = ev.theta_min;
    row.theta_max = ev.theta_max;

    // convergence of the truncated sums: drop the last tenth of the modes
    const int n_less = std::max(1, n_sum - std::max(1, n_sum / 10));
    ModeMoments m_less = exact_moments(a.g_df, a.h_df, a.basis2_nophase.lambda,
                                       a.basisSU_df.lambda, l, n_less);
    const double scale = std::abs(m.n_mean) + std::abs(m.anom) + 1e-300;
    defect = std::max(defect, (std::abs(m.n_mean - m_less.n_mean) +
                               std::abs(m.anom - m_less.anom)) /
                                  scale);

    row.S_hg = hg.S_df[l];
    row.AS_hg = hg.AS_df[l];
    row.S_hg_bf = hg.S_bf[l];
    row.AS_hg_bf = hg.AS_bf[l];
    row.hg_valid = a.basis2_nophase.lambda(l) >= opt.validity_floor &&
                   a.basisSU_df.lambda(l) >= opt.validity_floor;
    rep.rows.push_back(row);
  }
  rep.truncation_defect = defect;
  return rep;
}

// Overlap phase traces across a delta_z scan (diagonal entries of g and h
// at both fringes, wrapped into (-pi/2, pi/2]). make_pass2 re-propagates
// the phase-free second pass at the requested offset.
inline std::vector<PhaseSweepSample> phase_sweep(
    const TransferPair& pass1,
    const std::function<TransferPair(double)>& make_pass2,
    const std::vector<double>& dz_samples, int n_modes,
    double deg_tol = 1e-8) {
  std::vector<PhaseSweepSample> out;
  std::string failures;
  for (double dz : dz_samples) {
    try {
      AssembledSu a = assemble_su(pass1, make_pass2(dz), dz, deg_tol);
      PhaseSweepSample s;
      s.dz = dz;
      s.vis = a.vis;
      s.phi_bf = a.phi_bf;
      s.phi_df = a.phi_df;
      for (int l = 0; l < n_modes; ++l) {
        s.arg_g_bf.push_back(wrap_half_pi(std::arg(a.g_bf.entries(l, l))));
        s.arg_g_df.push_back(wrap_half_pi(std::arg(a.g_df.entries(l, l))));
        s.arg_h_bf.push_back(wrap_half_pi(std::arg(a.h_bf.entries(l, l))));
        s.arg_h_df.push_back(wrap_half_pi(std::arg(a.h_df.entries(l, l))));
      }
      out.push_back(std::move(s));
    } catch (const error& e) {
      failures += "delta_z = " + std::to_string(dz) + ": " + e.what() + "; ";
    }
  }
  if (!failures.empty())
    throw numeric_error("phase_sweep: " + failures);
  return out;
}

}  // namespace su11
