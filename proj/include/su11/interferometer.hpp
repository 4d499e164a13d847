#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "su11/common.hpp"
#include "su11/propagator.hpp"

namespace su11 {

// Two-pass device state. pass2_nophase is integrated in the phase-free
// convention (exp(i phi) -> 1), so one propagation serves every phi: the
// composed transfer functions are linear in exp(i phi).
struct SuSetup {
  TransferPair pass1;
  TransferPair pass2_nophase;
  double delta_z = 0;
  double phi = 0;

  void validate() const {
    if (!pass1.lat.same_as(pass2_nophase.lat))
      throw numeric_error("su setup: passes live on different lattices");
  }
};

// Cascades two passes: the output plane waves of the first feed the
// second. In the weight-scaled convention this is a plain matrix product,
//   B = H2 B1 + B2 conj(H1),   H = H2 H1 + B2 conj(B1).
inline TransferPair compose(const TransferPair& first,
                            const TransferPair& second) {
  if (!first.lat.same_as(second.lat))
    throw numeric_error("compose: lattice mismatch");
  TransferPair out;
  out.lat = first.lat;
  out.B = second.H * first.B + second.B * first.H.conjugate();
  out.H = second.H * first.H + second.B * first.B.conjugate();
  out.meta.pass = "composite";
  out.meta.integrator = "compose";
  return out;
}

// Closed forms for the balanced fully compensated device, driven by the
// first-pass eigenvalues alone:
//   Lambda_n(phi) = 4 cos^2(phi/2) Lambda_n (Lambda_n + 1),
//   mu     = arg(1 + e^{i phi}),
//   zeta_n = arg(1 + Lambda_n (1 + e^{i phi})).
struct BalancedSpectrum {
  VectorXd lambda_su;
  double mu = 0;
  VectorXd zeta;
};

inline BalancedSpectrum balanced_su_spectrum(const VectorXd& lambda1,
                                             double phi) {
  BalancedSpectrum out;
  const int n = static_cast<int>(lambda1.size());
  out.lambda_su.resize(n);
  out.zeta.resize(n);
  const double c = std::cos(phi / 2);
  const cplx onePlus = 1.0 + std::polar(1.0, phi);
  out.mu = std::abs(onePlus) < 1e-15 ? 0.0 : std::arg(onePlus);
  for (int i = 0; i < n; ++i) {
    if (lambda1(i) < 0) throw numeric_error("balanced_su_spectrum: negative eigenvalue");
    out.lambda_su(i) = 4 * c * c * lambda1(i) * (lambda1(i) + 1);
    out.zeta(i) = std::arg(1.0 + lambda1(i) * onePlus);
  }
  return out;
}

// Phase split of the composed transfer functions,
//   B_su(phi) = X + e^{i phi} Y,    H_su(phi) = Xh + e^{i phi} Yh,
// together with the fringe constant C = <X, Y> under the lattice measure.
// Everything downstream (intensity, fringes, visibility) reads off these.
struct XySplit {
  Lattice lat;
  MatrixXcd X, Y;    // beta channel
  MatrixXcd Xh, Yh;  // eta channel
  cplx C = 0;
  double xx = 0, yy = 0;  // |X|^2 and |Y|^2 integrals
  double A_norm = 0;      // intensity scale (xx + yy)/2

  MatrixXcd beta_su(double phi) const { return X + std::polar(1.0, phi) * Y; }
  MatrixXcd eta_su(double phi) const { return Xh + std::polar(1.0, phi) * Yh; }

  TransferPair pair_at(double phi) const {
    TransferPair tp;
    tp.lat = lat;
    tp.B = beta_su(phi);
    tp.H = eta_su(phi);
    tp.meta.pass = "composite";
    tp.meta.integrator = "compose";
    tp.meta.phi = phi;
    return tp;
  }
};

inline XySplit xy_split(const SuSetup& setup) {
  setup.validate();
  const TransferPair& p1 = setup.pass1;
  const TransferPair& p2 = setup.pass2_nophase;
  XySplit s;
  s.lat = p1.lat;
  s.X = p2.H * p1.B;
  s.Y = p2.B * p1.H.conjugate();
  s.Xh = p2.H * p1.H;
  s.Yh = p2.B * p1.B.conjugate();
  s.C = (s.X.conjugate().cwiseProduct(s.Y)).sum();
  s.xx = s.X.squaredNorm();
  s.yy = s.Y.squaredNorm();
  s.A_norm = 0.5 * (s.xx + s.yy);
  return s;
}

// total output intensity at interferometer phase phi
inline double total_intensity(const XySplit& s, double phi) {
  return s.xx + s.yy + 2 * std::real(s.C * std::polar(1.0, phi));
}

// Fringe offset Upsilon = arg(C): the bright fringe sits at phi = -Upsilon
// and the dark fringe at phi = pi - Upsilon, not at 0 and pi.
inline double fringe_offset(const XySplit& s) {
  if (std::abs(s.C) < 1e-12 * s.A_norm)
    throw numeric_error("fringe_offset: fringes are degenerate (|C| ~ 0)");
  return std::arg(s.C);
}

inline double phi_bright(const XySplit& s) { return -fringe_offset(s); }
inline double phi_dark(const XySplit& s) { return pi - fringe_offset(s); }

// visibility in percent; no phi scan is needed
inline double visibility(const XySplit& s) {
  const double denom = s.xx + s.yy;
  if (denom <= 0) throw numeric_error("visibility: zero output intensity");
  return 100.0 * 2.0 * std::abs(s.C) / denom;
}

struct DeltaZCurve {
  std::vector<double> dz;
  std::vector<double> vis;
  double dz_star = 0;
  double vis_star = 0;
  bool boundary = false;  // argmax landed on the scan edge
};

// Scans delta_z over [dz_min, dz_max] (each sample re-propagates the
// second pass), then refines the maximum with golden-section steps down to
// resolution dz_resolution. make_split must build the full phase split for
// a given offset.
inline DeltaZCurve optimize_deltaz(
    const std::function<XySplit(double)>& make_split, double dz_min,
    double dz_max, int n_samples, double dz_resolution) {
  if (!(dz_max > dz_min) || n_samples < 2)
    throw config_error("optimize_deltaz: bad scan range");
  DeltaZCurve curve;
  int best = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double dz = dz_min + (dz_max - dz_min) * i / (n_samples - 1);
    double v = 0;
    try {
      v = visibility(make_split(dz));
    } catch (const error& e) {
      throw numeric_error("optimize_deltaz: sample at delta_z = " +
                          std::to_string(dz) + " failed: " + e.what());
    }
    curve.dz.push_back(dz);
    curve.vis.push_back(v);
    if (v > curve.vis[best]) best = i;
  }
  curve.boundary = best == 0 || best == n_samples - 1;

  // golden-section refinement inside the bracketing neighbours
  double a = curve.dz[std::max(0, best - 1)];
  double b = curve.dz[std::min(n_samples - 1, best + 1)];
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = visibility(make_split(x1)), f2 = visibility(make_split(x2));
  while (b - a > dz_resolution) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = visibility(make_split(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = visibility(make_split(x1));
    }
  }
  curve.dz_star = 0.5 * (a + b);
  curve.vis_star = visibility(make_split(curve.dz_star));
  if (curve.vis_star < curve.vis[best]) {  // scan sample was already optimal
    curve.dz_star = curve.dz[best];
    curve.vis_star = curve.vis[best];
  }
  return curve;
}

}  // namespace su11
