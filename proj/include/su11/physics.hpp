#pragma once

#include <cmath>
#include <string>

#include "su11/common.hpp"
#include "su11/dispersion.hpp"
#include "su11/lattice.hpp"

namespace su11 {

// Gaussian pump envelope exp(-x^2/(2 sigma^2)); the field amplitude is
// folded into the coupling strength Gamma. FWHM of the intensity profile
// is 2 sigma sqrt(ln 2).
struct PumpProfile {
  double sigma = 70e-6 / std::sqrt(2.0);  // m

  void validate() const {
    if (sigma <= 0) throw config_error("pump: sigma must be positive");
  }
};

// Geometry of one interferometer arm: crystal length, offset of the
// focusing element from its gain-balanced position, and the pump phase of
// the second pass. phi is stored as given; sweeps never wrap it silently.
struct CrystalGeometry {
  double L1 = 3e-3;      // m
  double delta_z = 0.0;  // m
  double phi = 0.0;      // rad

  void validate() const {
    if (L1 <= 0) throw config_error("geometry: L1 must be positive");
  }
};

// transverse pump spectrum, depends on qs and qi only through their sum
inline double pump_kernel(double qs, double qi, const PumpProfile& p) {
  const double s = (qs + qi) * p.sigma;
  return std::exp(-0.5 * s * s);
}

// phase matching of the first pass: exp(i dk L), unimodular
inline cplx phasematch_first(double qs, double qi, double L, const Dispersion& d) {
  return std::polar(1.0, delta_k(qs, qi, d) * L);
}

// Phase matching of the second pass in reflection geometry:
// exp(-i dk (L - 2 L1)) exp(-i dk_air delta_z) exp(i phi), with L the
// global coordinate through the second pass, L in [L1, 2 L1]. (This is
// the domain on which the form above matches the first pass continuously
// at L = L1 and reproduces the balanced mirror relations; the local
// in-crystal coordinate is 2 L1 - L.) With include_phi = false the flat
// exp(i phi) factor is split off (the "phase-free" convention used to
// factor the phase dependence out of the transfer functions).
inline cplx phasematch_second(double qs, double qi, double L,
                              const CrystalGeometry& g, const Dispersion& d,
                              bool include_phi = true) {
  double arg = -delta_k(qs, qi, d) * (L - 2 * g.L1) -
               delta_k_air(qs, qi, d) * g.delta_z;
  if (include_phi) arg += g.phi;
  return std::polar(1.0, arg);
}

// Coupling kernel of the propagation equations, discretized on a lattice.
// Entries have the affine-phase form
//   K(L)[j,k] = amp[j,k] * exp(i (phase0[j,k] + slope[j,k] * L)),
// which covers both passes and admits the exact layer average used by the
// structure-preserving integrator. amp absorbs Gamma, the pump factor and
// the quadrature weight dq, so K couples the weight-scaled matrices
// (H, B) = dq * (eta, beta) via dB/dL = K conj(H), dH/dL = K conj(B).
struct CouplingKernel {
  Lattice lat;
  MatrixXd amp;     // symmetric, includes Gamma and dq
  MatrixXd phase0;  // rad
  MatrixXd slope;   // rad/m
  double L_a = 0, L_b = 0;  // valid integration span
  std::string label;

  int n() const { return lat.n(); }

  MatrixXcd at(double L) const {
    return amp.binaryExpr(phase0 + L * slope, [](double a, double ph) {
      return a * std::polar(1.0, ph);
    });
  }

  // exact integral of K over [L, L+h]
  MatrixXcd integral(double L, double h) const {
    MatrixXcd out(amp.rows(), amp.cols());
    const double Lm = L + 0.5 * h;
    for (Eigen::Index j = 0; j < amp.rows(); ++j)
      for (Eigen::Index k = 0; k < amp.cols(); ++k) {
        const double s = slope(j, k);
        out(j, k) = amp(j, k) * h * sinc(0.5 * s * h) *
                    std::polar(1.0, phase0(j, k) + s * Lm);
      }
    return out;
  }
};

enum class Pass { first, second };

// Kernel for one pass through the crystal. For Pass::second the kernel is
// built in the phase-free convention when include_phi is false.
inline CouplingKernel coupling_kernel(const Lattice& lat, double gamma,
                                      const PumpProfile& pump,
                                      const Dispersion& disp,
                                      const CrystalGeometry& geom,
                                      Pass pass, bool include_phi = true) {
  disp.validate();
  pump.validate();
  geom.validate();
  const int n = lat.n();
  CouplingKernel k;
  k.lat = lat;
  k.amp.resize(n, n);
  k.phase0.resize(n, n);
  k.slope.resize(n, n);
  k.L_a = pass == Pass::first ? 0 : geom.L1;
  k.L_b = pass == Pass::first ? geom.L1 : 2 * geom.L1;
  k.label = pass == Pass::first ? "first" : "second";
  for (int j = 0; j < n; ++j)
    for (int m = 0; m < n; ++m) {
      const double dk = delta_k(lat.q(j), lat.q(m), disp);
      k.amp(j, m) = gamma * lat.weight() * pump_kernel(lat.q(j), lat.q(m), pump);
      if (pass == Pass::first) {
        k.phase0(j, m) = 0;
        k.slope(j, m) = dk;
      } else {
        k.phase0(j, m) = 2 * geom.L1 * dk -
                         delta_k_air(lat.q(j), lat.q(m), disp) * geom.delta_z +
                         (include_phi ? geom.phi : 0.0);
        k.slope(j, m) = -dk;
      }
    }
  return k;
}

// K = Gamma * I, constant in L. The propagation then decouples per lattice
// point into dB = Gamma conj(H), dH = Gamma conj(B) with the closed-form
// solution H = cosh(Gamma L), B = sinh(Gamma L).
inline CouplingKernel diagonal_test_kernel(const Lattice& lat, double gamma,
                                           double L_b) {
  const int n = lat.n();
  CouplingKernel k;
  k.lat = lat;
  k.amp = gamma * MatrixXd::Identity(n, n);
  k.phase0 = MatrixXd::Zero(n, n);
  k.slope = MatrixXd::Zero(n, n);
  k.L_a = 0;
  k.L_b = L_b;
  k.label = "diagonal-test";
  return k;
}

}  // namespace su11
