#pragma once

#include <algorithm>
#include <cmath>

#include "su11/common.hpp"
#include "su11/lattice.hpp"

namespace su11 {

// Wave-vector moduli for degenerate type-I collinear down-conversion.
// k_p/k_s/k_i are the moduli inside the crystal, the *_air values apply in
// the air gap of the interferometer, k_vac maps transverse wave vectors to
// external angles (theta = q / k_vac).
struct Dispersion {
  double k_p = 0, k_s = 0, k_i = 0;              // rad/m, inside the crystal
  double k_p_air = 0, k_s_air = 0, k_i_air = 0;  // rad/m, air gap
  double k_vac = 0;                              // rad/m, signal in vacuum

  void validate() const {
    if (k_p <= 0 || k_s <= 0 || k_i <= 0 || k_p_air <= 0 || k_s_air <= 0 ||
        k_i_air <= 0 || k_vac <= 0)
      throw config_error("dispersion: all wave-vector moduli must be positive");
    if (std::abs(k_s - k_i) > 1e-9 * k_s)
      throw config_error("dispersion: degenerate type-I requires k_s == k_i");
  }
};

// Constant-moduli dispersion with perfect collinear matching, for tests.
inline Dispersion toy_dispersion(double k_signal = 1.0e7) {
  Dispersion d;
  d.k_s = d.k_i = k_signal;
  d.k_p = 2 * k_signal;
  d.k_vac = d.k_s_air = d.k_i_air = k_signal * 0.6;
  d.k_p_air = 2 * d.k_s_air;
  return d;
}

// Representative BBO-like preset: degenerate type-I, near-UV pump at
// 354.65 nm, signal/idler at 709.3 nm with n_o = 1.66452 (Sellmeier), cut
// for perfect collinear matching (k_p = 2 k_s). Air treated as vacuum.
inline Dispersion bbo_dispersion() {
  const double lambda_s = 709.3e-9;
  const double n_s = 1.66452;
  Dispersion d;
  d.k_s = d.k_i = 2 * pi * n_s / lambda_s;
  d.k_p = 2 * d.k_s;
  d.k_vac = 2 * pi / lambda_s;
  d.k_s_air = d.k_i_air = d.k_vac;
  d.k_p_air = 2 * d.k_vac;
  return d;
}

namespace detail {
inline double mismatch(double qs, double qi, double kp, double ks, double ki) {
  const double s = qs + qi;
  const double rp = kp * kp - s * s;
  const double rs = ks * ks - qs * qs;
  const double ri = ki * ki - qi * qi;
  if (rp < 0 || rs < 0 || ri < 0)
    throw numeric_error("delta_k: transverse wave vector beyond the propagating cone");
  // grouped so the result is bitwise symmetric under qs <-> qi when ks == ki
  return std::sqrt(rp) - (std::sqrt(rs) + std::sqrt(ri));
}
}  // namespace detail

// collinear wave-vector mismatch inside the crystal
inline double delta_k(double qs, double qi, const Dispersion& d) {
  return detail::mismatch(qs, qi, d.k_p, d.k_s, d.k_i);
}

// mismatch in the air gap (governs the focusing-element offset phase)
inline double delta_k_air(double qs, double qi, const Dispersion& d) {
  return detail::mismatch(qs, qi, d.k_p_air, d.k_s_air, d.k_i_air);
}

// external propagation angle of the signal at transverse wave vector q
inline double angle_of(double q, const Dispersion& d) { return q / d.k_vac; }

// Grid over external angles [-theta_max, theta_max] mapped through k_vac.
inline Lattice make_lattice_theta(int n, double theta_max, const Dispersion& d) {
  return make_lattice(n, theta_max * d.k_vac, std::min(d.k_s, d.k_i));
}

}  // namespace su11
