#pragma once

#include <cmath>

#include "su11/common.hpp"

namespace su11 {

// Uniform transverse-wave-vector grid, symmetric about q = 0.
//
// Quadrature weights are uniform (w_j = dq). All integrands appearing in
// the propagation and overlap integrals vanish at the grid boundary (the
// pump factor and the mode functions decay well inside the q-extent), so
// the rectangle and trapezoid rules coincide to machine precision while
// the uniform choice keeps the discrete delta exactly I/dq.
struct Lattice {
  VectorXd q;   // sorted ascending, rad/m
  double dq = 0;

  int n() const { return static_cast<int>(q.size()); }
  double weight() const { return dq; }
  double q_max() const { return q(q.size() - 1); }

  // index of the sample closest to q = 0
  int center_index() const {
    int best = 0;
    for (int j = 1; j < n(); ++j)
      if (std::abs(q(j)) < std::abs(q(best))) best = j;
    return best;
  }

  bool same_as(const Lattice& o) const {
    return n() == o.n() && std::abs(dq - o.dq) <= 1e-12 * dq &&
           (q - o.q).cwiseAbs().maxCoeff() <= 1e-9 * dq;
  }
};

// n points spanning [-q_max, q_max]. q_limit is the largest propagating
// |q| allowed by the dispersion (see make_lattice_theta); grids reaching
// beyond 0.95*q_limit are rejected so every wave-vector mismatch stays real.
inline Lattice make_lattice(int n, double q_max, double q_limit) {
  if (n < 2) throw config_error("lattice: need at least 2 points");
  if (q_max <= 0) throw config_error("lattice: q_max must be positive");
  if (q_max > 0.95 * q_limit)
    throw numeric_error("lattice: q-extent reaches the evanescent regime");
  Lattice lat;
  lat.q.resize(n);
  lat.dq = 2 * q_max / (n - 1);
  for (int j = 0; j < n; ++j) lat.q(j) = -q_max + j * lat.dq;
  // enforce exact symmetry: q must contain -q for every entry
  for (int j = 0; j < n; ++j) lat.q(j) = 0.5 * (lat.q(j) - lat.q(n - 1 - j));
  return lat;
}

}  // namespace su11
