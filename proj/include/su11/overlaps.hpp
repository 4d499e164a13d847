#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "su11/common.hpp"
#include "su11/jointdecomp.hpp"

namespace su11 {

// Complex matrix of mode inner products between two mode families, with
// enough provenance to catch apples-to-oranges comparisons.
struct OverlapMatrix {
  MatrixXcd entries;
  MatrixXcd nophase;  // phase-free variant when an analytic split exists
  std::string row_family, col_family;
  double phi = 0;
  std::string provenance;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
};

// entry[l,m] = sum_j rows[j,l]^(*) cols[j,m] dq, conjugating the row
// family when conj_rows is set
inline OverlapMatrix overlap(const MatrixXcd& rows, const MatrixXcd& cols,
                             bool conj_rows, const Lattice& lat,
                             const std::string& row_family = "",
                             const std::string& col_family = "") {
  if (rows.rows() != cols.rows() || rows.rows() != lat.n())
    throw numeric_error("overlap: lattice mismatch");
  OverlapMatrix om;
  om.entries = conj_rows ? MatrixXcd(lat.weight() * (rows.adjoint() * cols))
                         : MatrixXcd(lat.weight() * (rows.transpose() * cols));
  om.row_family = row_family;
  om.col_family = col_family;
  return om;
}

// same-crystal overlap c_lm = int dq u_l(q) psi_m*(q)
inline OverlapMatrix c_matrix(const SchmidtBasis& basis) {
  OverlapMatrix om = overlap(basis.U, basis.Psi.conjugate(), false, basis.lat,
                             "u", "psi*");
  om.provenance = "same-crystal";
  return om;
}

// Overlap of first-pass output modes with second-pass input modes,
//   g_km(phi) = e^{i phi/2} <u_k^(1), psi_m^(2,phase-free)>.
// The integral itself does not depend on phi; the flat factor carries the
// entire phase dependence, so |g| is fringe independent.
inline OverlapMatrix g_matrix(const SchmidtBasis& basis1,
                              const SchmidtBasis& basis2_nophase, double phi) {
  OverlapMatrix om = overlap(basis1.U, basis2_nophase.Psi, true, basis1.lat,
                             "u(1)", "psi(2)");
  om.nophase = om.entries;
  om.entries *= std::polar(1.0, phi / 2);
  om.phi = phi;
  om.provenance = "g";
  return om;
}

// Overlap of second-pass output modes with whole-device output modes,
//   h_nl = <u_n^(2), u_l^(SU)>, both bases taken at the same phi (and the
//   same delta_z). No analytic phase split exists here.
//
// basis2_nophase is the phase-free second-pass basis; its modes at phase
// phi are e^{i phi/2} times the phase-free ones.
inline OverlapMatrix h_matrix(const SchmidtBasis& basis2_nophase,
                              const SchmidtBasis& basisSU, double phi_basisSU,
                              double phi) {
  if (std::abs(wrap_pi(phi_basisSU - phi)) > 1e-12)
    throw numeric_error("h_matrix: basisSU was computed at a different phase");
  OverlapMatrix om = overlap(basis2_nophase.U, basisSU.U, true,
                             basis2_nophase.lat, "u(2)", "u(SU)");
  om.entries *= std::polar(1.0, -phi / 2);  // conj of the e^{i phi/2} mode factor
  om.phi = phi;
  om.provenance = "h";
  return om;
}

// Per-sample record of a delta_z sweep of the overlap phases at both
// fringes, wrapped into (-pi/2, pi/2] because the mode signs are arbitrary.
struct PhaseSweepSample {
  double dz = 0;
  double vis = 0;
  double phi_bf = 0, phi_df = 0;
  std::vector<double> arg_g_bf, arg_g_df;  // diagonal entries
  std::vector<double> arg_h_bf, arg_h_df;
};

}  // namespace su11
