#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <cmath>

#include <Eigen/Dense>

namespace su11 {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr char version[] = "su11lab 1.0.0";

// dB per unit of squeezing parameter r: 20/ln(10)
inline constexpr double db_per_r = 8.685889638065035;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad or inconsistent run configuration (CLI exit code 1)
struct config_error : error {
  using error::error;
};

// numerical failure: domain violations, integration breakdown,
// decomposition inconsistencies (CLI exit code 2)
struct numeric_error : error {
  using error::error;
};

// curve-fit failure (CLI exit code 3)
struct fit_error : error {
  using error::error;
};

// wrap into (-pi, pi]
inline double wrap_pi(double x) {
  double y = std::remainder(x, 2 * pi);
  if (y <= -pi) y += 2 * pi;
  return y;
}

// wrap into (-pi/2, pi/2] by shifting multiples of pi
inline double wrap_half_pi(double x) {
  double y = std::remainder(x, pi);
  if (y <= -pi / 2) y += pi;
  return y;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-6) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace su11
