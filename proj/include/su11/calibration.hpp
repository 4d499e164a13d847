#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "su11/common.hpp"
#include "su11/propagator.hpp"

namespace su11 {

// Collinear-intensity samples N0(Gamma) = <N(q=0)> dq and the parameters
// of the fit N0 = B sinh^2(A Gamma). The experimental gain of a run is
// G_exp = A * Gamma with a single fitting constant for all gain regimes.
struct GainCurve {
  std::vector<double> gammas;
  std::vector<double> N0;
  double A = 0, B = 0;
  double residual = 0;  // rms of log-space residuals

  double fitted(double gamma) const {
    const double s = std::sinh(A * gamma);
    return B * s * s;
  }
};

// Propagates the single-crystal kernel for each Gamma and records the
// collinear output intensity.
inline GainCurve sample_gain_curve(
    const std::function<CouplingKernel(double)>& kernel_for_gamma,
    const std::vector<double>& gammas, double rtol = 1e-9,
    double atol = 1e-12) {
  GainCurve curve;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (gammas[i] < 0 || (i > 0 && gammas[i] <= gammas[i - 1]))
      throw config_error("sample_gain_curve: gammas must be positive ascending");
  }
  for (double g : gammas) {
    CouplingKernel k = kernel_for_gamma(g);
    TransferPair tp;
    try {
      tp = integrate_rk(k, rtol, atol);
    } catch (const error& e) {
      throw numeric_error("sample_gain_curve: propagation failed at Gamma = " +
                          std::to_string(g) + ": " + e.what());
    }
    const int c = tp.lat.center_index();
    const double N0 = photon_number_density(tp)(c) * tp.lat.weight();
    curve.gammas.push_back(g);
    curve.N0.push_back(N0);
  }
  return curve;
}

// Least squares of N0 against B sinh^2(A Gamma), carried out on the
// logarithm so high-gain points do not drown the low-gain ones.
// Deterministic start: A0 from the slope of asinh(sqrt(N0/N0_max)) over
// the two largest samples, B0 from the largest sample.
inline std::pair<double, double> fit_sinh2(GainCurve& curve,
                                           int max_iter = 200) {
  std::vector<double> g, y;
  for (std::size_t i = 0; i < curve.gammas.size(); ++i)
    if (curve.gammas[i] > 0 && curve.N0[i] > 0) {
      g.push_back(curve.gammas[i]);
      y.push_back(curve.N0[i]);
    }
  const int m = static_cast<int>(g.size());
  if (static_cast<int>(curve.gammas.size()) < 3 || m < 2)
    throw fit_error("fit_sinh2: need at least 3 samples with positive gain");

  const double ymax = y[m - 1];
  const double f1 = std::asinh(std::sqrt(y[m - 2] / ymax));
  const double f2 = std::asinh(std::sqrt(1.0));
  double A = (f2 - f1) / (g[m - 1] - g[m - 2]);
  if (!(A > 0)) A = 1.0 / g[m - 1];
  double logB = std::log(ymax) - 2 * std::log(std::sinh(A * g[m - 1]));

  // damped Gauss-Newton on r_i = log y_i - logB - 2 log sinh(A g_i)
  auto residuals = [&](double Av, double lBv, std::vector<double>& r) {
    double ss = 0;
    r.resize(m);
    for (int i = 0; i < m; ++i) {
      r[i] = std::log(y[i]) - lBv - 2 * std::log(std::sinh(Av * g[i]));
      ss += r[i] * r[i];
    }
    return ss;
  };
  std::vector<double> r;
  double ss = residuals(A, logB, r);
  double mu = 1e-6;
  int it = 0;
  for (; it < max_iter; ++it) {
    // jacobian: dr/dA = -2 g coth(A g), dr/dlogB = -1
    double jaa = 0, jab = 0, jbb = 0, ga = 0, gb = 0;
    for (int i = 0; i < m; ++i) {
      const double ja = -2 * g[i] / std::tanh(A * g[i]);
      const double jb = -1.0;
      jaa += ja * ja;
      jab += ja * jb;
      jbb += jb * jb;
      ga += ja * r[i];
      gb += jb * r[i];
    }
    bool stepped = false;
    for (int tries = 0; tries < 60; ++tries) {
      const double a11 = jaa * (1 + mu), a22 = jbb * (1 + mu);
      const double det = a11 * a22 - jab * jab;
      if (std::abs(det) < 1e-300) {
        mu *= 10;
        continue;
      }
      const double dA = -(a22 * ga - jab * gb) / det;
      const double dB = -(-jab * ga + a11 * gb) / det;
      const double An = A + dA, Bn = logB + dB;
      if (An <= 0 || !std::isfinite(An) || !std::isfinite(Bn)) {
        mu *= 10;
        continue;
      }
      std::vector<double> rn;
      const double ssn = residuals(An, Bn, rn);
      if (ssn <= ss) {
        const bool converged =
            std::abs(dA) < 1e-14 * std::max(1.0, std::abs(A)) &&
            std::abs(dB) < 1e-14;
        A = An;
        logB = Bn;
        r.swap(rn);
        ss = ssn;
        mu = std::max(mu * 0.3, 1e-12);
        stepped = true;
        if (converged) it = max_iter;  // done
        break;
      }
      mu *= 10;
    }
    if (!stepped) break;  // no downhill step found: converged
  }
  curve.A = A;
  curve.B = std::exp(logB);
  curve.residual = std::sqrt(ss / m);
  if (!std::isfinite(A) || !std::isfinite(curve.B))
    throw fit_error("fit_sinh2: fit did not converge");
  return {curve.A, curve.B};
}

inline double gain_to_gamma(double G_exp, double A) {
  if (!(A > 0)) throw config_error("gain_to_gamma: fit constant A must be positive");
  return G_exp / A;
}

}  // namespace su11
