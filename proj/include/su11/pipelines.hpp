#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "su11/asymmetry.hpp"
#include "su11/calibration.hpp"
#include "su11/config.hpp"
#include "su11/interferometer.hpp"
#include "su11/io.hpp"
#include "su11/jointdecomp.hpp"
#include "su11/overlaps.hpp"
#include "su11/parallel.hpp"
#include "su11/report.hpp"
#include "su11/svgplot.hpp"

namespace su11 {

namespace pipeline {

struct Context {
  RunConfig cfg;
  Dispersion disp;
  Lattice lat;
  PumpProfile pump;
  bool diagonal = false;  // validation mode with the L-independent kernel
  std::string outdir;
};

inline Context make_context(const RunConfig& cfg, const std::string& command) {
  Context ctx;
  ctx.cfg = cfg;
  ctx.diagonal = cfg.dispersion == "diagonal";
  ctx.disp = ctx.diagonal ? toy_dispersion() : cfg.make_dispersion();
  ctx.lat = make_lattice_theta(cfg.n, cfg.theta_max, ctx.disp);
  ctx.pump.sigma = cfg.sigma;
  ctx.outdir = cfg.out;
  std::filesystem::create_directories(ctx.outdir);
  write_json(ctx.outdir + "/manifest.json", cfg.manifest(command));
  return ctx;
}

inline CouplingKernel make_kernel(const Context& ctx, double gamma, Pass pass,
                                  bool include_phi = true, double delta_z = 0,
                                  double phi = 0) {
  if (ctx.diagonal) {
    CouplingKernel k = diagonal_test_kernel(ctx.lat, gamma, ctx.cfg.L1);
    if (pass == Pass::second) {
      k.L_a = ctx.cfg.L1;
      k.L_b = 2 * ctx.cfg.L1;
      if (include_phi) k.phase0.array() += phi;
      k.label = "second";
    }
    return k;
  }
  CrystalGeometry geom;
  geom.L1 = ctx.cfg.L1;
  geom.delta_z = delta_z;
  geom.phi = phi;
  return coupling_kernel(ctx.lat, gamma, ctx.pump, ctx.disp, geom, pass,
                         include_phi);
}

inline TransferPair propagate(const Context& ctx, const CouplingKernel& k) {
  if (ctx.cfg.integrator == "lie-euler")
    return integrate_lie_euler(k, ctx.cfg.lie_steps);
  return integrate_rk(k, ctx.cfg.rtol, ctx.cfg.atol);
}

// a-priori coupling scale, used only to place default calibration samples
inline double coupling_scale_guess(const Context& ctx) {
  if (ctx.diagonal) return ctx.cfg.L1;
  return ctx.cfg.L1 * std::sqrt(2 * pi) / ctx.pump.sigma;
}

inline std::vector<double> default_gammas(const Context& ctx) {
  const double A0 = coupling_scale_guess(ctx);
  std::vector<double> g;
  for (double G : {0.01, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0})
    g.push_back(G / A0);
  return g;
}

inline GainCurve run_calibration(const Context& ctx) {
  const std::vector<double> gammas =
      ctx.cfg.gammas.empty() ? default_gammas(ctx) : ctx.cfg.gammas;
  auto make = [&](double gamma) { return make_kernel(ctx, gamma, Pass::first); };
  GainCurve curve = sample_gain_curve(make, gammas, ctx.cfg.rtol, ctx.cfg.atol);
  fit_sinh2(curve);
  return curve;
}

inline double resolve_A(const Context& ctx) {
  if (ctx.cfg.fit_A == "calibrate") return run_calibration(ctx).A;
  if (ctx.cfg.fit_A.empty())
    throw config_error("config: gain.A must be a number or 'calibrate'");
  return detail::parse_number(ctx.cfg.fit_A, "gain.A");
}

// θ margins where the trace drops below frac of its peak
inline std::pair<double, double> support_margins(const Lattice& lat,
                                                 const VectorXd& mod,
                                                 double frac = 1e-3) {
  const double peak = mod.maxCoeff();
  int lo = 0, hi = lat.n() - 1;
  while (lo < lat.n() && mod(lo) < frac * peak) ++lo;
  while (hi >= 0 && mod(hi) < frac * peak) --hi;
  if (lo >= hi) return {lat.q(0), lat.q(lat.n() - 1)};
  return {lat.q(lo), lat.q(hi)};
}

}  // namespace pipeline

// --- calibrate ----------------------------------------------------------

inline void cmd_calibrate(const RunConfig& cfg) {
  pipeline::Context ctx = pipeline::make_context(cfg, "calibrate");
  GainCurve curve = pipeline::run_calibration(ctx);

  CsvWriter csv(ctx.outdir + "/gain_curve.csv");
  csv.header({"gamma", "N0", "fitted"});
  for (std::size_t i = 0; i < curve.gammas.size(); ++i)
    csv.row({curve.gammas[i], curve.N0[i], curve.fitted(curve.gammas[i])});

  json fit;
  fit["A"] = curve.A;
  fit["B"] = curve.B;
  fit["residual"] = curve.residual;
  fit["provenance"] = cfg.hash("calibrate");
  write_json(ctx.outdir + "/fit.json", fit);

  svg::Series data, model;
  data.x = curve.gammas;
  data.y = curve.N0;
  data.label = "collinear intensity";
  model.label = "B sinh^2(A Gamma)";
  model.color = "#d62728";
  model.dashed = true;
  for (double g : curve.gammas) {
    model.x.push_back(g);
    model.y.push_back(curve.fitted(g));
  }
  svg::line_plot(ctx.outdir + "/gain_curve.svg", {data, model},
                 "gain calibration", "Gamma", "N(q=0) dq");
}

// --- single crystal ------------------------------------------------------

inline void cmd_single_crystal(const RunConfig& cfg) {
  pipeline::Context ctx = pipeline::make_context(cfg, "single-crystal");
  const double A = pipeline::resolve_A(ctx);
  const double gamma = gain_to_gamma(cfg.G1, A);
  TransferPair tp = pipeline::propagate(ctx, pipeline::make_kernel(ctx, gamma, Pass::first));
  SchmidtBasis basis = joint_decompose(tp);

  const int m = std::min(cfg.modes, basis.n());
  {
    CsvWriter csv(ctx.outdir + "/lambdas.csv");
    csv.header({"n", "lambda", "lambda_tilde"});
    for (int i = 0; i < basis.n(); ++i)
      csv.row({double(i), basis.lambda(i), basis.lambda_tilde(i)});
  }
  {
    CsvWriter csv(ctx.outdir + "/modes.csv");
    std::vector<std::string> cols = {"theta"};
    for (int n = 0; n < m; ++n) {
      cols.push_back("abs_psi_" + std::to_string(n));
      cols.push_back("arg_psi_" + std::to_string(n));
      cols.push_back("abs_u_" + std::to_string(n));
      cols.push_back("arg_u_" + std::to_string(n));
    }
    csv.header(cols);
    for (int j = 0; j < ctx.lat.n(); ++j) {
      std::vector<double> row = {angle_of(ctx.lat.q(j), ctx.disp)};
      for (int n = 0; n < m; ++n) {
        row.push_back(std::abs(basis.Psi(j, n)));
        row.push_back(std::arg(basis.Psi(j, n)));
        row.push_back(std::abs(basis.U(j, n)));
        row.push_back(std::arg(basis.U(j, n)));
      }
      csv.row(row);
    }
  }
  OverlapMatrix c = c_matrix(basis);
  {
    json jc;
    jc["entries"] = json_matrix(c.entries, m, m);
    jc["row_family"] = "u";
    jc["col_family"] = "psi*";
    jc["G_exp"] = cfg.G1;
    jc["provenance"] = cfg.hash("single-crystal");
    write_json(ctx.outdir + "/c_matrix.json", jc);
  }

  // mode plots with support margins at 1e-3 of the peak
  for (int n = 0; n < std::min(m, 4); ++n) {
    VectorXd mod_u = basis.U.col(n).cwiseAbs();
    VectorXd mod_p = basis.Psi.col(n).cwiseAbs();
    auto [qlo, qhi] = pipeline::support_margins(ctx.lat, mod_u);
    svg::Series su, sp, pu, pp;
    su.label = "|u_" + std::to_string(n) + "|";
    sp.label = "|psi_" + std::to_string(n) + "|";
    sp.color = "#d62728";
    sp.dashed = true;
    pu.label = "arg u_" + std::to_string(n);
    pp.label = "arg psi_" + std::to_string(n);
    pp.color = "#d62728";
    pp.dashed = true;
    for (int j = 0; j < ctx.lat.n(); ++j) {
      const double th = angle_of(ctx.lat.q(j), ctx.disp);
      su.x.push_back(th);
      su.y.push_back(mod_u(j));
      sp.x.push_back(th);
      sp.y.push_back(mod_p(j));
      if (ctx.lat.q(j) >= qlo && ctx.lat.q(j) <= qhi) {
        pu.x.push_back(th);
        pu.y.push_back(std::arg(basis.U(j, n)));
        pp.x.push_back(th);
        pp.y.push_back(std::arg(basis.Psi(j, n)));
      }
    }
    const double th_lo = angle_of(qlo, ctx.disp), th_hi = angle_of(qhi, ctx.disp);
    svg::line_plot(ctx.outdir + "/mode_" + std::to_string(n) + ".svg", {su, sp},
                   "Schmidt mode " + std::to_string(n) + " modulus",
                   "theta (rad)", "mode amplitude", {th_lo, th_hi});
    svg::line_plot(ctx.outdir + "/mode_" + std::to_string(n) + "_phase.svg",
                   {pu, pp}, "Schmidt mode " + std::to_string(n) + " phase",
                   "theta (rad)", "phase (rad)", {th_lo, th_hi});
  }
  svg::cell_plot(ctx.outdir + "/c_matrix.svg", c.entries.topLeftCorner(m, m),
                 "|c| with phase handles");

  // binary containers with JSON sidecars
  save_pair(tp, ctx.outdir + "/pair.bin");
  {
    json side;
    side["n"] = tp.n();
    side["dq"] = tp.lat.dq;
    side["gamma"] = gamma;
    side["pass"] = tp.meta.pass;
    side["phi"] = tp.meta.phi;
    side["delta_z"] = tp.meta.delta_z;
    side["integrator"] = tp.meta.integrator;
    side["rtol"] = tp.meta.rtol;
    side["atol"] = tp.meta.atol;
    side["n_steps"] = tp.meta.n_steps;
    side["provenance"] = cfg.hash("single-crystal");
    write_json(ctx.outdir + "/pair.json", side);
  }
  save_basis(basis, ctx.outdir + "/basis.bin");
  {
    json side;
    side["lambda"] = json_vector(basis.lambda, m);
    side["lambda_tilde"] = json_vector(basis.lambda_tilde, m);
    json blocks = json::array();
    for (auto [b, e] : basis.blocks) blocks.push_back(json::array({b, e}));
    side["blocks"] = blocks;
    side["deg_tol"] = basis.deg_tol;
    side["sign_convention"] =
        "nonnegative real part at the largest-modulus sample of u_n";
    side["provenance"] = cfg.hash("single-crystal");
    write_json(ctx.outdir + "/basis.json", side);
  }
}

// --- interferometer ------------------------------------------------------

struct InterferometerResult {
  AssembledSu assembly;
  DeltaZCurve curve;
  bool swept = false;
};

inline InterferometerResult run_interferometer(pipeline::Context& ctx,
                                               bool force_sweep = false) {
  const RunConfig& cfg = ctx.cfg;
  const double A = pipeline::resolve_A(ctx);
  const double gamma1 = gain_to_gamma(cfg.G1, A);
  const double gamma2 = gain_to_gamma(cfg.G2, A);
  TransferPair p1 =
      pipeline::propagate(ctx, pipeline::make_kernel(ctx, gamma1, Pass::first));

  auto make_split = [&](double dz) {
    TransferPair p2 = pipeline::propagate(
        ctx, pipeline::make_kernel(ctx, gamma2, Pass::second, false, dz));
    return xy_split(SuSetup{p1, p2, dz, 0.0});
  };

  InterferometerResult out;
  double dz = cfg.delta_z;
  const std::string mode = force_sweep ? "sweep" : cfg.delta_z_mode;
  if (mode == "optimize") {
    const double res = cfg.dz_resolution > 0 ? cfg.dz_resolution : cfg.L1 / 1000;
    out.curve = optimize_deltaz(make_split, cfg.dz_min, cfg.dz_max,
                                cfg.dz_samples, res);
    dz = out.curve.dz_star;
    out.swept = true;
  } else if (mode == "sweep") {
    std::vector<XySplit> splits(cfg.dz_samples);
    std::vector<double> dzs(cfg.dz_samples);
    parallel_for(cfg.dz_samples, cfg.workers, [&](int i) {
      dzs[i] = cfg.dz_min + (cfg.dz_max - cfg.dz_min) * i / (cfg.dz_samples - 1);
      splits[i] = make_split(dzs[i]);
    });
    int best = 0;
    for (int i = 0; i < cfg.dz_samples; ++i) {
      out.curve.dz.push_back(dzs[i]);
      out.curve.vis.push_back(visibility(splits[i]));
      if (out.curve.vis[i] > out.curve.vis[best]) best = i;
    }
    out.curve.dz_star = dzs[best];
    out.curve.vis_star = out.curve.vis[best];
    out.curve.boundary = best == 0 || best == cfg.dz_samples - 1;
    dz = out.curve.dz_star;
    out.swept = true;
  }

  TransferPair p2 = pipeline::propagate(
      ctx, pipeline::make_kernel(ctx, gamma2, Pass::second, false, dz));
  out.assembly = assemble_su(p1, p2, dz);
  return out;
}

inline void cmd_interferometer(const RunConfig& cfg, bool force_sweep = false) {
  pipeline::Context ctx = pipeline::make_context(
      cfg, force_sweep ? "sweep-deltaz" : "interferometer");
  InterferometerResult res = run_interferometer(ctx, force_sweep);
  const AssembledSu& a = res.assembly;
  const int m = std::min(cfg.modes, a.basis1.n());

  if (res.swept) {
    CsvWriter csv(ctx.outdir + "/vis_curve.csv");
    csv.header({"delta_z", "visibility"});
    for (std::size_t i = 0; i < res.curve.dz.size(); ++i)
      csv.row({res.curve.dz[i], res.curve.vis[i]});
    svg::Series s;
    s.x = res.curve.dz;
    s.y = res.curve.vis;
    svg::line_plot(ctx.outdir + "/vis_curve.svg", {s},
                   "visibility over focusing-element offset", "delta_z (m)",
                   "v (%)", {res.curve.dz_star});
    if (res.curve.boundary)
      std::fprintf(stderr,
                   "warning: visibility maximum sits on the scan boundary\n");
  }

  json fr;
  fr["upsilon"] = a.upsilon;
  fr["phi_bf"] = a.phi_bf;
  fr["phi_df"] = a.phi_df;
  fr["visibility"] = a.vis;
  fr["v_max"] = res.swept ? res.curve.vis_star : a.vis;
  fr["delta_z_star"] = a.setup.delta_z;
  fr["boundary_hit"] = res.curve.boundary;
  fr["provenance"] = cfg.hash("interferometer");
  write_json(ctx.outdir + "/fringe.json", fr);

  auto dump_overlap = [&](const OverlapMatrix& om, const std::string& name) {
    json jo;
    jo["entries"] = json_matrix(om.entries, m, m);
    jo["row_family"] = om.row_family;
    jo["col_family"] = om.col_family;
    jo["phi"] = om.phi;
    jo["provenance"] = cfg.hash("interferometer");
    write_json(ctx.outdir + "/" + name + ".json", jo);
    svg::cell_plot(ctx.outdir + "/" + name + ".svg",
                   om.entries.topLeftCorner(m, m), name + " (phi = " +
                       fmt_g17(om.phi).substr(0, 8) + ")");
  };
  dump_overlap(a.g_bf, "g_matrix_bf");
  dump_overlap(a.g_df, "g_matrix_df");
  dump_overlap(a.h_bf, "h_matrix_bf");
  dump_overlap(a.h_df, "h_matrix_df");

  if (cfg.phi_mode == "list" && !cfg.phi_list.empty()) {
    CsvWriter csv(ctx.outdir + "/phi_scan.csv");
    csv.header({"phi", "total_intensity"});
    for (double phi : cfg.phi_list)
      csv.row({phi, total_intensity(a.split, phi)});
  }

  CsvWriter csv(ctx.outdir + "/eigenvalues.csv");
  csv.header({"n", "lambda1", "lambda2", "lambda_su_df", "lambda_su_bf"});
  for (int i = 0; i < m; ++i)
    csv.row({double(i), a.basis1.lambda(i), a.basis2_nophase.lambda(i),
             a.basisSU_df.lambda(i), a.basisSU_bf.lambda(i)});
}

// --- squeezing ------------------------------------------------------------

inline void cmd_squeezing(const RunConfig& cfg) {
  pipeline::Context ctx = pipeline::make_context(cfg, "squeezing");
  InterferometerResult res = run_interferometer(ctx);
  ReportOptions opt;
  opt.n_report = cfg.modes;
  opt.n_sum = cfg.sum_modes;
  SqueezingReport rep = build_report(res.assembly, opt);
  rep.setup = cfg.hash("squeezing");

  {
    CsvWriter csv(ctx.outdir + "/squeezing.csv");
    csv.header({"mode", "S_direct", "AS_direct", "S_exact", "AS_exact", "S_hg",
                "AS_hg", "theta_min", "theta_max"});
    for (const SqueezingRow& r : rep.rows)
      csv.row({double(r.mode), r.S_direct, r.AS_direct, r.S_exact, r.AS_exact,
               r.S_hg, r.AS_hg, r.theta_min, r.theta_max});
  }
  json jr;
  jr["phi_bf"] = rep.phi_bf;
  jr["phi_df"] = rep.phi_df;
  jr["delta_z"] = rep.delta_z;
  jr["upsilon"] = rep.upsilon;
  jr["visibility"] = res.assembly.vis;
  jr["truncation_defect"] = rep.truncation_defect;
  jr["provenance"] = rep.setup;
  jr["rows"] = json::array();
  for (const SqueezingRow& r : rep.rows) {
    json row;
    row["mode"] = r.mode;
    row["S_direct"] = r.S_direct;
    row["AS_direct"] = r.AS_direct;
    row["S_exact"] = r.S_exact;
    row["AS_exact"] = r.AS_exact;
    row["S_hg"] = r.S_hg;
    row["AS_hg"] = r.AS_hg;
    row["S_hg_bf"] = r.S_hg_bf;
    row["AS_hg_bf"] = r.AS_hg_bf;
    row["theta_min"] = r.theta_min;
    row["theta_max"] = r.theta_max;
    row["hg_valid"] = r.hg_valid;
    jr["rows"].push_back(row);
  }
  write_json(ctx.outdir + "/squeezing.json", jr);

  std::vector<std::vector<double>> S, AS;
  for (const SqueezingRow& r : rep.rows) {
    S.push_back({r.S_direct, r.S_exact, r.S_hg});
    AS.push_back({r.AS_direct, r.AS_exact, r.AS_hg});
  }
  svg::bar_chart(ctx.outdir + "/squeezing.svg",
                 {"direct", "exact", "high-gain"}, S,
                 "squeezing per mode", "S (dB)");
  svg::bar_chart(ctx.outdir + "/antisqueezing.svg",
                 {"direct", "exact", "high-gain"}, AS,
                 "anti-squeezing per mode", "AS (dB)");
}

// --- asymmetry analysis ---------------------------------------------------

inline void cmd_asymmetry(const RunConfig& cfg) {
  pipeline::Context ctx = pipeline::make_context(cfg, "asymmetry");
  const double A = pipeline::resolve_A(ctx);
  const double gamma = gain_to_gamma(cfg.G1, A);
  TransferPair tp =
      pipeline::propagate(ctx, pipeline::make_kernel(ctx, gamma, Pass::first));

  const double metric = asymmetry_metric(tp.B);
  SchmidtBasis abs_basis = modulus_decomposition(tp.B, tp.lat);
  PhaseFit fit = separable_phase_fit(tp.B, tp.lat);
  OverlapMatrix c_abs = c_matrix(abs_basis);
  OverlapMatrix c_fit = fit_mode_comparison(abs_basis, fit);
  SchmidtBasis exact = joint_decompose(tp);
  OverlapMatrix c_exact = c_matrix(exact);

  json ja;
  ja["metric"] = metric;
  ja["G_exp"] = cfg.G1;
  ja["provenance"] = cfg.hash("asymmetry");
  write_json(ctx.outdir + "/asymmetry.json", ja);

  json jf;
  // a_{j,k} in pi rad um^(2(k-1)): a_table = a_SI * 1e6^(2(k-1)) / pi
  for (int k = 0; k < 4; ++k) {
    const double conv = std::pow(1e6, 2.0 * k) / pi;
    jf["a1_si"].push_back(fit.a1[k]);
    jf["a2_si"].push_back(fit.a2[k]);
    jf["a1_table"].push_back(fit.a1[k] * conv);
    jf["a2_table"].push_back(fit.a2[k] * conv);
  }
  jf["units_table"] = "pi rad um^(2(k-1))";
  jf["residual_rad"] = fit.residual;
  jf["support_count"] = fit.support_count;
  write_json(ctx.outdir + "/phase_fit.json", jf);

  const int m = std::min(cfg.modes * 2, abs_basis.n());
  json jc;
  jc["entries"] = json_matrix(c_abs.entries, m, m);
  write_json(ctx.outdir + "/c_abs.json", jc);
  json jc2;
  jc2["entries"] = json_matrix(c_fit.entries, m, m);
  write_json(ctx.outdir + "/c_fit.json", jc2);

  MatrixXd mod = tp.B.cwiseAbs();
  MatrixXd asym = mod - mod.transpose();
  MatrixXd phase(tp.n(), tp.n());
  MatrixXd phase_model(tp.n(), tp.n());
  for (int i = 0; i < tp.n(); ++i)
    for (int j = 0; j < tp.n(); ++j) {
      phase(i, j) = std::arg(tp.B(i, j));
      phase_model(i, j) = wrap_pi(phase_fit_eval(fit.a1, tp.lat.q(i)) +
                                  phase_fit_eval(fit.a2, tp.lat.q(j)));
    }
  const std::vector<double> fracs = {1.0 / std::exp(1.0), 0.1, 0.001};
  svg::heatmap(ctx.outdir + "/beta_modulus.svg", mod, &mod, fracs,
               "|beta| with 1/e, 1/10, 1/1000 contours", 0, mod.maxCoeff());
  svg::heatmap(ctx.outdir + "/beta_asymmetry.svg", asym, nullptr, {},
               "|beta(q,q')| - |beta(q',q)|", asym.minCoeff(), asym.maxCoeff());
  svg::heatmap(ctx.outdir + "/beta_phase.svg", phase, &mod, fracs,
               "arg beta with modulus contours", -pi, pi);
  svg::heatmap(ctx.outdir + "/beta_phase_fit.svg", phase_model, &mod, fracs,
               "separable phase fit", -pi, pi);
  svg::cell_plot(ctx.outdir + "/c_abs.svg", c_abs.entries.topLeftCorner(m, m),
                 "|c| of the modulus decomposition");
  svg::cell_plot(ctx.outdir + "/c_fit.svg", c_fit.entries.topLeftCorner(m, m),
                 "|c| of the fitted-phase modes");
  svg::cell_plot(ctx.outdir + "/c_exact.svg",
                 c_exact.entries.topLeftCorner(m, m), "|c| exact");
}

}  // namespace su11
