// su11lab: config-driven simulator for multimode parametric down-conversion
// and two-pass nonlinear interferometers in the transverse-wave-vector
// domain. Subcommands run named pipelines and write deterministic CSV/JSON
// plus SVG plots into the output directory.

#include <clocale>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "su11/pipelines.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  int workers = -1;
  long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "run configuration file")->required();
  cmd->add_option("--out", args.out, "output directory (overrides [run] out)");
  cmd->add_option("--workers", args.workers, "worker thread cap");
  cmd->add_option("--seed", args.seed,
                  "reserved for compatibility; runs are deterministic");
}

su11::RunConfig load(const CommonArgs& args) {
  su11::RunConfig cfg = su11::load_config(args.config);
  if (!args.out.empty()) cfg.out = args.out;
  if (args.workers >= 0) cfg.workers = args.workers;
  if (args.seed >= 0) cfg.seed = args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");  // "." decimal point in all outputs
  CLI::App app{"multimode two-pass nonlinear interferometer laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* calibrate = app.add_subcommand("calibrate", "fit the gain constant A");
  auto* single = app.add_subcommand("single-crystal",
                                    "modes and eigenvalues of one pass");
  auto* interf = app.add_subcommand("interferometer",
                                    "visibility, fringes and overlap matrices");
  auto* sweep = app.add_subcommand("sweep-deltaz",
                                   "interferometer with a delta_z sweep");
  auto* squeezing = app.add_subcommand("squeezing",
                                       "three-way squeezing comparison");
  auto* asym = app.add_subcommand("asymmetry",
                                  "transfer-function asymmetry analysis");
  for (CLI::App* c : {calibrate, single, interf, sweep, squeezing, asym})
    add_common(c, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) su11::cmd_calibrate(load(args));
    else if (single->parsed()) su11::cmd_single_crystal(load(args));
    else if (interf->parsed()) su11::cmd_interferometer(load(args));
    else if (sweep->parsed()) su11::cmd_interferometer(load(args), true);
    else if (squeezing->parsed()) su11::cmd_squeezing(load(args));
    else if (asym->parsed()) su11::cmd_asymmetry(load(args));
  } catch (const su11::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const su11::fit_error& e) {
    std::fprintf(stderr, "fit error: %s\n", e.what());
    return 3;
  } catch (const su11::numeric_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
