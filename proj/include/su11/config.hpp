#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "su11/calibration.hpp"
#include "su11/common.hpp"
#include "su11/dispersion.hpp"
#include "su11/io.hpp"
#include "su11/physics.hpp"

namespace su11 {

// Fully resolved run configuration. Physical quantities carry explicit
// unit suffixes in the file (um, mm, nm, m; mrad, rad) and are stored in
// SI here. Every command echoes the resolved values into manifest.json;
// identical manifests give bit-identical CSV/JSON outputs.
struct RunConfig {
  // physics
  std::string dispersion = "bbo";  // bbo | toy | custom
  Dispersion custom;               // used when dispersion = custom
  double sigma = 70e-6 / std::sqrt(2.0);
  double L1 = 3e-3;

  // lattice
  int n = 256;
  double theta_max = 0.060;

  // gain
  std::string fit_A = "";  // "calibrate" or a number as text
  double G1 = 1.0, G2 = 4.0;
  std::vector<double> gammas;  // calibration samples (internal units)

  // interferometer
  std::string delta_z_mode = "value";  // value | optimize | sweep
  double delta_z = 0;
  double dz_min = 0, dz_max = 1.2e-3;
  int dz_samples = 32;
  double dz_resolution = 0;  // 0 -> L1/1000
  std::string phi_mode = "fringes";
  std::vector<double> phi_list;

  // run
  std::string pipeline = "";
  std::string out = "out";
  int workers = 0;  // 0 -> hardware
  int modes = 10;
  int sum_modes = 0;  // 0 = untruncated reconstruction sums
  double rtol = 1e-9, atol = 1e-12;
  std::string integrator = "rk45";  // rk45 | lie-euler
  int lie_steps = 1024;
  long seed = 0;  // reserved; runs are deterministic

  Dispersion make_dispersion() const {
    if (dispersion == "bbo") return bbo_dispersion();
    if (dispersion == "toy") return toy_dispersion();
    if (dispersion == "custom") {
      custom.validate();
      return custom;
    }
    throw config_error("config: unknown dispersion preset '" + dispersion + "'");
  }

  json manifest(const std::string& command) const {
    json m;
    m["version"] = version;
    m["command"] = command;
    m["physics"]["dispersion"] = dispersion;
    if (dispersion == "custom") {
      m["physics"]["k_p"] = custom.k_p;
      m["physics"]["k_s"] = custom.k_s;
      m["physics"]["k_i"] = custom.k_i;
      m["physics"]["k_p_air"] = custom.k_p_air;
      m["physics"]["k_s_air"] = custom.k_s_air;
      m["physics"]["k_i_air"] = custom.k_i_air;
      m["physics"]["k_vac"] = custom.k_vac;
    }
    m["physics"]["sigma_m"] = sigma;
    m["physics"]["L1_m"] = L1;
    m["lattice"]["n"] = n;
    m["lattice"]["theta_max_rad"] = theta_max;
    m["gain"]["A"] = fit_A;
    m["gain"]["G1"] = G1;
    m["gain"]["G2"] = G2;
    m["gain"]["gammas"] = gammas;
    m["interferometer"]["delta_z_mode"] = delta_z_mode;
    m["interferometer"]["delta_z_m"] = delta_z;
    m["interferometer"]["dz_min_m"] = dz_min;
    m["interferometer"]["dz_max_m"] = dz_max;
    m["interferometer"]["dz_samples"] = dz_samples;
    m["interferometer"]["dz_resolution_m"] = dz_resolution;
    m["interferometer"]["phi_mode"] = phi_mode;
    m["interferometer"]["phi_rad"] = phi_list;
    m["run"]["modes"] = modes;
    m["run"]["sum_modes"] = sum_modes;
    m["run"]["rtol"] = rtol;
    m["run"]["atol"] = atol;
    m["run"]["integrator"] = integrator;
    m["run"]["lie_steps"] = lie_steps;
    m["run"]["workers"] = workers;
    m["run"]["seed"] = seed;
    return m;
  }

  std::string hash(const std::string& command) const {
    return fnv1a_hex(manifest(command).dump());
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw config_error("config: bad number for '" + key + "': " + v);
  }
  if (trim(v.substr(pos)) != "")
    throw config_error("config: unexpected trailing text for '" + key + "': " + v);
  return x;
}

// strict unit parsing: quantities must carry one of the accepted units
inline double parse_unit(const std::string& v, const std::string& key,
                         const std::map<std::string, double>& units) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw config_error("config: bad quantity for '" + key + "': " + v);
  }
  const std::string u = trim(v.substr(pos));
  auto it = units.find(u);
  if (it == units.end())
    throw config_error("config: '" + key + "' needs a unit from the accepted set (got '" +
                       u + "')");
  return x * it->second;
}

inline double parse_length(const std::string& v, const std::string& key) {
  static const std::map<std::string, double> units = {
      {"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
  return parse_unit(v, key, units);
}

inline double parse_angle(const std::string& v, const std::string& key) {
  static const std::map<std::string, double> units = {{"rad", 1.0},
                                                      {"mrad", 1e-3}};
  return parse_unit(v, key, units);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace detail

// Sectioned key = value file with '#' comments.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("config: bad section header at line " +
                           std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: expected key = value at line " +
                         std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const std::string skey = section + "." + key;

    using detail::parse_angle;
    using detail::parse_length;
    using detail::parse_number;

    if (skey == "physics.dispersion") cfg.dispersion = val;
    else if (skey == "physics.sigma") cfg.sigma = parse_length(val, skey);
    else if (skey == "physics.L1") cfg.L1 = parse_length(val, skey);
    else if (skey == "physics.k_p") cfg.custom.k_p = parse_number(val, skey);
    else if (skey == "physics.k_s") cfg.custom.k_s = parse_number(val, skey);
    else if (skey == "physics.k_i") cfg.custom.k_i = parse_number(val, skey);
    else if (skey == "physics.k_p_air") cfg.custom.k_p_air = parse_number(val, skey);
    else if (skey == "physics.k_s_air") cfg.custom.k_s_air = parse_number(val, skey);
    else if (skey == "physics.k_i_air") cfg.custom.k_i_air = parse_number(val, skey);
    else if (skey == "physics.k_vac") cfg.custom.k_vac = parse_number(val, skey);
    else if (skey == "lattice.n") cfg.n = static_cast<int>(parse_number(val, skey));
    else if (skey == "lattice.theta_max") cfg.theta_max = parse_angle(val, skey);
    else if (skey == "gain.A") cfg.fit_A = val;
    else if (skey == "gain.G1") cfg.G1 = parse_number(val, skey);
    else if (skey == "gain.G2") cfg.G2 = parse_number(val, skey);
    else if (skey == "gain.gammas") {
      for (const std::string& g : detail::split_list(val))
        cfg.gammas.push_back(parse_number(g, skey));
    } else if (skey == "interferometer.delta_z") {
      if (val == "optimize") cfg.delta_z_mode = "optimize";
      else if (val == "sweep") cfg.delta_z_mode = "sweep";
      else {
        cfg.delta_z_mode = "value";
        cfg.delta_z = parse_length(val, skey);
      }
    } else if (skey == "interferometer.dz_min") cfg.dz_min = parse_length(val, skey);
    else if (skey == "interferometer.dz_max") cfg.dz_max = parse_length(val, skey);
    else if (skey == "interferometer.dz_samples")
      cfg.dz_samples = static_cast<int>(parse_number(val, skey));
    else if (skey == "interferometer.dz_resolution")
      cfg.dz_resolution = parse_length(val, skey);
    else if (skey == "interferometer.phi") {
      if (val == "fringes") cfg.phi_mode = "fringes";
      else {
        cfg.phi_mode = "list";
        for (const std::string& p : detail::split_list(val))
          cfg.phi_list.push_back(parse_angle(p, skey));
      }
    } else if (skey == "run.pipeline") cfg.pipeline = val;
    else if (skey == "run.out") cfg.out = val;
    else if (skey == "run.workers")
      cfg.workers = static_cast<int>(parse_number(val, skey));
    else if (skey == "run.modes") cfg.modes = static_cast<int>(parse_number(val, skey));
    else if (skey == "run.sum_modes")
      cfg.sum_modes = static_cast<int>(parse_number(val, skey));
    else if (skey == "run.rtol") cfg.rtol = parse_number(val, skey);
    else if (skey == "run.atol") cfg.atol = parse_number(val, skey);
    else if (skey == "run.integrator") cfg.integrator = val;
    else if (skey == "run.lie_steps")
      cfg.lie_steps = static_cast<int>(parse_number(val, skey));
    else if (skey == "run.seed") cfg.seed = static_cast<long>(parse_number(val, skey));
    else
      throw config_error("config: unknown key '" + skey + "' at line " +
                         std::to_string(lineno));
  }

  if (cfg.sigma <= 0) throw config_error("config: sigma must be positive");
  if (cfg.L1 <= 0) throw config_error("config: L1 must be positive");
  if (cfg.n < 2) throw config_error("config: lattice n must be at least 2");
  if (cfg.theta_max <= 0) throw config_error("config: theta_max must be positive");
  if (cfg.integrator != "rk45" && cfg.integrator != "lie-euler")
    throw config_error("config: integrator must be rk45 or lie-euler");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("config: cannot open " + path);
  return parse_config(f);
}

}  // namespace su11
