#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "su11/common.hpp"

namespace su11 {

using nlohmann::json;

// 17 significant digits round-trip doubles exactly; "." decimal point
// regardless of locale
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Deterministic CSV: fixed column order, "\n" newlines, %.17g numbers.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : f_(path, std::ios::binary) {
    if (!f_) throw config_error("csv: cannot open " + path);
  }
  void header(const std::vector<std::string>& cols) {
    std::string line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) line += ",";
      line += cols[i];
    }
    f_ << line << "\n";
  }
  void row(const std::vector<double>& vals) {
    std::string line;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) line += ",";
      line += fmt_g17(vals[i]);
    }
    f_ << line << "\n";
  }
  ~CsvWriter() { f_.flush(); }

 private:
  std::ofstream f_;
};

inline json json_cplx(const cplx& c) { return json::array({c.real(), c.imag()}); }

inline json json_matrix(const MatrixXcd& M, int rows = -1, int cols = -1) {
  const int R = rows < 0 ? static_cast<int>(M.rows()) : std::min<int>(rows, M.rows());
  const int C = cols < 0 ? static_cast<int>(M.cols()) : std::min<int>(cols, M.cols());
  json out = json::array();
  for (int i = 0; i < R; ++i) {
    json row = json::array();
    for (int j = 0; j < C; ++j) row.push_back(json_cplx(M(i, j)));
    out.push_back(row);
  }
  return out;
}

inline json json_vector(const VectorXd& v, int count = -1) {
  const int n = count < 0 ? static_cast<int>(v.size()) : std::min<int>(count, v.size());
  json out = json::array();
  for (int i = 0; i < n; ++i) out.push_back(v(i));
  return out;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("json: cannot open " + path);
  f << j.dump(2) << "\n";
}

inline json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("json: cannot open " + path);
  json j;
  f >> j;
  return j;
}

// FNV-1a, for provenance tags in output files
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace su11
