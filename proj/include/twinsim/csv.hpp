#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

/// Small deterministic CSV helpers. All floating-point output goes through
/// g12() so repeated runs produce byte-identical files.
namespace twinsim::csv {

/// Fixed 12-significant-digit rendering used by every CSV the toolkit writes.
inline std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string i64(long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld", v);
  return buf;
}

inline std::string u64(unsigned long long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%llu", v);
  return buf;
}

inline bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

/// One (power, signal) observation of the pump-power calibration data.
struct PowerSample {
  double power = 0.0;
  double signal = 0.0;
};

struct PowerTable {
  std::vector<PowerSample> rows;
  bool ok = false;
  std::string error;
};

/// Reads a two-column CSV with header "P,S". Malformed rows are errors.
inline PowerTable read_power_signal_csv(const std::string& path) {
  PowerTable t;
  std::ifstream in(path);
  if (!in) {
    t.error = "cannot open " + path;
    return t;
  }
  std::string line;
  if (!std::getline(in, line)) {
    t.error = "empty file: " + path;
    return t;
  }
  auto strip = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  if (strip(line) != "P,S") {
    t.error = "expected header P,S in " + path;
    return t;
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      t.error = "malformed row at line " + std::to_string(lineno);
      return t;
    }
    try {
      std::size_t pa = 0, pb = 0;
      const double p = std::stod(strip(a), &pa);
      const double s = std::stod(strip(b), &pb);
      t.rows.push_back({p, s});
    } catch (...) {
      t.error = "non-numeric value at line " + std::to_string(lineno);
      return t;
    }
  }
  t.ok = true;
  return t;
}

}  // namespace twinsim::csv
