#pragma once

// CSV reading and writing for pools, replica estimates and characteristic
// function grids. Numbers are written with round-trip precision.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mstlimits/error.hpp"
#include "mstlimits/fixpoint.hpp"
#include "mstlimits/treesim.hpp"

namespace mst::io {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  require(f.good(), ErrorCode::io_error, "cannot open " + path + " for writing");
  return f;
}

/// index,re,im
inline void write_pool(std::ostream& os, std::span<const cplx> pts) {
  os << "index,re,im\n";
  for (std::size_t i = 0; i < pts.size(); ++i) os << i << ',' << fmt(pts[i].real()) << ',' << fmt(pts[i].imag()) << '\n';
}

inline void write_pool(const std::string& path, std::span<const cplx> pts) {
  auto f = open_out(path);
  write_pool(f, pts);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

/// Reads a CSV with a header containing columns named re and im.
inline std::vector<cplx> read_pool(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorCode::io_error, "empty CSV");
  const auto header = split_csv(line);
  int ire = -1, iim = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "re") ire = static_cast<int>(i);
    if (header[i] == "im") iim = static_cast<int>(i);
  }
  require(ire >= 0 && iim >= 0, ErrorCode::io_error, "CSV header lacks re,im columns");
  std::vector<cplx> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    require(c.size() > static_cast<std::size_t>(std::max(ire, iim)), ErrorCode::io_error,
            "short CSV row " + std::to_string(row));
    try {
      out.emplace_back(std::stod(c[ire]), std::stod(c[iim]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::io_error, "unparsable number on CSV row " + std::to_string(row));
    }
  }
  return out;
}

inline std::vector<cplx> read_pool(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::io_error, "cannot open " + path);
  return read_pool(f);
}

/// rep,xi_hat,w_re,w_im,wdt_re,wdt_im
inline void write_replicas(std::ostream& os, std::span<const LimitEstimates> reps) {
  os << "rep,xi_hat,w_re,w_im,wdt_re,wdt_im\n";
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& e = reps[i];
    os << i << ',' << fmt(e.xi_hat) << ',' << fmt(e.w_hat.real()) << ',' << fmt(e.w_hat.imag()) << ','
       << fmt(e.wdt_hat.real()) << ',' << fmt(e.wdt_hat.imag()) << '\n';
  }
}

/// ir,itheta,r,theta,re,im
inline void write_grid(std::ostream& os, const CharGrid& g) {
  os << "ir,itheta,r,theta,re,im\n";
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.ntheta(); ++j) {
      const cplx v = g.at(i, j);
      os << i << ',' << j << ',' << fmt(g.radii[i]) << ',' << fmt(g.angles[j]) << ',' << fmt(v.real()) << ','
         << fmt(v.imag()) << '\n';
    }
}

}  // namespace mst::io
