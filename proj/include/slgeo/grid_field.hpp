#ifndef SLGEO_GRID_FIELD_HPP
#define SLGEO_GRID_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "slgeo/errors.hpp"

namespace slgeo {

/// Scalar field on a 2D rectangular grid, stored row-major (x fastest).
/// NaN marks nodes outside the domain when the field is masked.
struct GridField {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double hx = 1.0;
  double hy = 1.0;
  bool masked = false;
  std::vector<double> values;

  GridField() = default;
  GridField(int nx_, int ny_, double x0_, double y0_, double hx_, double hy_, bool masked_ = false,
            double fill = 0.0)
      : nx(nx_), ny(ny_), x0(x0_), y0(y0_), hx(hx_), hy(hy_), masked(masked_),
        values(static_cast<std::size_t>(nx_) * ny_, fill) {}

  [[nodiscard]] std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx + i;
  }
  double& operator()(int i, int j) { return values[index(i, j)]; }
  [[nodiscard]] double operator()(int i, int j) const { return values[index(i, j)]; }
  [[nodiscard]] double x(int i) const { return x0 + hx * i; }
  [[nodiscard]] double y(int j) const { return y0 + hy * j; }
  [[nodiscard]] bool inside(int i, int j) const {
    return i >= 0 && j >= 0 && i < nx && j < ny && !std::isnan((*this)(i, j));
  }

  [[nodiscard]] std::size_t interior_count() const {
    std::size_t c = 0;
    for (double v : values) c += std::isnan(v) ? 0 : 1;
    return c;
  }

  /// Max |value| over non-NaN nodes.
  [[nodiscard]] double sup_norm() const {
    double s = 0.0;
    for (double v : values)
      if (!std::isnan(v)) s = std::max(s, std::abs(v));
    return s;
  }
};

inline double sup_distance(const GridField& a, const GridField& b) {
  SLGEO_THROW_IF(a.values.size() != b.values.size(), ErrorKind::InvalidArgument,
                 "fields live on different grids");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    if (!std::isnan(a.values[k]) && !std::isnan(b.values[k]))
      s = std::max(s, std::abs(a.values[k] - b.values[k]));
  return s;
}

namespace detail {
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& tok) {
  std::size_t a = tok.find_first_not_of(" \t\r");
  std::size_t b = tok.find_last_not_of(" \t\r");
  SLGEO_THROW_IF(a == std::string::npos, ErrorKind::FormatError, "empty value");
  const std::string t = tok.substr(a, b - a + 1);
  if (t == "nan" || t == "NaN") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  SLGEO_THROW_IF(end != t.c_str() + t.size(), ErrorKind::FormatError, "bad number '" + t + "'");
  return v;
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}
}  // namespace detail

inline constexpr const char* kGridMagic = "# slgeo-grid v1";

inline void write_grid(std::ostream& os, const GridField& f) {
  os << kGridMagic << ", " << f.nx << ", " << f.ny << ", " << detail::fmt17(f.x0) << ", "
     << detail::fmt17(f.y0) << ", " << detail::fmt17(f.hx) << ", " << detail::fmt17(f.hy) << ", "
     << (f.masked ? 1 : 0) << "\n";
  for (int j = 0; j < f.ny; ++j) {
    for (int i = 0; i < f.nx; ++i) {
      if (i) os << ',';
      os << detail::fmt17(f(i, j));
    }
    os << '\n';
  }
}

inline void write_grid(const std::string& path, const GridField& f) {
  std::ofstream os(path);
  SLGEO_THROW_IF(!os, ErrorKind::FormatError, "cannot open " + path + " for writing");
  write_grid(os, f);
}

inline GridField read_grid(std::istream& is) {
  std::string header;
  SLGEO_THROW_IF(!std::getline(is, header), ErrorKind::FormatError, "missing grid header");
  const auto parts = detail::split_commas(header);
  SLGEO_THROW_IF(parts.size() != 8 || parts[0] != kGridMagic, ErrorKind::FormatError,
                 "header must read '# slgeo-grid v1, nx, ny, x0, y0, hx, hy, mask'");
  GridField f;
  const double nx = detail::parse_double(parts[1]);
  const double ny = detail::parse_double(parts[2]);
  SLGEO_THROW_IF(!(nx >= 1 && ny >= 1) || nx != std::floor(nx) || ny != std::floor(ny),
                 ErrorKind::FormatError, "grid sizes must be positive integers");
  f.nx = static_cast<int>(nx);
  f.ny = static_cast<int>(ny);
  f.x0 = detail::parse_double(parts[3]);
  f.y0 = detail::parse_double(parts[4]);
  f.hx = detail::parse_double(parts[5]);
  f.hy = detail::parse_double(parts[6]);
  const double mask = detail::parse_double(parts[7]);
  SLGEO_THROW_IF(mask != 0.0 && mask != 1.0, ErrorKind::FormatError, "mask flag must be 0 or 1");
  SLGEO_THROW_IF(!(f.hx > 0) || !(f.hy > 0), ErrorKind::FormatError, "spacing must be positive");
  f.masked = mask == 1.0;
  f.values.reserve(static_cast<std::size_t>(f.nx) * f.ny);
  std::string line;
  for (int j = 0; j < f.ny; ++j) {
    SLGEO_THROW_IF(!std::getline(is, line), ErrorKind::FormatError, "grid has too few rows");
    const auto toks = detail::split_commas(line);
    SLGEO_THROW_IF(static_cast<int>(toks.size()) != f.nx, ErrorKind::FormatError,
                   "row " + std::to_string(j) + " has wrong length");
    for (const auto& t : toks) f.values.push_back(detail::parse_double(t));
  }
  return f;
}

inline GridField read_grid(const std::string& path) {
  std::ifstream is(path);
  SLGEO_THROW_IF(!is, ErrorKind::FormatError, "cannot open " + path);
  return read_grid(is);
}

}  // namespace slgeo

#endif  // SLGEO_GRID_FIELD_HPP
