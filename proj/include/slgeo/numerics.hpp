#ifndef SLGEO_NUMERICS_HPP
#define SLGEO_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "slgeo/errors.hpp"

namespace slgeo {

inline constexpr double kPi = std::numbers::pi;

/// Least-squares slope and intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool degenerate = false;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  SLGEO_THROW_IF(x.size() != y.size() || x.size() < 2, ErrorKind::InvalidArgument,
                 "fit_line needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  if (sxx <= 0.0) {
    fit.degenerate = true;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// Slope of log(y) against log(x). Flags the fit as degenerate when any
/// sample is non-positive (nothing to take a logarithm of).
inline LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  LineFit bad;
  bad.degenerate = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return bad;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

/// Worker cap taken from SLGEO_THREADS (defaults to hardware concurrency).
inline unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SLGEO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return std::min<unsigned>(static_cast<unsigned>(v), hw);
  }
  return hw;
}

/// Static block partition of [0, n) across at most thread_cap() workers.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(thread_cap(), std::max<std::size_t>(1, n / 4096)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace slgeo

#endif  // SLGEO_NUMERICS_HPP
