#ifndef SLGEO_CALABI_SOLVER_HPP
#define SLGEO_CALABI_SOLVER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <fftw3.h>
#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <boost/numeric/odeint.hpp>

#include "slgeo/errors.hpp"
#include "slgeo/exterior.hpp"
#include "slgeo/grid_field.hpp"
#include "slgeo/numerics.hpp"

namespace slgeo {

/// Real function on the flat torus R^{2m} / 2 pi Z^{2m}, n samples per axis.
/// Axes are ordered x1, y1 (, x2, y2) with x1 varying fastest.
struct TorusField {
  int m = 1;
  int n = 0;
  std::vector<double> values;

  [[nodiscard]] int dims() const { return 2 * m; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double h() const { return 2 * kPi / n; }
  [[nodiscard]] double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  [[nodiscard]] double sup_norm() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }
};

inline std::size_t torus_size(int m, int n) {
  std::size_t s = 1;
  for (int a = 0; a < 2 * m; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

inline TorusField zero_torus(int m, int n) {
  SLGEO_THROW_IF(m != 1 && m != 2, ErrorKind::InvalidDimension, "torus fields support m = 1 or 2");
  SLGEO_THROW_IF(n < 3, ErrorKind::InvalidArgument, "need at least 3 samples per axis");
  return TorusField{m, n, std::vector<double>(torus_size(m, n), 0.0)};
}

/// Samples fn(coords) at the grid nodes; coords has 2m entries.
inline TorusField sample_torus(int m, int n, const std::function<double(std::span<const double>)>& fn) {
  TorusField f = zero_torus(m, n);
  const double h = f.h();
  std::array<double, 4> x{};
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    std::size_t rem = idx;
    for (int a = 0; a < f.dims(); ++a) {
      x[a] = static_cast<double>(rem % n) * h;
      rem /= n;
    }
    f.values[idx] = fn(std::span<const double>(x.data(), f.dims()));
  }
  return f;
}

inline void write_torus(std::ostream& os, const TorusField& f) {
  os << "# slgeo-torus v1, " << f.m << ", " << f.n << "\n";
  char buf[40];
  for (double v : f.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

inline TorusField read_torus(std::istream& is) {
  std::string line;
  SLGEO_THROW_IF(!std::getline(is, line), ErrorKind::FormatError, "empty torus file");
  int m = 0, n = 0;
  SLGEO_THROW_IF(std::sscanf(line.c_str(), "# slgeo-torus v1, %d, %d", &m, &n) != 2 || (m != 1 && m != 2) || n < 3,
                 ErrorKind::FormatError, "bad torus header: " + line);
  TorusField f = zero_torus(m, n);
  for (auto& v : f.values) {
    SLGEO_THROW_IF(!std::getline(is, line), ErrorKind::FormatError, "torus file truncated");
    char* end = nullptr;
    v = std::strtod(line.c_str(), &end);
    SLGEO_THROW_IF(end == line.c_str(), ErrorKind::FormatError, "bad torus value: " + line);
  }
  return f;
}

inline void write_torus(const std::string& path, const TorusField& f) {
  std::ofstream os(path);
  SLGEO_THROW_IF(!os, ErrorKind::FormatError, "cannot open " + path);
  write_torus(os, f);
}

inline TorusField read_torus(const std::string& path) {
  std::ifstream is(path);
  SLGEO_THROW_IF(!is, ErrorKind::FormatError, "cannot open " + path);
  return read_torus(is);
}

namespace detail {

/// Periodic grid walker handing out signed neighbour offsets per axis.
struct TorusGrid {
  int m = 1, n = 0, dims = 2;
  std::size_t size = 0;
  std::array<std::ptrdiff_t, 4> stride{};

  TorusGrid(int m_, int n_) : m(m_), n(n_), dims(2 * m_), size(torus_size(m_, n_)) {
    std::ptrdiff_t s = 1;
    for (int a = 0; a < 4; ++a, s *= n) stride[a] = s;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const std::size_t rows = size / static_cast<std::size_t>(n);
    parallel_for(rows, [&](std::size_t r) {
      std::array<std::ptrdiff_t, 4> up{}, dn{};
      std::size_t rem = r;
      for (int a = 1; a < dims; ++a) {
        const auto ia = static_cast<int>(rem % n);
        rem /= n;
        up[a] = ia == n - 1 ? -(n - 1) * stride[a] : stride[a];
        dn[a] = ia == 0 ? (n - 1) * stride[a] : -stride[a];
      }
      const std::size_t base = r * static_cast<std::size_t>(n);
      for (int i = 0; i < n; ++i) {
        up[0] = i == n - 1 ? -(n - 1) : 1;
        dn[0] = i == 0 ? n - 1 : -1;
        fn(base + i, up, dn);
      }
    });
  }
};

/// H = 2 (phi_{z_j zbar_k}) by central differences: h11, h22 real, h12 = br + i bi.
struct NodeHessian {
  double h11 = 0.0, h22 = 0.0, br = 0.0, bi = 0.0;
};

inline NodeHessian node_hessian(const double* p, const std::array<std::ptrdiff_t, 4>& up,
                                const std::array<std::ptrdiff_t, 4>& dn, int m, double inv_h2) {
  auto d2 = [&](int a) { return (p[up[a]] - 2 * p[0] + p[dn[a]]) * inv_h2; };
  auto mixed = [&](int a, int b) {
    return (p[up[a] + up[b]] - p[up[a] + dn[b]] - p[dn[a] + up[b]] + p[dn[a] + dn[b]]) * (0.25 * inv_h2);
  };
  NodeHessian h;
  h.h11 = 0.5 * (d2(0) + d2(1));
  if (m == 2) {
    h.h22 = 0.5 * (d2(2) + d2(3));
    h.br = 0.5 * (mixed(0, 2) + mixed(1, 3));
    h.bi = 0.5 * (mixed(0, 3) - mixed(1, 2));
  }
  return h;
}

/// det(I + H) and the smallest eigenvalue of I + H.
inline std::pair<double, double> ratio_and_min_eig(const NodeHessian& h, int m) {
  if (m == 1) return {1.0 + h.h11, 1.0 + h.h11};
  const double a = 1.0 + h.h11, d = 1.0 + h.h22, b2 = h.br * h.br + h.bi * h.bi;
  const double half = 0.5 * (a - d);
  return {a * d - b2, 0.5 * (a + d) - std::sqrt(half * half + b2)};
}

inline std::mutex& fftw_plan_mutex() {
  static std::mutex mu;
  return mu;
}

/// Inverse of the flat operator (1/2) Delta_h on mean-zero periodic fields.
class PeriodicPoisson {
public:
  PeriodicPoisson(int m, int n) : grid_(m, n) {
    std::array<int, 4> dims{};
    for (int a = 0; a < grid_.dims; ++a) dims[a] = n;
    const std::size_t half = static_cast<std::size_t>(n / 2 + 1);
    spec_size_ = grid_.size / static_cast<std::size_t>(n) * half;
    real_ = fftw_alloc_real(grid_.size);
    spec_ = fftw_alloc_complex(spec_size_);
    {
      std::lock_guard lock(fftw_plan_mutex());
      fwd_ = fftw_plan_dft_r2c(grid_.dims, dims.data(), real_, spec_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r(grid_.dims, dims.data(), spec_, real_, FFTW_ESTIMATE);
    }
    // FFTW's last (fastest) dimension is our axis 0; all axes have length n.
    const double h = 2 * kPi / n, scale = 1.0 / static_cast<double>(grid_.size);
    std::vector<double> s1(n);
    for (int k = 0; k < n; ++k) {
      const double s = std::sin(kPi * k / n);
      s1[k] = -0.5 * 4.0 * s * s / (h * h);
    }
    inv_symbol_.resize(spec_size_);
    for (std::size_t c = 0; c < spec_size_; ++c) {
      std::size_t rem = c;
      double sym = s1[rem % half];
      rem /= half;
      for (int a = 1; a < grid_.dims; ++a) {
        sym += s1[rem % n];
        rem /= n;
      }
      inv_symbol_[c] = c == 0 ? 0.0 : scale / sym;
    }
  }
  PeriodicPoisson(const PeriodicPoisson&) = delete;
  PeriodicPoisson& operator=(const PeriodicPoisson&) = delete;
  ~PeriodicPoisson() {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  /// out with (1/2) Delta_h out = rhs - mean(rhs) and mean(out) = 0.
  void solve(const double* rhs, double* out) const {
    std::copy(rhs, rhs + grid_.size, real_);
    fftw_execute(fwd_);
    for (std::size_t c = 0; c < spec_size_; ++c) {
      spec_[c][0] *= inv_symbol_[c];
      spec_[c][1] *= inv_symbol_[c];
    }
    fftw_execute(bwd_);
    std::copy(real_, real_ + grid_.size, out);
  }

  [[nodiscard]] const TorusGrid& grid() const { return grid_; }

private:
  TorusGrid grid_;
  std::size_t spec_size_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_{}, bwd_{};
  std::vector<double> inv_symbol_;
};

/// Linearization psi -> d det(I + H)[psi] = tr(adj(I + H) H[psi]) at the
/// stored coefficients, as a matrix-free operator for Eigen's solvers.
class CalabiJacobian;

}  // namespace detail
}  // namespace slgeo

namespace Eigen::internal {
template <>
struct traits<slgeo::detail::CalabiJacobian> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace slgeo::detail {

class CalabiJacobian : public Eigen::EigenBase<CalabiJacobian> {
public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  CalabiJacobian(const TorusGrid& grid, const PeriodicPoisson& poisson) : grid_(&grid), poisson_(&poisson) {
    if (grid.m == 2)
      for (auto* v : {&a_, &d_, &br_, &bi_}) v->resize(grid.size);
  }

  [[nodiscard]] Eigen::Index rows() const { return static_cast<Eigen::Index>(grid_->size); }
  [[nodiscard]] Eigen::Index cols() const { return rows(); }

  template <typename Rhs>
  Eigen::Product<CalabiJacobian, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<CalabiJacobian, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  /// Stores I + H(phi) for the m = 2 linearization and the weight w = g / mean(g)
  /// of the fitted constant, so that psi -> J psi - w mean(J psi) is the exact
  /// derivative of the shifted residual and maps mean-zero fields to themselves.
  void set_point(const double* phi, const std::vector<double>& g) {
    double sg = 0.0;
    for (double v : g) sg += v;
    const double inv_mean = static_cast<double>(g.size()) / sg;
    w_.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) w_[i] = g[i] * inv_mean;
    if (grid_->m != 2) return;
    const double inv_h2 = 1.0 / std::pow(2 * kPi / grid_->n, 2);
    grid_->for_each([&](std::size_t i, const auto& up, const auto& dn) {
      const NodeHessian h = node_hessian(phi + i, up, dn, 2, inv_h2);
      a_[i] = 1.0 + h.h11;
      d_[i] = 1.0 + h.h22;
      br_[i] = h.br;
      bi_[i] = h.bi;
    });
  }

  void apply(const double* x, double* y) const {
    const int m = grid_->m;
    const double inv_h2 = 1.0 / std::pow(2 * kPi / grid_->n, 2);
    grid_->for_each([&](std::size_t i, const auto& up, const auto& dn) {
      const NodeHessian k = node_hessian(x + i, up, dn, m, inv_h2);
      y[i] = m == 1 ? k.h11 : d_[i] * k.h11 + a_[i] * k.h22 - 2.0 * (br_[i] * k.br + bi_[i] * k.bi);
    });
    if (w_.empty()) return;
    double mean = 0.0;
    for (std::size_t i = 0; i < grid_->size; ++i) mean += y[i];
    mean /= static_cast<double>(grid_->size);
    for (std::size_t i = 0; i < grid_->size; ++i) y[i] -= w_[i] * mean;
  }

  [[nodiscard]] const PeriodicPoisson& poisson() const { return *poisson_; }

private:
  const TorusGrid* grid_;
  const PeriodicPoisson* poisson_;
  std::vector<double> a_, d_, br_, bi_, w_;
};

/// Preconditioner: the inverse flat operator, by FFT.
class FlatPreconditioner {
public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  FlatPreconditioner() = default;
  template <typename M>
  FlatPreconditioner& analyzePattern(const M&) { return *this; }
  template <typename M>
  FlatPreconditioner& factorize(const M&) { return *this; }
  FlatPreconditioner& compute(const CalabiJacobian& j) {
    poisson_ = &j.poisson();
    return *this;
  }
  template <typename Rhs>
  Eigen::VectorXd solve(const Rhs& b) const {
    Eigen::VectorXd out(b.size());
    if constexpr (std::is_same_v<std::decay_t<Rhs>, Eigen::VectorXd>) {
      poisson_->solve(b.data(), out.data());
    } else {
      out = b;
      poisson_->solve(out.data(), out.data());
    }
    return out;
  }
  [[nodiscard]] Eigen::ComputationInfo info() const { return Eigen::Success; }

private:
  const PeriodicPoisson* poisson_ = nullptr;
};

}  // namespace slgeo::detail

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<slgeo::detail::CalabiJacobian, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<slgeo::detail::CalabiJacobian, Rhs,
                                generic_product_impl<slgeo::detail::CalabiJacobian, Rhs>> {
  using Scalar = typename Product<slgeo::detail::CalabiJacobian, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const slgeo::detail::CalabiJacobian& lhs, const Rhs& rhs,
                            const Scalar& alpha) {
    thread_local Eigen::VectorXd x, y;
    y.resize(rhs.size());
    if constexpr (std::is_same_v<std::decay_t<Rhs>, Eigen::VectorXd>) {
      lhs.apply(rhs.data(), y.data());
    } else {
      x = rhs;
      lhs.apply(x.data(), y.data());
    }
    dst.noalias() += alpha * y;
  }
};
}  // namespace Eigen::internal

namespace slgeo {

// ---------------------------------------------------------------------------
// The complex Monge-Ampere operator.

/// Nodewise (omega + i ddbar phi)^m / omega^m = det(I + H); throws when
/// I + H fails to be positive definite somewhere.
inline TorusField ma_operator(const TorusField& phi) {
  const detail::TorusGrid grid(phi.m, phi.n);
  TorusField out{phi.m, phi.n, std::vector<double>(phi.size())};
  const double inv_h2 = 1.0 / (phi.h() * phi.h());
  std::vector<double> min_eig(phi.size());
  grid.for_each([&](std::size_t i, const auto& up, const auto& dn) {
    const auto [r, e] = detail::ratio_and_min_eig(detail::node_hessian(phi.values.data() + i, up, dn, phi.m, inv_h2), phi.m);
    out.values[i] = r;
    min_eig[i] = e;
  });
  const auto it = std::min_element(min_eig.begin(), min_eig.end());
  SLGEO_THROW_IF(*it <= 0.0, ErrorKind::NonKahlerIterate,
                 "omega + i ddbar phi is not positive at node " + std::to_string(it - min_eig.begin()));
  return out;
}

/// f + c with mean(e^{f+c}) = 1, the discrete form of int e^f omega^m = int omega^m.
inline TorusField normalize_source(const TorusField& f) {
  auto mean_exp = [&](double c) {
    double s = 0.0;
    for (double v : f.values) s += std::exp(v + c);
    return s / static_cast<double>(f.size());
  };
  double c = -std::log(mean_exp(0.0));
  for (int it = 0; it < 3; ++it) {
    const double g = mean_exp(c);
    if (g == 1.0) break;
    c -= (g - 1.0) / g;
  }
  TorusField out = f;
  if (c != 0.0)
    for (double& v : out.values) v += c;
  return out;
}

struct ContinuityStep {
  double t = 0.0;
  double c_t = 0.0;
  int newton_iterations = 0;
  int krylov_iterations = 0;
  double residual = 0.0;
  double shift = 0.0;
  double min_eigenvalue = 1.0;
  double min_damping = 1.0;
};

struct ContinuityPath {
  int m = 1;
  int n = 0;
  std::vector<ContinuityStep> steps;
  std::vector<TorusField> phi_steps;  // kept for small grids only
  TorusField phi;
  /// max |det(I + H(phi)) - e^f| at the end.
  double residual = 0.0;
  /// Constant s with det(I + H(phi)) = e^{f + s}: the discrete equation is
  /// solvable only up to a constant of the size of the truncation error.
  double shift = 0.0;
  double phi_mean = 0.0;
  double volume_identity = 0.0;  // |mean(e^f) - 1|
  double min_eigenvalue = 1.0;   // over all accepted iterates
  bool positivity_held = true;
  int halvings = 0;
};

struct CalabiOptions {
  int t_steps = 10;
  double tol = 1e-10;
  int max_newton = 30;
  double min_damping = 1.0 / 64;
  int max_halvings = 8;
  double max_forcing = 1e-2;
  std::optional<TorusField> initial_guess;
  /// Keep each phi_t when the grid has at most this many nodes.
  std::size_t keep_steps_below = std::size_t{1} << 16;
};

namespace detail {

struct NewtonResult {
  bool ok = false;
  int iterations = 0;
  int krylov = 0;
  double residual = 0.0;
  double shift = 0.0;
  double min_eig = 1.0;
  double min_damping = 1.0;
};

class CalabiNewton {
public:
  CalabiNewton(int m, int n)
      : grid_(m, n), poisson_(m, n), jac_(grid_, poisson_), ratio_(grid_.size), resid_(grid_.size),
        trial_(grid_.size) {}

  /// max |F|, F = det(I + H(phi)) - g e^s, s fitted so that F has mean zero.
  /// Returns false when phi is not admissible.
  bool evaluate(const double* phi, const std::vector<double>& g, double& res, double& shift, double& min_eig) {
    const double inv_h2 = 1.0 / std::pow(2 * kPi / grid_.n, 2);
    std::vector<double>& eig = resid_;  // reused as scratch
    grid_.for_each([&](std::size_t i, const auto& up, const auto& dn) {
      const auto [r, e] = ratio_and_min_eig(node_hessian(phi + i, up, dn, grid_.m, inv_h2), grid_.m);
      ratio_[i] = r;
      eig[i] = e;
    });
    min_eig = *std::min_element(eig.begin(), eig.end());
    if (!(min_eig > 0.0)) return false;
    double sr = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < grid_.size; ++i) {
      sr += ratio_[i];
      sg += g[i];
    }
    shift = std::log(sr / sg);
    const double es = sr / sg;
    res = 0.0;
    for (std::size_t i = 0; i < grid_.size; ++i) {
      resid_[i] = ratio_[i] - g[i] * es;
      res = std::max(res, std::abs(resid_[i]));
    }
    return true;
  }

  NewtonResult solve(std::vector<double>& phi, const std::vector<double>& g, const CalabiOptions& opt) {
    NewtonResult out;
    double res = 0.0, shift = 0.0, min_eig = 0.0;
    if (!evaluate(phi.data(), g, res, shift, min_eig)) return out;
    out.min_eig = min_eig;
    Eigen::BiCGSTAB<CalabiJacobian, FlatPreconditioner> krylov;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(grid_.size));
    for (out.iterations = 0; res > opt.tol; ++out.iterations) {
      if (out.iterations >= opt.max_newton) {
        out.residual = res;
        return out;
      }
      jac_.set_point(phi.data(), g);
      krylov.compute(jac_);
      // Solve no more accurately than the next step needs.
      krylov.setTolerance(std::min(opt.max_forcing, std::max(res, 0.1 * opt.tol / res)));
      krylov.setMaxIterations(60);
      for (std::size_t i = 0; i < grid_.size; ++i) rhs[i] = -resid_[i];
      rhs.array() -= rhs.mean();  // the residual has mean zero up to rounding
      const Eigen::VectorXd delta = krylov.solve(rhs);
      out.krylov += static_cast<int>(krylov.iterations());
      if (!delta.allFinite()) {
        out.residual = res;
        return out;
      }
      double lambda = 1.0;
      for (;;) {
        for (std::size_t i = 0; i < grid_.size; ++i) trial_[i] = phi[i] + lambda * delta[i];
        double r2 = 0.0, s2 = 0.0, e2 = 0.0;
        if (evaluate(trial_.data(), g, r2, s2, e2) && (r2 < (1.0 - 1e-4 * lambda) * res || r2 <= opt.tol)) {
          phi.swap(trial_);
          res = r2;
          shift = s2;
          out.min_eig = std::min(out.min_eig, e2);
          break;
        }
        lambda *= 0.5;
        if (lambda < opt.min_damping) {
          // Restore the residual of the last accepted iterate.
          evaluate(phi.data(), g, res, shift, min_eig);
          out.residual = res;
          return out;
        }
      }
      out.min_damping = std::min(out.min_damping, lambda);
    }
    out.ok = true;
    out.residual = res;
    out.shift = shift;
    return out;
  }

  [[nodiscard]] const TorusGrid& grid() const { return grid_; }

private:
  TorusGrid grid_;
  PeriodicPoisson poisson_;
  CalabiJacobian jac_;
  std::vector<double> ratio_, resid_, trial_;
};

}  // namespace detail

/// Continuity method along f_t = t f + c_t, e^{c_t} mean(e^{t f}) = 1, with
/// damped Newton at each t warm-started by linear extrapolation. A failed
/// step is retried at half the step length.
inline ContinuityPath solve_calabi(const TorusField& f, const CalabiOptions& opt = {}) {
  SLGEO_THROW_IF(f.m != 1 && f.m != 2, ErrorKind::InvalidDimension, "m must be 1 or 2");
  SLGEO_THROW_IF(f.n < 16, ErrorKind::InvalidArgument, "grid must have at least 16 samples per axis");
  SLGEO_THROW_IF(opt.t_steps < 1 || !(opt.tol > 0.0), ErrorKind::InvalidArgument, "need t_steps >= 1 and tol > 0");
  double mean_ef = 0.0;
  for (double v : f.values) mean_ef += std::exp(v);
  mean_ef /= static_cast<double>(f.size());
  SLGEO_THROW_IF(std::abs(mean_ef - 1.0) > 1e-12, ErrorKind::InvalidArgument,
                 "source is not normalized: mean(e^f) = " + std::to_string(mean_ef));

  ContinuityPath path;
  path.m = f.m;
  path.n = f.n;
  path.volume_identity = std::abs(mean_ef - 1.0);
  const std::size_t size = f.size();
  detail::CalabiNewton newton(f.m, f.n);

  std::vector<double> phi(size, 0.0), prev, prev2, target(size);
  if (opt.initial_guess) {
    SLGEO_THROW_IF(opt.initial_guess->m != f.m || opt.initial_guess->n != f.n, ErrorKind::InvalidArgument,
                   "initial guess lives on a different grid");
    phi = opt.initial_guess->values;
  }
  prev = phi;
  const bool keep = size <= opt.keep_steps_below;
  double t_prev = 0.0, t_prev2 = 0.0, dt = 1.0 / opt.t_steps;
  bool have_two = false;
  int halvings = 0;
  while (t_prev < 1.0) {
    double t = t_prev + dt;
    if (t > 1.0 - 1e-12) t = 1.0;
    double mean_etf = 0.0;
    for (std::size_t i = 0; i < size; ++i) mean_etf += std::exp(t * f.values[i]);
    const double c_t = -std::log(mean_etf / static_cast<double>(size));
    for (std::size_t i = 0; i < size; ++i) target[i] = std::exp(t * f.values[i] + c_t);

    phi = prev;
    if (have_two) {
      const double w = (t - t_prev) / (t_prev - t_prev2);
      for (std::size_t i = 0; i < size; ++i) phi[i] += w * (prev[i] - prev2[i]);
    }
    detail::NewtonResult r = newton.solve(phi, target, opt);
    if (!r.ok && have_two) {  // the extrapolated start may be the problem
      phi = prev;
      r = newton.solve(phi, target, opt);
    }
    if (!r.ok) {
      if (++halvings > opt.max_halvings)
        throw PathFailureError("continuity path failed beyond t = " + std::to_string(t_prev) +
                                   " (residual " + std::to_string(r.residual) + ")",
                               t_prev);
      dt *= 0.5;
      continue;
    }
    ContinuityStep st;
    st.t = t;
    st.c_t = c_t;
    st.newton_iterations = r.iterations;
    st.krylov_iterations = r.krylov;
    st.residual = r.residual;
    st.shift = r.shift;
    st.min_eigenvalue = r.min_eig;
    st.min_damping = r.min_damping;
    path.steps.push_back(st);
    path.min_eigenvalue = std::min(path.min_eigenvalue, r.min_eig);
    if (keep) path.phi_steps.push_back(TorusField{f.m, f.n, phi});
    prev2.swap(prev);
    prev = phi;
    have_two = true;
    t_prev2 = t_prev;
    t_prev = t;
  }
  path.halvings = halvings;

  double mean = 0.0;
  for (double v : phi) mean += v;
  mean /= static_cast<double>(size);
  for (double& v : phi) v -= mean;
  path.phi = TorusField{f.m, f.n, std::move(phi)};
  path.phi_mean = path.phi.mean();
  const TorusField ratio = ma_operator(path.phi);
  for (std::size_t i = 0; i < size; ++i)
    path.residual = std::max(path.residual, std::abs(ratio.values[i] - std::exp(f.values[i])));
  path.shift = path.steps.empty() ? 0.0 : path.steps.back().shift;
  path.positivity_held = path.min_eigenvalue > 0.0;
  return path;
}

inline ContinuityPath solve_calabi(const TorusField& f, double tol, int t_steps) {
  CalabiOptions opt;
  opt.tol = tol;
  opt.t_steps = t_steps;
  return solve_calabi(f, opt);
}

/// Direct solve of (1/2) Delta_h phi = rhs - mean(rhs) by FFT, mean(phi) = 0.
inline TorusField periodic_poisson(const TorusField& rhs) {
  const detail::PeriodicPoisson p(rhs.m, rhs.n);
  TorusField out{rhs.m, rhs.n, std::vector<double>(rhs.size())};
  p.solve(rhs.values.data(), out.values.data());
  return out;
}

// ---------------------------------------------------------------------------
// Manufactured solutions.

struct ManufacturedCase {
  TorusField phi_star;
  TorusField f;  // normalized source with (omega + i ddbar phi*)^m = e^f omega^m exactly
};

/// m = 1: phi* = 0.1 cos x cos y, e^f = 1 - 0.1 cos x cos y.
/// m = 2: phi* = 0.05 (cos x1 + cos y2), e^f = (1 - 0.025 cos x1)(1 - 0.025 cos y2).
inline ManufacturedCase manufactured_case(int m, int n) {
  ManufacturedCase mc;
  if (m == 1) {
    mc.phi_star = sample_torus(1, n, [](auto x) { return 0.1 * std::cos(x[0]) * std::cos(x[1]); });
    mc.f = sample_torus(1, n, [](auto x) { return std::log(1.0 - 0.1 * std::cos(x[0]) * std::cos(x[1])); });
  } else {
    mc.phi_star = sample_torus(2, n, [](auto x) { return 0.05 * (std::cos(x[0]) + std::cos(x[3])); });
    mc.f = sample_torus(2, n, [](auto x) {
      return std::log((1.0 - 0.025 * std::cos(x[0])) * (1.0 - 0.025 * std::cos(x[3])));
    });
  }
  mc.f = normalize_source(mc.f);
  return mc;
}

// ---------------------------------------------------------------------------
// Ricci forms.

/// rho = i sum rho_{j kbar} dz_j ^ dzbar_k with rho_{j kbar} = -d_j dbar_k log F.
struct RicciForm {
  int m = 1;
  int n = 0;
  std::vector<double> r11, r22, r12re, r12im;
  /// max |d_{z1} rho_{2 kbar} - d_{z2} rho_{1 kbar}| by central differences (zero for m = 1).
  double closedness_residual = 0.0;

  [[nodiscard]] double sup_norm() const {
    double s = 0.0;
    for (const auto* v : {&r11, &r22, &r12re, &r12im})
      for (double x : *v) s = std::max(s, std::abs(x));
    return s;
  }
};

inline RicciForm ricci_form(const TorusField& ratio) {
  for (double v : ratio.values)
    SLGEO_THROW_IF(!(v > 0.0), ErrorKind::InvalidVolume, "volume ratio must be positive");
  TorusField lg = ratio;
  for (double& v : lg.values) v = std::log(v);
  const detail::TorusGrid grid(ratio.m, ratio.n);
  const double inv_h2 = 1.0 / (ratio.h() * ratio.h());
  RicciForm rho;
  rho.m = ratio.m;
  rho.n = ratio.n;
  rho.r11.resize(ratio.size());
  if (ratio.m == 2)
    for (auto* v : {&rho.r22, &rho.r12re, &rho.r12im}) v->resize(ratio.size());
  grid.for_each([&](std::size_t i, const auto& up, const auto& dn) {
    // H = 2 ddbar, so rho_{j kbar} = -H_{jk} / 2.
    const detail::NodeHessian h = detail::node_hessian(lg.values.data() + i, up, dn, ratio.m, inv_h2);
    rho.r11[i] = -0.5 * h.h11;
    if (ratio.m == 2) {
      rho.r22[i] = -0.5 * h.h22;
      rho.r12re[i] = -0.5 * h.br;
      rho.r12im[i] = -0.5 * h.bi;
    }
  });
  if (ratio.m == 2) {
    const double inv_2h = 1.0 / (2 * ratio.h());
    std::vector<double> worst(ratio.size(), 0.0);
    grid.for_each([&](std::size_t i, const auto& up, const auto& dn) {
      auto rho_at = [&](std::ptrdiff_t off, int j, int k) -> cplx {
        const std::size_t q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off);
        if (j == 0 && k == 0) return rho.r11[q];
        if (j == 1 && k == 1) return rho.r22[q];
        const cplx r12(rho.r12re[q], rho.r12im[q]);
        return j == 0 ? r12 : std::conj(r12);
      };
      auto dz = [&](int axis_pair, int j, int k) {  // d/dz_l = (d_x - i d_y) / 2
        const int ax = 2 * axis_pair, ay = ax + 1;
        const cplx dx = (rho_at(up[ax], j, k) - rho_at(dn[ax], j, k)) * inv_2h;
        const cplx dy = (rho_at(up[ay], j, k) - rho_at(dn[ay], j, k)) * inv_2h;
        return 0.5 * (dx - cplx(0, 1) * dy);
      };
      double w = 0.0;
      for (int k = 0; k < 2; ++k) w = std::max(w, std::abs(dz(0, 1, k) - dz(1, 0, k)));
      worst[i] = w;
    });
    rho.closedness_residual = *std::max_element(worst.begin(), worst.end());
  }
  return rho;
}

/// Planar version on a GridField: rho_{1 1bar} = -(1/4) Delta log F at
/// interior nodes whose four neighbours are present, NaN elsewhere.
inline GridField ricci_form(const GridField& ratio) {
  GridField out = ratio;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int j = 0; j < ratio.ny; ++j)
    for (int i = 0; i < ratio.nx; ++i) {
      const double v = ratio(i, j);
      if (std::isnan(v)) continue;
      SLGEO_THROW_IF(!(v > 0.0), ErrorKind::InvalidVolume, "volume ratio must be positive");
    }
  for (int j = 0; j < ratio.ny; ++j)
    for (int i = 0; i < ratio.nx; ++i) {
      double& o = out.values[static_cast<std::size_t>(j) * ratio.nx + i];
      if (i == 0 || j == 0 || i == ratio.nx - 1 || j == ratio.ny - 1) {
        o = nan;
        continue;
      }
      const double c = ratio(i, j), e = ratio(i + 1, j), w = ratio(i - 1, j), nn = ratio(i, j + 1), s = ratio(i, j - 1);
      if (std::isnan(c) || std::isnan(e) || std::isnan(w) || std::isnan(nn) || std::isnan(s)) {
        o = nan;
        continue;
      }
      const double lxx = (std::log(e) - 2 * std::log(c) + std::log(w)) / (ratio.hx * ratio.hx);
      const double lyy = (std::log(nn) - 2 * std::log(c) + std::log(s)) / (ratio.hy * ratio.hy);
      o = -0.25 * (lxx + lyy);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Radial Ricci-flat metrics on C^2.

/// For omega = i ddbar f(u), u = |z1|^2 + |z2|^2, the volume ratio to the
/// standard form is 4 f'(f' + u f''). Ricci-flatness with the ratio fixed
/// to 4 is F (F + u F') = 1 for F = f', with first integral (u F)^2 - u^2 = C
/// and F -> 1 as u -> infinity.
struct RadialProfile {
  double C = 0.0;
  std::vector<double> u;
  std::vector<double> fprime;
  double first_integral_drift = 0.0;
  /// max |rho| on a planar slice z2 = 0, from finite differences of the profile.
  double ricci_residual = 0.0;
};

inline RadialProfile radial_ricci_flat_profile(double C, double u_max, int n) {
  SLGEO_THROW_IF(C < 0.0, ErrorKind::DomainError, "C must be nonnegative");
  SLGEO_THROW_IF(!(u_max > 0.0) || n < 16, ErrorKind::InvalidArgument, "need u_max > 0 and n >= 16");
  RadialProfile p;
  p.C = C;
  p.u.resize(n);
  p.fprime.resize(n);
  for (int k = 0; k < n; ++k) p.u[k] = u_max * (k + 1) / n;
  // In s = log u the equation dF/ds = (1 - F^2) / F is autonomous and smooth.
  using State = std::array<double, 1>;
  boost::numeric::odeint::runge_kutta4<State> rk;
  auto rhs = [](const State& x, State& dx, double) { dx[0] = (1.0 - x[0] * x[0]) / x[0]; };
  State x{std::sqrt(1.0 + C / (u_max * u_max))};
  p.fprime[n - 1] = x[0];
  for (int k = n - 1; k > 0; --k) {
    const double s0 = std::log(p.u[k]), s1 = std::log(p.u[k - 1]);
    const int sub = std::max(1, static_cast<int>(std::ceil((s0 - s1) / 1e-3)));
    boost::numeric::odeint::integrate_n_steps(rk, rhs, x, s0, (s1 - s0) / sub, sub);
    p.fprime[k - 1] = x[0];
  }
  for (int k = 0; k < n; ++k) {
    const double uf = p.u[k] * p.fprime[k];
    p.first_integral_drift = std::max(p.first_integral_drift, std::abs(uf * uf - p.u[k] * p.u[k] - C));
  }

  // Slice check: volume ratio 4 F (F + u F') with F' from fourth-order
  // differences of the samples, interpolated onto a Cartesian patch.
  std::vector<double> log_ratio(n, std::numeric_limits<double>::quiet_NaN());
  const double du = u_max / n;
  for (int k = 2; k + 2 < n; ++k) {
    const double d = (-p.fprime[k + 2] + 8 * p.fprime[k + 1] - 8 * p.fprime[k - 1] + p.fprime[k - 2]) / (12 * du);
    log_ratio[k] = std::log(4.0 * p.fprime[k] * (p.fprime[k] + p.u[k] * d));
  }
  auto interp = [&](double u) {  // cubic Lagrange on the nearest four samples
    const double pos = u / du - 1.0;
    const int k = std::clamp(static_cast<int>(std::floor(pos)) - 1, 2, n - 6);
    double val = 0.0;
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) w *= (pos - (k + b)) / static_cast<double>(a - b);
      val += w * log_ratio[k + a];
    }
    return val;
  };
  const int ns = 33;
  const double lo = 0.45 * std::sqrt(u_max), hi = 0.65 * std::sqrt(u_max);
  GridField slice;
  slice.nx = slice.ny = ns;
  slice.x0 = slice.y0 = lo;
  slice.hx = slice.hy = (hi - lo) / (ns - 1);
  slice.values.resize(static_cast<std::size_t>(ns) * ns);
  for (int j = 0; j < ns; ++j)
    for (int i = 0; i < ns; ++i) {
      const double x = slice.x(i), y = slice.y(j);
      slice.values[static_cast<std::size_t>(j) * ns + i] = std::exp(interp(x * x + y * y));
    }
  const GridField rho = ricci_form(slice);
  for (double v : rho.values)
    if (!std::isnan(v)) p.ricci_residual = std::max(p.ricci_residual, std::abs(v));
  return p;
}

}  // namespace slgeo

#endif  // SLGEO_CALABI_SOLVER_HPP
