#ifndef SLGEO_U1_POTENTIAL_HPP
#define SLGEO_U1_POTENTIAL_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "slgeo/core_geometry.hpp"
#include "slgeo/errors.hpp"
#include "slgeo/grid_field.hpp"
#include "slgeo/numerics.hpp"

namespace slgeo {

/// Disc or axis-aligned ellipse, sampled on an n x n square grid that just
/// covers it.
struct ConvexDomain {
  enum class Kind { Disc, Ellipse };
  Kind kind = Kind::Disc;
  double rx = 1.0;
  double ry = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int n = 65;

  [[nodiscard]] double half_width() const { return std::max(rx, ry); }
  [[nodiscard]] double h() const { return 2.0 * half_width() / (n - 1); }
  [[nodiscard]] double x(int i) const { return cx - half_width() + h() * i; }
  [[nodiscard]] double y(int j) const { return cy - half_width() + h() * j; }
  [[nodiscard]] bool contains(double px, double py) const {
    const double qx = (px - cx) / rx, qy = (py - cy) / ry;
    return qx * qx + qy * qy < 1.0 - 1e-12;
  }
  /// Invariant under (x, y) -> (x, -y).
  [[nodiscard]] bool reflection_symmetric() const { return cy == 0.0; }

  [[nodiscard]] GridField empty_field() const {
    return GridField(n, n, x(0), y(0), h(), h(), true, std::numeric_limits<double>::quiet_NaN());
  }
};

inline ConvexDomain disc_domain(double r, int n, double cx = 0.0, double cy = 0.0) {
  SLGEO_THROW_IF(!(r > 0.0) || n < 5, ErrorKind::InvalidArgument, "disc needs r > 0 and n >= 5");
  return ConvexDomain{ConvexDomain::Kind::Disc, r, r, cx, cy, n};
}

inline ConvexDomain ellipse_domain(double rx, double ry, int n, double cx = 0.0, double cy = 0.0) {
  SLGEO_THROW_IF(!(rx > 0.0) || !(ry > 0.0) || n < 5, ErrorKind::InvalidArgument,
                 "ellipse needs positive radii and n >= 5");
  return ConvexDomain{ConvexDomain::Kind::Ellipse, rx, ry, cx, cy, n};
}

/// Dirichlet data phi(x, y), evaluated where grid lines cross the boundary.
using BoundaryData = std::function<double(double, double)>;

namespace detail {

/// One arm of a node's stencil: a neighbouring unknown, or a boundary
/// crossing at distance dist along the grid line.
struct Arm {
  int unknown = -1;
  double dist = 0.0;
  double bx = 0.0;
  double by = 0.0;
};

/// Nonuniform three-point weights for the first and second derivative.
struct AxisWeights {
  double dl, d0, dr;  // first derivative
  double sl, s0, sr;  // second derivative
};

inline AxisWeights axis_weights(double hl, double hr) {
  const double den = hl * hr * (hl + hr);
  AxisWeights w{};
  w.dr = hl * hl / den;
  w.dl = -hr * hr / den;
  w.d0 = (hr * hr - hl * hl) / den;
  w.sr = 2.0 / (hr * (hl + hr));
  w.sl = 2.0 / (hl * (hl + hr));
  w.s0 = -(w.sr + w.sl);
  return w;
}

/// Boundary-fitted discretization of a ConvexDomain: unknowns are the grid
/// nodes strictly inside; arms that leave the domain end on the boundary.
struct U1Grid {
  ConvexDomain dom;
  std::vector<int> unknown_of_node;   // per grid node, -1 outside
  std::vector<int> node_i, node_j;    // per unknown
  std::vector<std::array<Arm, 4>> arms;  // left, right, down, up
  std::vector<std::uint8_t> regular;  // per unknown: all four arms are unknowns at spacing h

  explicit U1Grid(const ConvexDomain& d) : dom(d) {
    const int n = d.n;
    const double h = d.h();
    unknown_of_node.assign(static_cast<std::size_t>(n) * n, -1);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (d.contains(d.x(i), d.y(j))) {
          unknown_of_node[static_cast<std::size_t>(j) * n + i] = static_cast<int>(node_i.size());
          node_i.push_back(i);
          node_j.push_back(j);
        }
    arms.resize(node_i.size());
    regular.assign(node_i.size(), 1);
    for (std::size_t k = 0; k < node_i.size(); ++k) {
      const int i = node_i[k], j = node_j[k];
      const double x = d.x(i), y = d.y(j);
      const double sx = d.rx * std::sqrt(std::max(0.0, 1.0 - std::pow((y - d.cy) / d.ry, 2)));
      const double sy = d.ry * std::sqrt(std::max(0.0, 1.0 - std::pow((x - d.cx) / d.rx, 2)));
      const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
      for (int s = 0; s < 4; ++s) {
        const int ii = i + di[s], jj = j + dj[s];
        Arm arm;
        const int u = unknown(ii, jj);
        if (u >= 0) {
          arm.unknown = u;
          arm.dist = h;
        } else {
          regular[k] = 0;
          if (s == 0) arm.bx = d.cx - sx, arm.by = y, arm.dist = x - arm.bx;
          if (s == 1) arm.bx = d.cx + sx, arm.by = y, arm.dist = arm.bx - x;
          if (s == 2) arm.bx = x, arm.by = d.cy - sy, arm.dist = y - arm.by;
          if (s == 3) arm.bx = x, arm.by = d.cy + sy, arm.dist = arm.by - y;
          arm.dist = std::clamp(arm.dist, 1e-12 * h, h);
        }
        arms[k][s] = arm;
      }
    }
  }

  [[nodiscard]] int unknown(int i, int j) const {
    if (i < 0 || j < 0 || i >= dom.n || j >= dom.n) return -1;
    return unknown_of_node[static_cast<std::size_t>(j) * dom.n + i];
  }
  [[nodiscard]] std::size_t size() const { return node_i.size(); }
};

struct NodeDerivs {
  double fx, fxx, fy, fyy;
};

}  // namespace detail

struct PotentialSolution {
  ConvexDomain domain;
  double a = 0.0;
  GridField f;
  GridField u;  // df/dy
  GridField v;  // df/dx
  double residual_P = 0.0;
  double residual_CR = 0.0;
  int newton_iters = 0;
  /// Nodes whose u, v come from the uniform stencil (empty: all finite nodes).
  std::vector<std::uint8_t> regular;
  /// Boundary crossings (x, y, phi) used as Dirichlet data.
  std::vector<std::array<double, 3>> boundary_samples;
  /// For a = 0: the last continuation level actually solved.
  double continuation_a = 0.0;
  int continuation_levels = 0;
  std::vector<std::string> warnings;
};

struct U1Options {
  enum class Init { Harmonic, Zero, Random };
  int max_newton = 50;
  double damping_min = 1.0 / 1024.0;
  Init init = Init::Harmonic;
  std::uint64_t seed = 1;
  double random_amplitude = 0.1;
  double a0 = 1.0;
  int max_levels = 40;
};

inline constexpr double kCoefficientFloor = 1e-12;

namespace detail {

class U1System {
public:
  U1System(const U1Grid& g, const BoundaryData& phi) : g_(g) {
    bvals_.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
      for (int s = 0; s < 4; ++s) {
        const Arm& arm = g.arms[k][s];
        bvals_[k][s] = arm.unknown >= 0 ? 0.0 : phi(arm.bx, arm.by);
      }
  }

  [[nodiscard]] double arm_value(const Eigen::VectorXd& f, std::size_t k, int s) const {
    const Arm& arm = g_.arms[k][s];
    return arm.unknown >= 0 ? f(arm.unknown) : bvals_[k][s];
  }

  [[nodiscard]] NodeDerivs derivs(const Eigen::VectorXd& f, std::size_t k) const {
    const auto& ar = g_.arms[k];
    const double f0 = f(static_cast<Eigen::Index>(k));
    const AxisWeights wx = axis_weights(ar[0].dist, ar[1].dist);
    const AxisWeights wy = axis_weights(ar[2].dist, ar[3].dist);
    const double fl = arm_value(f, k, 0), fr = arm_value(f, k, 1);
    const double fd = arm_value(f, k, 2), fu = arm_value(f, k, 3);
    return NodeDerivs{wx.dl * fl + wx.d0 * f0 + wx.dr * fr, wx.sl * fl + wx.s0 * f0 + wx.sr * fr,
                      wy.dl * fd + wy.d0 * f0 + wy.dr * fu, wy.sl * fd + wy.s0 * f0 + wy.sr * fu};
  }

  /// P(f) at every unknown; with scaled = true the equivalent
  /// s P(f) = f_xx + 2 s f_yy, whose round-off floor does not grow as a -> 0.
  [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& f, double a,
                                         bool scaled = false) const {
    Eigen::VectorXd r(g_.size());
    for (std::size_t k = 0; k < g_.size(); ++k) {
      const NodeDerivs d = derivs(f, k);
      const double y = g_.dom.y(g_.node_j[k]);
      const double s = std::max(std::sqrt(d.fx * d.fx + y * y + a * a), kCoefficientFloor);
      r(static_cast<Eigen::Index>(k)) = scaled ? d.fxx + 2.0 * s * d.fyy : d.fxx / s + 2.0 * d.fyy;
    }
    return r;
  }

  /// Jacobian of the residual (scaled or not); with laplace = true, the
  /// matrix of f_xx + f_yy.
  [[nodiscard]] Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& f, double a,
                                                     bool scaled, bool laplace = false) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g_.size() * 5);
    for (std::size_t k = 0; k < g_.size(); ++k) {
      const auto& ar = g_.arms[k];
      const AxisWeights wx = axis_weights(ar[0].dist, ar[1].dist);
      const AxisWeights wy = axis_weights(ar[2].dist, ar[3].dist);
      double cxx = 1.0, cx = 0.0, cyy = 1.0;
      if (!laplace) {
        const NodeDerivs d = derivs(f, k);
        const double y = g_.dom.y(g_.node_j[k]);
        const double s = std::max(std::sqrt(d.fx * d.fx + y * y + a * a), kCoefficientFloor);
        if (scaled) {
          cyy = 2.0 * s;
          cx = 2.0 * d.fyy * d.fx / s;
        } else {
          cxx = 1.0 / s;
          cx = -d.fxx * d.fx / (s * s * s);
          cyy = 2.0;
        }
      }
      const int row = static_cast<int>(k);
      trip.emplace_back(row, row, cxx * wx.s0 + cx * wx.d0 + cyy * wy.s0);
      const double wl[4] = {cxx * wx.sl + cx * wx.dl, cxx * wx.sr + cx * wx.dr, cyy * wy.sl,
                            cyy * wy.sr};
      for (int s = 0; s < 4; ++s)
        if (ar[s].unknown >= 0) trip.emplace_back(row, ar[s].unknown, wl[s]);
    }
    Eigen::SparseMatrix<double> j(static_cast<Eigen::Index>(g_.size()),
                                  static_cast<Eigen::Index>(g_.size()));
    j.setFromTriplets(trip.begin(), trip.end());
    return j;
  }

  /// Solves f_xx + f_yy = 0 with the Dirichlet data.
  [[nodiscard]] Eigen::VectorXd harmonic_extension() const {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g_.size()));
    Eigen::VectorXd rhs(g_.size());
    for (std::size_t k = 0; k < g_.size(); ++k) {
      const NodeDerivs d = derivs(zero, k);
      rhs(static_cast<Eigen::Index>(k)) = -(d.fxx + d.fyy);
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(jacobian(zero, 0.0, false, true));
    SLGEO_THROW_IF(lu.info() != Eigen::Success, ErrorKind::Divergence,
                   "harmonic extension matrix is singular");
    return lu.solve(rhs);
  }

  [[nodiscard]] const std::array<double, 4>& boundary_values(std::size_t k) const {
    return bvals_[k];
  }

private:
  const U1Grid& g_;
  std::vector<std::array<double, 4>> bvals_;
};

struct NewtonOutcome {
  Eigen::VectorXd f;
  double residual = 0.0;
  int iters = 0;
};

/// Damped Newton on P(f), or on s P(f) when scaled is set (continuation
/// levels, where P itself carries a 1/a round-off floor). Stops once the
/// max-norm of the chosen residual is <= tol.
inline NewtonOutcome newton_solve(const U1System& sys, Eigen::VectorXd f, double a, double tol,
                                  const U1Options& opt, bool scaled = false) {
  Eigen::VectorXd r = sys.residual(f, a, scaled);
  double rn = r.cwiseAbs().maxCoeff();
  int it = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  while (rn > tol) {
    if (it >= opt.max_newton) throw DivergenceError("Newton iteration did not converge", rn);
    lu.compute(sys.jacobian(f, a, scaled));
    if (lu.info() != Eigen::Success) throw DivergenceError("singular Newton Jacobian", rn);
    const Eigen::VectorXd step = lu.solve(-r);
    double lambda = 1.0;
    for (;;) {
      Eigen::VectorXd trial = f + lambda * step;
      Eigen::VectorXd rt = sys.residual(trial, a, scaled);
      const double rtn = rt.cwiseAbs().maxCoeff();
      if (std::isfinite(rtn) && rtn < rn) {
        f = std::move(trial);
        r = std::move(rt);
        rn = rtn;
        break;
      }
      lambda *= 0.5;
      if (lambda < opt.damping_min)
        throw DivergenceError("damped Newton step failed to reduce the residual", rn);
    }
    ++it;
  }
  return NewtonOutcome{std::move(f), rn, it};
}

inline PotentialSolution assemble_solution(const U1Grid& g, const U1System& sys,
                                           const Eigen::VectorXd& f, double a) {
  PotentialSolution sol;
  sol.domain = g.dom;
  sol.a = a;
  sol.f = g.dom.empty_field();
  sol.u = g.dom.empty_field();
  sol.v = g.dom.empty_field();
  sol.regular.assign(sol.f.values.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = g.node_i[k], j = g.node_j[k];
    const NodeDerivs d = sys.derivs(f, k);
    sol.f(i, j) = f(static_cast<Eigen::Index>(k));
    sol.u(i, j) = d.fy;
    sol.v(i, j) = d.fx;
    sol.regular[sol.f.index(i, j)] = g.regular[k];
    for (int s = 0; s < 4; ++s)
      if (g.arms[k][s].unknown < 0)
        sol.boundary_samples.push_back(
            {g.arms[k][s].bx, g.arms[k][s].by, sys.boundary_values(k)[s]});
  }
  return sol;
}

}  // namespace detail

struct POperatorResult {
  GridField field;
  std::vector<std::size_t> degenerate_nodes;  // flat indices where the coefficient was clamped
};

/// P(f) = (f_x^2 + y^2 + a^2)^{-1/2} f_xx + 2 f_yy at the interior nodes of
/// the domain. Arms leaving the domain use phi at the boundary crossing when
/// given, otherwise the grid value of f at the neighbouring node.
inline POperatorResult p_operator(const GridField& f, double a, const ConvexDomain& dom,
                                  const BoundaryData& phi = {}) {
  SLGEO_THROW_IF(f.nx != dom.n || f.ny != dom.n, ErrorKind::InvalidArgument,
                 "field does not match the domain grid");
  const detail::U1Grid g(dom);
  POperatorResult out{dom.empty_field(), {}};
  const double h = dom.h();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = g.node_i[k], j = g.node_j[k];
    const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
    double val[4], dist[4];
    bool ok = !std::isnan(f(i, j));
    for (int s = 0; s < 4; ++s) {
      const auto& arm = g.arms[k][s];
      if (arm.unknown >= 0) {
        val[s] = f(i + di[s], j + dj[s]);
        dist[s] = h;
      } else if (phi) {
        val[s] = phi(arm.bx, arm.by);
        dist[s] = arm.dist;
      } else {
        const int ii = i + di[s], jj = j + dj[s];
        ok = ok && f.inside(ii, jj);
        val[s] = ok ? f(ii, jj) : 0.0;
        dist[s] = h;
      }
    }
    if (!ok) continue;
    const auto wx = detail::axis_weights(dist[0], dist[1]);
    const auto wy = detail::axis_weights(dist[2], dist[3]);
    const double f0 = f(i, j);
    const double fx = wx.dl * val[0] + wx.d0 * f0 + wx.dr * val[1];
    const double fxx = wx.sl * val[0] + wx.s0 * f0 + wx.sr * val[1];
    const double fyy = wy.sl * val[2] + wy.s0 * f0 + wy.sr * val[3];
    const double y = dom.y(j);
    double s = std::sqrt(fx * fx + y * y + a * a);
    if (s < kCoefficientFloor) {
      s = kCoefficientFloor;
      out.degenerate_nodes.push_back(f.index(i, j));
    }
    out.field(i, j) = fxx / s + 2.0 * fyy;
  }
  return out;
}

/// Relative floor used to decide that v vanishes on the x-axis.
inline double singular_threshold(const GridField& v) {
  return std::max(10.0 * std::numeric_limits<double>::epsilon(), 1e-3 * v.sup_norm());
}

/// Max over nodes of |u_x - v_y| and |v_x + 2 (v^2 + y^2 + a^2)^{1/2} u_y|,
/// by central differences of the stored u, v.
inline double cr_residual(const PotentialSolution& sol) {
  const GridField& u = sol.u;
  const GridField& v = sol.v;
  const double thr = singular_threshold(v);
  auto usable = [&](int i, int j) {
    if (!u.inside(i, j) || !v.inside(i, j)) return false;
    return sol.regular.empty() || sol.regular[u.index(i, j)] != 0;
  };
  double worst = 0.0;
  for (int j = 1; j + 1 < u.ny; ++j)
    for (int i = 1; i + 1 < u.nx; ++i) {
      if (!u.inside(i, j) || !v.inside(i, j)) continue;
      if (!usable(i - 1, j) || !usable(i + 1, j) || !usable(i, j - 1) || !usable(i, j + 1)) continue;
      const double y = u.y(j);
      if (sol.a == 0.0 && std::abs(y) < 1e-9 * u.hy && std::abs(v(i, j)) < thr) continue;
      const double ux = (u(i + 1, j) - u(i - 1, j)) / (2 * u.hx);
      const double uy = (u(i, j + 1) - u(i, j - 1)) / (2 * u.hy);
      const double vx = (v(i + 1, j) - v(i - 1, j)) / (2 * v.hx);
      const double vy = (v(i, j + 1) - v(i, j - 1)) / (2 * v.hy);
      const double vv = v(i, j);
      worst = std::max(worst, std::abs(ux - vy));
      worst = std::max(worst, std::abs(vx + 2.0 * std::sqrt(vv * vv + y * y + sol.a * sol.a) * uy));
    }
  return worst;
}

/// Solves P(f) = 0 with f = phi on the boundary. For a = 0 the solution is the
/// limit of solves along a_k = 2^{-k} a0, stopped once successive levels agree
/// to tol in sup-norm.
inline PotentialSolution solve_dirichlet(const BoundaryData& phi, double a, const ConvexDomain& dom,
                                         double tol, const U1Options& opt = {}) {
  SLGEO_THROW_IF(!(tol > 0.0), ErrorKind::InvalidArgument, "tolerance must be positive");
  SLGEO_THROW_IF(dom.n < 17, ErrorKind::InvalidArgument, "grid resolution must be at least 17");
  SLGEO_THROW_IF(!phi, ErrorKind::InvalidArgument, "boundary data missing");
  const detail::U1Grid g(dom);
  SLGEO_THROW_IF(g.size() == 0, ErrorKind::InvalidArgument, "domain contains no grid nodes");
  const detail::U1System sys(g, phi);

  Eigen::VectorXd f0;
  switch (opt.init) {
    case U1Options::Init::Harmonic: f0 = sys.harmonic_extension(); break;
    case U1Options::Init::Zero: f0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size())); break;
    case U1Options::Init::Random: {
      std::mt19937_64 rng(opt.seed);
      std::uniform_real_distribution<double> dist(-opt.random_amplitude, opt.random_amplitude);
      f0.resize(static_cast<Eigen::Index>(g.size()));
      for (Eigen::Index k = 0; k < f0.size(); ++k) f0(k) = dist(rng);
      break;
    }
  }

  PotentialSolution sol;
  if (a != 0.0) {
    auto out = detail::newton_solve(sys, std::move(f0), a, tol, opt);
    sol = detail::assemble_solution(g, sys, out.f, a);
    sol.residual_P = out.residual;
    sol.newton_iters = out.iters;
    sol.continuation_a = a;
  } else {
    SLGEO_THROW_IF(!(opt.a0 > 0.0), ErrorKind::InvalidArgument, "continuation start must be > 0");
    double ak = opt.a0;
    auto out = detail::newton_solve(sys, std::move(f0), ak, tol, opt);
    int total = out.iters;
    int level = 0;
    for (;;) {
      if (++level > opt.max_levels)
        throw DivergenceError("continuation in a did not settle", out.residual);
      ak *= 0.5;
      auto next = detail::newton_solve(sys, out.f, ak, tol, opt, true);
      total += next.iters;
      const double diff = (next.f - out.f).cwiseAbs().maxCoeff();
      out = std::move(next);
      if (diff < tol) break;
    }
    sol = detail::assemble_solution(g, sys, out.f, 0.0);
    sol.residual_P = out.residual;
    sol.newton_iters = total;
    sol.continuation_a = ak;
    sol.continuation_levels = level;
  }
  if (!dom.reflection_symmetric())
    sol.warnings.push_back("hypothesis-violation: domain is not symmetric under (x,y) -> (x,-y)");
  sol.residual_CR = cr_residual(sol);
  return sol;
}

/// Solution with f = b x + c y, u = c, v = b on the domain grid.
inline PotentialSolution affine_solution(const ConvexDomain& dom, double a, double b, double c) {
  const detail::U1Grid g(dom);
  PotentialSolution sol;
  sol.domain = dom;
  sol.a = a;
  sol.continuation_a = a;
  sol.f = dom.empty_field();
  sol.u = dom.empty_field();
  sol.v = dom.empty_field();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const int i = g.node_i[k], j = g.node_j[k];
    sol.f(i, j) = b * dom.x(i) + c * dom.y(j);
    sol.u(i, j) = c;
    sol.v(i, j) = b;
  }
  sol.residual_CR = cr_residual(sol);
  return sol;
}

struct SingularSet {
  std::vector<std::pair<double, cplx>> points;  // (x, z3 = x + i u(x, 0))
  bool entire_axis = false;
};

/// Grid points (x, 0) with v(x, 0) = 0, reported as the singular points
/// (0, 0, x + i u(x, 0)) of the lifted 3-fold. Empty for a != 0.
inline SingularSet singular_points(const PotentialSolution& sol) {
  SingularSet out;
  if (sol.a != 0.0) return out;
  const GridField& v = sol.v;
  int row = -1;
  for (int j = 0; j < v.ny; ++j)
    if (std::abs(v.y(j)) < 1e-9 * v.hy) row = j;
  if (row < 0) return out;
  const double thr = singular_threshold(v);
  int axis_nodes = 0;
  for (int i = 0; i < v.nx; ++i) {
    if (!v.inside(i, row)) continue;
    ++axis_nodes;
    if (std::abs(v(i, row)) < thr) out.points.emplace_back(v.x(i), cplx(v.x(i), sol.u(i, row)));
  }
  out.entire_axis = axis_nodes > 0 && static_cast<int>(out.points.size()) == axis_nodes;
  return out;
}

struct DifferenceZero {
  int i = 0;  // lower-left node of the cell
  int j = 0;
  double x = 0.0;
  double y = 0.0;
  int winding = 0;
};

struct DifferenceZeros {
  std::vector<DifferenceZero> zeros;
  int total_multiplicity = 0;
  bool identical = false;
};

/// Cells where (u1 - u2, v1 - v2) winds around zero, with the winding number
/// as multiplicity.
inline DifferenceZeros difference_zeros(const PotentialSolution& s1, const PotentialSolution& s2) {
  SLGEO_THROW_IF(s1.u.nx != s2.u.nx || s1.u.ny != s2.u.ny, ErrorKind::InvalidArgument,
                 "solutions live on different grids");
  const int nx = s1.u.nx, ny = s1.u.ny;
  DifferenceZeros out;
  double maxdiff = 0.0;
  for (std::size_t k = 0; k < s1.u.values.size(); ++k) {
    const double du = s1.u.values[k] - s2.u.values[k];
    const double dv = s1.v.values[k] - s2.v.values[k];
    if (!std::isnan(du) && !std::isnan(dv)) maxdiff = std::max({maxdiff, std::abs(du), std::abs(dv)});
  }
  if (maxdiff <= 1e-13) {
    out.identical = true;
    return out;
  }
  // atan2(0, 0) = 0 fixes a consistent perturbation direction for exact zeros.
  auto angle = [&](int i, int j) {
    return std::atan2(s1.v(i, j) - s2.v(i, j), s1.u(i, j) - s2.u(i, j));
  };
  auto ok = [&](int i, int j) {
    return s1.u.inside(i, j) && s2.u.inside(i, j) && s1.v.inside(i, j) && s2.v.inside(i, j);
  };
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      if (!ok(i, j) || !ok(i + 1, j) || !ok(i + 1, j + 1) || !ok(i, j + 1)) continue;
      const double th[5] = {angle(i, j), angle(i + 1, j), angle(i + 1, j + 1), angle(i, j + 1),
                            angle(i, j)};
      double sum = 0.0;
      for (int e = 0; e < 4; ++e) {
        double d = th[e + 1] - th[e];
        while (d > kPi) d -= 2 * kPi;
        while (d <= -kPi) d += 2 * kPi;
        sum += d;
      }
      const int w = static_cast<int>(std::lround(sum / (2 * kPi)));
      if (w != 0) {
        out.zeros.push_back({i, j, s1.u.x(i) + 0.5 * s1.u.hx, s1.u.y(j) + 0.5 * s1.u.hy, w});
        out.total_multiplicity += w;
      }
    }
  return out;
}

struct LiftedCloud {
  std::vector<CVec> points;
  std::vector<TangentPlane> planes;
  std::vector<double> sl_defects;
  std::vector<double> moment_values;  // |z1|^2 - |z2|^2
  std::vector<CVec> excluded;         // near the singular set (a = 0)
  double max_sl_defect = 0.0;
  double max_moment_error = 0.0;
};

/// Lifts a solution to the U(1)-invariant 3-fold
/// {z1 z2 = v + i y, |z1|^2 - |z2|^2 = 2a, z3 = x + i u}, sampling
/// samples_per_node phases at each node with a full 3x3 neighbourhood.
inline LiftedCloud lift_to_sl3(const PotentialSolution& sol, int samples_per_node) {
  SLGEO_THROW_IF(samples_per_node < 1, ErrorKind::InvalidArgument, "need at least one sample");
  const GridField& f = sol.f;
  const double a = sol.a;
  const double hx = f.hx, hy = f.hy;
  const double thr = singular_threshold(sol.v);
  const CYPackage pkg = standard_cy_package(3);
  LiftedCloud out;
  const cplx I(0, 1);
  for (int j = 1; j + 1 < f.ny; ++j)
    for (int i = 1; i + 1 < f.nx; ++i) {
      bool full = sol.u.inside(i, j) && sol.v.inside(i, j);
      for (int dj = -1; dj <= 1 && full; ++dj)
        for (int di = -1; di <= 1 && full; ++di) full = f.inside(i + di, j + dj);
      if (!full) continue;
      const double x = f.x(i), y = f.y(j);
      const double fxx = (f(i + 1, j) - 2 * f(i, j) + f(i - 1, j)) / (hx * hx);
      const double fyy = (f(i, j + 1) - 2 * f(i, j) + f(i, j - 1)) / (hy * hy);
      const double fxy =
          (f(i + 1, j + 1) - f(i + 1, j - 1) - f(i - 1, j + 1) + f(i - 1, j - 1)) / (4 * hx * hy);
      const double u = sol.u(i, j), v = sol.v(i, j);
      const cplx w(v, y);
      const double S = std::sqrt(a * a + std::norm(w));
      const double r1 = std::sqrt(std::max(0.0, a + S));
      const double r2 = std::sqrt(std::max(0.0, S - a));
      const bool near_singular = a == 0.0 && std::abs(w) < thr;
      const cplx z3(x, u);
      const cplx dwx(fxx, 0.0), dwy(fxy, 1.0);
      const cplx dz3x(1.0, fxy), dz3y(0.0, fyy);
      for (int p = 0; p < samples_per_node; ++p) {
        const double psi = 2 * kPi * p / samples_per_node;
        cplx z1, z2;
        const bool base1 = r1 >= r2;
        if (base1) {
          z1 = std::polar(r1, psi);
          z2 = w / z1;
        } else {
          z2 = std::polar(r2, -psi);
          z1 = w / z2;
        }
        CVec pt(3);
        pt << z1, z2, z3;
        if (near_singular) {
          out.excluded.push_back(pt);
          continue;
        }
        // Tangent along a grid direction with change dw of z1 z2 at fixed moment level.
        auto tangent = [&](cplx dw, cplx dz3) {
          const double dS = (std::conj(w) * dw).real() / S;
          cplx dz1, dz2;
          if (base1) {
            dz1 = (dS / (2 * r1 * r1)) * z1;
            dz2 = (dw - z2 * dz1) / z1;
          } else {
            dz2 = (dS / (2 * r2 * r2)) * z2;
            dz1 = (dw - z1 * dz2) / z2;
          }
          CVec t(3);
          t << dz1, dz2, dz3;
          return to_real(t);
        };
        CVec tpsi(3);
        tpsi << I * z1, -I * z2, 0.0;
        Mat basis(6, 3);
        basis.col(0) = tangent(dwx, dz3x);
        basis.col(1) = tangent(dwy, dz3y);
        basis.col(2) = to_real(tpsi);
        TangentPlane plane = make_plane(basis);
        const double defect = sl_defect(plane, pkg);
        const double mu = std::norm(z1) - std::norm(z2);
        out.points.push_back(pt);
        out.planes.push_back(plane);
        out.sl_defects.push_back(defect);
        out.moment_values.push_back(mu);
        out.max_sl_defect = std::max(out.max_sl_defect, defect);
        out.max_moment_error = std::max(out.max_moment_error, std::abs(mu - 2 * a));
      }
    }
  return out;
}

}  // namespace slgeo

#endif  // SLGEO_U1_POTENTIAL_HPP
