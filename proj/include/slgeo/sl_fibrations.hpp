#ifndef SLGEO_SL_FIBRATIONS_HPP
#define SLGEO_SL_FIBRATIONS_HPP

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slgeo/core_geometry.hpp"
#include "slgeo/errors.hpp"
#include "slgeo/numerics.hpp"
#include "slgeo/u1_potential.hpp"

namespace slgeo {

enum class Topology { T2_cone, S1xR2, plane_pair, T3_like, other, empty };

inline std::string_view to_string(Topology t) {
  switch (t) {
    case Topology::T2_cone: return "T2_cone";
    case Topology::S1xR2: return "S1xR2";
    case Topology::plane_pair: return "plane_pair";
    case Topology::T3_like: return "T3_like";
    case Topology::other: return "other";
    case Topology::empty: return "empty";
  }
  return "other";
}

struct FiberRecord {
  std::array<double, 3> alpha{};
  std::vector<CVec> points;
  Topology topology = Topology::other;
  std::vector<CVec> singular_points;
  double sl_residual_max = 0.0;
  /// Which U(1) orbit circle (1 for z1, 2 for z2) survives at the core of
  /// the fiber; 0 when both or neither collapse.
  int persistent_circle = 0;
  std::string note;
};

// ---------------------------------------------------------------------------
// Fibrations assembled from U(1)-invariant Dirichlet problems.

/// Box of parameters (a, b, c); each range must satisfy lo < hi.
struct ParameterBox {
  std::array<double, 2> a{-1.0, 1.0};
  std::array<double, 2> b{-1.0, 1.0};
  std::array<double, 2> c{-1.0, 1.0};

  [[nodiscard]] bool contains(const std::array<double, 3>& al) const {
    return al[0] >= a[0] && al[0] <= a[1] && al[1] >= b[0] && al[1] <= b[1] && al[2] >= c[0] &&
           al[2] <= c[1];
  }
};

/// Family of boundary data Phi(a, b, c) = phi + b x + c y on a convex domain.
/// Solutions are computed on demand and cached; the cache may be shared
/// between threads.
class FibrationFamily {
public:
  FibrationFamily(BoundaryData base_phi, ConvexDomain domain, ParameterBox box, double tol)
      : base_phi_(std::move(base_phi)), domain_(domain), box_(box), tol_(tol),
        cache_(std::make_shared<Cache>()) {}

  [[nodiscard]] const ConvexDomain& domain() const { return domain_; }
  [[nodiscard]] const ParameterBox& box() const { return box_; }

  [[nodiscard]] BoundaryData boundary(const std::array<double, 3>& al) const {
    return [phi = base_phi_, b = al[1], c = al[2]](double x, double y) {
      return phi(x, y) + b * x + c * y;
    };
  }

  [[nodiscard]] std::shared_ptr<const PotentialSolution> solution(const std::array<double, 3>& al) const {
    SLGEO_THROW_IF(!box_.contains(al), ErrorKind::OutOfRange, "parameter outside the family box");
    {
      std::lock_guard lock(cache_->mutex);
      auto it = cache_->solutions.find(al);
      if (it != cache_->solutions.end()) return it->second;
    }
    auto sol = std::make_shared<const PotentialSolution>(
        solve_dirichlet(boundary(al), al[0], domain_, tol_));
    std::lock_guard lock(cache_->mutex);
    return cache_->solutions.emplace(al, std::move(sol)).first->second;
  }

  /// The lifted fiber N_alpha.
  [[nodiscard]] FiberRecord fiber(const std::array<double, 3>& al, int samples_per_node = 1) const {
    const auto sol = solution(al);
    const LiftedCloud cloud = lift_to_sl3(*sol, samples_per_node);
    FiberRecord rec;
    rec.alpha = al;
    rec.points = cloud.points;
    rec.sl_residual_max = cloud.max_sl_defect;
    if (al[0] != 0.0) {
      rec.topology = Topology::S1xR2;
      rec.persistent_circle = al[0] > 0 ? 1 : 2;
      return rec;
    }
    const SingularSet sp = singular_points(*sol);
    for (const auto& [x, z3] : sp.points) {
      CVec p(3);
      p << 0.0, 0.0, z3;
      rec.singular_points.push_back(p);
    }
    rec.topology = rec.singular_points.empty() ? Topology::S1xR2 : Topology::other;
    if (sp.entire_axis) rec.note = "singular along the whole x-axis segment";
    return rec;
  }

  [[nodiscard]] std::size_t cached() const {
    std::lock_guard lock(cache_->mutex);
    return cache_->solutions.size();
  }

private:
  struct Cache {
    std::mutex mutex;
    std::map<std::array<double, 3>, std::shared_ptr<const PotentialSolution>> solutions;
  };
  BoundaryData base_phi_;
  ConvexDomain domain_;
  ParameterBox box_;
  double tol_;
  std::shared_ptr<Cache> cache_;
};

/// Number of strict local maxima and minima of g on the boundary, sampled at
/// the given number of angles.
inline std::pair<int, int> boundary_extrema(const ConvexDomain& dom, const BoundaryData& g,
                                            int samples = 720) {
  std::vector<double> vals(samples);
  for (int k = 0; k < samples; ++k) {
    const double t = 2 * kPi * k / samples;
    vals[k] = g(dom.cx + dom.rx * std::cos(t), dom.cy + dom.ry * std::sin(t));
  }
  int maxima = 0, minima = 0;
  for (int k = 0; k < samples; ++k) {
    const double p = vals[(k + samples - 1) % samples], c = vals[k], n = vals[(k + 1) % samples];
    if (c > p && c >= n) ++maxima;
    if (c < p && c <= n) ++minima;
  }
  return {maxima, minima};
}

/// Family Phi(a, b, c) = base_phi + b x + c y, checked for the
/// one-maximum-one-minimum condition on differences of same-a members.
inline FibrationFamily build_family(BoundaryData base_phi, ConvexDomain domain, ParameterBox box,
                                    int grid_n, double tol = 1e-10) {
  for (const auto& r : {box.a, box.b, box.c})
    SLGEO_THROW_IF(!(r[0] < r[1]), ErrorKind::InvalidRegion, "parameter box has an empty range");
  domain.n = grid_n;
  FibrationFamily fam(std::move(base_phi), domain, box, tol);
  const double bs[3] = {box.b[0], 0.5 * (box.b[0] + box.b[1]), box.b[1]};
  const double cs[3] = {box.c[0], 0.5 * (box.c[0] + box.c[1]), box.c[1]};
  const double a = box.a[0];
  for (int i = 0; i < 9; ++i)
    for (int j = i + 1; j < 9; ++j) {
      const std::array<double, 3> p{a, bs[i / 3], cs[i % 3]}, q{a, bs[j / 3], cs[j % 3]};
      const BoundaryData pp = fam.boundary(p), qq = fam.boundary(q);
      const auto [mx, mn] = boundary_extrema(
          domain, [&](double x, double y) { return pp(x, y) - qq(x, y); });
      SLGEO_THROW_IF(mx != 1 || mn != 1, ErrorKind::InvalidFamily,
                     "difference of members (b,c)=(" + std::to_string(p[1]) + "," +
                         std::to_string(p[2]) + ") and (" + std::to_string(q[1]) + "," +
                         std::to_string(q[2]) + ") has " + std::to_string(mx) + " maxima and " +
                         std::to_string(mn) + " minima on the boundary");
    }
  return fam;
}

struct PairCheck {
  std::array<double, 3> alpha{};
  std::array<double, 3> beta{};
  bool same_a = false;
  int difference_zero_count = 0;
  double moment_gap = 0.0;  // |2a - 2a'| as realized by the lifted points
  double min_distance = 0.0;
  bool disjoint = false;
};

struct DisjointReport {
  std::vector<PairCheck> pairs;
  bool all_disjoint = true;
};

inline double min_cloud_distance(const std::vector<CVec>& p, const std::vector<CVec>& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : p)
    for (const auto& y : q) best = std::min(best, (x - y).squaredNorm());
  return std::sqrt(best);
}

/// Disjointness of fibers: same-a pairs by zeros of the difference of their
/// (u, v), different-a pairs by their moment-map levels.
inline DisjointReport check_disjoint(
    const FibrationFamily& fam,
    const std::vector<std::pair<std::array<double, 3>, std::array<double, 3>>>& alpha_pairs,
    int samples = 1) {
  DisjointReport rep;
  for (const auto& [al, be] : alpha_pairs) {
    PairCheck pc;
    pc.alpha = al;
    pc.beta = be;
    pc.same_a = al[0] == be[0];
    const auto s1 = fam.solution(al), s2 = fam.solution(be);
    const FiberRecord f1 = fam.fiber(al, samples), f2 = fam.fiber(be, samples);
    pc.min_distance = min_cloud_distance(f1.points, f2.points);
    if (pc.same_a) {
      const DifferenceZeros dz = difference_zeros(*s1, *s2);
      pc.difference_zero_count = static_cast<int>(dz.zeros.size());
      pc.disjoint = !dz.identical && dz.zeros.empty();
    } else {
      double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1;
      double lo2 = lo1, hi2 = hi1;
      for (const auto& p : f1.points) {
        const double mu = std::norm(p(0)) - std::norm(p(1));
        lo1 = std::min(lo1, mu);
        hi1 = std::max(hi1, mu);
      }
      for (const auto& p : f2.points) {
        const double mu = std::norm(p(0)) - std::norm(p(1));
        lo2 = std::min(lo2, mu);
        hi2 = std::max(hi2, mu);
      }
      pc.moment_gap = std::max(lo2 - hi1, lo1 - hi2);
      pc.disjoint = pc.moment_gap > 0.0;
    }
    rep.all_disjoint = rep.all_disjoint && pc.disjoint;
    rep.pairs.push_back(pc);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The explicit piecewise-smooth fibration of C^3.

struct ExplicitValue {
  double a = 0.0;
  cplx b;
};

inline ExplicitValue explicit_F(const CVec& p) {
  const cplx z1 = p(0), z2 = p(1), z3 = p(2);
  ExplicitValue out;
  out.a = 0.5 * (std::norm(z1) - std::norm(z2));
  if (out.a == 0.0 && z1 == cplx{} && z2 == cplx{}) {
    out.b = z3;
  } else if (out.a >= 0.0 && z1 != cplx{}) {
    out.b = z3 + std::conj(z1) * std::conj(z2) / std::abs(z1);
  } else {
    out.b = z3 + std::conj(z1) * std::conj(z2) / std::abs(z2);
  }
  return out;
}

namespace detail {

/// Point of the explicit fiber over (a, b): s is the smaller orbit radius,
/// th1, th2 the orbit angles. Fills the tangent vectors when asked.
inline CVec explicit_fiber_point(double a, cplx b, double s, double th1, double th2,
                                 Mat* tangents = nullptr) {
  const double big = a == 0.0 ? s : std::sqrt(s * s + 2 * std::abs(a));
  const bool z1_big = a >= 0.0;
  const double r1 = z1_big ? big : s, r2 = z1_big ? s : big;
  const cplx e1 = std::polar(1.0, th1), e2 = std::polar(1.0, th2), e3 = std::polar(1.0, -th1 - th2);
  CVec p(3);
  p << r1 * e1, r2 * e2, b - s * e3;
  if (tangents) {
    const cplx I(0, 1);
    const double dr1 = z1_big ? (big > 0 ? s / big : 1.0) : 1.0;
    const double dr2 = z1_big ? 1.0 : (big > 0 ? s / big : 1.0);
    CVec ds(3), d1(3), d2(3);
    ds << dr1 * e1, dr2 * e2, -e3;
    d1 << I * p(0), 0.0, I * s * e3;
    d2 << 0.0, I * p(1), I * s * e3;
    tangents->resize(6, 3);
    tangents->col(0) = to_real(ds);
    tangents->col(1) = to_real(d1);
    tangents->col(2) = to_real(d2);
  }
  return p;
}

}  // namespace detail

/// Samples F^{-1}(a, b) on a (radius, angle, angle) grid with the given
/// number of values per axis.
inline FiberRecord explicit_F_fiber(double a, cplx b, int samples, double s_max = 2.0) {
  SLGEO_THROW_IF(samples < 2, ErrorKind::InvalidArgument, "need at least two samples per axis");
  const CYPackage pkg = standard_cy_package(3);
  FiberRecord rec;
  rec.alpha = {a, b.real(), b.imag()};
  for (int k = 1; k <= samples; ++k) {
    const double s = s_max * k / samples;
    for (int i = 0; i < samples; ++i)
      for (int j = 0; j < samples; ++j) {
        Mat t;
        const CVec p = detail::explicit_fiber_point(a, b, s, 2 * kPi * i / samples,
                                                    2 * kPi * j / samples, &t);
        rec.points.push_back(p);
        rec.sl_residual_max = std::max(rec.sl_residual_max, sl_defect(make_plane(t), pkg));
      }
  }
  // Core of the fiber (s = 0): the orbit circle of z_k survives iff |z_k| > 0 there.
  const CVec core = detail::explicit_fiber_point(a, b, 0.0, 0.0, 0.0);
  const bool c1 = std::abs(core(0)) > 0.0, c2 = std::abs(core(1)) > 0.0;
  if (!c1 && !c2) {
    rec.topology = Topology::T2_cone;
    rec.singular_points.push_back(core);
    rec.persistent_circle = 0;
  } else {
    rec.topology = Topology::S1xR2;
    rec.persistent_circle = c1 ? 1 : 2;
    for (int i = 0; i < samples; ++i)
      rec.points.push_back(detail::explicit_fiber_point(a, b, 0.0, 2 * kPi * i / samples,
                                                        2 * kPi * i / samples));
  }
  return rec;
}

/// Max |D+ F - D- F| of the one-sided directional derivatives of F at p
/// along d, with step h.
inline double explicit_F_derivative_jump(const CVec& p, const CVec& d, double h = 1e-6) {
  const ExplicitValue f0 = explicit_F(p), fp = explicit_F(p + h * d), fm = explicit_F(p - h * d);
  const double da = std::abs((fp.a - f0.a) / h - (f0.a - fm.a) / h);
  const double db = std::abs((fp.b - f0.b) / h - (f0.b - fm.b) / h);
  return std::max(da, db);
}

// ---------------------------------------------------------------------------
// The T^2-invariant fibration (|z1|^2 - |z3|^2, |z2|^2 - |z3|^2, Im z1 z2 z3).

inline Eigen::Vector3d harvey_lawson_F(const CVec& p) {
  return {std::norm(p(0)) - std::norm(p(2)), std::norm(p(1)) - std::norm(p(2)),
          (p(0) * p(1) * p(2)).imag()};
}

/// 3 x 6 real Jacobian of harvey_lawson_F.
inline Mat harvey_lawson_jacobian(const CVec& p) {
  Mat j = Mat::Zero(3, 6);
  const Vec x = to_real(p);
  j(0, 0) = 2 * x(0), j(0, 1) = 2 * x(1), j(0, 4) = -2 * x(4), j(0, 5) = -2 * x(5);
  j(1, 2) = 2 * x(2), j(1, 3) = 2 * x(3), j(1, 4) = -2 * x(4), j(1, 5) = -2 * x(5);
  // d Im(z1 z2 z3) along dz_k = dx + i dy: Im(w_k dz_k) with w_k the product of the others.
  const cplx w[3] = {p(1) * p(2), p(0) * p(2), p(0) * p(1)};
  for (int k = 0; k < 3; ++k) {
    j(2, 2 * k) = w[k].imag();
    j(2, 2 * k + 1) = w[k].real();
  }
  return j;
}

/// Numerical rank: singular values below 1e-8 of the largest count as zero.
inline int numerical_rank(const Mat& m, double rel = 1e-8) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) r += s(k) >= rel * s(0) ? 1 : 0;
  return r;
}

/// Kernel of the Jacobian as a tangent 3-plane (valid at rank-3 points).
inline TangentPlane harvey_lawson_kernel(const CVec& p) {
  Eigen::JacobiSVD<Mat> svd(harvey_lawson_jacobian(p), Eigen::ComputeFullV);
  return make_plane(svd.matrixV().rightCols(3));
}

namespace detail {
/// Solves (t + a)(t + b) t = target for t >= max(0, -a, -b) by safeguarded Newton.
inline double hl_solve_r3sq(double a, double b, double target) {
  const double t0 = std::max({0.0, -a, -b});
  auto g = [&](double t) { return (t + a) * (t + b) * t - target; };
  double lo = t0, hi = t0 + 1.0;
  while (g(hi) < 0) hi = t0 + 2 * (hi - t0);
  double t = hi;
  for (int it = 0; it < 200; ++it) {
    const double gt = g(t);
    if (gt > 0) hi = t; else lo = t;
    const double dg = (t + b) * t + (t + a) * t + (t + a) * (t + b);
    double next = dg > 0 ? t - gt / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, t)) return next;
    t = next;
  }
  return t;
}
}  // namespace detail

/// Samples the level set N_{a,b,c} along T^2 orbits. For c != 0 the phase
/// sum Theta = th1 + th2 + th3 sweeps the open half circle with the sign of
/// c and r3 follows; for c = 0, Theta is 0 or pi and r3 sweeps.
inline FiberRecord classify_fiber_hl(double a, double b, double c, int samples, double r3_max = 2.0) {
  SLGEO_THROW_IF(samples < 2, ErrorKind::InvalidArgument, "need at least two samples per axis");
  const CYPackage pkg = standard_cy_package(3);
  FiberRecord rec;
  rec.alpha = {a, b, c};
  const double t0 = std::max({0.0, -a, -b});
  auto add_point = [&](double t, double th1, double th2, double theta) {
    const double r1 = std::sqrt(std::max(0.0, t + a)), r2 = std::sqrt(std::max(0.0, t + b));
    const double r3 = std::sqrt(std::max(0.0, t));
    CVec p(3);
    p << std::polar(r1, th1), std::polar(r2, th2), std::polar(r3, theta - th1 - th2);
    rec.points.push_back(p);
    const Mat jac = harvey_lawson_jacobian(p);
    if (numerical_rank(jac) < 3) {
      bool seen = false;
      for (const auto& q : rec.singular_points) seen = seen || (q - p).norm() < 1e-9;
      if (!seen) rec.singular_points.push_back(p);
    } else {
      rec.sl_residual_max = std::max(rec.sl_residual_max, sl_defect(harvey_lawson_kernel(p), pkg));
    }
  };
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j < samples; ++j) {
      const double th1 = 2 * kPi * i / samples, th2 = 2 * kPi * j / samples;
      if (c != 0.0) {
        for (int k = 1; k <= samples; ++k) {
          const double theta = (c > 0 ? 0.0 : kPi) + kPi * k / (samples + 1);
          const double sn = std::sin(theta);
          add_point(detail::hl_solve_r3sq(a, b, c * c / (sn * sn)), th1, th2, theta);
        }
      } else {
        for (int k = 0; k <= samples; ++k) {
          const double t = t0 + (r3_max * r3_max) * k / samples;
          add_point(t, th1, th2, 0.0);
          if (k > 0) add_point(t, th1, th2, kPi);
        }
      }
    }
  const bool origin = std::any_of(rec.singular_points.begin(), rec.singular_points.end(),
                                  [](const CVec& p) { return p.norm() < 1e-12; });
  if (origin) {
    rec.topology = Topology::T2_cone;
  } else if (rec.singular_points.empty()) {
    rec.topology = Topology::T3_like;
    rec.note = "T^2 x R";
  } else {
    rec.topology = Topology::other;
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Discriminants.

struct DiscriminantHit {
  std::array<double, 3> alpha{};
  std::size_t singular_count = 0;
  bool entire_axis = false;
};

/// a-values of the explicit fibration (at fixed b) whose fibers are singular.
inline std::vector<DiscriminantHit> discriminant_scan_explicit(const std::vector<double>& a_values,
                                                               cplx b = 0.0, int samples = 4) {
  std::vector<DiscriminantHit> hits;
  for (double a : a_values) {
    const FiberRecord rec = explicit_F_fiber(a, b, samples);
    if (!rec.singular_points.empty())
      hits.push_back({rec.alpha, rec.singular_points.size(), false});
  }
  return hits;
}

/// a-values of a U(1) family (at fixed b, c) whose fibers are singular.
inline std::vector<DiscriminantHit> discriminant_scan(const FibrationFamily& fam,
                                                      const std::vector<double>& a_values,
                                                      double b = 0.0, double c = 0.0) {
  std::vector<DiscriminantHit> hits;
  for (double a : a_values) {
    const std::array<double, 3> al{a, b, c};
    const auto sol = fam.solution(al);
    const SingularSet sp = singular_points(*sol);
    if (!sp.points.empty()) hits.push_back({al, sp.points.size(), sp.entire_axis});
  }
  return hits;
}

/// Evenly spaced values lo, ..., hi (count >= 2).
inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(count);
  for (int k = 0; k < count; ++k) v[k] = lo + (hi - lo) * k / (count - 1);
  if (count > 1) v.back() = hi;
  return v;
}

}  // namespace slgeo

#endif  // SLGEO_SL_FIBRATIONS_HPP
