#ifndef SLGEO_MODEL_FAMILIES_HPP
#define SLGEO_MODEL_FAMILIES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slgeo/core_geometry.hpp"
#include "slgeo/errors.hpp"
#include "slgeo/numerics.hpp"

namespace slgeo {

enum class FamilyKind { hl_cone_L0, hl_Lt, so3_Lt, quadric_L, branched_leading };

inline std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::hl_cone_L0: return "hl_cone_L0";
    case FamilyKind::hl_Lt: return "hl_Lt";
    case FamilyKind::so3_Lt: return "so3_Lt";
    case FamilyKind::quadric_L: return "quadric_L";
    case FamilyKind::branched_leading: return "branched_leading";
  }
  return "?";
}

/// Closed-form SL 3-folds in C^3. Parameter triples per kind:
///   hl_cone_L0        (r, th1, th2)        -> (r e^{i th1}, r e^{i th2}, r e^{-i(th1+th2)})
///   hl_Lt             (th, x, y)            -> ((|z|^2+t^2)^{1/2} e^{i th}, z, e^{-i th} conj z), z = x+iy
///   so3_Lt            (th, alpha, beta)     -> e^{i th} R(th) n(alpha, beta), R = t (sin 3th)^{-1/3}
///   quadric_L         (th, x1, x2)          -> (e^{i a1 th} x1, e^{i a2 th} x2, i e^{i a3 th} x3), x3 > 0
///   branched_leading  (x, y, t)             -> leading-order branched double cover
struct ModelFamily {
  FamilyKind kind = FamilyKind::hl_Lt;
  double t = 1.0;
  int a1 = 1, a2 = 2;
  double c = 1.0;
  CVec u = CVec::Unit(3, 0);
  CVec v = CVec::Unit(3, 1);
};

inline ModelFamily hl_cone() { return {FamilyKind::hl_cone_L0}; }
inline ModelFamily hl_family(double t) { return {FamilyKind::hl_Lt, t}; }
inline ModelFamily so3_family(double t) { return {FamilyKind::so3_Lt, t}; }
inline ModelFamily quadric_family(int a1, int a2, double c) {
  ModelFamily f{FamilyKind::quadric_L};
  f.a1 = a1;
  f.a2 = a2;
  f.c = c;
  return f;
}

/// The product of the branched cover: (r x s)_j = conj(r_k s_l - r_l s_k)/2, (j,k,l) cyclic.
inline CVec branched_cross(const CVec& r, const CVec& s) {
  CVec out(3);
  out << std::conj(r(1) * s(2) - r(2) * s(1)), std::conj(r(2) * s(0) - r(0) * s(2)),
      std::conj(r(0) * s(1) - r(1) * s(0));
  return 0.5 * out;
}

inline double kahler_pairing(const CVec& r, const CVec& s) {
  return to_real(r).dot(kahler_matrix(static_cast<int>(r.size())) * to_real(s));
}

inline ModelFamily branched_family(const CVec& u, const CVec& v) {
  SLGEO_THROW_IF(u.size() != 3 || v.size() != 3, ErrorKind::InvalidDimension, "u, v must lie in C^3");
  const double scale = u.norm() * v.norm();
  SLGEO_THROW_IF(scale == 0.0 || branched_cross(u, v).norm() < 1e-12 * scale, ErrorKind::InvalidArgument,
                 "u, v must be linearly independent");
  SLGEO_THROW_IF(std::abs(kahler_pairing(u, v)) > 1e-12 * scale, ErrorKind::InvalidArgument,
                 "u, v must satisfy omega(u, v) = 0");
  ModelFamily f{FamilyKind::branched_leading};
  f.u = u;
  f.v = v;
  return f;
}

struct FamilyPoint {
  CVec point;
  TangentPlane tangent;
};

inline void check_family(const ModelFamily& fam) {
  switch (fam.kind) {
    case FamilyKind::hl_Lt:
    case FamilyKind::so3_Lt:
      SLGEO_THROW_IF(!(fam.t > 0.0), ErrorKind::OutOfRange, "family parameter t must be positive");
      break;
    case FamilyKind::quadric_L:
      SLGEO_THROW_IF(fam.a1 <= 0 || fam.a2 <= 0 || std::gcd(fam.a1, fam.a2) != 1, ErrorKind::OutOfRange,
                     "a1, a2 must be positive coprime integers");
      break;
    default: break;
  }
}

/// Point and analytically differentiated tangent plane.
inline FamilyPoint family_point(const ModelFamily& fam, const Eigen::Vector3d& q) {
  check_family(fam);
  const cplx I(0, 1);
  CVec p(3), d0(3), d1(3), d2(3);
  switch (fam.kind) {
    case FamilyKind::hl_cone_L0: {
      const double r = q(0);
      SLGEO_THROW_IF(!(r > 0.0), ErrorKind::OutOfRange, "cone radius must be positive");
      const cplx e1 = std::polar(1.0, q(1)), e2 = std::polar(1.0, q(2)), e3 = std::polar(1.0, -q(1) - q(2));
      p << r * e1, r * e2, r * e3;
      d0 << e1, e2, e3;
      d1 << I * r * e1, 0.0, -I * r * e3;
      d2 << 0.0, I * r * e2, -I * r * e3;
      break;
    }
    case FamilyKind::hl_Lt: {
      const cplx z(q(1), q(2)), e = std::polar(1.0, q(0));
      const double rho = std::sqrt(std::norm(z) + fam.t * fam.t);
      p << rho * e, z, std::conj(e) * std::conj(z);
      d0 << I * rho * e, 0.0, -I * std::conj(e) * std::conj(z);
      d1 << q(1) / rho * e, 1.0, std::conj(e);
      d2 << q(2) / rho * e, I, -I * std::conj(e);
      break;
    }
    case FamilyKind::so3_Lt: {
      const double th = q(0);
      SLGEO_THROW_IF(!(th > 0.0 && th < kPi / 3), ErrorKind::OutOfRange, "theta must lie in (0, pi/3)");
      const double s3 = std::sin(3 * th);
      const double r = fam.t * std::cbrt(1.0 / s3);
      const double dr = -fam.t * std::cos(3 * th) * std::pow(s3, -4.0 / 3.0);
      const double sa = std::sin(q(1)), ca = std::cos(q(1)), sb = std::sin(q(2)), cb = std::cos(q(2));
      const Eigen::Vector3d n(sa * cb, sa * sb, ca), na(ca * cb, ca * sb, -sa), nb(-sa * sb, sa * cb, 0);
      const cplx e = std::polar(1.0, th);
      p = (e * r) * n.cast<cplx>();
      d0 = ((I * r + dr) * e) * n.cast<cplx>();
      d1 = (e * r) * na.cast<cplx>();
      d2 = (e * r) * nb.cast<cplx>();
      break;
    }
    case FamilyKind::quadric_L: {
      const int a1 = fam.a1, a2 = fam.a2, a3 = -fam.a1 - fam.a2;
      const double th = q(0), x1 = q(1), x2 = q(2);
      const double x3sq = (a1 * x1 * x1 + a2 * x2 * x2 - fam.c) / (a1 + a2);
      SLGEO_THROW_IF(!(x3sq > 0.0), ErrorKind::OutOfRange, "(x1, x2) outside the quadric chart x3 > 0");
      const double x3 = std::sqrt(x3sq);
      const cplx e1 = std::polar(1.0, a1 * th), e2 = std::polar(1.0, a2 * th), e3 = I * std::polar(1.0, a3 * th);
      p << e1 * x1, e2 * x2, e3 * x3;
      d0 << I * double(a1) * e1 * x1, I * double(a2) * e2 * x2, I * double(a3) * e3 * x3;
      d1 << e1, 0.0, e3 * (a1 * x1 / ((a1 + a2) * x3));
      d2 << 0.0, e2, e3 * (a2 * x2 / ((a1 + a2) * x3));
      break;
    }
    case FamilyKind::branched_leading: {
      const double x = q(0), y = q(1), t = q(2);
      const double g = to_real(fam.u).dot(to_real(fam.v)), uu = fam.u.squaredNorm();
      const CVec w = branched_cross(fam.u, fam.v);
      p = (x + 0.25 * g * t * t) * fam.u + (y * y - 0.25 * uu * t * t) * fam.v + (2 * y * t) * w;
      d0 = fam.u;
      d1 = (2 * y) * fam.v + (2 * t) * w;
      d2 = (0.5 * g * t) * fam.u - (0.5 * uu * t) * fam.v + (2 * y) * w;
      break;
    }
  }
  Mat b(6, 3);
  b.col(0) = to_real(d0);
  b.col(1) = to_real(d1);
  b.col(2) = to_real(d2);
  return {p, make_plane(b)};
}

/// Seeded parameter sample away from the degenerate loci of each chart.
/// patch scales the box for branched_leading (which is only a local model).
inline Eigen::Vector3d sample_parameters(const ModelFamily& fam, std::mt19937_64& rng, double patch = 1.0) {
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi), u01(0.0, 1.0), sym(-1.0, 1.0);
  switch (fam.kind) {
    case FamilyKind::hl_cone_L0: return {0.1 + 3 * u01(rng), ang(rng), ang(rng)};
    case FamilyKind::hl_Lt: return {ang(rng), 3 * sym(rng), 3 * sym(rng)};
    case FamilyKind::so3_Lt:
      return {kPi / 3 * (0.02 + 0.96 * u01(rng)), 0.1 + (kPi - 0.2) * u01(rng), ang(rng)};
    case FamilyKind::quadric_L:
      for (;;) {
        const double x1 = 3 * sym(rng), x2 = 3 * sym(rng);
        if ((fam.a1 * x1 * x1 + fam.a2 * x2 * x2 - fam.c) / (fam.a1 + fam.a2) > 0.01) return {ang(rng), x1, x2};
      }
    case FamilyKind::branched_leading:
      for (;;) {
        const Eigen::Vector3d q(patch * sym(rng), patch * sym(rng), patch * sym(rng));
        if (std::hypot(q(1), q(2)) > 0.05 * patch) return q;
      }
  }
  return Eigen::Vector3d::Zero();
}

/// Max SL defect of the analytic tangent planes over n seeded samples.
inline double sl_residual_sweep(const ModelFamily& fam, int n_samples, std::uint64_t seed = 1,
                                double patch = 1.0) {
  const CYPackage pkg = standard_cy_package(3);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k)
    worst = std::max(worst, sl_defect(family_point(fam, sample_parameters(fam, rng, patch)).tangent, pkg));
  return worst;
}

// ---------------------------------------------------------------------------
// Asymptotic cones.

/// Distance from p to the cone L0. Off the coordinate axes the nearest cone
/// point shares the phases of p when the phases already sum to zero; in
/// general the phases are optimized from that start.
inline double distance_to_L0(const CVec& p) {
  auto dist_at = [&](double a1, double a2) {
    const cplx w[3] = {std::polar(1.0, a1), std::polar(1.0, a2), std::polar(1.0, -a1 - a2)};
    double proj = 0;
    for (int k = 0; k < 3; ++k) proj += (std::conj(w[k]) * p(k)).real();
    const double r = std::max(0.0, proj / 3.0);
    double d2 = 0;
    for (int k = 0; k < 3; ++k) d2 += std::norm(p(k) - r * w[k]);
    return d2;
  };
  double a1 = std::arg(p(0)), a2 = std::arg(p(1));
  double best = dist_at(a1, a2);
  // Coordinate refinement; a no-op when the phases of p already sum to zero.
  for (double step = 0.1; step > 1e-12; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto& [da, db] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
        const double d = dist_at(a1 + da, a2 + db);
        if (d < best) {
          best = d;
          a1 += da;
          a2 += db;
          moved = true;
        }
      }
    }
  }
  return std::sqrt(best);
}

/// Distance from p to the plane pair R^3 u e^{i pi/3} R^3.
inline double distance_to_plane_pair(const CVec& p) {
  const double d1 = p.imag().norm();
  const double d2 = (std::polar(1.0, -kPi / 3) * p).imag().norm();
  return std::min(d1, d2);
}

struct AcFit {
  LineFit fit;
  std::vector<double> radii;
  std::vector<double> distances;
  std::vector<std::string> warnings;
};

/// Fitted exponent of the distance to the asymptotic cone against r = |p|,
/// along one ray of the family out to infinity (hl_Lt against L0, so3_Lt
/// against the plane pair, hl_cone_L0 against itself).
inline AcFit ac_decay_rate(const ModelFamily& fam, const std::vector<double>& radii) {
  check_family(fam);
  SLGEO_THROW_IF(radii.size() < 2, ErrorKind::InvalidArgument, "need at least two radii");
  AcFit out;
  const double core = fam.kind == FamilyKind::hl_cone_L0 ? 0.0 : 3.0 * fam.t;
  bool small = false;
  for (double r : radii) {
    SLGEO_THROW_IF(!(r > 0.0), ErrorKind::InvalidArgument, "radii must be positive");
    small = small || r < core;
    CVec p;
    double d = 0.0;
    switch (fam.kind) {
      case FamilyKind::hl_cone_L0:
        p = family_point(fam, {r, 0.4, 1.1}).point;
        d = distance_to_L0(p);
        break;
      case FamilyKind::hl_Lt: {
        // z = s e^{i 0.7}, th = 0.3, with |p|^2 = 3 s^2 + t^2.
        const double s = std::sqrt(std::max(0.0, (r * r - fam.t * fam.t) / 3.0));
        p = family_point(fam, {0.3, s * std::cos(0.7), s * std::sin(0.7)}).point;
        d = distance_to_L0(p);
        break;
      }
      case FamilyKind::so3_Lt: {
        SLGEO_THROW_IF(r < fam.t, ErrorKind::OutOfRange, "so3 family has no points with |p| < t");
        const double th = std::asin(std::pow(fam.t / r, 3)) / 3.0;
        p = family_point(fam, {th, 0.9, 0.4}).point;
        d = distance_to_plane_pair(p);
        break;
      }
      default: SLGEO_THROW_IF(true, ErrorKind::InvalidArgument, "family has no asymptotic cone model");
    }
    out.radii.push_back(p.norm());
    out.distances.push_back(d < 1e-13 * std::max(1.0, r) ? 0.0 : d);
  }
  if (small) out.warnings.push_back("radii inside the compact core; fit unreliable");
  out.fit = fit_loglog(out.radii, out.distances);
  return out;
}

// ---------------------------------------------------------------------------
// Legendrian index of flat-torus links.

/// Link of L0 in the unit sphere, (th1, th2) -> (e^{i th1}, e^{i th2}, e^{-i th1 - i th2}) / sqrt 3:
/// |d th_k|^2 = 2/3 and <d th1, d th2> = 1/3.
inline Eigen::Matrix2d l0_link_gram() {
  Eigen::Matrix2d g;
  g << 1.0, 0.5, 0.5, 1.0;
  return (2.0 / 3.0) * g;
}

/// Laplacian eigenvalues n^T G^{-1} n, |n_i| <= cutoff, n != 0, on R^2 / 2 pi Z^2
/// with metric G. Keys are rounded to 1e-9 to merge equal values.
inline std::map<double, int> flat_torus_spectrum(const Eigen::Matrix2d& gram, int cutoff) {
  SLGEO_THROW_IF((gram - gram.transpose()).norm() > 1e-12 * gram.norm() || gram.determinant() <= 0 ||
                     gram(0, 0) <= 0,
                 ErrorKind::InvalidArgument, "Gram matrix must be symmetric positive definite");
  const Eigen::Matrix2d ginv = gram.inverse();
  std::map<double, int> spec;
  for (int i = -cutoff; i <= cutoff; ++i)
    for (int j = -cutoff; j <= cutoff; ++j) {
      if (i == 0 && j == 0) continue;
      const Eigen::Vector2d n(i, j);
      spec[std::round(n.dot(ginv * n) * 1e9) / 1e9] += 1;
    }
  return spec;
}

/// Number of eigenvalues in (0, 2m), with multiplicity.
inline int legendrian_index_flat_torus(const Eigen::Matrix2d& gram, int m, int cutoff) {
  const auto spec = flat_torus_spectrum(gram, cutoff);
  const double lam_min = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(gram.inverse()).eigenvalues()(0);
  // Frequencies outside the box have |n|^2 >= (cutoff+1)^2.
  SLGEO_THROW_IF(lam_min * (cutoff + 1.0) * (cutoff + 1.0) < 2.0 * m, ErrorKind::NeedsLargerCutoff,
                 "cutoff " + std::to_string(cutoff) + " cannot exclude eigenvalues below " + std::to_string(2 * m));
  int count = 0;
  for (const auto& [lam, mult] : spec)
    if (lam > 0.0 && lam < 2.0 * m) count += mult;
  return count;
}

/// Multiplicity of the eigenvalue 2m (raw input to rigidity questions).
inline int eigenvalue_multiplicity(const Eigen::Matrix2d& gram, double lambda, int cutoff) {
  const auto spec = flat_torus_spectrum(gram, cutoff);
  const auto it = spec.find(std::round(lambda * 1e9) / 1e9);
  return it == spec.end() ? 0 : it->second;
}

/// Each sphere end contributes m, every other end at least 2m.
inline int lower_bound_lind(int k_spheres, int k_other, int m) {
  SLGEO_THROW_IF(k_spheres < 0 || k_other < 0, ErrorKind::InvalidArgument, "counts must be nonnegative");
  return m * k_spheres + 2 * m * k_other;
}

// ---------------------------------------------------------------------------
// Moduli of complete intersections.

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct ModuliResult {
  std::int64_t dimension = 0;
  std::int64_t polynomial_space = 0;  // dim of degree-d forms in n variables
  bool degenerate = false;            // linear equations: no moduli to count
  bool overdetermined = false;
};

/// Defining systems modulo rescaling and PGL(n): C(n+d-1, d) - 1 - (n^2 - 1)
/// for one hypersurface, dim Gr(k, C(n+d-1, d)) - (n^2 - 1) for k equal degrees.
inline ModuliResult ci_moduli_dimension(int num_vars, const std::vector<int>& degrees) {
  SLGEO_THROW_IF(num_vars < 1 || degrees.empty(), ErrorKind::InvalidArgument,
                 "need a positive variable count and at least one degree");
  for (int d : degrees) SLGEO_THROW_IF(d < 1, ErrorKind::InvalidArgument, "degrees must be positive");
  for (int d : degrees)
    SLGEO_THROW_IF(d != degrees[0], ErrorKind::InvalidArgument, "only equal degrees are supported");
  ModuliResult r;
  const int d = degrees[0];
  const auto k = static_cast<std::int64_t>(degrees.size());
  r.polynomial_space = binomial(num_vars + d - 1, d);
  if (d == 1) {
    r.degenerate = true;
    return r;
  }
  const std::int64_t pgl = static_cast<std::int64_t>(num_vars) * num_vars - 1;
  r.dimension = (k == 1 ? r.polynomial_space - 1 : k * (r.polynomial_space - k)) - pgl;
  r.overdetermined = r.dimension < 0;
  return r;
}

}  // namespace slgeo

#endif  // SLGEO_MODEL_FAMILIES_HPP
