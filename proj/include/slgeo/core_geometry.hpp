#ifndef SLGEO_CORE_GEOMETRY_HPP
#define SLGEO_CORE_GEOMETRY_HPP

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slgeo/errors.hpp"
#include "slgeo/exterior.hpp"

namespace slgeo {

// Real coordinates on C^m: z_j = x[2j] + i x[2j+1] (0-based).

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline Vec to_real(const CVec& z) {
  Vec x(2 * z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    x(2 * j) = z(j).real();
    x(2 * j + 1) = z(j).imag();
  }
  return x;
}

inline CVec to_complex(const Vec& x) {
  CVec z(x.size() / 2);
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = cplx(x(2 * j), x(2 * j + 1));
  return z;
}

/// Real 2m x 2m matrix of z -> C z.
inline Mat real_embedding(const CMat& c) {
  const Eigen::Index m = c.rows();
  Mat r(2 * m, 2 * c.cols());
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
      const cplx v = c(j, k);
      r(2 * j, 2 * k) = v.real();
      r(2 * j, 2 * k + 1) = -v.imag();
      r(2 * j + 1, 2 * k) = v.imag();
      r(2 * j + 1, 2 * k + 1) = v.real();
    }
  return r;
}

/// Complex structure J (multiplication by i).
inline Mat complex_structure(int m) {
  return real_embedding(CMat::Identity(m, m) * cplx(0, 1));
}

/// Matrix W with omega(v, w) = v^T W w.
inline Mat kahler_matrix(int m) {
  Mat w = Mat::Zero(2 * m, 2 * m);
  for (int j = 0; j < m; ++j) {
    w(2 * j, 2 * j + 1) = 1.0;
    w(2 * j + 1, 2 * j) = -1.0;
  }
  return w;
}

/// Flat Calabi-Yau structure (g, omega, Omega) on C^m.
struct CYPackage {
  int m = 0;
  Mat metric;
  Mat kahler;             // antisymmetric matrix of omega
  ExteriorForm omega{1, 0};
  ExteriorForm holomorphic_volume{1, 0};
};

inline CYPackage standard_cy_package(int m) {
  SLGEO_THROW_IF(m < 1, ErrorKind::InvalidDimension, "complex dimension must be at least 1");
  CYPackage pkg;
  pkg.m = m;
  pkg.metric = Mat::Identity(2 * m, 2 * m);
  pkg.kahler = kahler_matrix(m);
  pkg.omega = ExteriorForm(2 * m, 2);
  for (int j = 0; j < m; ++j) pkg.omega.add_term({2 * j, 2 * j + 1}, 1.0);
  ExteriorForm vol(2 * m, 0);
  vol.add_term({}, 1.0);
  for (int j = 0; j < m; ++j) {
    const ExteriorForm dz = ExteriorForm::basis(2 * m, 2 * j) +
                            cplx(0, 1) * ExteriorForm::basis(2 * m, 2 * j + 1);
    vol = vol.wedge(dz);
  }
  pkg.holomorphic_volume = vol;
  return pkg;
}

/// |omega^m/m! - (-1)^{m(m-1)/2} (i/2)^m Omega ^ conj(Omega)| on the standard basis.
inline double normalization_residual(const CYPackage& pkg) {
  const int m = pkg.m;
  ExteriorForm top(2 * m, 0);
  top.add_term({}, 1.0);
  double fact = 1.0;
  for (int j = 0; j < m; ++j) {
    top = top.wedge(pkg.omega);
    fact *= static_cast<double>(j + 1);
  }
  const ExteriorForm oo = pkg.holomorphic_volume.wedge(pkg.holomorphic_volume.conj());
  std::vector<Vec> basis;
  for (int k = 0; k < 2 * m; ++k) basis.push_back(Vec::Unit(2 * m, k));
  const cplx lhs = top.evaluate(basis) / fact;
  const double sign = ((m * (m - 1) / 2) % 2 == 0) ? 1.0 : -1.0;
  const cplx rhs = sign * std::pow(cplx(0, 0.5), m) * oo.evaluate(basis);
  return std::abs(lhs - rhs);
}

/// Max |omega(Jv, Jw) - omega(v, w)| over basis pairs, and antisymmetry defect.
inline double kahler_invariance_residual(const CYPackage& pkg) {
  const Mat j = complex_structure(pkg.m);
  return (j.transpose() * pkg.kahler * j - pkg.kahler).cwiseAbs().maxCoeff() +
         (pkg.kahler + pkg.kahler.transpose()).cwiseAbs().maxCoeff();
}

/// Oriented real m-plane in R^{2m}; basis vectors are the columns.
struct TangentPlane {
  int m = 0;
  Mat basis;
  int orientation = 1;
};

inline TangentPlane make_plane(const Mat& basis, int orientation = 1) {
  SLGEO_THROW_IF(basis.rows() != 2 * basis.cols(), ErrorKind::InvalidDimension,
                 "plane basis must be 2m x m");
  return TangentPlane{static_cast<int>(basis.cols()), basis, orientation >= 0 ? 1 : -1};
}

/// R^m inside C^m.
inline TangentPlane real_plane(int m) {
  Mat b = Mat::Zero(2 * m, m);
  for (int j = 0; j < m; ++j) b(2 * j, j) = 1.0;
  return make_plane(b);
}

/// {(e^{i th_1} x_1, ..., e^{i th_m} x_m)}.
inline TangentPlane phase_plane(const std::vector<double>& thetas) {
  const int m = static_cast<int>(thetas.size());
  Mat b = Mat::Zero(2 * m, m);
  for (int j = 0; j < m; ++j) {
    b(2 * j, j) = std::cos(thetas[j]);
    b(2 * j + 1, j) = std::sin(thetas[j]);
  }
  return make_plane(b);
}

inline TangentPlane transform_plane(const CMat& u, const TangentPlane& p) {
  return make_plane(real_embedding(u) * p.basis, p.orientation);
}

struct FormRatios {
  double omega = 0.0;
  double im_omega = 0.0;
  double re_omega = 0.0;
};

/// Restrictions of omega, Im Omega, Re Omega to the plane as multiples of vol_V.
inline FormRatios restrict_forms(const TangentPlane& plane, const CYPackage& pkg) {
  SLGEO_THROW_IF(plane.m != pkg.m || plane.basis.rows() != 2 * pkg.m ||
                     plane.basis.cols() != pkg.m,
                 ErrorKind::InvalidDimension, "plane dimension does not match package");
  const int m = pkg.m;
  const Mat& b = plane.basis;
  const Mat gram = b.transpose() * pkg.metric * b;
  const double scale = gram.diagonal().maxCoeff();
  const double gdet = gram.determinant();
  SLGEO_THROW_IF(!(scale > 0.0) || !(gdet > 1e-24 * std::pow(scale, m)), ErrorKind::DegeneratePlane,
                 "plane basis is linearly dependent");
  const double vol = std::sqrt(gdet);

  CMat c(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) c(j, k) = cplx(b(2 * j, k), b(2 * j + 1, k));
  const cplx det = c.determinant() * static_cast<double>(plane.orientation);

  FormRatios r;
  r.re_omega = det.real() / vol;
  r.im_omega = det.imag() / vol;

  if (m >= 2) {
    Eigen::HouseholderQR<Mat> qr(b);
    Mat q = qr.householderQ() * Mat::Identity(2 * m, m);
    const Mat rr = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (int k = 0; k < m; ++k)
      if (rr(k, k) < 0) q.col(k) = -q.col(k);
    const Mat pair = q.transpose() * pkg.kahler * q;
    if (m == 2) {
      r.omega = pair(0, 1) * plane.orientation;
    } else {
      r.omega = pair.cwiseAbs().maxCoeff();
    }
  }
  return r;
}

inline bool is_sl_plane(const TangentPlane& plane, const CYPackage& pkg, double tol) {
  SLGEO_THROW_IF(!(tol > 0.0), ErrorKind::InvalidArgument, "tolerance must be positive");
  TangentPlane p = plane;
  FormRatios r = restrict_forms(p, pkg);
  if (r.re_omega < 0) {
    p.orientation = -p.orientation;
    r = restrict_forms(p, pkg);
  }
  return std::abs(r.omega) <= tol && std::abs(r.im_omega) <= tol;
}

/// Scalar SL defect max(|omega|_V|, |Im Omega|_V|), orientation-free.
inline double sl_defect(const TangentPlane& plane, const CYPackage& pkg) {
  const FormRatios r = restrict_forms(plane, pkg);
  return std::max(std::abs(r.omega), std::abs(r.im_omega));
}

/// 1 - Re Omega|_V / vol_V; nonnegative for every plane.
inline double calibration_defect(const TangentPlane& plane, const CYPackage& pkg) {
  return 1.0 - restrict_forms(plane, pkg).re_omega;
}

/// Affine vector field x -> A x + b on R^{2m}.
struct Generator {
  Mat a;
  Vec b;
  std::string label;
};

struct LieAlgebraAction {
  int m = 0;
  std::vector<Generator> generators;
};

/// Linear generator from a complex matrix acting on C^m.
inline Generator linear_generator(const CMat& c, std::string label) {
  const int m = static_cast<int>(c.rows());
  return Generator{real_embedding(c), Vec::Zero(2 * m), std::move(label)};
}

inline Generator translation_generator(const CVec& dir, std::string label) {
  const int m = static_cast<int>(dir.size());
  return Generator{Mat::Zero(2 * m, 2 * m), to_real(dir), std::move(label)};
}

/// U(1) acting by (e^{it} z1, e^{-it} z2, z3).
inline LieAlgebraAction u1_action() {
  CMat c = CMat::Zero(3, 3);
  c(0, 0) = cplx(0, 1);
  c(1, 1) = cplx(0, -1);
  return LieAlgebraAction{3, {linear_generator(c, "u1")}};
}

/// T^2 acting by (e^{is} z1, e^{it} z2, e^{-is-it} z3).
inline LieAlgebraAction t2_action() {
  CMat c1 = CMat::Zero(3, 3), c2 = CMat::Zero(3, 3);
  c1(0, 0) = cplx(0, 1);
  c1(2, 2) = cplx(0, -1);
  c2(1, 1) = cplx(0, 1);
  c2(2, 2) = cplx(0, -1);
  return LieAlgebraAction{3, {linear_generator(c1, "t2-s"), linear_generator(c2, "t2-t")}};
}

inline LieAlgebraAction translation_action(int m, int axis) {
  CVec d = CVec::Zero(m);
  d(axis) = 1.0;
  return LieAlgebraAction{m, {translation_generator(d, "translate-" + std::to_string(axis))}};
}

/// Hamiltonians mu_X = -x^T A^T W x - 2 b^T W x, one column per generator.
/// For X = (i z1, -i z2, 0) this is |z1|^2 - |z2|^2.
inline Mat moment_map_values(const LieAlgebraAction& action, const std::vector<CVec>& points) {
  const Mat w = kahler_matrix(action.m);
  for (const auto& g : action.generators) {
    SLGEO_THROW_IF(g.a.rows() != 2 * action.m || g.b.size() != 2 * action.m,
                   ErrorKind::InvalidDimension, "generator has wrong size");
    SLGEO_THROW_IF((g.a.transpose() * w + w * g.a).cwiseAbs().maxCoeff() > 1e-12,
                   ErrorKind::InvalidAction, "generator " + g.label + " does not preserve omega");
  }
  Mat out(points.size(), action.generators.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vec x = to_real(points[p]);
    for (std::size_t k = 0; k < action.generators.size(); ++k) {
      const auto& g = action.generators[k];
      out(p, k) = -x.dot(g.a.transpose() * (w * x)) - 2.0 * g.b.dot(w * x);
    }
  }
  return out;
}

/// Seeded element of SU(m): exponential of a random traceless anti-Hermitian matrix.
template <typename Rng>
CMat random_su(int m, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  CMat g(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) g(j, k) = cplx(n01(rng), n01(rng));
  CMat x = (g - g.adjoint()) * (0.5 * scale);
  x -= CMat::Identity(m, m) * (x.trace() / static_cast<double>(m));
  // x = i h with h Hermitian; exp(x) = V exp(i lambda) V^*.
  Eigen::SelfAdjointEigenSolver<CMat> es(x * cplx(0, -1));
  const CVec phases = (es.eigenvalues().cast<cplx>() * cplx(0, 1)).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

template <typename Rng>
TangentPlane random_plane(int m, Rng& rng) {
  std::normal_distribution<double> n01;
  Mat b(2 * m, m);
  for (int i = 0; i < 2 * m; ++i)
    for (int k = 0; k < m; ++k) b(i, k) = n01(rng);
  return make_plane(b, (n01(rng) >= 0) ? 1 : -1);
}

}  // namespace slgeo

#endif  // SLGEO_CORE_GEOMETRY_HPP
