#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "slgeo/model_families.hpp"

using namespace slgeo;

namespace {

// Pascal's triangle, independent of the multiplicative binomial.
std::int64_t pascal(int n, int k) {
  std::vector<std::vector<std::int64_t>> t(n + 1, std::vector<std::int64_t>(n + 1, 0));
  for (int i = 0; i <= n; ++i) {
    t[i][0] = 1;
    for (int j = 1; j <= i; ++j) t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
  }
  return t[n][k];
}

Mat fd_tangent(const ModelFamily& fam, const Eigen::Vector3d& q) {
  Mat b(6, 3);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e(k) = 1e-6;
    b.col(k) = (to_real(family_point(fam, q + e).point) - to_real(family_point(fam, q - e).point)) / 2e-6;
  }
  return b;
}

CVec omega_free_partner(const CVec& u, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  CVec w(3);
  for (int k = 0; k < 3; ++k) w(k) = cplx(n01(rng), n01(rng));
  const CVec ju = cplx(0, 1) * u;
  return w - (kahler_pairing(u, w) / kahler_pairing(u, ju)) * ju;
}

}  // namespace

TEST(FamilyPoint, WorkedValues) {
  auto fp = family_point(hl_family(1.0), {0, 0, 0});
  EXPECT_NEAR((fp.point - CVec::Unit(3, 0)).norm(), 0.0, 1e-15);
  EXPECT_TRUE(is_sl_plane(fp.tangent, standard_cy_package(3), 1e-12));

  fp = family_point(hl_cone(), {1, 0, 0});
  EXPECT_NEAR((fp.point - CVec::Ones(3)).norm(), 0.0, 1e-15);
  const cplx prod = fp.point(0) * fp.point(1) * fp.point(2);
  EXPECT_NEAR(prod.imag(), 0.0, 1e-15);
  EXPECT_GE(prod.real(), 0.0);

  // theta = pi/6, direction (1,0,0): radius (sin pi/2)^{-1/3} = 1.
  fp = family_point(so3_family(1.0), {kPi / 6, kPi / 2, 0});
  EXPECT_NEAR(fp.point.norm(), 1.0, 1e-15);
  EXPECT_NEAR(std::arg(fp.point(0)), kPi / 6, 1e-15);
}

TEST(FamilyPoint, RejectsOutOfRangeParameters) {
  EXPECT_THROW(family_point(hl_family(0.0), {0, 0, 0}), Error);
  EXPECT_THROW(family_point(so3_family(1.0), {kPi / 2, 0.3, 0}), Error);
  EXPECT_THROW(family_point(hl_cone(), {0.0, 0, 0}), Error);
  EXPECT_THROW(family_point(quadric_family(2, 4, 1.0), {0, 2, 2}), Error);
  EXPECT_THROW(family_point(quadric_family(1, 2, 1.0), {0, 0.1, 0.1}), Error);
  CVec u = CVec::Unit(3, 0), v(3);
  v << cplx(0, 1), 0, 0;
  EXPECT_THROW(branched_family(u, v), Error);
}

TEST(FamilyPoint, AnalyticTangentsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  CVec u(3);
  u << cplx(1, 0.2), cplx(-0.3, 0.5), cplx(0.1, 0.4);
  const std::vector<ModelFamily> fams{hl_cone(), hl_family(0.7), so3_family(1.3), quadric_family(1, 2, 1.0),
                                      quadric_family(2, 3, -0.5), branched_family(u, omega_free_partner(u, rng))};
  for (const auto& fam : fams)
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Vector3d q = sample_parameters(fam, rng);
      const Mat b = family_point(fam, q).tangent.basis;
      EXPECT_LT((b - fd_tangent(fam, q)).norm(), 1e-6 * std::max(1.0, b.norm())) << to_string(fam.kind);
    }
}

TEST(SlResidualSweep, ClosedFormFamiliesAreSpecialLagrangian) {
  for (const auto& fam : {hl_cone(), hl_family(1.0), hl_family(0.3), so3_family(1.0), quadric_family(1, 2, 1.0),
                          quadric_family(1, 2, 0.0), quadric_family(3, 5, -1.0)})
    EXPECT_LT(sl_residual_sweep(fam, 10000, 42), 1e-12) << to_string(fam.kind);
}

TEST(SlResidualSweep, BranchedLeadingOrderLiesInItsPlane) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    CVec u(3);
    for (int k = 0; k < 3; ++k) u(k) = cplx(n01(rng), n01(rng));
    const ModelFamily fam = branched_family(u, omega_free_partner(u, rng));
    // The printed terms span <u, v, u x v> over R, an SL plane: the truncation
    // error of the expansion never shows in the residual.
    for (double patch : {1.0, 0.1, 0.01}) EXPECT_LT(sl_residual_sweep(fam, 2000, 5, patch), 1e-10);
  }
}

TEST(Scaling, LtIsHomotheticToL1) {
  std::mt19937_64 rng(9);
  for (double t : {0.1, 0.5, 2.0, 7.0}) {
    const ModelFamily ft = hl_family(t), f1 = hl_family(1.0);
    for (int k = 0; k < 100; ++k) {
      const Eigen::Vector3d q = sample_parameters(ft, rng);
      const CVec a = family_point(ft, q).point;
      const CVec b = t * family_point(f1, {q(0), q(1) / t, q(2) / t}).point;
      EXPECT_LT((a - b).norm(), 1e-14 * std::max(1.0, a.norm()));
    }
  }
}

TEST(Quadric, PointsSatisfyConstraint) {
  std::mt19937_64 rng(2);
  for (const auto& fam : {quadric_family(1, 2, 1.0), quadric_family(2, 5, -2.0)}) {
    const int a1 = fam.a1, a2 = fam.a2, a3 = -a1 - a2;
    for (int k = 0; k < 200; ++k) {
      const Eigen::Vector3d q = sample_parameters(fam, rng);
      const CVec p = family_point(fam, q).point;
      const double x1 = (std::polar(1.0, -a1 * q(0)) * p(0)).real();
      const double x2 = (std::polar(1.0, -a2 * q(0)) * p(1)).real();
      const double x3 = (std::polar(1.0, -a3 * q(0)) * p(2) / cplx(0, 1)).real();
      EXPECT_NEAR(a1 * x1 * x1 + a2 * x2 * x2 + a3 * x3 * x3, fam.c, 1e-12 * (1 + p.squaredNorm()));
    }
  }
}

TEST(Cone, DistanceToL0AgreesWithBruteForce) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    CVec p(3);
    for (int k = 0; k < 3; ++k) p(k) = cplx(n01(rng), n01(rng));
    double brute = p.norm();  // the vertex
    const int n = 180;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double a = 2 * kPi * i / n, b = 2 * kPi * j / n;
        CVec w(3);
        w << std::polar(1.0, a), std::polar(1.0, b), std::polar(1.0, -a - b);
        const double r = std::max(0.0, (w.adjoint() * p)(0).real() / 3.0);
        brute = std::min(brute, (p - r * w).norm());
      }
    const double d = distance_to_L0(p);
    EXPECT_LE(d, brute + 1e-12);
    EXPECT_GT(d, brute - 2e-3 * p.norm());
  }
}

TEST(AsymptoticCone, StronglyConicalDecay) {
  const AcFit fit = ac_decay_rate(hl_family(1.0), {10, 20, 40, 80, 160, 320});
  EXPECT_TRUE(fit.warnings.empty());
  EXPECT_FALSE(fit.fit.degenerate);
  EXPECT_GE(fit.fit.slope, -1.05);
  EXPECT_LE(fit.fit.slope, -0.95);
  EXPECT_LT(fit.fit.slope, 1.0);  // weakly conical as well
  // (r^2 + 1)^{1/2} - r ~ 1/(2r): distance times r approaches a constant.
  const double c0 = fit.distances.front() * fit.radii.front(), c1 = fit.distances.back() * fit.radii.back();
  EXPECT_NEAR(c1 / c0, 1.0, 0.02);
}

TEST(AsymptoticCone, SO3FamilyApproachesPlanePair) {
  const AcFit fit = ac_decay_rate(so3_family(1.0), {5, 10, 20, 40, 80});
  EXPECT_FALSE(fit.fit.degenerate);
  // sin 3 theta = r^{-3}: the distance R sin theta ~ r^{-2}/3.
  EXPECT_NEAR(fit.fit.slope, -2.0, 0.02);
}

TEST(AsymptoticCone, SmallRadiiWarn) {
  const AcFit fit = ac_decay_rate(hl_family(1.0), {1.5, 2.0, 4.0});
  EXPECT_FALSE(fit.warnings.empty());
}

TEST(AsymptoticCone, ConeAgainstItselfIsDegenerate) {
  const AcFit fit = ac_decay_rate(hl_cone(), {1, 2, 4, 8});
  EXPECT_TRUE(fit.fit.degenerate);
  for (double d : fit.distances) EXPECT_EQ(d, 0.0);
}

TEST(AsymptoticCone, ScaledFamilyConvergesLikeTSquaredOverR) {
  const double r = 5.0;
  std::vector<double> ratio;
  for (double t : {0.2, 0.1, 0.05, 0.025}) {
    const double s = std::sqrt((r * r - t * t) / 3.0);
    const CVec p = family_point(hl_family(t), {0.3, s, 0.0}).point;
    ratio.push_back(distance_to_L0(p) / (t * t / r));
  }
  for (std::size_t k = 1; k < ratio.size(); ++k) EXPECT_NEAR(ratio[k] / ratio[0], 1.0, 0.01);
}

TEST(LegendrianIndex, L0LinkCountsSix) {
  const Eigen::Matrix2d g = l0_link_gram();
  // Pull-back of the sphere metric, recomputed from the embedding derivatives.
  CVec d1(3), d2(3);
  d1 << cplx(0, 1), 0, cplx(0, -1);
  d2 << 0, cplx(0, 1), cplx(0, -1);
  d1 /= std::sqrt(3.0);
  d2 /= std::sqrt(3.0);
  EXPECT_NEAR(g(0, 0), to_real(d1).squaredNorm(), 1e-15);
  EXPECT_NEAR(g(0, 1), to_real(d1).dot(to_real(d2)), 1e-15);
  EXPECT_NEAR(g(1, 1), to_real(d2).squaredNorm(), 1e-15);

  EXPECT_EQ(legendrian_index_flat_torus(g, 3, 4), 6);
  EXPECT_EQ(legendrian_index_flat_torus(g, 3, 8), 6);
  EXPECT_EQ(legendrian_index_flat_torus(g, 3, 16), 6);
  // Linear functions restrict to eigenfunctions with eigenvalue m - 1 = 2.
  EXPECT_EQ(eigenvalue_multiplicity(g, 2.0, 8), 6);
  EXPECT_EQ(eigenvalue_multiplicity(g, 6.0, 8), 6);
  EXPECT_GE(legendrian_index_flat_torus(g, 3, 8), lower_bound_lind(0, 1, 3));
}

TEST(LegendrianIndex, IdentityGramMatchesBruteForce) {
  int count = 0;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) {
      const int n2 = i * i + j * j;
      count += (n2 > 0 && n2 < 6) ? 1 : 0;
    }
  EXPECT_EQ(count, 20);
  EXPECT_EQ(legendrian_index_flat_torus(Eigen::Matrix2d::Identity(), 3, 3), count);
  EXPECT_EQ(legendrian_index_flat_torus(Eigen::Matrix2d::Identity(), 3, 6), count);
}

TEST(LegendrianIndex, CutoffTooSmall) {
  try {
    legendrian_index_flat_torus(Eigen::Matrix2d::Identity(), 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NeedsLargerCutoff);
  }
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  EXPECT_THROW(legendrian_index_flat_torus(bad, 3, 4), Error);
}

TEST(LegendrianIndex, LowerBounds) {
  EXPECT_EQ(lower_bound_lind(0, 1, 3), 6);
  EXPECT_EQ(lower_bound_lind(2, 0, 3), 6);
  EXPECT_EQ(lower_bound_lind(0, 0, 3), 0);
  EXPECT_THROW(lower_bound_lind(-1, 0, 3), Error);
}

TEST(Moduli, QuinticAndTwoCubics) {
  EXPECT_EQ(ci_moduli_dimension(5, {5}).dimension, 101);
  EXPECT_EQ(pascal(9, 5), 126);
  EXPECT_EQ(ci_moduli_dimension(5, {5}).dimension, pascal(9, 5) - 1 - 24);
  const std::int64_t n56 = pascal(8, 3);
  EXPECT_EQ(n56, 56);
  EXPECT_EQ(ci_moduli_dimension(6, {3, 3}).dimension, 2 * (n56 - 2) - 35);
  EXPECT_EQ(ci_moduli_dimension(6, {3, 3}).dimension, 73);
}

TEST(Moduli, DegenerateAndInvalidInputs) {
  EXPECT_TRUE(ci_moduli_dimension(5, {1}).degenerate);
  EXPECT_THROW(ci_moduli_dimension(6, {2, 4}), Error);
  EXPECT_THROW(ci_moduli_dimension(0, {3}), Error);
  const ModuliResult r = ci_moduli_dimension(10, {2});
  EXPECT_TRUE(r.overdetermined);
  EXPECT_EQ(r.dimension, pascal(11, 2) - 1 - 99);
}
