#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "slgeo/graph_sl.hpp"
#include "slgeo/numerics.hpp"

using namespace slgeo;

namespace {

Mat random_symmetric(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Mat a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = n01(rng);
  return a;
}

// Im prod (1 + i lambda_j) from the eigenvalues.
double eigen_product_residual(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  cplx p = 1.0;
  for (Eigen::Index k = 0; k < a.rows(); ++k) p *= cplx(1.0, es.eigenvalues()(k));
  return p.imag();
}

GraphPotential grid3(const std::function<double(const Vec&)>& fn, double h = 0.1) {
  return sample_potential(3, fn, {9, 9, 9}, {-0.4, -0.4, -0.4}, {h, h, h});
}

}  // namespace

TEST(Hessian, ZeroPotential) {
  const auto f = grid3([](const Vec&) { return 0.0; });
  const int node[3] = {4, 4, 4};
  EXPECT_EQ(hessian(f, node).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hessian, ClosedFormProduct) {
  const auto f = closed_form_potential(2, [](const Vec& x) { return x(0) * x(1); }, {3, 3},
                                       {-1, -1}, {1, 1});
  const int node[2] = {1, 2};
  const Mat h = hessian(f, node);
  EXPECT_NEAR(h(0, 1), 1.0, 1e-6);
  EXPECT_NEAR(h(1, 0), 1.0, 1e-6);
  EXPECT_NEAR(h(0, 0), 0.0, 1e-6);
}

TEST(Hessian, SineTruncation) {
  const auto f = sample_potential(1, [](const Vec& x) { return std::sin(x(0)); }, {21}, {-0.1},
                                  {0.01});
  const int node[1] = {10};
  EXPECT_NEAR(hessian(f, node)(0, 0), 0.0, 1e-5);
}

TEST(Hessian, BoundaryNodeIsOutOfStencil) {
  const auto f = grid3([](const Vec& x) { return x.squaredNorm(); });
  const int node[3] = {0, 4, 4};
  try {
    hessian(f, node);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfStencil);
  }
}

TEST(GraphResidual, Witnesses) {
  EXPECT_EQ(sl_graph_residual_matrix(Mat::Zero(3, 3)), 0.0);
  for (double eps : {0.1, 1.0, 7.5})
    EXPECT_NEAR(sl_graph_residual_matrix(Eigen::Vector2d(eps, -eps).asDiagonal()), 0.0, 1e-12);
  const Mat a = Eigen::Vector3d(1, 1, -2).asDiagonal();
  EXPECT_NEAR(sl_graph_residual_matrix(a), 2.0, 1e-12);
  EXPECT_NEAR(residual_symmetric_form(a), 2.0, 1e-12);
  EXPECT_EQ(residual_symmetric_form(Mat::Zero(4, 4)), 0.0);
}

TEST(GraphResidual, GridPotentialWitness) {
  const auto f = grid3([](const Vec& x) { return 0.5 * (x(0) * x(0) + x(1) * x(1)) - x(2) * x(2); });
  const int node[3] = {3, 4, 5};
  EXPECT_NEAR(sl_graph_residual(f, node), 2.0, 1e-10);
}

TEST(GraphResidual, SymmetricFormMatchesDeterminant) {
  std::mt19937_64 rng(17);
  for (int m = 2; m <= 4; ++m)
    for (int trial = 0; trial < 10000; ++trial) {
      const Mat a = random_symmetric(m, rng);
      const double det = sl_graph_residual_matrix(a);
      ASSERT_NEAR(residual_symmetric_form(a), det, 1e-12 * std::max(1.0, std::abs(det)));
      ASSERT_NEAR(eigen_product_residual(a), det, 1e-10 * std::max(1.0, std::abs(det)));
    }
}

TEST(GraphResidual, TraceInTwoDimensions) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat a = random_symmetric(2, rng);
    EXPECT_NEAR(sl_graph_residual_matrix(a), a.trace(), 1e-12);
  }
}

TEST(GraphResidual, HarmonicQuadraticsInC2) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    const double p = n01(rng), q = n01(rng);
    // f = p (x^2 - y^2)/2 + q x y is harmonic.
    const auto f = sample_potential(
        2, [&](const Vec& x) { return 0.5 * p * (x(0) * x(0) - x(1) * x(1)) + q * x(0) * x(1); },
        {5, 5}, {-0.2, -0.2}, {0.1, 0.1});
    for (const auto& node : stencil_nodes(f)) EXPECT_LT(std::abs(sl_graph_residual(f, node)), 1e-12);
  }
}

TEST(Linearization, HarmonicCubicGap) {
  const auto f = grid3([](const Vec& x) {
    return 0.5 * (x(0) * x(0) + x(1) * x(1) - 2 * x(2) * x(2));
  });
  const std::vector<double> eps{0.5, 0.25, 0.125, 0.0625};
  const auto gaps = linearization_gap(f, eps);
  for (std::size_t k = 0; k < eps.size(); ++k) EXPECT_NEAR(gaps[k], 2 * std::pow(eps[k], 3), 1e-12);
}

TEST(Linearization, ZeroPotentialHasZeroGap) {
  const auto f = grid3([](const Vec&) { return 0.0; });
  const std::vector<double> eps{0.5, 0.1};
  for (double g : linearization_gap(f, eps)) EXPECT_EQ(g, 0.0);
}

TEST(Linearization, GenericCubicSlopeThree) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n01;
  double c[10];
  for (double& v : c) v = n01(rng);
  auto fn = [c](const Vec& x) {
    return c[0] * x(0) * x(0) * x(0) + c[1] * x(1) * x(1) * x(1) + c[2] * x(2) * x(2) * x(2) +
           c[3] * x(0) * x(1) * x(2) + c[4] * x(0) * x(0) * x(1) + c[5] * x(1) * x(1) * x(2) +
           c[6] * x(0) * x(0) + c[7] * x(1) * x(1) + c[8] * x(2) * x(2) + c[9] * x(0) * x(2);
  };
  const auto f = grid3(fn);
  std::vector<double> eps;
  for (int k = 2; k <= 8; ++k) eps.push_back(std::ldexp(1.0, -k));
  const auto gaps = linearization_gap(f, eps);
  // Oracle: at m = 3 the gap is eps^3 max |det Hess f|.
  double maxdet = 0.0;
  for (const auto& node : stencil_nodes(f)) maxdet = std::max(maxdet, std::abs(hessian(f, node).determinant()));
  for (std::size_t k = 0; k < eps.size(); ++k)
    EXPECT_NEAR(gaps[k], std::pow(eps[k], 3) * maxdet, 1e-12 * std::max(1.0, maxdet));
  const LineFit fit = fit_loglog(eps, gaps);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.slope, 3.0, 0.05);
}
