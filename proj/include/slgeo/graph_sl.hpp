#ifndef SLGEO_GRAPH_SL_HPP
#define SLGEO_GRAPH_SL_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slgeo/core_geometry.hpp"
#include "slgeo/errors.hpp"

namespace slgeo {

/// Potential f on a rectangular grid over R^m (m <= 3). Values are either
/// stored (row-major, first axis fastest) or produced by a closed-form
/// callable, optionally with an analytic Hessian.
struct GraphPotential {
  int m = 0;
  std::vector<int> dims;
  std::vector<double> origin;
  std::vector<double> spacing;
  std::vector<double> values;
  std::function<double(const Vec&)> closed_form;
  std::function<Mat(const Vec&)> closed_hessian;

  [[nodiscard]] bool is_closed_form() const { return static_cast<bool>(closed_form); }

  [[nodiscard]] std::size_t node_count() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }

  [[nodiscard]] std::vector<int> unflatten(std::size_t flat) const {
    std::vector<int> idx(m);
    for (int a = 0; a < m; ++a) {
      idx[a] = static_cast<int>(flat % dims[a]);
      flat /= dims[a];
    }
    return idx;
  }

  [[nodiscard]] std::size_t flatten(std::span<const int> idx) const {
    std::size_t flat = 0;
    for (int a = m - 1; a >= 0; --a) flat = flat * dims[a] + idx[a];
    return flat;
  }

  [[nodiscard]] Vec position(std::span<const int> idx) const {
    Vec x(m);
    for (int a = 0; a < m; ++a) x(a) = origin[a] + spacing[a] * idx[a];
    return x;
  }
};

namespace detail {
inline void validate_geometry(const GraphPotential& f) {
  SLGEO_THROW_IF(f.m < 1 || static_cast<int>(f.dims.size()) != f.m ||
                     static_cast<int>(f.origin.size()) != f.m ||
                     static_cast<int>(f.spacing.size()) != f.m,
                 ErrorKind::InvalidDimension, "potential geometry does not match m");
  for (int a = 0; a < f.m; ++a)
    SLGEO_THROW_IF(!(f.spacing[a] > 0.0) || f.dims[a] < 1, ErrorKind::InvalidArgument,
                   "grid spacing must be positive");
}
}  // namespace detail

/// Grid potential sampled from a callable on the given box.
inline GraphPotential sample_potential(int m, const std::function<double(const Vec&)>& fn,
                                       std::vector<int> dims, std::vector<double> origin,
                                       std::vector<double> spacing) {
  SLGEO_THROW_IF(m > 3, ErrorKind::InvalidDimension, "grid potentials support m <= 3");
  GraphPotential f{m, std::move(dims), std::move(origin), std::move(spacing), {}, {}, {}};
  detail::validate_geometry(f);
  f.values.resize(f.node_count());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const auto idx = f.unflatten(i);
    f.values[i] = fn(f.position(idx));
    SLGEO_THROW_IF(!std::isfinite(f.values[i]), ErrorKind::InvalidArgument,
                   "potential is not finite at a node");
  }
  return f;
}

/// Closed-form potential evaluated at the nodes of the given box.
inline GraphPotential closed_form_potential(int m, std::function<double(const Vec&)> fn,
                                            std::vector<int> dims, std::vector<double> origin,
                                            std::vector<double> spacing,
                                            std::function<Mat(const Vec&)> hess = {}) {
  GraphPotential f{m, std::move(dims), std::move(origin), std::move(spacing), {}, std::move(fn),
                   std::move(hess)};
  detail::validate_geometry(f);
  return f;
}

inline Mat hessian(const GraphPotential& f, std::span<const int> node) {
  detail::validate_geometry(f);
  SLGEO_THROW_IF(static_cast<int>(node.size()) != f.m, ErrorKind::InvalidDimension,
                 "node index has wrong rank");
  const int m = f.m;
  Mat h(m, m);
  if (f.is_closed_form()) {
    const Vec x = f.position(node);
    if (f.closed_hessian) return f.closed_hessian(x);
    const double d = 1e-4;
    auto at = [&](int a, double sa, int b, double sb) {
      Vec y = x;
      y(a) += sa * d;
      y(b) += sb * d;
      return f.closed_form(y);
    };
    for (int a = 0; a < m; ++a) {
      h(a, a) = (at(a, 1, a, 0) - 2.0 * f.closed_form(x) + at(a, -1, a, 0)) / (d * d);
      for (int b = a + 1; b < m; ++b) {
        h(a, b) = (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) /
                  (4.0 * d * d);
        h(b, a) = h(a, b);
      }
    }
    return h;
  }
  for (int a = 0; a < m; ++a)
    SLGEO_THROW_IF(node[a] < 1 || node[a] > f.dims[a] - 2, ErrorKind::OutOfStencil,
                   "node lacks the one-node margin for central differences");
  std::vector<int> idx(node.begin(), node.end());
  auto val = [&](int a, int sa, int b, int sb) {
    std::vector<int> j = idx;
    j[a] += sa;
    j[b] += sb;
    return f.values[f.flatten(j)];
  };
  const double f0 = f.values[f.flatten(idx)];
  for (int a = 0; a < m; ++a) {
    const double ha = f.spacing[a];
    h(a, a) = (val(a, 1, a, 0) - 2.0 * f0 + val(a, -1, a, 0)) / (ha * ha);
    for (int b = a + 1; b < m; ++b) {
      const double mixed =
          (val(a, 1, b, 1) - val(a, 1, b, -1) - val(a, -1, b, 1) + val(a, -1, b, -1)) /
          (4.0 * ha * f.spacing[b]);
      h(a, b) = mixed;
      h(b, a) = mixed;
    }
  }
  return h;
}

/// Im det_C(I + i A).
inline double sl_graph_residual_matrix(const Mat& a) {
  const Eigen::Index m = a.rows();
  CMat c = CMat::Identity(m, m) + cplx(0, 1) * a.cast<cplx>();
  return c.determinant().imag();
}

inline double sl_graph_residual(const GraphPotential& f, std::span<const int> node) {
  return sl_graph_residual_matrix(hessian(f, node));
}

/// Sum over odd k of (-1)^{(k-1)/2} e_k(A), with e_k the sum of principal k-minors.
inline double residual_symmetric_form(const Mat& a) {
  const int m = static_cast<int>(a.rows());
  SLGEO_THROW_IF(m > 4 || m != a.cols(), ErrorKind::InvalidDimension,
                 "symmetric-function residual supports square m <= 4");
  double total = 0.0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k % 2 == 0) continue;
    std::vector<int> rows;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) rows.push_back(i);
    Mat sub(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub(i, j) = a(rows[i], rows[j]);
    total += (((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * sub.determinant();
  }
  return total;
}

/// Nodes at which the Hessian is available: all nodes for closed forms,
/// interior nodes for grids.
inline std::vector<std::vector<int>> stencil_nodes(const GraphPotential& f) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < f.node_count(); ++i) {
    auto idx = f.unflatten(i);
    bool ok = true;
    if (!f.is_closed_form())
      for (int a = 0; a < f.m; ++a) ok = ok && idx[a] >= 1 && idx[a] <= f.dims[a] - 2;
    if (ok) out.push_back(std::move(idx));
  }
  return out;
}

/// max over nodes of |residual(eps f) - eps tr Hess f| for each eps.
inline std::vector<double> linearization_gap(const GraphPotential& f,
                                             std::span<const double> eps_list) {
  std::vector<double> gaps(eps_list.size(), 0.0);
  for (const auto& node : stencil_nodes(f)) {
    const Mat a = hessian(f, node);
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
      const double e = eps_list[k];
      gaps[k] = std::max(gaps[k], std::abs(sl_graph_residual_matrix(e * a) - e * a.trace()));
    }
  }
  return gaps;
}

}  // namespace slgeo

#endif  // SLGEO_GRAPH_SL_HPP
