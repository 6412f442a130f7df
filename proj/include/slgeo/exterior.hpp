#ifndef SLGEO_EXTERIOR_HPP
#define SLGEO_EXTERIOR_HPP

#include <complex>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slgeo/errors.hpp"

namespace slgeo {

using cplx = std::complex<double>;

/// Constant-coefficient complex k-form on R^n, stored as a map from strictly
/// increasing index tuples to coefficients.
class ExteriorForm {
public:
  using Index = std::vector<int>;

  ExteriorForm(int dim, int degree) : dim_(dim), degree_(degree) {
    SLGEO_THROW_IF(dim < 1 || degree < 0 || degree > dim, ErrorKind::InvalidDimension,
                   "exterior form degree out of range");
  }

  /// The 1-form dx_i.
  static ExteriorForm basis(int dim, int i) {
    ExteriorForm f(dim, 1);
    f.add_term({i}, 1.0);
    return f;
  }

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] const std::map<Index, cplx>& terms() const noexcept { return terms_; }

  /// Adds c * dx_{idx[0]} ^ ... ^ dx_{idx[k-1]}; the index list may be unsorted.
  void add_term(Index idx, cplx c) {
    SLGEO_THROW_IF(static_cast<int>(idx.size()) != degree_, ErrorKind::InvalidArgument,
                   "term degree mismatch");
    int sign = 1;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j + 1 < idx.size() - i; ++j)
        if (idx[j] > idx[j + 1]) {
          std::swap(idx[j], idx[j + 1]);
          sign = -sign;
        }
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
      if (idx[i] == idx[i + 1]) return;
    auto& slot = terms_[idx];
    slot += static_cast<double>(sign) * c;
    if (slot == cplx{}) terms_.erase(idx);
  }

  ExteriorForm& operator+=(const ExteriorForm& o) {
    SLGEO_THROW_IF(o.dim_ != dim_ || o.degree_ != degree_, ErrorKind::InvalidArgument,
                   "adding forms of different type");
    for (const auto& [idx, c] : o.terms_) add_term(idx, c);
    return *this;
  }

  friend ExteriorForm operator+(ExteriorForm a, const ExteriorForm& b) { return a += b; }

  friend ExteriorForm operator*(cplx s, const ExteriorForm& f) {
    ExteriorForm out(f.dim_, f.degree_);
    for (const auto& [idx, c] : f.terms_) out.add_term(idx, s * c);
    return out;
  }

  [[nodiscard]] ExteriorForm wedge(const ExteriorForm& o) const {
    SLGEO_THROW_IF(o.dim_ != dim_, ErrorKind::InvalidArgument, "wedge of forms on different spaces");
    ExteriorForm out(dim_, degree_ + o.degree_);
    for (const auto& [a, ca] : terms_)
      for (const auto& [b, cb] : o.terms_) {
        Index idx = a;
        idx.insert(idx.end(), b.begin(), b.end());
        out.add_term(std::move(idx), ca * cb);
      }
    return out;
  }

  [[nodiscard]] ExteriorForm conj() const {
    ExteriorForm out(dim_, degree_);
    for (const auto& [idx, c] : terms_) out.terms_[idx] = std::conj(c);
    return out;
  }

  [[nodiscard]] ExteriorForm real_part() const {
    ExteriorForm out(dim_, degree_);
    for (const auto& [idx, c] : terms_) out.add_term(idx, c.real());
    return out;
  }

  [[nodiscard]] ExteriorForm imag_part() const {
    ExteriorForm out(dim_, degree_);
    for (const auto& [idx, c] : terms_) out.add_term(idx, c.imag());
    return out;
  }

  /// phi(v_1, ..., v_k) by minor expansion over the stored multi-indices.
  [[nodiscard]] cplx evaluate(std::span<const Eigen::VectorXd> vectors) const {
    SLGEO_THROW_IF(static_cast<int>(vectors.size()) != degree_, ErrorKind::InvalidArgument,
                   "wrong number of vectors for form evaluation");
    if (degree_ == 0) {
      auto it = terms_.find(Index{});
      return it == terms_.end() ? cplx{} : it->second;
    }
    Eigen::MatrixXd sub(degree_, degree_);
    cplx sum{};
    for (const auto& [idx, c] : terms_) {
      for (int r = 0; r < degree_; ++r)
        for (int k = 0; k < degree_; ++k) sub(r, k) = vectors[k](idx[r]);
      sum += c * sub.determinant();
    }
    return sum;
  }

private:
  int dim_;
  int degree_;
  std::map<Index, cplx> terms_;
};

}  // namespace slgeo

#endif  // SLGEO_EXTERIOR_HPP
