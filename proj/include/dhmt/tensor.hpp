#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace dhmt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-R tensor over an n-dimensional index space, row-major.
///
/// All indices run over the same range [0, n); this is the only shape the
/// target-manifold geometry needs. Index placement (upper/lower) is a
/// convention of the caller and is stated where each tensor is produced.
template <int Rank>
class Tensor {
 public:
  static_assert(Rank >= 1 && Rank <= 5);

  Tensor() = default;
  explicit Tensor(int n) : n_(n), data_(ipow(n, Rank), 0.0) {}

  int dim() const { return n_; }
  std::size_t size() const { return data_.size(); }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[offset(idx...)];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  Tensor& operator+=(const Tensor& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  /// Largest absolute entry.
  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  static std::size_t ipow(int n, int r) {
    std::size_t p = 1;
    for (int k = 0; k < r; ++k) p *= static_cast<std::size_t>(n);
    return p;
  }
  template <class... I>
  std::size_t offset(I... idx) const {
    std::size_t off = 0;
    ((off = off * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  int n_ = 0;
  std::vector<double> data_;
};

using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;
using Tensor5 = Tensor<5>;

/// Levi-Civita symbol in three dimensions.
inline double epsilon3(int i, int j, int k) {
  return 0.5 * static_cast<double>((i - j) * (j - k) * (k - i));
}

}  // namespace dhmt
