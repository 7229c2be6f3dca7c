#pragma once

#include <algorithm>
#include <cmath>

#include "dhmt/error.hpp"
#include "dhmt/tensor.hpp"

namespace dhmt {

/// Three orthogonal parts of a torsion tensor at a point, all with lowered
/// indices A_ijk = <A(d_i, d_j), d_k>.
struct TorsionDecomposition {
  Tensor3 vectorial;
  Vec potential;         // contravariant V^k of the vectorial part
  Tensor3 antisymmetric;
  Tensor3 cartan;
};

/// Largest |A_ijk + A_ikj|.
inline double skewness_defect(const Tensor3& a) {
  const int n = a.dim();
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) d = std::max(d, std::abs(a(i, j, k) + a(i, k, j)));
  return d;
}

inline void require_skew(const Tensor3& a, double tol = 1e-12) {
  const double d = skewness_defect(a);
  if (d > tol * std::max(1.0, a.max_abs()))
    throw Error(ErrorKind::torsion_not_skew, "A_ijk + A_ikj = " + std::to_string(d) + " violates skew-adjointness");
}

/// c12(A)_k = g^{ij} A_ijk.
inline Vec trace12(const Tensor3& a, const Mat& ginv) {
  const int n = a.dim();
  Vec c = Vec::Zero(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(k) += ginv(i, j) * a(i, j, k);
  return c;
}

/// g^{ii'} g^{jj'} g^{kk'} A_ijk B_i'j'k'.
inline double tensor_inner(const Tensor3& a, const Tensor3& b, const Mat& ginv) {
  const int n = a.dim();
  // Raise all indices of b first.
  Tensor3 t1(n), t2(n), bu(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += ginv(k, p) * b(i, j, p);
        t1(i, j, k) = s;
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += ginv(j, p) * t1(i, p, k);
        t2(i, j, k) = s;
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += ginv(i, p) * t2(p, j, k);
        bu(i, j, k) = s;
      }
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) s += a.data()[q] * bu.data()[q];
  return s;
}

/// A_ijk = g_ij V_k - g_ik V_j for a covector V_k.
inline Tensor3 vectorial_torsion(const Mat& g, const Vec& v_lower) {
  const int n = static_cast<int>(g.rows());
  Tensor3 a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) a(i, j, k) = g(i, j) * v_lower(k) - g(i, k) * v_lower(j);
  return a;
}

/// Full alternation of a (3,0) tensor.
inline Tensor3 alternation(const Tensor3& a) {
  const int n = a.dim();
  Tensor3 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r(i, j, k) = (a(i, j, k) + a(j, k, i) + a(k, i, j) - a(i, k, j) - a(k, j, i) - a(j, i, k)) / 6.0;
  return r;
}

/// Split a skew torsion tensor into vectorial, totally antisymmetric and
/// Cartan-type parts. The vectorial potential is c12(A) / (n - 1).
inline TorsionDecomposition decompose_torsion(const Tensor3& a, const Mat& g) {
  const int n = a.dim();
  if (n < 2) throw Error(ErrorKind::invalid_argument, "torsion decomposition needs dim >= 2");
  require_skew(a);
  const Mat ginv = g.inverse();
  TorsionDecomposition d;
  const Vec v_lower = trace12(a, ginv) / static_cast<double>(n - 1);
  d.potential = ginv * v_lower;
  d.vectorial = vectorial_torsion(g, v_lower);
  d.antisymmetric = alternation(a);
  d.cartan = a - d.vectorial - d.antisymmetric;
  return d;
}

// Membership defects for the three classes. Each returns the largest
// violation of the defining conditions; zero means exact membership.

inline double vectorial_defect(const Tensor3& a, const Mat& g) {
  const int n = a.dim();
  const Vec v = trace12(a, g.inverse()) / static_cast<double>(std::max(1, n - 1));
  return std::max(skewness_defect(a), (a - vectorial_torsion(g, v)).max_abs());
}

inline double antisymmetric_defect(const Tensor3& a) {
  const int n = a.dim();
  double d = skewness_defect(a);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) d = std::max(d, std::abs(a(i, j, k) + a(j, i, k)));
  return d;
}

inline double cartan_defect(const Tensor3& a, const Mat& g) {
  const int n = a.dim();
  double d = skewness_defect(a);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) d = std::max(d, std::abs(a(i, j, k) + a(j, k, i) + a(k, i, j)));
  return std::max(d, trace12(a, g.inverse()).cwiseAbs().maxCoeff());
}

}  // namespace dhmt
