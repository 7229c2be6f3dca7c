#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "dhmt/error.hpp"
#include "dhmt/tensor.hpp"
#include "dhmt/torsion.hpp"

namespace dhmt {

enum class TorsionKind { zero, vectorial, totally_antisymmetric, cartan_type, raw };

inline const char* to_string(TorsionKind k) {
  switch (k) {
    case TorsionKind::zero: return "zero";
    case TorsionKind::vectorial: return "vectorial";
    case TorsionKind::totally_antisymmetric: return "totally_antisymmetric";
    case TorsionKind::cartan_type: return "cartan_type";
    case TorsionKind::raw: return "raw";
  }
  return "unknown";
}

/// Torsion field on a chart, lowered: A_ijk(y) = <A(d_i, d_j), d_k>.
struct TorsionSpec {
  TorsionKind kind = TorsionKind::zero;
  std::function<Tensor3(const Vec&)> lowered;
  // Optional analytic partials, stored (a, i, j, k) = d_a A_ijk.
  std::function<Tensor4(const Vec&)> lowered_derivative;
  // Vectorial kind only: contravariant potential V^r(y) and d_a V^r as (r, a).
  std::function<Vec(const Vec&)> potential;
  std::function<Mat(const Vec&)> potential_derivative;
  // Constant in chart coordinates; maps with nonzero winding need this.
  bool translation_invariant = true;

  bool is_zero() const { return kind == TorsionKind::zero || !lowered; }
};

/// A single coordinate chart y -> g_ij(y) of the target manifold with its torsion.
struct TargetChart {
  std::string name;
  int dim = 0;
  std::function<Mat(const Vec&)> metric;
  // Optional analytic closures; central differences are used otherwise.
  std::function<Tensor3(const Vec&)> metric_derivative;   // (k, i, j) = d_k g_ij
  std::function<Tensor4(const Vec&)> riemann;             // R_ijkl, Levi-Civita
  std::function<Tensor5(const Vec&)> riemann_derivative;  // (a, i, j, k, l) = d_a R_ijkl
  double domain_radius = std::numeric_limits<double>::infinity();
  bool translation_invariant = false;
  double fd_step = 1e-5;
  TorsionSpec torsion;
};

inline void check_domain(const TargetChart& chart, const Vec& y) {
  if (y.size() != chart.dim) throw Error(ErrorKind::invalid_argument, "point dimension mismatch for chart " + chart.name);
  if (!y.allFinite() || y.norm() > chart.domain_radius)
    throw Error(ErrorKind::domain_violation,
                "point |y| = " + std::to_string(y.norm()) + " outside chart " + chart.name + " (radius " +
                    std::to_string(chart.domain_radius) + ")");
}

inline Mat metric_at(const TargetChart& chart, const Vec& y) {
  check_domain(chart, y);
  Mat g = chart.metric(y);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::not_positive_definite, "metric not symmetric on chart " + chart.name);
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorKind::not_positive_definite, "metric has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  return g;
}

namespace detail {

// Central difference of a tensor-valued closure in each coordinate; the
// derivative index is prepended.
template <class Out, class In, class F>
Out central_gradient(const F& f, const Vec& y, double h, int n) {
  Out d(n);
  const std::size_t block = d.size() / static_cast<std::size_t>(n);
  for (int a = 0; a < n; ++a) {
    Vec yp = y, ym = y;
    yp(a) += h;
    ym(a) -= h;
    const In fp = f(yp), fm = f(ym);
    for (std::size_t q = 0; q < block; ++q) d.data()[a * block + q] = (fp.data()[q] - fm.data()[q]) / (2.0 * h);
  }
  return d;
}

}  // namespace detail

/// (k, i, j) = d_k g_ij.
inline Tensor3 metric_derivative_at(const TargetChart& chart, const Vec& y) {
  check_domain(chart, y);
  if (chart.metric_derivative) return chart.metric_derivative(y);
  const int n = chart.dim;
  Tensor3 d(n);
  for (int k = 0; k < n; ++k) {
    Vec yp = y, ym = y;
    yp(k) += chart.fd_step;
    ym(k) -= chart.fd_step;
    const Mat gp = chart.metric(yp), gm = chart.metric(ym);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(k, i, j) = (gp(i, j) - gm(i, j)) / (2.0 * chart.fd_step);
  }
  return d;
}

/// Gamma^i_jk = 1/2 g^il (d_j g_lk + d_k g_lj - d_l g_jk), stored (i, j, k).
inline Tensor3 christoffel_from(const Mat& ginv, const Tensor3& dg) {
  const int n = dg.dim();
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ginv(i, l) * (dg(j, l, k) + dg(k, l, j) - dg(l, j, k));
        gamma(i, j, k) = 0.5 * s;
      }
  return gamma;
}

inline Tensor3 christoffel_at(const TargetChart& chart, const Vec& y) {
  const Mat g = metric_at(chart, y);
  return christoffel_from(g.inverse(), metric_derivative_at(chart, y));
}

/// R_ijkl = <R(d_i, d_j) d_k, d_l> with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y].
inline Tensor4 lc_curvature_at(const TargetChart& chart, const Vec& y) {
  const Mat g = metric_at(chart, y);
  if (chart.riemann) return chart.riemann(y);
  const int n = chart.dim;
  const double h = chart.fd_step;
  const Tensor3 gam = christoffel_at(chart, y);
  // dgam(a, m, j, k) = d_a Gamma^m_jk
  Tensor4 dgam(n);
  for (int a = 0; a < n; ++a) {
    Vec yp = y, ym = y;
    yp(a) += h;
    ym(a) -= h;
    const Tensor3 gp = christoffel_at(chart, yp), gm = christoffel_at(chart, ym);
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) dgam(a, m, j, k) = (gp(m, j, k) - gm(m, j, k)) / (2.0 * h);
  }
  Tensor4 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Vec up = Vec::Zero(n);  // R(d_i, d_j) d_k, contravariant
        for (int m = 0; m < n; ++m) {
          double s = dgam(i, m, j, k) - dgam(j, m, i, k);
          for (int p = 0; p < n; ++p) s += gam(m, i, p) * gam(p, j, k) - gam(m, j, p) * gam(p, i, k);
          up(m) = s;
        }
        const Vec low = g * up;
        for (int l = 0; l < n; ++l) r(i, j, k, l) = low(l);
      }
  return r;
}

/// Lowered torsion at y; throws when the skew-adjointness A_ijk = -A_ikj fails.
inline Tensor3 torsion_at(const TargetChart& chart, const Vec& y) {
  check_domain(chart, y);
  if (chart.torsion.is_zero()) return Tensor3(chart.dim);
  Tensor3 a = chart.torsion.lowered(y);
  require_skew(a);
  return a;
}

/// (a, i, j, k) = d_a A_ijk.
inline Tensor4 torsion_partials_at(const TargetChart& chart, const Vec& y) {
  check_domain(chart, y);
  const int n = chart.dim;
  if (chart.torsion.is_zero()) return Tensor4(n);
  if (chart.torsion.lowered_derivative) return chart.torsion.lowered_derivative(y);
  return detail::central_gradient<Tensor4, Tensor3>(chart.torsion.lowered, y, chart.fd_step, n);
}

/// Levi-Civita covariant derivative of the torsion, (a, i, j, k) = (nabla_a A)_ijk.
inline Tensor4 nabla_torsion_at(const TargetChart& chart, const Vec& y) {
  const int n = chart.dim;
  if (chart.torsion.is_zero()) {
    check_domain(chart, y);
    return Tensor4(n);
  }
  const Tensor3 a = torsion_at(chart, y);
  const Tensor3 gam = christoffel_at(chart, y);
  Tensor4 d = torsion_partials_at(chart, y);
  for (int q = 0; q < n; ++q)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int r = 0; r < n; ++r)
            s += gam(r, q, i) * a(r, j, k) + gam(r, q, j) * a(i, r, k) + gam(r, q, k) * a(i, j, r);
          d(q, i, j, k) -= s;
        }
  return d;
}

/// A_ij^k = A_ijl g^lk.
inline Tensor3 raise_last(const Tensor3& a, const Mat& ginv) {
  const int n = a.dim();
  Tensor3 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += a(i, j, l) * ginv(l, k);
        r(i, j, k) = s;
      }
  return r;
}

/// Curvature of the torsion connection from the Levi-Civita curvature, the
/// covariant derivative of A and the quadratic A-terms:
///   R^Tor_ijkl = R_ijkl + nabla_i A_jkl - nabla_j A_ikl + A_irl A_jk^r - A_jrl A_ik^r.
inline Tensor4 torsion_curvature_from(const Tensor4& r_lc, const Tensor4& nabla_a, const Tensor3& a, const Mat& ginv) {
  const int n = a.dim();
  const Tensor3 a_up = raise_last(a, ginv);
  Tensor4 r = r_lc;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = nabla_a(i, j, k, l) - nabla_a(j, i, k, l);
          for (int p = 0; p < n; ++p) s += a(i, p, l) * a_up(j, k, p) - a(j, p, l) * a_up(i, k, p);
          r(i, j, k, l) += s;
        }
  return r;
}

inline Tensor4 torsion_curvature_at(const TargetChart& chart, const Vec& y) {
  const Tensor4 r_lc = lc_curvature_at(chart, y);
  if (chart.torsion.is_zero()) return r_lc;
  const Mat ginv = metric_at(chart, y).inverse();
  return torsion_curvature_from(r_lc, nabla_torsion_at(chart, y), torsion_at(chart, y), ginv);
}

/// max |R_ijkl - R_klij|.
inline double pair_swap_defect(const Tensor4& r) {
  const int n = r.dim();
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) d = std::max(d, std::abs(r(i, j, k, l) - r(k, l, i, j)));
  return d;
}

/// max over both index pairs of |R_ijkl + R_jikl| and |R_ijkl + R_ijlk|.
inline double pair_antisymmetry_defect(const Tensor4& r) {
  const int n = r.dim();
  double d = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          d = std::max({d, std::abs(r(i, j, k, l) + r(j, i, k, l)), std::abs(r(i, j, k, l) + r(i, j, l, k))});
  return d;
}

/// Which curvature a quartic spinor term is built from.
enum class CurvatureConnection { levi_civita, torsion };

/// Curvature tensor of the requested connection.
inline Tensor4 curvature_at(const TargetChart& chart, const Vec& y, CurvatureConnection c) {
  return c == CurvatureConnection::levi_civita ? lc_curvature_at(chart, y) : torsion_curvature_at(chart, y);
}

/// Covariant derivative (a, i, j, k, l) = (nabla_a R)_ijkl, using the
/// connection coefficients Gamma^r_ai (+ A_ai^r for the torsion connection)
/// on every slot. Partials come from the chart when analytic curvature
/// derivatives exist for the Levi-Civita case, otherwise from central
/// differences of curvature_at with step 1e-4.
inline Tensor5 curvature_covariant_derivative_at(const TargetChart& chart, const Vec& y, CurvatureConnection c) {
  const int n = chart.dim;
  Tensor5 d(n);
  if (c == CurvatureConnection::levi_civita && chart.riemann_derivative) {
    check_domain(chart, y);
    d = chart.riemann_derivative(y);
  } else {
    constexpr double h = 1e-4;
    d = detail::central_gradient<Tensor5, Tensor4>([&](const Vec& p) { return curvature_at(chart, p, c); }, y, h, n);
  }
  const Tensor4 r = curvature_at(chart, y, c);
  Tensor3 conn = christoffel_at(chart, y);  // conn(r, a, i) = Gamma^r_ai (+ A_ai^r)
  if (c == CurvatureConnection::torsion && !chart.torsion.is_zero()) {
    const Tensor3 a_up = raise_last(torsion_at(chart, y), metric_at(chart, y).inverse());
    for (int p = 0; p < n; ++p)
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i) conn(p, a, i) += a_up(a, i, p);
  }
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double s = 0.0;
            for (int p = 0; p < n; ++p)
              s += conn(p, a, i) * r(p, j, k, l) + conn(p, a, j) * r(i, p, k, l) + conn(p, a, k) * r(i, j, p, l) +
                   conn(p, a, l) * r(i, j, k, p);
            d(a, i, j, k, l) -= s;
          }
  return d;
}

}  // namespace dhmt
