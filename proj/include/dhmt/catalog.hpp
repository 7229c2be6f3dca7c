#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dhmt/error.hpp"
#include "dhmt/target.hpp"

namespace dhmt::catalog {

/// Euclidean R^n in Cartesian coordinates.
inline TargetChart flat(int n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "flat chart needs dim >= 1");
  TargetChart c;
  c.name = "flat";
  c.dim = n;
  c.metric = [n](const Vec&) { return Mat::Identity(n, n); };
  c.metric_derivative = [n](const Vec&) { return Tensor3(n); };
  c.riemann = [n](const Vec&) { return Tensor4(n); };
  c.riemann_derivative = [n](const Vec&) { return Tensor5(n); };
  c.translation_invariant = true;
  return c;
}

/// Round unit sphere S^n in stereographic coordinates, g = 4 delta / (1 + |y|^2)^2.
/// Points with |y| > radius_guard are rejected to stay away from the antipode.
inline TargetChart sphere(int n, double radius_guard = 3.0) {
  if (n < 2) throw Error(ErrorKind::invalid_argument, "sphere chart needs dim >= 2");
  TargetChart c;
  c.name = n == 2 ? "sphere2" : (n == 3 ? "sphere3" : "sphere");
  c.dim = n;
  c.domain_radius = radius_guard;
  auto factor = [](const Vec& y) {
    const double q = 1.0 + y.squaredNorm();
    return 4.0 / (q * q);
  };
  c.metric = [n, factor](const Vec& y) { return Mat(factor(y) * Mat::Identity(n, n)); };
  // d_k g_ij = 2 d_k f g_ij with d_k f = -2 y_k / (1 + |y|^2)
  c.metric_derivative = [n, factor](const Vec& y) {
    const double q = 1.0 + y.squaredNorm();
    const double w = factor(y);
    Tensor3 d(n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) d(k, i, i) = -4.0 * y(k) / q * w;
    return d;
  };
  // Constant curvature +1: R(X,Y)Z = <Y,Z>X - <X,Z>Y.
  c.riemann = [n, factor](const Vec& y) {
    const double w = factor(y);
    Tensor4 r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        r(i, j, j, i) = w * w;
        r(i, j, i, j) = -w * w;
      }
    return r;
  };
  c.riemann_derivative = [n, factor](const Vec& y) {
    const double q = 1.0 + y.squaredNorm();
    const double w = factor(y);
    Tensor5 d(n);
    for (int a = 0; a < n; ++a) {
      const double dw2 = 2.0 * w * (-4.0 * y(a) / q * w);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          d(a, i, j, j, i) = dw2;
          d(a, i, j, i, j) = -dw2;
        }
    }
    return d;
  };
  return c;
}

/// Smooth metric g = I + amplitude * B(y) B(y)^T with B_ij = c_ij sin(k_ij . y + p_ij).
/// Analytic first derivatives; curvature falls back to finite differences.
inline TargetChart random_metric(int n, unsigned seed, double amplitude = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Entry {
    double c, p;
    Vec k;
  };
  std::vector<Entry> e(static_cast<std::size_t>(n * n));
  for (auto& en : e) {
    en.c = u(rng);
    en.p = 3.0 * u(rng);
    en.k = Vec(n);
    for (int a = 0; a < n; ++a) en.k(a) = u(rng);
  }
  auto bmat = [n, e](const Vec& y) {
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const auto& en = e[static_cast<std::size_t>(i * n + j)];
        b(i, j) = en.c * std::sin(en.k.dot(y) + en.p);
      }
    return b;
  };
  TargetChart c;
  c.name = "random_metric";
  c.dim = n;
  c.metric = [n, amplitude, bmat](const Vec& y) {
    const Mat b = bmat(y);
    return Mat(Mat::Identity(n, n) + amplitude * b * b.transpose());
  };
  c.metric_derivative = [n, amplitude, e, bmat](const Vec& y) {
    const Mat b = bmat(y);
    Tensor3 d(n);
    for (int a = 0; a < n; ++a) {
      Mat db(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const auto& en = e[static_cast<std::size_t>(i * n + j)];
          db(i, j) = en.c * en.k(a) * std::cos(en.k.dot(y) + en.p);
        }
      const Mat dg = amplitude * (db * b.transpose() + b * db.transpose());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(a, i, j) = dg(i, j);
    }
    return d;
  };
  return c;
}

// ---------------------------------------------------------------------------
// Torsion fields. Each factory reads the chart's metric and returns a spec to
// be stored in chart.torsion.

inline TorsionSpec zero_torsion() { return {}; }

/// Constant components A_ijk in chart coordinates; not validated here so that
/// invalid input surfaces as a torsion-skewness failure on evaluation.
inline TorsionSpec raw_torsion(const TargetChart& chart, const Tensor3& components) {
  if (components.dim() != chart.dim) throw Error(ErrorKind::invalid_argument, "raw torsion dimension mismatch");
  TorsionSpec t;
  t.kind = TorsionKind::raw;
  t.lowered = [components](const Vec&) { return components; };
  t.lowered_derivative = [n = chart.dim](const Vec&) { return Tensor4(n); };
  t.translation_invariant = true;
  return t;
}

/// Cartan-type part of the given components, projected with the metric at each point.
inline TorsionSpec cartan_torsion(const TargetChart& chart, const Tensor3& components) {
  if (components.dim() != chart.dim) throw Error(ErrorKind::invalid_argument, "cartan torsion dimension mismatch");
  require_skew(components);
  TorsionSpec t;
  t.kind = TorsionKind::cartan_type;
  auto metric = chart.metric;
  t.lowered = [components, metric](const Vec& y) { return decompose_torsion(components, metric(y)).cartan; };
  t.translation_invariant = chart.translation_invariant;
  return t;
}

/// A_XYZ = <X,Y><V,Z> - <X,Z><V,Y> with V^r(y) = v0^r + gradient^r_a y^a.
inline TorsionSpec vectorial_torsion_field(const TargetChart& chart, const Vec& v0, const Mat& gradient) {
  const int n = chart.dim;
  if (v0.size() != n || gradient.rows() != n || gradient.cols() != n)
    throw Error(ErrorKind::invalid_argument, "vectorial torsion dimension mismatch");
  TorsionSpec t;
  t.kind = TorsionKind::vectorial;
  t.potential = [v0, gradient](const Vec& y) { return Vec(v0 + gradient * y); };
  t.potential_derivative = [gradient](const Vec&) { return gradient; };
  auto metric = chart.metric;
  auto dmetric = chart.metric_derivative;
  auto pot = t.potential;
  t.lowered = [metric, pot](const Vec& y) {
    const Mat g = metric(y);
    return vectorial_torsion(g, g * pot(y));
  };
  if (dmetric) {
    t.lowered_derivative = [n, metric, dmetric, pot, gradient](const Vec& y) {
      const Mat g = metric(y);
      const Tensor3 dg = dmetric(y);
      const Vec v = pot(y);
      const Vec vl = g * v;
      Tensor4 d(n);
      for (int a = 0; a < n; ++a) {
        Vec dvl = g * gradient.col(a);
        for (int k = 0; k < n; ++k)
          for (int r = 0; r < n; ++r) dvl(k) += dg(a, k, r) * v(r);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              d(a, i, j, k) = dg(a, i, j) * vl(k) + g(i, j) * dvl(k) - dg(a, i, k) * vl(j) - g(i, k) * dvl(j);
      }
      return d;
    };
  }
  t.translation_invariant = chart.translation_invariant && gradient.isZero(0.0);
  return t;
}

enum class SkewProfile { parallel, linear };

/// Totally antisymmetric torsion in dimension three, A = kappa f(y) vol_g with
/// f = 1 (parallel for every metric) or f = y^1 (not parallel).
inline TorsionSpec skew_torsion(const TargetChart& chart, double kappa, SkewProfile profile = SkewProfile::parallel) {
  if (chart.dim != 3) throw Error(ErrorKind::invalid_argument, "volume-form torsion needs a 3-dimensional target");
  TorsionSpec t;
  t.kind = TorsionKind::totally_antisymmetric;
  auto metric = chart.metric;
  auto dmetric = chart.metric_derivative;
  const bool linear = profile == SkewProfile::linear;
  auto prof = [linear](const Vec& y) { return linear ? y(0) : 1.0; };
  t.lowered = [metric, kappa, prof](const Vec& y) {
    const double s = kappa * prof(y) * std::sqrt(metric(y).determinant());
    Tensor3 a(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) a(i, j, k) = s * epsilon3(i, j, k);
    return a;
  };
  if (dmetric) {
    // d_a sqrt(det g) = 1/2 sqrt(det g) tr(g^-1 d_a g)
    t.lowered_derivative = [metric, dmetric, kappa, prof, linear](const Vec& y) {
      const Mat g = metric(y);
      const Mat ginv = g.inverse();
      const Tensor3 dg = dmetric(y);
      const double vol = std::sqrt(g.determinant());
      Tensor4 d(3);
      for (int a = 0; a < 3; ++a) {
        double tr = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) tr += ginv(i, j) * dg(a, j, i);
        const double ds = kappa * (prof(y) * 0.5 * vol * tr + (linear && a == 0 ? vol : 0.0));
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) d(a, i, j, k) = ds * epsilon3(i, j, k);
      }
      return d;
    };
  }
  t.translation_invariant = chart.translation_invariant && !linear;
  return t;
}

inline TargetChart with_torsion(TargetChart chart, TorsionSpec torsion) {
  chart.torsion = std::move(torsion);
  return chart;
}

}  // namespace dhmt::catalog
