#include <gtest/gtest.h>

#include <random>

#include "dhmt/catalog.hpp"
#include "dhmt/target.hpp"
#include "support.hpp"

using namespace dhmt;
using namespace testing_support;

namespace {

// Independent Christoffel oracle: central differences of the metric closure
// and the textbook formula written out in full.
Tensor3 christoffel_oracle(const TargetChart& chart, const Vec& y, double h = 1e-5) {
  const int n = chart.dim;
  std::vector<Mat> dg(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Vec yp = y, ym = y;
    yp(k) += h;
    ym(k) -= h;
    dg[static_cast<std::size_t>(k)] = (chart.metric(yp) - chart.metric(ym)) / (2.0 * h);
  }
  const Mat ginv = chart.metric(y).inverse();
  Tensor3 gam(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          gam(i, j, k) += 0.5 * ginv(i, l) *
                          (dg[static_cast<std::size_t>(j)](l, k) + dg[static_cast<std::size_t>(k)](l, j) -
                           dg[static_cast<std::size_t>(l)](j, k));
  return gam;
}

double compatibility_defect(const TargetChart& chart, const Vec& y) {
  const int n = chart.dim;
  const Mat g = chart.metric(y);
  const Tensor3 dg = metric_derivative_at(chart, y);
  const Tensor3 gam = christoffel_at(chart, y);
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += gam(l, k, i) * g(l, j) + gam(l, k, j) * g(i, l);
        worst = std::max(worst, std::abs(dg(k, i, j) - s));
      }
  return worst;
}

int eps(int i, int j, int k) { return (i - j) * (j - k) * (k - i) / 2; }

}  // namespace

TEST(Christoffel, FlatVanishes) {
  std::mt19937_64 rng(1);
  const auto chart = catalog::flat(3);
  EXPECT_EQ(christoffel_at(chart, random_point(3, rng, 2.0)).max_abs(), 0.0);
}

TEST(Christoffel, SphereMatchesConformalClosedForm) {
  std::mt19937_64 rng(2);
  for (int n : {2, 3}) {
    const auto chart = catalog::sphere(n);
    for (int r = 0; r < 20; ++r) {
      const Vec y = random_point(n, rng, 2.5);
      const Vec du = -2.0 * y / (1.0 + y.squaredNorm());
      const Tensor3 gam = christoffel_at(chart, y);
      const Tensor3 fd = christoffel_oracle(chart, y);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const double closed = (i == j) * du(k) + (i == k) * du(j) - (j == k) * du(i);
            EXPECT_NEAR(gam(i, j, k), closed, 1e-13);
            EXPECT_NEAR(fd(i, j, k), closed, 1e-8);
          }
    }
  }
}

TEST(Christoffel, RandomMetricAnalyticMatchesFiniteDifference) {
  std::mt19937_64 rng(3);
  for (unsigned seed : {1u, 5u, 9u}) {
    const auto chart = catalog::random_metric(3, seed);
    for (int r = 0; r < 10; ++r) {
      const Vec y = random_point(3, rng, 2.0);
      EXPECT_LE((christoffel_at(chart, y) - christoffel_oracle(chart, y)).max_abs(), 1e-8);
    }
  }
}

TEST(Christoffel, SymmetricAndMetricCompatibleAcrossCatalog) {
  std::mt19937_64 rng(4);
  for (const auto& t : torsion_catalog()) {
    for (int r = 0; r < 5; ++r) {
      const Vec y = random_point(t.chart.dim, rng, 1.5);
      const Tensor3 gam = christoffel_at(t.chart, y);
      for (int i = 0; i < t.chart.dim; ++i)
        for (int j = 0; j < t.chart.dim; ++j)
          for (int k = 0; k < t.chart.dim; ++k) EXPECT_EQ(gam(i, j, k), gam(i, k, j)) << t.name;
      EXPECT_LE(compatibility_defect(t.chart, y), 1e-12) << t.name;
    }
  }
}

TEST(Christoffel, DomainViolationAndIndefiniteMetric) {
  const auto s2 = catalog::sphere(2);
  Vec far(2);
  far << 3.0, 1.0;
  try {
    christoffel_at(s2, far);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain_violation);
  }
  TargetChart bad = catalog::flat(2);
  bad.metric = [](const Vec&) {
    Mat g(2, 2);
    g << 1.0, 0.0, 0.0, -1.0;
    return g;
  };
  bad.metric_derivative = nullptr;
  try {
    christoffel_at(bad, Vec::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_positive_definite);
  }
}

TEST(Curvature, FlatVanishes) {
  EXPECT_EQ(lc_curvature_at(catalog::flat(3), Vec::Ones(3)).max_abs(), 0.0);
}

TEST(Curvature, SphereHasConstantSectionalCurvatureOne) {
  std::mt19937_64 rng(5);
  for (int n : {2, 3}) {
    TargetChart chart = catalog::sphere(n);
    TargetChart fd_chart = chart;
    fd_chart.riemann = nullptr;
    for (int r = 0; r < 10; ++r) {
      const Vec y = random_point(n, rng, 2.0);
      const Mat g = chart.metric(y);
      const Tensor4 rr = lc_curvature_at(chart, y);
      const Tensor4 rf = lc_curvature_at(fd_chart, y);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              const double closed = g(i, l) * g(j, k) - g(i, k) * g(j, l);
              EXPECT_NEAR(rr(i, j, k, l), closed, 1e-13);
              EXPECT_NEAR(rf(i, j, k, l), closed, 1e-6);
            }
      // <R(X,Y)Y,X> / (|X|^2|Y|^2 - <X,Y>^2) = 1
      if (n == 2) {
        EXPECT_NEAR(rr(0, 1, 1, 0) / (g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1)), 1.0, 1e-13);
      }
    }
  }
}

TEST(Curvature, RandomMetricSymmetries) {
  std::mt19937_64 rng(6);
  const auto chart = catalog::random_metric(3, 11);
  for (int r = 0; r < 5; ++r) {
    const Vec y = random_point(3, rng, 1.5);
    const Tensor4 rr = lc_curvature_at(chart, y);
    EXPECT_GT(rr.max_abs(), 1e-3);
    EXPECT_LE(pair_antisymmetry_defect(rr), 1e-6);
    EXPECT_LE(pair_swap_defect(rr), 1e-6);
  }
}

TEST(TorsionCurvature, ZeroTorsionGivesLeviCivita) {
  const auto s3 = catalog::sphere(3);
  Vec y(3);
  y << 0.2, -0.4, 0.7;
  EXPECT_LE((torsion_curvature_at(s3, y) - lc_curvature_at(s3, y)).max_abs(), 0.0);
}

TEST(TorsionCurvature, ConstantVolumeFormOnFlatSpace) {
  const double kappa = 0.8;
  const auto chart = catalog::with_torsion(catalog::flat(3), catalog::skew_torsion(catalog::flat(3), kappa));
  Vec y(3);
  y << 0.5, -1.0, 2.0;
  const Tensor4 r = torsion_curvature_at(chart, y);
  const Tensor3 a = torsion_at(chart, y);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          // brute-force A-quadratic terms with A = kappa eps
          double q = 0.0;
          for (int p = 0; p < 3; ++p) q += kappa * kappa * (eps(i, p, l) * eps(j, k, p) - eps(j, p, l) * eps(i, k, p));
          const double closed = kappa * kappa * ((i == k) * (j == l) - (i == l) * (j == k));
          EXPECT_NEAR(q, closed, 1e-15);
          EXPECT_NEAR(r(i, j, k, l), closed, 1e-13);
          EXPECT_NEAR(a(i, j, k), kappa * eps(i, j, k), 1e-15);
        }
}

TEST(TorsionCurvature, ParallelSkewOnSphereIsPairSymmetric) {
  std::mt19937_64 rng(7);
  const auto s3 = catalog::sphere(3);
  const auto chart = catalog::with_torsion(s3, catalog::skew_torsion(s3, 0.7));
  for (int r = 0; r < 10; ++r) {
    const Vec y = random_point(3, rng, 2.0);
    EXPECT_LE(nabla_torsion_at(chart, y).max_abs(), 1e-12);
    const Tensor4 rt = torsion_curvature_at(chart, y);
    EXPECT_GT((rt - lc_curvature_at(chart, y)).max_abs(), 1e-3);
    EXPECT_LE(pair_swap_defect(rt), 1e-12);
    EXPECT_LE(pair_antisymmetry_defect(rt), 1e-12);
  }
}

TEST(TorsionCurvature, NonParallelSkewBreaksPairSymmetry) {
  const double kappa = 0.6;
  const auto f3 = catalog::flat(3);
  const auto chart = catalog::with_torsion(f3, catalog::skew_torsion(f3, kappa, catalog::SkewProfile::linear));
  const Tensor4 r = torsion_curvature_at(chart, Vec::Zero(3));
  // At the origin A vanishes and only the derivative terms survive.
  EXPECT_NEAR(r(0, 1, 0, 2) - r(0, 2, 0, 1), -2.0 * kappa, 1e-13);
  EXPECT_GT(pair_swap_defect(r), 1.0);
  EXPECT_LE(pair_antisymmetry_defect(r), 1e-13);
}

TEST(TorsionCurvature, PairAntisymmetryAcrossCatalog) {
  std::mt19937_64 rng(8);
  for (const auto& t : torsion_catalog()) {
    const Vec y = random_point(t.chart.dim, rng, 1.0);
    const Tensor4 r = torsion_curvature_at(t.chart, y);
    EXPECT_LE(pair_antisymmetry_defect(r), 1e-6) << t.name;
  }
}

TEST(NablaTorsion, ConstantOnFlatVanishes) {
  const auto f3 = catalog::flat(3);
  const auto raw = catalog::with_torsion(f3, catalog::raw_torsion(f3, fixed_skew(3, 4)));
  EXPECT_EQ(nabla_torsion_at(raw, Vec::Ones(3)).max_abs(), 0.0);
  Vec v0(3);
  v0 << 1.0, 2.0, -0.5;
  const auto vec = catalog::with_torsion(f3, catalog::vectorial_torsion_field(f3, v0, Mat::Zero(3, 3)));
  EXPECT_EQ(nabla_torsion_at(vec, Vec::Ones(3)).max_abs(), 0.0);
}

TEST(NablaTorsion, AnalyticMatchesFiniteDifferenceAndStaysSkew) {
  std::mt19937_64 rng(9);
  for (const auto& t : torsion_catalog()) {
    if (t.chart.torsion.is_zero() || !t.chart.torsion.lowered_derivative) continue;
    TargetChart fd = t.chart;
    fd.torsion.lowered_derivative = nullptr;
    const Vec y = random_point(t.chart.dim, rng, 1.0);
    const Tensor4 an = nabla_torsion_at(t.chart, y);
    EXPECT_LE((an - nabla_torsion_at(fd, y)).max_abs(), 1e-8) << t.name;
    const int n = t.chart.dim;
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) EXPECT_NEAR(an(a, i, j, k), -an(a, i, k, j), 1e-12) << t.name;
  }
}

TEST(TorsionField, CatalogIsSkewAndDecomposes) {
  std::mt19937_64 rng(10);
  for (const auto& t : torsion_catalog()) {
    if (t.chart.torsion.is_zero()) continue;
    for (int r = 0; r < 5; ++r) {
      const Vec y = random_point(t.chart.dim, rng, 1.5);
      const Tensor3 a = torsion_at(t.chart, y);
      EXPECT_LE(skewness_defect(a), 1e-12) << t.name;
      const Mat g = metric_at(t.chart, y);
      const auto d = decompose_torsion(a, g);
      const Mat ginv = g.inverse();
      EXPECT_LE((d.vectorial + d.antisymmetric + d.cartan - a).max_abs(), 1e-12) << t.name;
      EXPECT_LE(std::abs(tensor_inner(d.vectorial, d.cartan, ginv)), 1e-12) << t.name;
      EXPECT_LE(std::abs(tensor_inner(d.vectorial, d.antisymmetric, ginv)), 1e-12) << t.name;
      EXPECT_LE(std::abs(tensor_inner(d.antisymmetric, d.cartan, ginv)), 1e-12) << t.name;
    }
  }
}

TEST(TorsionField, VectorialKindReproducesDefiningFormula) {
  std::mt19937_64 rng(11);
  const auto rm = catalog::random_metric(3, 7);
  Vec v0(3);
  v0 << 0.4, -0.3, 0.2;
  Mat grad = Mat::Zero(3, 3);
  grad(1, 2) = 0.3;
  const auto chart = catalog::with_torsion(rm, catalog::vectorial_torsion_field(rm, v0, grad));
  for (int r = 0; r < 5; ++r) {
    const Vec y = random_point(3, rng, 1.5);
    const Vec x = random_point(3, rng, 1.0), w = random_point(3, rng, 1.0), z = random_point(3, rng, 1.0);
    const Mat g = chart.metric(y);
    const Vec v = v0 + grad * y;
    const Tensor3 a = torsion_at(chart, y);
    double axyz = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) axyz += a(i, j, k) * x(i) * w(j) * z(k);
    const double expect = x.dot(g * w) * v.dot(g * z) - x.dot(g * z) * v.dot(g * w);
    EXPECT_NEAR(axyz, expect, 1e-13);
  }
}

TEST(TorsionField, RawNonSkewFailsOnEvaluation) {
  const auto f3 = catalog::flat(3);
  Tensor3 bad = fixed_skew(3, 5);
  bad(1, 1, 2) += 1.0;
  const auto chart = catalog::with_torsion(f3, catalog::raw_torsion(f3, bad));
  try {
    torsion_at(chart, Vec::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::torsion_not_skew);
  }
}
