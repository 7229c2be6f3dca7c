#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "dhmt/catalog.hpp"
#include "dhmt/fields.hpp"
#include "support.hpp"

using namespace dhmt;
using namespace testing_support;
using std::numbers::pi;

namespace {

struct Mode {
  int mx, my;
  double c, s;
};

// f(x,y) = sum c cos(w(mx x + my y)) + s sin(...), with its exact partials.
struct TrigSum {
  std::vector<Mode> modes;
  double w;
  double value(double x, double y) const {
    double v = 0.0;
    for (const auto& m : modes) v += m.c * std::cos(w * (m.mx * x + m.my * y)) + m.s * std::sin(w * (m.mx * x + m.my * y));
    return v;
  }
  double partial(double x, double y, int alpha) const {
    double v = 0.0;
    for (const auto& m : modes) {
      const double k = w * (alpha == 0 ? m.mx : m.my);
      const double a = w * (m.mx * x + m.my * y);
      v += k * (-m.c * std::sin(a) + m.s * std::cos(a));
    }
    return v;
  }
};

TrigSum random_trig(std::mt19937_64& rng, int band, double length) {
  TrigSum t{{}, 2.0 * pi / length};
  for (int mx = -band; mx <= band; ++mx)
    for (int my = -band; my <= band; ++my) t.modes.push_back({mx, my, uniform(rng), uniform(rng)});
  return t;
}

}  // namespace

TEST(FrameDerivative, ConstantMapHasZeroDerivative) {
  const GridGeometry grid(16, 3.0, 1.7);
  MapField phi(3, grid.node_count());
  for (int k = 0; k < grid.node_count(); ++k) phi.at(k, 0) = 0.25, phi.at(k, 2) = -1.0;
  for (int a = 0; a < 2; ++a)
    for (double v : frame_derivative(grid, phi, a).values) EXPECT_LE(std::abs(v), 1e-13);
}

TEST(FrameDerivative, LinearWrap) {
  for (auto mode : {DerivativeMode::spectral, DerivativeMode::fd4}) {
    const double length = 2.5, lambda = 1.3;
    const GridGeometry grid(16, length, lambda, mode);
    MapField phi(3, grid.node_count());
    phi.winding(0, 0) = 2.0 * pi / length;
    const VectorGrid d1 = frame_derivative(grid, phi, 0), d2 = frame_derivative(grid, phi, 1);
    for (int k = 0; k < grid.node_count(); ++k) {
      EXPECT_NEAR(d1.at(k)(0), 2.0 * pi / (length * lambda), 1e-14);
      EXPECT_NEAR(d1.at(k)(1), 0.0, 1e-14);
      EXPECT_NEAR(d1.at(k)(2), 0.0, 1e-14);
      EXPECT_NEAR(d2.at(k).norm(), 0.0, 1e-14);
    }
    // The node value reproduces phi^1 = 2 pi x / L.
    EXPECT_NEAR(phi.value(grid, grid.node(5, 3))(0), 2.0 * pi * grid.coordinate(grid.node(5, 3), 0) / length, 1e-14);
  }
}

TEST(FrameDerivative, SpectralMatchesFourierOracle) {
  std::mt19937_64 rng(21);
  for (int n : {16, 32}) {
    const double length = 2.0 * pi * 0.7, lambda = 0.8;
    const GridGeometry grid(n, length, lambda);
    std::vector<TrigSum> comps = {random_trig(rng, 3, length), random_trig(rng, 5, length)};
    MapField phi(2, grid.node_count());
    for (int k = 0; k < grid.node_count(); ++k)
      for (int i = 0; i < 2; ++i) phi.at(k, i) = comps[i].value(grid.coordinate(k, 0), grid.coordinate(k, 1));
    for (int a = 0; a < 2; ++a) {
      const VectorGrid d = frame_derivative(grid, phi, a);
      for (int k = 0; k < grid.node_count(); ++k)
        for (int i = 0; i < 2; ++i)
          EXPECT_NEAR(d.at(k)(i), comps[i].partial(grid.coordinate(k, 0), grid.coordinate(k, 1), a) / lambda, 1e-12);
    }
  }
}

TEST(FrameDerivative, FourthOrderDifferencesConverge) {
  std::mt19937_64 rng(22);
  const TrigSum f = random_trig(rng, 2, 1.0);
  std::vector<double> errs;
  for (int n : {16, 32, 64}) {
    const GridGeometry grid(n, 1.0, 1.0, DerivativeMode::fd4);
    MapField phi(1, grid.node_count());
    for (int k = 0; k < grid.node_count(); ++k) phi.at(k, 0) = f.value(grid.coordinate(k, 0), grid.coordinate(k, 1));
    const VectorGrid d = frame_derivative(grid, phi, 1);
    double e = 0.0;
    for (int k = 0; k < grid.node_count(); ++k)
      e = std::max(e, std::abs(d.at(k)(0) - f.partial(grid.coordinate(k, 0), grid.coordinate(k, 1), 1)));
    errs.push_back(e);
  }
  EXPECT_GT(std::log2(errs[1] / errs[2]), 3.8);
}

TEST(FrameDerivative, IntegrationByParts) {
  std::mt19937_64 rng(23);
  for (auto mode : {DerivativeMode::spectral, DerivativeMode::fd4}) {
    const GridGeometry grid(16, 1.9, 1.4, mode);
    std::vector<double> f(static_cast<std::size_t>(grid.node_count())), g(f.size());
    for (auto& v : f) v = uniform(rng);
    for (auto& v : g) v = uniform(rng);
    for (int a = 0; a < 2; ++a) {
      const auto df = grid.partial<double>(f, 1, a), dg = grid.partial<double>(g, 1, a);
      double lhs = 0.0, rhs = 0.0, scale = 0.0;
      for (std::size_t q = 0; q < f.size(); ++q) {
        lhs += df[q] * g[q] * grid.area_weight();
        rhs -= f[q] * dg[q] * grid.area_weight();
        scale += std::abs(df[q] * g[q]) * grid.area_weight();
      }
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * scale);
    }
  }
}

TEST(CovariantDerivative, FlatConstantSpinorVanishes) {
  const GridGeometry grid(8, 1.0, 1.0);
  const auto chart = catalog::flat(2);
  auto [phi, psi] = random_smooth_fields(chart, grid, 3, {});
  for (int k = 0; k < grid.node_count(); ++k) psi.node(k) = psi.node(0);
  for (int a = 0; a < 2; ++a)
    for (const Complex& z : spinor_covariant_derivative(chart, grid, phi, psi, a, true).values)
      EXPECT_LE(std::abs(z), 1e-13);
}

TEST(CovariantDerivative, TorsionOnOffDifference) {
  for (const auto& t : torsion_catalog()) {
    if (t.chart.torsion.is_zero()) continue;
    const GridGeometry grid(8, 1.3, 0.9);
    const auto [phi, psi] = random_smooth_fields(t.chart, grid, 4, {});
    for (int a = 0; a < 2; ++a) {
      const auto on = spinor_covariant_derivative(t.chart, grid, phi, psi, a, true);
      const auto off = spinor_covariant_derivative(t.chart, grid, phi, psi, a, false);
      const VectorGrid dphi = map_partial(grid, phi, a);  // coordinate partial, no lambda
      const int n = t.chart.dim;
      for (int k = 0; k < grid.node_count(); ++k) {
        const Vec y = phi.value(grid, k);
        const Tensor3 A = torsion_at(t.chart, y);
        const Mat ginv = metric_at(t.chart, y).inverse();
        for (int i = 0; i < n; ++i) {
          SpinorValue expect = SpinorValue::Zero();
          for (int j = 0; j < n; ++j)
            for (int kk = 0; kk < n; ++kk)
              for (int l = 0; l < n; ++l) expect += A(j, kk, l) * ginv(l, i) * dphi.at(k)(j) * psi.at(k, kk);
          expect /= grid.conformal_factor();
          EXPECT_LE((on.at(k, i) - off.at(k, i) - expect).norm(), 1e-12) << t.name;
        }
      }
    }
  }
}

TEST(CovariantDerivative, MetricCompatibilityLeibniz) {
  for (const auto& t : torsion_catalog()) {
    const GridGeometry grid(32, 2.0, 1.2);
    const auto [phi, psi] = random_smooth_fields(t.chart, grid, 5, {1, 0.3, 0.5, {}});
    const PulledBackGeometry geo(t.chart, grid, phi);
    std::vector<double> norm2(static_cast<std::size_t>(grid.node_count()));
    for (int k = 0; k < grid.node_count(); ++k) {
      double s = 0.0;
      for (int i = 0; i < phi.dim; ++i)
        for (int j = 0; j < phi.dim; ++j) s += geo.g[k](i, j) * psi.at(k, i).dot(psi.at(k, j)).real();
      norm2[static_cast<std::size_t>(k)] = s;
    }
    for (int a = 0; a < 2; ++a) {
      const auto dn = grid.partial<double>(norm2, 1, a);
      const auto cov = spinor_covariant_derivative(grid, geo, phi, psi, a, true);
      double worst = 0.0, scale = 0.0;
      for (int k = 0; k < grid.node_count(); ++k) {
        double s = 0.0;
        for (int i = 0; i < phi.dim; ++i)
          for (int j = 0; j < phi.dim; ++j) s += geo.g[k](i, j) * cov.at(k, i).dot(psi.at(k, j)).real();
        const double lhs = dn[static_cast<std::size_t>(k)] / grid.conformal_factor();
        worst = std::max(worst, std::abs(lhs - 2.0 * s));
        scale = std::max(scale, std::abs(lhs));
      }
      EXPECT_LE(worst, 1e-6 * std::max(1.0, scale)) << t.name;
    }
  }
}

TEST(RandomFields, Deterministic) {
  const GridGeometry grid(16, 1.0);
  const auto chart = catalog::sphere(2);
  const auto a = random_smooth_fields(chart, grid, 99, {});
  const auto b = random_smooth_fields(chart, grid, 99, {});
  const auto c = random_smooth_fields(chart, grid, 100, {});
  EXPECT_EQ(a.first.periodic, b.first.periodic);
  EXPECT_EQ(a.second.values, b.second.values);
  EXPECT_NE(a.first.periodic, c.first.periodic);
}

TEST(RandomFields, BandZeroIsConstant) {
  const GridGeometry grid(8, 1.0);
  const auto [phi, psi] = random_smooth_fields(catalog::flat(3), grid, 7, {0, 0.3, 0.5, {}});
  for (int k = 1; k < grid.node_count(); ++k)
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(phi.at(k, i), phi.at(0, i));
      EXPECT_EQ(psi.at(k, i), psi.at(0, i));
    }
  EXPECT_GT(psi.at(0, 0).norm(), 0.0);
}

TEST(RandomFields, FourierSupportWithinBand) {
  const int n = 16, band = 3;
  const GridGeometry grid(n, 1.0);
  const auto [phi, psi] = random_smooth_fields(catalog::flat(1), grid, 8, {band, 0.4, 0.5, {}});
  for (int mx = -n / 2 + 1; mx <= n / 2; ++mx)
    for (int my = -n / 2 + 1; my <= n / 2; ++my) {
      Complex c = 0.0;
      for (int k = 0; k < grid.node_count(); ++k) {
        const double arg = 2.0 * pi * (mx * (k % n) + my * (k / n)) / n;
        c += phi.at(k, 0) * std::exp(Complex(0.0, -arg));
      }
      if (std::abs(mx) > band || std::abs(my) > band) {
        EXPECT_LE(std::abs(c), 1e-12) << mx << "," << my;
      }
    }
}

TEST(RandomFields, SphereMapStaysInsideDomain) {
  const GridGeometry grid(16, 1.0);
  const auto chart = catalog::sphere(2, 1.5);
  Vec base(2);
  base << 1.0, 0.5;
  const auto [phi, psi] = random_smooth_fields(chart, grid, 9, {3, 5.0, 0.5, base});
  for (int k = 0; k < grid.node_count(); ++k) EXPECT_LE(phi.value(grid, k).norm(), 0.9 * 1.5 + 1e-12);
  EXPECT_NO_THROW(PulledBackGeometry(chart, grid, phi));
}

TEST(RandomFields, BandLimitMustBeBelowHalfGrid) {
  const GridGeometry grid(8, 1.0);
  EXPECT_THROW(random_smooth_fields(catalog::flat(2), grid, 1, {4, 0.3, 0.5, {}}), Error);
}

TEST(PulledBackGeometry, DomainViolationAlongMap) {
  const GridGeometry grid(8, 1.0);
  MapField phi(2, grid.node_count());
  phi.at(10, 0) = 4.0;
  try {
    PulledBackGeometry geo(catalog::sphere(2), grid, phi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain_violation);
  }
}
