#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dhmt/catalog.hpp"
#include "dhmt/energy.hpp"
#include "dhmt/fields.hpp"
#include "dhmt/tensor.hpp"

namespace testing_support {

using namespace dhmt;

inline double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Tensor3 random_tensor3(int n, std::mt19937_64& rng) {
  Tensor3 a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) a(i, j, k) = uniform(rng);
  return a;
}

/// Random A with A_ijk = -A_ikj.
inline Tensor3 random_skew_torsion(int n, std::mt19937_64& rng) {
  Tensor3 a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double v = uniform(rng);
        a(i, j, k) = v;
        a(i, k, j) = -v;
      }
  return a;
}

inline Mat random_spd(int n, std::mt19937_64& rng) {
  Mat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = uniform(rng);
  return b * b.transpose() + n * Mat::Identity(n, n);
}

inline Vec random_point(int n, std::mt19937_64& rng, double radius) {
  Vec y(n);
  for (int i = 0; i < n; ++i) y(i) = uniform(rng, -radius, radius) / std::sqrt(double(n));
  return y;
}

inline SpinorValue random_spinor(std::mt19937_64& rng) {
  return SpinorValue(Complex(uniform(rng), uniform(rng)), Complex(uniform(rng), uniform(rng)));
}

/// Named target with torsion, for sweeping properties over the catalog.
struct NamedTarget {
  std::string name;
  TargetChart chart;
};

inline Tensor3 fixed_skew(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  return random_skew_torsion(n, rng);
}

inline std::vector<NamedTarget> torsion_catalog() {
  std::vector<NamedTarget> out;
  const TargetChart f3 = catalog::flat(3);
  const TargetChart s2 = catalog::sphere(2);
  const TargetChart s3 = catalog::sphere(3);
  const TargetChart rm = catalog::random_metric(3, 7);
  Vec v0(3);
  v0 << 0.4, -0.3, 0.2;
  Mat grad = Mat::Zero(3, 3);
  grad(0, 1) = 0.2;
  grad(2, 0) = -0.1;
  out.push_back({"flat3-zero", f3});
  out.push_back({"sphere2-zero", s2});
  out.push_back({"flat3-raw", catalog::with_torsion(f3, catalog::raw_torsion(f3, fixed_skew(3, 1)))});
  out.push_back({"sphere2-raw", catalog::with_torsion(s2, catalog::raw_torsion(s2, fixed_skew(2, 2)))});
  out.push_back({"random-cartan", catalog::with_torsion(rm, catalog::cartan_torsion(rm, fixed_skew(3, 3)))});
  out.push_back({"flat3-vectorial", catalog::with_torsion(f3, catalog::vectorial_torsion_field(f3, v0, grad))});
  out.push_back({"random-vectorial", catalog::with_torsion(rm, catalog::vectorial_torsion_field(rm, v0, grad))});
  out.push_back({"sphere3-parallel-skew", catalog::with_torsion(s3, catalog::skew_torsion(s3, 0.7))});
  out.push_back({"flat3-linear-skew",
                 catalog::with_torsion(f3, catalog::skew_torsion(f3, 0.6, catalog::SkewProfile::linear))});
  return out;
}

/// Centred finite difference of E(phi + t eta, psi + t xi) at t = 0.
inline double energy_derivative_fd(const std::function<double(const MapField&, const VectorSpinorField&)>& energy,
                                   const MapField& phi, const VectorSpinorField& psi, const VectorGrid& eta,
                                   const VectorSpinorField& xi, double t = 1e-4) {
  auto at = [&](double s) {
    MapField p = phi;
    for (std::size_t q = 0; q < p.periodic.size(); ++q) p.periodic[q] += s * eta.values[q];
    VectorSpinorField f = psi;
    for (std::size_t q = 0; q < f.values.size(); ++q) f.values[q] += s * xi.values[q];
    return energy(p, f);
  };
  return (at(t) - at(-t)) / (2.0 * t);
}

/// Random variation direction (eta, xi) from a flat-chart field draw.
inline std::pair<VectorGrid, VectorSpinorField> random_direction(int n, const GridGeometry& grid, std::uint64_t seed) {
  auto [dir, xi] = random_smooth_fields(catalog::flat(n), grid, seed, {});
  VectorGrid eta(n, dir.nodes);
  eta.values = dir.periodic;
  return {eta, xi};
}

// Brute-force membership checks written directly from the defining conditions.
namespace oracle {

inline double inner_brute(const Tensor3& a, const Tensor3& b, const Mat& ginv) {
  const int n = a.dim();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r) s += ginv(i, p) * ginv(j, q) * ginv(k, r) * a(i, j, k) * b(p, q, r);
  return s;
}

// A_XYZ = <X,Y><V,Z> - <X,Z><V,Y>. Any such V satisfies g^{ij}A_ijk = (n-1) V_k,
// so take that V and test every index triple.
inline double vectorial_violation(const Tensor3& a, const Mat& g) {
  const int n = a.dim();
  const Mat ginv = g.inverse();
  Vec v = Vec::Zero(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) v(k) += ginv(i, j) * a(i, j, k) / (n - 1);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(a(i, j, k) - (g(i, j) * v(k) - g(i, k) * v(j))));
  return worst;
}

inline double total_antisymmetry_violation(const Tensor3& a) {
  const int n = a.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        worst = std::max({worst, std::abs(a(i, j, k) + a(j, i, k)), std::abs(a(i, j, k) + a(i, k, j)),
                          std::abs(a(i, j, k) + a(k, j, i))});
  return worst;
}

inline double cartan_violation(const Tensor3& a, const Mat& g) {
  const int n = a.dim();
  const Mat ginv = g.inverse();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        worst = std::max(worst, std::abs(a(i, j, k) + a(j, k, i) + a(k, i, j)));
        worst = std::max(worst, std::abs(a(i, j, k) + a(i, k, j)));
      }
  for (int k = 0; k < n; ++k) {
    double c = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c += ginv(i, j) * a(i, j, k);
    worst = std::max(worst, std::abs(c));
  }
  return worst;
}

}  // namespace oracle

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing_support
