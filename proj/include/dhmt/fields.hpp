#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "dhmt/clifford.hpp"
#include "dhmt/error.hpp"
#include "dhmt/target.hpp"

namespace dhmt {

enum class DerivativeMode { spectral, fd4 };

/// Periodic differentiation along one grid axis, as a dense N x N matrix.
///
/// Spectral mode is the trigonometric-interpolant derivative with the Nyquist
/// mode dropped; both modes give a real antisymmetric matrix, so discrete
/// summation by parts holds exactly.
class Differentiator {
 public:
  Differentiator(int n, double length, DerivativeMode mode) : n_(n), d_(n, n) {
    const double h = length / n;
    d_.setZero();
    if (mode == DerivativeMode::spectral) {
      const double scale = 2.0 * std::numbers::pi / length;
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          if (j == l) continue;
          const int m = j - l;
          const double x = std::numbers::pi * m / n;  // (j - l) * (2 pi / N) / 2
          const double sign = (m % 2 == 0) ? 1.0 : -1.0;
          d_(j, l) = scale * 0.5 * sign / std::tan(x);
        }
    } else {
      auto wrap = [n](int k) { return ((k % n) + n) % n; };
      for (int j = 0; j < n; ++j) {
        d_(j, wrap(j + 1)) += 8.0 / (12.0 * h);
        d_(j, wrap(j - 1)) -= 8.0 / (12.0 * h);
        d_(j, wrap(j + 2)) -= 1.0 / (12.0 * h);
        d_(j, wrap(j - 2)) += 1.0 / (12.0 * h);
      }
    }
  }

  const Mat& matrix() const { return d_; }
  int size() const { return n_; }

 private:
  int n_;
  Mat d_;
};

/// Flat torus [0, L)^2 with N nodes per side and constant conformal factor:
/// domain metric lambda^2 delta, orthonormal frame e_a = lambda^-1 d/dx_a.
/// Node index = iy * N + ix.
class GridGeometry {
 public:
  GridGeometry(int nodes_per_side, double side_length, double conformal_factor = 1.0,
               DerivativeMode mode = DerivativeMode::spectral)
      : n_(nodes_per_side), length_(side_length), lambda_(conformal_factor), mode_(mode) {
    if (n_ < 4) throw Error(ErrorKind::invalid_argument, "grid needs at least 4 nodes per side");
    if (!(length_ > 0.0) || !(lambda_ > 0.0)) throw Error(ErrorKind::invalid_argument, "side length and conformal factor must be positive");
    diff_ = std::make_shared<const Differentiator>(n_, length_, mode_);
  }

  int nodes_per_side() const { return n_; }
  int node_count() const { return n_ * n_; }
  double side_length() const { return length_; }
  double spacing() const { return length_ / n_; }
  double conformal_factor() const { return lambda_; }
  DerivativeMode mode() const { return mode_; }
  /// lambda^2 h^2
  double area_weight() const { return lambda_ * lambda_ * spacing() * spacing(); }
  const Differentiator& differentiator() const { return *diff_; }

  int node(int ix, int iy) const { return iy * n_ + ix; }
  /// Coordinate position x_alpha of a node.
  double coordinate(int node, int alpha) const { return spacing() * (alpha == 0 ? node % n_ : node / n_); }

  GridGeometry with_conformal_factor(double lambda) const { return GridGeometry(n_, length_, lambda, mode_); }

  /// Coordinate partial d/dx_alpha of a node-major field with `stride` values per node.
  template <class T>
  std::vector<T> partial(std::span<const T> f, int stride, int alpha) const {
    using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> d = diff_->matrix().template cast<T>();
    std::vector<T> out(f.size(), T{});
    if (alpha == 0) {
      // Each row iy is an (N x stride) block indexed by ix.
      const long block = static_cast<long>(n_) * stride;
      for (int iy = 0; iy < n_; ++iy) {
        Eigen::Map<const RowMat> src(f.data() + iy * block, n_, stride);
        Eigen::Map<RowMat> dst(out.data() + iy * block, n_, stride);
        dst.noalias() = d * src;
      }
    } else {
      Eigen::Map<const RowMat> src(f.data(), n_, static_cast<long>(n_) * stride);
      Eigen::Map<RowMat> dst(out.data(), n_, static_cast<long>(n_) * stride);
      dst.noalias() = d * src;
    }
    return out;
  }

 private:
  int n_;
  double length_;
  double lambda_;
  DerivativeMode mode_;
  std::shared_ptr<const Differentiator> diff_;
};

/// Map phi: torus -> chart, phi(x) = winding * x + periodic(x).
/// The winding (n x 2, coordinate slopes) lets degree-k wraps into
/// translation-invariant charts be represented with periodic data.
struct MapField {
  int dim = 0;
  int nodes = 0;
  std::vector<double> periodic;  // node-major, dim values per node
  Mat winding;                   // (dim, 2)

  MapField() = default;
  MapField(int n, int node_count) : dim(n), nodes(node_count), periodic(static_cast<std::size_t>(n * node_count), 0.0), winding(Mat::Zero(n, 2)) {}

  bool has_winding() const { return !winding.isZero(0.0); }

  Vec value(const GridGeometry& grid, int node) const {
    Vec y(dim);
    for (int i = 0; i < dim; ++i)
      y(i) = periodic[static_cast<std::size_t>(node * dim + i)] + winding(i, 0) * grid.coordinate(node, 0) +
             winding(i, 1) * grid.coordinate(node, 1);
    return y;
  }
  double& at(int node, int i) { return periodic[static_cast<std::size_t>(node * dim + i)]; }
  double at(int node, int i) const { return periodic[static_cast<std::size_t>(node * dim + i)]; }
};

/// Section of Sigma M (x) phi^-1 TN: dim spinors psi^i per node in the chart frame.
/// Flat layout index = (node * dim + i) * 2 + s.
struct VectorSpinorField {
  int dim = 0;
  int nodes = 0;
  std::vector<Complex> values;

  VectorSpinorField() = default;
  VectorSpinorField(int n, int node_count) : dim(n), nodes(node_count), values(static_cast<std::size_t>(2 * n * node_count)) {}

  Eigen::Map<SpinorValue> at(int node, int i) {
    return Eigen::Map<SpinorValue>(values.data() + static_cast<std::size_t>((node * dim + i) * 2));
  }
  Eigen::Map<const SpinorValue> at(int node, int i) const {
    return Eigen::Map<const SpinorValue>(values.data() + static_cast<std::size_t>((node * dim + i) * 2));
  }
  /// All dim spinors of a node as a 2 x dim matrix (column i = psi^i).
  Eigen::Map<Eigen::Matrix2Xcd> node(int k) { return {values.data() + static_cast<std::size_t>(k * dim * 2), 2, dim}; }
  Eigen::Map<const Eigen::Matrix2Xcd> node(int k) const {
    return {values.data() + static_cast<std::size_t>(k * dim * 2), 2, dim};
  }
  std::size_t size() const { return values.size(); }

  VectorSpinorField& operator+=(const VectorSpinorField& o) {
    for (std::size_t q = 0; q < values.size(); ++q) values[q] += o.values[q];
    return *this;
  }
  VectorSpinorField& operator-=(const VectorSpinorField& o) {
    for (std::size_t q = 0; q < values.size(); ++q) values[q] -= o.values[q];
    return *this;
  }
  VectorSpinorField& operator*=(Complex s) {
    for (auto& v : values) v *= s;
    return *this;
  }
  friend VectorSpinorField operator+(VectorSpinorField a, const VectorSpinorField& b) { return a += b; }
  friend VectorSpinorField operator-(VectorSpinorField a, const VectorSpinorField& b) { return a -= b; }
  friend VectorSpinorField operator*(Complex s, VectorSpinorField a) { return a *= s; }
};

/// Grid of n-vectors (tension, residuals, frame derivatives), node-major.
struct VectorGrid {
  int dim = 0;
  int nodes = 0;
  std::vector<double> values;

  VectorGrid() = default;
  VectorGrid(int n, int node_count) : dim(n), nodes(node_count), values(static_cast<std::size_t>(n * node_count), 0.0) {}

  Eigen::Map<Vec> at(int node) { return {values.data() + static_cast<std::size_t>(node * dim), dim}; }
  Eigen::Map<const Vec> at(int node) const { return {values.data() + static_cast<std::size_t>(node * dim), dim}; }
};

/// Chart data evaluated at every node of a map: metric, inverse, metric
/// partials, Christoffels and lowered torsion. Throws on chart-domain exits.
struct PulledBackGeometry {
  std::vector<Mat> g, ginv;
  std::vector<Tensor3> dg;     // (k, i, j) = d_k g_ij
  std::vector<Tensor3> gamma;  // Gamma^i_jk
  std::vector<Tensor3> a;      // A_ijk
  std::vector<Tensor3> a_up;   // A_ij^k
  bool has_torsion = false;

  PulledBackGeometry(const TargetChart& chart, const GridGeometry& grid, const MapField& phi) {
    const int nn = grid.node_count();
    if (phi.dim != chart.dim || phi.nodes != nn) throw Error(ErrorKind::invalid_argument, "map does not match chart/grid");
    if (phi.has_winding() && !(chart.translation_invariant && chart.torsion.translation_invariant))
      throw Error(ErrorKind::invalid_argument, "maps with winding need a translation-invariant chart and torsion");
    has_torsion = !chart.torsion.is_zero();
    g.resize(nn);
    ginv.resize(nn);
    dg.resize(nn);
    gamma.resize(nn);
    a.resize(nn);
    a_up.resize(nn);
    for (int k = 0; k < nn; ++k) {
      const Vec y = phi.value(grid, k);
      g[k] = metric_at(chart, y);
      ginv[k] = g[k].inverse();
      dg[k] = metric_derivative_at(chart, y);
      gamma[k] = christoffel_from(ginv[k], dg[k]);
      a[k] = torsion_at(chart, y);
      a_up[k] = raise_last(a[k], ginv[k]);
    }
  }
};

// ---------------------------------------------------------------------------

/// Coordinate partial d/dx_alpha of phi (including the winding slope).
inline VectorGrid map_partial(const GridGeometry& grid, const MapField& phi, int alpha) {
  VectorGrid out(phi.dim, phi.nodes);
  out.values = grid.partial<double>(phi.periodic, phi.dim, alpha);
  for (int k = 0; k < phi.nodes; ++k) out.at(k) += phi.winding.col(alpha);
  return out;
}

/// dphi(e_alpha) = lambda^-1 d_alpha phi.
inline VectorGrid frame_derivative(const GridGeometry& grid, const MapField& phi, int alpha) {
  VectorGrid out = map_partial(grid, phi, alpha);
  for (auto& v : out.values) v /= grid.conformal_factor();
  return out;
}

/// Coordinate partial of every spinor component.
inline VectorSpinorField spinor_partial(const GridGeometry& grid, const VectorSpinorField& psi, int alpha) {
  VectorSpinorField out(psi.dim, psi.nodes);
  out.values = grid.partial<Complex>(psi.values, 2 * psi.dim, alpha);
  return out;
}

/// Connection matrix C_alpha(node)^i_k = (Gamma^i_jk [+ A_jk^i]) dphi(e_alpha)^j.
inline Mat connection_matrix(const PulledBackGeometry& geo, int node, const Eigen::Ref<const Vec>& dphi, bool torsion) {
  const int n = static_cast<int>(dphi.size());
  Mat c = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        s += geo.gamma[node](i, j, k) * dphi(j);
        if (torsion && geo.has_torsion) s += geo.a_up[node](j, k, i) * dphi(j);
      }
      c(i, k) = s;
    }
  return c;
}

/// Covariant derivative along e_alpha on Sigma M (x) phi^-1 TN:
///   lambda^-1 (d_alpha psi^i + Gamma^i_jk d_alpha phi^j psi^k [+ A_jk^i d_alpha phi^j psi^k]).
/// The spin connection vanishes on the flat torus.
inline VectorSpinorField spinor_covariant_derivative(const GridGeometry& grid, const PulledBackGeometry& geo,
                                                     const MapField& phi, const VectorSpinorField& psi, int alpha,
                                                     bool torsion) {
  const VectorGrid dphi = frame_derivative(grid, phi, alpha);
  VectorSpinorField out = spinor_partial(grid, psi, alpha);
  const double inv = 1.0 / grid.conformal_factor();
  for (int k = 0; k < psi.nodes; ++k) {
    const Mat c = connection_matrix(geo, k, dphi.at(k), torsion);
    // dphi already carries lambda^-1.
    out.node(k) = inv * out.node(k) + psi.node(k) * c.transpose().cast<Complex>();
  }
  return out;
}

inline VectorSpinorField spinor_covariant_derivative(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                                     const VectorSpinorField& psi, int alpha, bool torsion) {
  return spinor_covariant_derivative(grid, PulledBackGeometry(chart, grid, phi), phi, psi, alpha, torsion);
}

// ---------------------------------------------------------------------------
// L2 pairings with the pulled-back metric and area weight lambda^2 h^2.

inline Complex l2_inner(const GridGeometry& grid, const PulledBackGeometry& geo, const VectorSpinorField& psi,
                        const VectorSpinorField& chi) {
  Complex s = 0.0;
  for (int k = 0; k < psi.nodes; ++k) {
    const auto p = psi.node(k);
    const auto c = chi.node(k);
    s += (p.adjoint() * c * geo.g[k].cast<Complex>()).trace();
  }
  return s * grid.area_weight();
}

inline double l2_norm(const GridGeometry& grid, const PulledBackGeometry& geo, const VectorSpinorField& psi) {
  return std::sqrt(std::max(0.0, l2_inner(grid, geo, psi, psi).real()));
}

inline double l2_inner(const GridGeometry& grid, const PulledBackGeometry& geo, const VectorGrid& u, const VectorGrid& v) {
  double s = 0.0;
  for (int k = 0; k < u.nodes; ++k) s += u.at(k).dot(geo.g[k] * v.at(k));
  return s * grid.area_weight();
}

inline double l2_norm(const GridGeometry& grid, const PulledBackGeometry& geo, const VectorGrid& u) {
  return std::sqrt(std::max(0.0, l2_inner(grid, geo, u, u)));
}

// ---------------------------------------------------------------------------

struct RandomFieldOptions {
  int band_limit = 2;
  double map_amplitude = 0.3;
  double spinor_amplitude = 0.5;
  Vec base;  // centre of the map values; zero when empty
};

/// Band-limited trigonometric sum with Fourier support |m_x|, |m_y| <= band_limit.
/// Zero-mean; coefficients scaled so the sup norm is at most `amplitude`.
template <class T>
std::vector<T> random_band_limited(const GridGeometry& grid, int components, int band_limit, double amplitude,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int nn = grid.node_count();
  std::vector<T> f(static_cast<std::size_t>(nn * components), T{});
  if (band_limit <= 0) return f;
  const double w = 2.0 * std::numbers::pi / grid.side_length();
  int modes = 0;
  for (int mx = -band_limit; mx <= band_limit; ++mx)
    for (int my = -band_limit; my <= band_limit; ++my)
      if (mx != 0 || my != 0) ++modes;
  for (int c = 0; c < components; ++c)
    for (int mx = -band_limit; mx <= band_limit; ++mx)
      for (int my = -band_limit; my <= band_limit; ++my) {
        if (mx == 0 && my == 0) continue;
        T ca, sa;
        if constexpr (std::is_same_v<T, Complex>) {
          ca = Complex(u(rng), u(rng)) / std::sqrt(2.0);
          sa = Complex(u(rng), u(rng)) / std::sqrt(2.0);
        } else {
          ca = u(rng);
          sa = u(rng);
        }
        const double scale = amplitude / (2.0 * modes);
        for (int k = 0; k < nn; ++k) {
          const double arg = w * (mx * grid.coordinate(k, 0) + my * grid.coordinate(k, 1));
          f[static_cast<std::size_t>(k * components + c)] += scale * (ca * std::cos(arg) + sa * std::sin(arg));
        }
      }
  return f;
}

/// Deterministic smooth test fields for a chart. Map values stay inside the
/// chart domain: the perturbation is rescaled if it would leave it.
inline std::pair<MapField, VectorSpinorField> random_smooth_fields(const TargetChart& chart, const GridGeometry& grid,
                                                                   unsigned long long seed, RandomFieldOptions opt = {}) {
  if (2 * opt.band_limit >= grid.nodes_per_side()) throw Error(ErrorKind::invalid_argument, "band limit must be below N/2");
  std::mt19937_64 rng(seed);
  const int n = chart.dim;
  const int nn = grid.node_count();
  MapField phi(n, nn);
  VectorSpinorField psi(n, nn);
  Vec base = opt.base.size() == n ? opt.base : Vec::Zero(n);
  std::vector<double> pert = random_band_limited<double>(grid, n, opt.band_limit, opt.map_amplitude, rng);
  const auto spin = random_band_limited<Complex>(grid, 2 * n, opt.band_limit, opt.spinor_amplitude, rng);
  // Constant spinor part so band_limit = 0 still produces a nonzero field.
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Complex> mean(static_cast<std::size_t>(2 * n));
  for (auto& m : mean) m = opt.spinor_amplitude * 0.5 * Complex(u(rng), u(rng));

  double reach = 0.0;
  for (int k = 0; k < nn; ++k) {
    Vec y = base;
    for (int i = 0; i < n; ++i) y(i) += pert[static_cast<std::size_t>(k * n + i)];
    reach = std::max(reach, y.norm());
  }
  double shrink = 1.0;
  if (std::isfinite(chart.domain_radius) && reach > 0.9 * chart.domain_radius) {
    const double bn = base.norm();
    if (bn >= 0.9 * chart.domain_radius) throw Error(ErrorKind::domain_violation, "random field base point outside chart domain");
    shrink = (0.9 * chart.domain_radius - bn) / (reach - bn);
  }
  for (int k = 0; k < nn; ++k)
    for (int i = 0; i < n; ++i) phi.at(k, i) = base(i) + shrink * pert[static_cast<std::size_t>(k * n + i)];
  for (std::size_t q = 0; q < psi.values.size(); ++q) psi.values[q] = spin[q] + mean[q % mean.size()];
  return {std::move(phi), std::move(psi)};
}

}  // namespace dhmt
