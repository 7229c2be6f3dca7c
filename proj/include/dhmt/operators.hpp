#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dhmt/clifford.hpp"
#include "dhmt/error.hpp"
#include "dhmt/fields.hpp"
#include "dhmt/target.hpp"

namespace dhmt {

/// Twisted Dirac operator D^Tor psi = gamma_alpha nabla^Tor_{e_alpha} psi
/// (torsion = false gives the plain twisted operator).
///
/// Discretized in skew form. With G = g(phi) per node,
///   G D psi = lambda^-1 gamma_alpha [ 1/2 d_alpha(G psi) + 1/2 G d_alpha psi + S_alpha psi ],
///   (S_alpha)_lk = (1/2 (d_k g_lj - d_l g_jk) + A_jkl) d_alpha phi^j,
/// which equals the local formula d-slash psi^i + gamma_alpha (Gamma^i_jk + A_jk^i) d_alpha phi^j psi^k
/// in the continuum. S_alpha is antisymmetric and the grid derivative is an
/// antisymmetric matrix, so the discrete operator is exactly self-adjoint in
/// the weighted L2 product.
/// Per-node coupling matrices S_alpha (stored transposed, complex), index alpha * nodes + k.
inline std::vector<Eigen::MatrixXcd> dirac_coupling(const GridGeometry& grid, const PulledBackGeometry& geo,
                                                    const MapField& phi, bool torsion) {
  const int n = phi.dim;
  const int nn = phi.nodes;
  std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(2 * nn));
  for (int alpha = 0; alpha < 2; ++alpha) {
    const VectorGrid dphi = map_partial(grid, phi, alpha);
    for (int k = 0; k < nn; ++k) {
      const auto v = dphi.at(k);
      Mat s = Mat::Zero(n, n);
      for (int l = 0; l < n; ++l)
        for (int q = 0; q < n; ++q) {
          double t = 0.0;
          for (int j = 0; j < n; ++j) {
            t += 0.5 * (geo.dg[k](q, l, j) - geo.dg[k](l, j, q)) * v(j);
            if (torsion && geo.has_torsion) t += geo.a[k](j, q, l) * v(j);
          }
          s(l, q) = t;
        }
      out[static_cast<std::size_t>(alpha * nn + k)] = s.transpose().cast<Complex>();
    }
  }
  return out;
}

namespace detail {

/// out(2 x n) = in(2 x n) * m(n x n), column-major raw storage.
inline void right_multiply(const Complex* in, const Complex* m, Complex* out, int n, Complex scale, bool accumulate) {
  for (int c = 0; c < n; ++c) {
    Complex s0 = 0.0, s1 = 0.0;
    for (int q = 0; q < n; ++q) {
      const Complex w = m[q + c * n];
      s0 += in[2 * q] * w;
      s1 += in[2 * q + 1] * w;
    }
    if (accumulate) {
      out[2 * c] += scale * s0;
      out[2 * c + 1] += scale * s1;
    } else {
      out[2 * c] = scale * s0;
      out[2 * c + 1] = scale * s1;
    }
  }
}

}  // namespace detail

/// D psi from precomputed coupling matrices, metric and inverse metric.
inline VectorSpinorField twisted_dirac(const GridGeometry& grid, const std::vector<Eigen::MatrixXcd>& coupling,
                                       const std::vector<Eigen::MatrixXcd>& g, const std::vector<Eigen::MatrixXcd>& ginv,
                                       const VectorSpinorField& psi) {
  const int n = psi.dim;
  const int nn = psi.nodes;
  const std::size_t w = static_cast<std::size_t>(2 * n);
  VectorSpinorField gpsi(n, nn);
  for (int k = 0; k < nn; ++k)
    detail::right_multiply(psi.values.data() + k * w, g[k].data(), gpsi.values.data() + k * w, n, 1.0, false);
  VectorSpinorField acc(n, nn);  // G D psi * lambda
  std::vector<Complex> bracket(w);
  for (int alpha = 0; alpha < 2; ++alpha) {
    const VectorSpinorField d_gpsi = spinor_partial(grid, gpsi, alpha);
    const VectorSpinorField d_psi = spinor_partial(grid, psi, alpha);
    const SpinorMatrix& ga = gamma(alpha);
    const Complex g00 = ga(0, 0), g01 = ga(0, 1), g10 = ga(1, 0), g11 = ga(1, 1);
    for (int k = 0; k < nn; ++k) {
      // Column l of the bracket: 1/2 d(G psi)_l + 1/2 (G d psi)_l + sum_q S_lq psi^q.
      const Complex* dg = d_gpsi.values.data() + k * w;
      for (std::size_t q = 0; q < w; ++q) bracket[q] = 0.5 * dg[q];
      detail::right_multiply(d_psi.values.data() + k * w, g[k].data(), bracket.data(), n, 0.5, true);
      detail::right_multiply(psi.values.data() + k * w, coupling[static_cast<std::size_t>(alpha * nn + k)].data(),
                             bracket.data(), n, 1.0, true);
      Complex* o = acc.values.data() + k * w;
      for (int l = 0; l < n; ++l) {
        o[2 * l] += g00 * bracket[2 * l] + g01 * bracket[2 * l + 1];
        o[2 * l + 1] += g10 * bracket[2 * l] + g11 * bracket[2 * l + 1];
      }
    }
  }
  VectorSpinorField out(n, nn);
  const double inv = 1.0 / grid.conformal_factor();
  for (int k = 0; k < nn; ++k)
    detail::right_multiply(acc.values.data() + k * w, ginv[k].data(), out.values.data() + k * w, n, inv, false);
  return out;
}

inline VectorSpinorField twisted_dirac(const GridGeometry& grid, const PulledBackGeometry& geo, const MapField& phi,
                                       const VectorSpinorField& psi, bool torsion) {
  std::vector<Eigen::MatrixXcd> g, ginv;
  g.reserve(geo.g.size());
  ginv.reserve(geo.g.size());
  for (std::size_t k = 0; k < geo.g.size(); ++k) {
    g.push_back(geo.g[k].cast<Complex>());
    ginv.push_back(geo.ginv[k].cast<Complex>());
  }
  return twisted_dirac(grid, dirac_coupling(grid, geo, phi, torsion), g, ginv, psi);
}

inline VectorSpinorField twisted_dirac(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                       const VectorSpinorField& psi, bool torsion) {
  return twisted_dirac(grid, PulledBackGeometry(chart, grid, phi), phi, psi, torsion);
}

/// Connection Laplacian sum_alpha nabla^Tor_{e_alpha} nabla^Tor_{e_alpha} psi on the flat torus.
inline VectorSpinorField connection_laplacian(const GridGeometry& grid, const PulledBackGeometry& geo, const MapField& phi,
                                              const VectorSpinorField& psi, bool torsion = true) {
  VectorSpinorField out(psi.dim, psi.nodes);
  for (int alpha = 0; alpha < 2; ++alpha) {
    const auto first = spinor_covariant_derivative(grid, geo, phi, psi, alpha, torsion);
    out += spinor_covariant_derivative(grid, geo, phi, first, alpha, torsion);
  }
  return out;
}

inline VectorSpinorField connection_laplacian(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                              const VectorSpinorField& psi, bool torsion = true) {
  return connection_laplacian(grid, PulledBackGeometry(chart, grid, phi), phi, psi, torsion);
}

struct WeitzenbockTerms {
  VectorSpinorField dirac_squared;   // (D^Tor)^2 psi
  VectorSpinorField laplacian;       // connection Laplacian
  VectorSpinorField curvature;       // 1/2 gamma_a gamma_b R^N(dphi(e_a), dphi(e_b)) psi
  VectorSpinorField torsion;         // gamma_a gamma_b ((nabla A)(.,.) + A(., A(., .))) terms
  double defect = 0.0;               // L2 norm of D^2 psi - (-Lap + curvature + torsion)
  double scale = 0.0;                // L2 norm of D^2 psi
};

/// Both sides of the Weitzenboeck formula for D^Tor on the flat torus
/// (domain scalar curvature zero).
///
/// The torsion terms are summed over alpha != beta only. These are the terms
/// produced by 1/2 gamma_a gamma_b R^Tor(dphi(e_a), dphi(e_b)); with
/// include_diagonal the alpha = beta products (gamma_a^2 = -1) are added as
/// well, which only agrees when they vanish (e.g. zero torsion).
inline WeitzenbockTerms weitzenbock_terms(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                          const VectorSpinorField& psi, bool include_diagonal = false) {
  const PulledBackGeometry geo(chart, grid, phi);
  const int n = psi.dim;
  const int nn = psi.nodes;
  WeitzenbockTerms w;
  w.dirac_squared = twisted_dirac(grid, geo, phi, twisted_dirac(grid, geo, phi, psi, true), true);
  w.laplacian = connection_laplacian(grid, geo, phi, psi, true);
  w.curvature = VectorSpinorField(n, nn);
  w.torsion = VectorSpinorField(n, nn);
  const std::array<VectorGrid, 2> x = {frame_derivative(grid, phi, 0), frame_derivative(grid, phi, 1)};
  for (int k = 0; k < nn; ++k) {
    const Vec y = phi.value(grid, k);
    const Tensor4 r = lc_curvature_at(chart, y);
    const Tensor4 na = nabla_torsion_at(chart, y);
    const Mat& ginv = geo.ginv[k];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const SpinorMatrix gg = gamma(a) * gamma(b);
        const auto xa = x[a].at(k);
        const auto xb = x[b].at(k);
        // Endomorphisms acting on the target index: (M psi)^l = M(l, q) psi^q.
        Mat curv = Mat::Zero(n, n), tors = Mat::Zero(n, n);
        for (int l = 0; l < n; ++l)
          for (int q = 0; q < n; ++q) {
            double c = 0.0, t = 0.0;
            for (int m = 0; m < n; ++m) {
              double rc = 0.0, tc = 0.0;
              for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                  rc += r(i, j, q, m) * xa(i) * xb(j);
                  tc += na(i, j, q, m) * xa(i) * xb(j);
                }
              c += rc * ginv(m, l);
              t += tc * ginv(m, l);
            }
            curv(l, q) = c;
            tors(l, q) = t;
          }
        if (geo.has_torsion) {
          // A(X_a, A(X_b, .)): (A_X)^l_r = X^i A_ir^l
          Mat ax = Mat::Zero(n, n), bx = Mat::Zero(n, n);
          for (int l = 0; l < n; ++l)
            for (int r2 = 0; r2 < n; ++r2)
              for (int i = 0; i < n; ++i) {
                ax(l, r2) += xa(i) * geo.a_up[k](i, r2, l);
                bx(l, r2) += xb(i) * geo.a_up[k](i, r2, l);
              }
          tors += ax * bx;
        }
        const Eigen::Matrix2Xcd pk = psi.node(k);
        w.curvature.node(k) += 0.5 * gg * pk * curv.transpose().cast<Complex>();
        if (a != b || include_diagonal) w.torsion.node(k) += gg * pk * tors.transpose().cast<Complex>();
      }
  }
  VectorSpinorField diff = w.dirac_squared;
  diff += w.laplacian;
  diff -= w.curvature;
  diff -= w.torsion;
  w.defect = l2_norm(grid, geo, diff);
  w.scale = l2_norm(grid, geo, w.dirac_squared);
  return w;
}

inline double weitzenbock_defect(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                 const VectorSpinorField& psi) {
  return weitzenbock_terms(chart, grid, phi, psi).defect;
}

/// Linear-operator handle for D^Tor at a fixed map.
///
/// apply() acts on chart-frame components. The flat vector interface uses
/// coordinates orthonormal for the weighted L2 product, u = sqrt(w) psi L
/// per node with G = L L^T, so the materialized matrix is Hermitian.
class AssembledDiracOperator {
 public:
  static constexpr long dense_limit = 8000;

  AssembledDiracOperator(const TargetChart& chart, GridGeometry grid, MapField phi, bool torsion)
      : grid_(std::move(grid)), phi_(std::move(phi)), geo_(chart, grid_, phi_), torsion_(torsion) {
    coupling_ = dirac_coupling(grid_, geo_, phi_, torsion_);
    for (std::size_t k = 0; k < geo_.g.size(); ++k) {
      const Mat l = Eigen::LLT<Mat>(geo_.g[k]).matrixL();
      chol_.push_back(l.cast<Complex>());
      chol_inv_.push_back(l.inverse().cast<Complex>());
      g_.push_back(geo_.g[k].cast<Complex>());
      ginv_.push_back(geo_.ginv[k].cast<Complex>());
    }
  }

  long dimension() const { return 2L * phi_.dim * phi_.nodes; }
  int target_dim() const { return phi_.dim; }
  const GridGeometry& grid() const { return grid_; }
  const MapField& map() const { return phi_; }
  const PulledBackGeometry& geometry() const { return geo_; }
  bool torsion() const { return torsion_; }

  VectorSpinorField apply(const VectorSpinorField& psi) const { return twisted_dirac(grid_, coupling_, g_, ginv_, psi); }

  Eigen::VectorXcd to_orthonormal(const VectorSpinorField& psi) const {
    Eigen::VectorXcd u(dimension());
    const double sw = std::sqrt(grid_.area_weight());
    for (int k = 0; k < psi.nodes; ++k) {
      detail::right_multiply(psi.values.data() + static_cast<long>(k) * 2 * psi.dim, chol_[k].data(),
                             u.data() + static_cast<long>(k) * 2 * psi.dim, psi.dim, sw, false);
    }
    return u;
  }

  VectorSpinorField from_orthonormal(const Eigen::VectorXcd& u) const {
    VectorSpinorField psi(phi_.dim, phi_.nodes);
    const double sw = std::sqrt(grid_.area_weight());
    const int n = phi_.dim;
    for (int k = 0; k < phi_.nodes; ++k) {
      // psi L = u / sqrt(w)  =>  psi = u L^-1 / sqrt(w)
      detail::right_multiply(u.data() + static_cast<long>(k) * 2 * n, chol_inv_[k].data(),
                             psi.values.data() + static_cast<long>(k) * 2 * n, n, 1.0 / sw, false);
    }
    return psi;
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const { return to_orthonormal(apply(from_orthonormal(u))); }

  /// Removes every component carrying the Nyquist wavenumber along either
  /// axis. Centred grid derivatives annihilate those modes, so they form
  /// spurious (doubler) kernel directions.
  void project_nyquist_free(Eigen::Ref<Eigen::VectorXcd> u) const {
    const int n = grid_.nodes_per_side();
    if (n % 2 != 0) return;
    const int w = 2 * phi_.dim;
    auto idx = [&](int ix, int iy, int c) { return static_cast<long>(iy * n + ix) * w + c; };
    auto sgn = [](int j) { return j % 2 == 0 ? 1.0 : -1.0; };
    for (int c = 0; c < w; ++c) {
      // P_x + P_y - P_x P_y, all applied to the original data.
      std::vector<Complex> ax(n, 0.0), ay(n, 0.0);
      Complex axy = 0.0;
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
          const Complex v = u(idx(ix, iy, c));
          ax[iy] += sgn(ix) * v;
          ay[ix] += sgn(iy) * v;
          axy += sgn(ix) * sgn(iy) * v;
        }
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          u(idx(ix, iy, c)) -= (sgn(ix) * ax[iy] + sgn(iy) * ay[ix] - sgn(ix) * sgn(iy) * axy / double(n)) / double(n);
    }
  }

  /// Number of independent Nyquist-carrying directions removed by project_nyquist_free.
  long nyquist_dimension() const {
    const int n = grid_.nodes_per_side();
    return n % 2 != 0 ? 0 : 2L * phi_.dim * (2L * n - 1);
  }

  /// Dense matrix in the orthonormal coordinates.
  Eigen::MatrixXcd materialize() const {
    const long d = dimension();
    if (d > dense_limit)
      throw Error(ErrorKind::size_overflow, "dense operator of dimension " + std::to_string(d) + " exceeds " +
                                                std::to_string(dense_limit));
    Eigen::MatrixXcd m(d, d);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
    for (long c = 0; c < d; ++c) {
      e(c) = 1.0;
      m.col(c) = apply(e);
      e(c) = 0.0;
    }
    return m;
  }

 private:
  GridGeometry grid_;
  MapField phi_;
  PulledBackGeometry geo_;
  bool torsion_;
  std::vector<Eigen::MatrixXcd> coupling_, chol_, chol_inv_, g_, ginv_;
};

inline AssembledDiracOperator assemble_dirac(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                             bool torsion) {
  return AssembledDiracOperator(chart, grid, phi, torsion);
}

}  // namespace dhmt
