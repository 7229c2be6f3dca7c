#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>

#include "dhmt/clifford.hpp"
#include "dhmt/error.hpp"
#include "dhmt/fields.hpp"
#include "dhmt/operators.hpp"
#include "dhmt/target.hpp"

namespace dhmt {

struct EnergyReport {
  double total = 0.0;
  double dirichlet = 0.0;         // 1/2 int |dphi|^2
  double spinor = 0.0;            // 1/2 int <psi, D-slash psi>
  double torsion_coupling = 0.0;  // 1/2 int <psi, gamma_a A(dphi(e_a), psi)>
  std::optional<double> curvature_term;  // 1/12 int R_ijkl <psi^i,psi^k><psi^j,psi^l>
  double imag_defect = 0.0;
};

/// Which functional an EL residual or energy refers to.
///   torsion        : E_Tor = 1/2 int |dphi|^2 + <psi, D^Tor psi>
///   curvature_term : 1/2 int |dphi|^2 + <psi, D-slash psi> + 1/6 <R(psi,psi)psi,psi>, Levi-Civita
///   both           : E_Tor plus the curvature term built from R^Tor
///                    (parallel totally antisymmetric torsion only)
enum class ElMode { torsion, curvature_term, both };

inline const char* to_string(ElMode m) {
  switch (m) {
    case ElMode::torsion: return "torsion";
    case ElMode::curvature_term: return "curvature_term";
    case ElMode::both: return "both";
  }
  return "unknown";
}

struct ElResidual {
  VectorGrid map_residual;           // tau - R - F^Tor [- R-tilde]
  VectorSpinorField spinor_residual;  // D^Tor psi [- 1/3 R(psi,psi)psi]
};

namespace detail {

inline std::array<VectorGrid, 2> frame_derivatives(const GridGeometry& grid, const MapField& phi) {
  return {frame_derivative(grid, phi, 0), frame_derivative(grid, phi, 1)};
}

/// P_alpha^{lk} = <psi^l, gamma_alpha psi^k> at one node.
inline Eigen::MatrixXcd clifford_pairing(const VectorSpinorField& psi, int node, int alpha) {
  const auto p = psi.node(node);
  return p.adjoint() * gamma(alpha) * p;
}

/// Contravariant field c^m = g^{ma} 1/2 sum_alpha Re( T_abkl X_alpha^b P_alpha^{lk} )
/// for a per-node rank-4 tensor T antisymmetric in (k, l).
template <class TensorAt>
VectorGrid curvature_contraction(const GridGeometry& grid, const PulledBackGeometry& geo, const MapField& phi,
                                 const VectorSpinorField& psi, TensorAt&& tensor_at) {
  const int n = phi.dim;
  VectorGrid out(n, phi.nodes);
  const auto x = frame_derivatives(grid, phi);
  for (int k = 0; k < phi.nodes; ++k) {
    const Tensor4 t = tensor_at(k);
    Vec low = Vec::Zero(n);
    for (int alpha = 0; alpha < 2; ++alpha) {
      const Eigen::MatrixXcd p = clifford_pairing(psi, k, alpha);
      const auto xa = x[alpha].at(k);
      for (int a = 0; a < n; ++a) {
        Complex s = 0.0;
        for (int b = 0; b < n; ++b)
          for (int kk = 0; kk < n; ++kk)
            for (int l = 0; l < n; ++l) s += t(a, b, kk, l) * xa(b) * p(l, kk);
        low(a) += 0.5 * s.real();
      }
    }
    out.at(k) = geo.ginv[k] * low;
  }
  return out;
}

/// R^Tor - R^LC at a point.
inline Tensor4 torsion_curvature_difference(const TargetChart& chart, const Vec& y, const Mat& ginv) {
  const int n = chart.dim;
  if (chart.torsion.is_zero()) return Tensor4(n);
  return torsion_curvature_from(Tensor4(n), nabla_torsion_at(chart, y), torsion_at(chart, y), ginv);
}

inline double scalar_l2(const GridGeometry& grid, const std::vector<double>& f) {
  double s = 0.0;
  for (double v : f) s += v * v;
  return std::sqrt(s * grid.area_weight());
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline double dirichlet_energy(const GridGeometry& grid, const PulledBackGeometry& geo, const MapField& phi) {
  const auto x = detail::frame_derivatives(grid, phi);
  double s = 0.0;
  for (int k = 0; k < phi.nodes; ++k)
    for (int alpha = 0; alpha < 2; ++alpha) s += x[alpha].at(k).dot(geo.g[k] * x[alpha].at(k));
  return 0.5 * s * grid.area_weight();
}

inline double dirichlet_energy(const TargetChart& chart, const GridGeometry& grid, const MapField& phi) {
  return dirichlet_energy(grid, PulledBackGeometry(chart, grid, phi), phi);
}

/// Quartic term 1/12 sum w R_ijkl <psi^i,psi^k><psi^j,psi^l>; imaginary part returned separately.
inline Complex curvature_quartic(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                 const VectorSpinorField& psi, CurvatureConnection conn) {
  const int n = phi.dim;
  Complex s = 0.0;
  for (int k = 0; k < phi.nodes; ++k) {
    const Tensor4 r = curvature_at(chart, phi.value(grid, k), conn);
    const auto p = psi.node(k);
    const Eigen::MatrixXcd h = p.adjoint() * p;  // h(i,k) = <psi^i, psi^k>
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l) s += r(i, j, kk, l) * h(i, kk) * h(j, l);
  }
  return s * grid.area_weight() / 12.0;
}

/// E_Tor split into its parts. Pairings are summed as complex numbers and
/// the real parts kept; the largest discarded imaginary part is reported.
inline EnergyReport energy_torsion(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                   const VectorSpinorField& psi) {
  const PulledBackGeometry geo(chart, grid, phi);
  EnergyReport e;
  e.dirichlet = dirichlet_energy(grid, geo, phi);
  const Complex sp = 0.5 * l2_inner(grid, geo, psi, twisted_dirac(grid, geo, phi, psi, false));
  Complex tc = 0.0;
  if (geo.has_torsion) {
    const auto x = detail::frame_derivatives(grid, phi);
    const int n = phi.dim;
    for (int k = 0; k < phi.nodes; ++k)
      for (int alpha = 0; alpha < 2; ++alpha) {
        const Eigen::MatrixXcd p = detail::clifford_pairing(psi, k, alpha);  // <psi^l, gamma psi^q>
        for (int l = 0; l < n; ++l)
          for (int q = 0; q < n; ++q) {
            double coeff = 0.0;
            for (int j = 0; j < n; ++j) coeff += geo.a[k](j, q, l) * x[alpha].at(k)(j);
            tc += coeff * p(l, q);
          }
      }
    tc *= 0.5 * grid.area_weight();
  }
  e.spinor = sp.real();
  e.torsion_coupling = tc.real();
  e.imag_defect = std::max(std::abs(sp.imag()), std::abs(tc.imag()));
  e.total = e.dirichlet + e.spinor + e.torsion_coupling;
  return e;
}

enum class CurvatureEnergyMode { levi_civita, parallel_skew };

/// Throws the real-valuedness-precondition error unless the chart's torsion is
/// totally antisymmetric and Levi-Civita parallel at every node of phi.
inline void require_parallel_skew(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                  double tol = 1e-7) {
  for (int k = 0; k < phi.nodes; ++k) {
    const Vec y = phi.value(grid, k);
    const Tensor3 a = torsion_at(chart, y);
    const double scale = std::max(1.0, a.max_abs());
    if (antisymmetric_defect(a) > 1e-10 * scale)
      throw Error(ErrorKind::precondition,
                  "curvature term with torsion needs totally antisymmetric torsion; otherwise R^Tor lacks pair symmetry "
                  "and the action is complex");
    if (nabla_torsion_at(chart, y).max_abs() > tol * scale)
      throw Error(ErrorKind::precondition,
                  "curvature term with torsion needs parallel torsion (nabla A = 0); otherwise R^Tor lacks pair "
                  "symmetry and the action is complex");
  }
}

/// Energy with the quartic curvature term, built from R^LC (levi_civita) or
/// from R^Tor together with D^Tor (parallel_skew).
inline EnergyReport energy_curvature(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                     const VectorSpinorField& psi, CurvatureEnergyMode mode) {
  EnergyReport e;
  CurvatureConnection conn = CurvatureConnection::levi_civita;
  if (mode == CurvatureEnergyMode::parallel_skew) {
    require_parallel_skew(chart, grid, phi);
    e = energy_torsion(chart, grid, phi, psi);
    conn = CurvatureConnection::torsion;
  } else {
    TargetChart lc = chart;
    lc.torsion = {};
    e = energy_torsion(lc, grid, phi, psi);
  }
  const Complex q = curvature_quartic(chart, grid, phi, psi, conn);
  e.curvature_term = q.real();
  e.imag_defect = std::max(e.imag_defect, std::abs(q.imag()));
  e.total += q.real();
  return e;
}

// ---------------------------------------------------------------------------

/// tau(phi)^i = lambda^-2 sum_alpha (d_alpha d_alpha phi^i + Gamma^i_jk d_alpha phi^j d_alpha phi^k).
inline VectorGrid tension(const GridGeometry& grid, const PulledBackGeometry& geo, const MapField& phi) {
  const int n = phi.dim;
  VectorGrid out(n, phi.nodes);
  const double l2 = grid.conformal_factor() * grid.conformal_factor();
  for (int alpha = 0; alpha < 2; ++alpha) {
    const VectorGrid d1 = map_partial(grid, phi, alpha);
    const auto d2 = grid.partial<double>(std::span<const double>(d1.values), n, alpha);
    for (int k = 0; k < phi.nodes; ++k) {
      const auto v = d1.at(k);
      for (int i = 0; i < n; ++i) {
        double s = d2[static_cast<std::size_t>(k * n + i)];
        for (int j = 0; j < n; ++j)
          for (int q = 0; q < n; ++q) s += geo.gamma[k](i, j, q) * v(j) * v(q);
        out.at(k)(i) += s / l2;
      }
    }
  }
  return out;
}

inline VectorGrid tension(const TargetChart& chart, const GridGeometry& grid, const MapField& phi) {
  return tension(grid, PulledBackGeometry(chart, grid, phi), phi);
}

/// R(phi, psi) = 1/2 R^N(e_a . psi, psi) dphi(e_a), contravariant:
///   R^m = 1/2 g^{ma} R_abkl dphi(e_a)^b <psi^l, gamma_a psi^k>.
inline VectorGrid curvature_coupling(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                     const VectorSpinorField& psi) {
  const PulledBackGeometry geo(chart, grid, phi);
  return detail::curvature_contraction(grid, geo, phi, psi,
                                       [&](int k) { return lc_curvature_at(chart, phi.value(grid, k)); });
}

/// F^Tor(phi, psi): the same contraction with R^Tor - R^LC, i.e.
///   1/2 (nabla_a A_bkl - nabla_b A_akl + A_arl A_bk^r - A_brl A_ak^r) dphi(e_a)^b <psi^l, gamma_a psi^k>.
inline VectorGrid f_tor(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                        const VectorSpinorField& psi) {
  const PulledBackGeometry geo(chart, grid, phi);
  if (!geo.has_torsion) return VectorGrid(phi.dim, phi.nodes);
  return detail::curvature_contraction(grid, geo, phi, psi, [&](int k) {
    return detail::torsion_curvature_difference(chart, phi.value(grid, k), geo.ginv[k]);
  });
}

/// F^Tor for vectorial torsion written directly in V and nabla V. With
/// {U, W} = U_l W_k Q^{lk}, Q^{lk} = 2 Re <psi^l, gamma_a psi^k> and X = dphi(e_a):
///   <F, eta> = 1/2 sum_a ( {nabla_eta V, X} - {nabla_X V, eta} + <eta,V>{V,X}
///                          + <X,V>{eta,V} + |V|^2 {X,eta} ).
inline VectorGrid f_tor_vectorial(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                  const VectorSpinorField& psi) {
  const auto& t = chart.torsion;
  if (t.kind != TorsionKind::vectorial || !t.potential)
    throw Error(ErrorKind::incompatible_mode, "f_tor_vectorial needs a vectorial torsion spec");
  const PulledBackGeometry geo(chart, grid, phi);
  const int n = phi.dim;
  VectorGrid out(n, phi.nodes);
  const auto x = detail::frame_derivatives(grid, phi);
  for (int k = 0; k < phi.nodes; ++k) {
    const Vec y = phi.value(grid, k);
    const Mat& g = geo.g[k];
    const Vec v = t.potential(y);
    const Vec vl = g * v;
    const double vv = v.dot(vl);
    // (nabla_a V)_l = g_lr (d_a V^r + Gamma^r_ab V^b), stored nv(l, a).
    Mat dv = t.potential_derivative ? t.potential_derivative(y) : Mat::Zero(n, n);
    for (int r = 0; r < n; ++r)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) dv(r, a) += geo.gamma[k](r, a, b) * v(b);
    const Mat nv = g * dv;
    Vec low = Vec::Zero(n);
    for (int alpha = 0; alpha < 2; ++alpha) {
      const Eigen::MatrixXcd p = detail::clifford_pairing(psi, k, alpha);
      const Mat q = 2.0 * p.real();
      const Vec xu = x[alpha].at(k);
      const Vec xl = g * xu;
      const Vec nxv = nv * xu;  // (nabla_X V)_l
      const double xv = xu.dot(vl);
      const double vqx = vl.dot(q * xl);  // {V, X}
      for (int a = 0; a < n; ++a) {
        const Vec ga = g.col(a);
        low(a) += 0.5 * (nv.col(a).dot(q * xl) - nxv.dot(q * ga) + vl(a) * vqx + xv * ga.dot(q * vl) + vv * xl.dot(q * ga));
      }
    }
    out.at(k) = geo.ginv[k] * low;
  }
  return out;
}

/// (R(psi,psi)psi)^m = -g^{mi} R_ijkl <psi^j, psi^l> psi^k. The sign makes
/// the spinor equation of the curvature-term functional read D psi = 1/3 R(psi,psi)psi.
inline VectorSpinorField curvature_cubic(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                         const PulledBackGeometry& geo, const VectorSpinorField& psi,
                                         CurvatureConnection conn) {
  const int n = phi.dim;
  VectorSpinorField out(n, phi.nodes);
  for (int k = 0; k < phi.nodes; ++k) {
    const Tensor4 r = curvature_at(chart, phi.value(grid, k), conn);
    const auto p = psi.node(k);
    const Eigen::MatrixXcd h = p.adjoint() * p;
    // low(i, kk) = R_ijkl h(j,l)
    Eigen::MatrixXcd low = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int kk = 0; kk < n; ++kk)
          for (int l = 0; l < n; ++l) low(i, kk) += r(i, j, kk, l) * h(j, l);
    const Eigen::MatrixXcd coeff = -geo.ginv[k].cast<Complex>() * low;  // (m, kk)
    out.node(k) = p * coeff.transpose();
  }
  return out;
}

/// R-tilde(psi)^m = 1/12 g^{ma} (nabla_a R)_ijkl <psi^i,psi^k><psi^j,psi^l>.
inline VectorGrid curvature_gradient_term(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                          const PulledBackGeometry& geo, const VectorSpinorField& psi,
                                          CurvatureConnection conn) {
  const int n = phi.dim;
  VectorGrid out(n, phi.nodes);
  for (int k = 0; k < phi.nodes; ++k) {
    const Tensor5 dr = curvature_covariant_derivative_at(chart, phi.value(grid, k), conn);
    const auto p = psi.node(k);
    const Eigen::MatrixXcd h = p.adjoint() * p;
    Vec low = Vec::Zero(n);
    for (int a = 0; a < n; ++a) {
      Complex s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int kk = 0; kk < n; ++kk)
            for (int l = 0; l < n; ++l) s += dr(a, i, j, kk, l) * h(i, kk) * h(j, l);
      low(a) = s.real() / 12.0;
    }
    out.at(k) = geo.ginv[k] * low;
  }
  return out;
}

/// Euler-Lagrange residuals of the functional selected by `mode`.
inline ElResidual el_residual(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                              const VectorSpinorField& psi, ElMode mode) {
  TargetChart lc = chart;
  lc.torsion = {};
  const bool torsion = mode != ElMode::curvature_term;
  if (mode == ElMode::both && !chart.torsion.is_zero()) require_parallel_skew(chart, grid, phi);
  const TargetChart& active = torsion ? chart : lc;
  const PulledBackGeometry geo(active, grid, phi);
  ElResidual res;
  res.map_residual = tension(grid, geo, phi);
  const VectorGrid rc = curvature_coupling(active, grid, phi, psi);
  for (std::size_t q = 0; q < rc.values.size(); ++q) res.map_residual.values[q] -= rc.values[q];
  if (torsion && geo.has_torsion) {
    const VectorGrid f = f_tor(active, grid, phi, psi);
    for (std::size_t q = 0; q < f.values.size(); ++q) res.map_residual.values[q] -= f.values[q];
  }
  res.spinor_residual = twisted_dirac(grid, geo, phi, psi, torsion);
  if (mode != ElMode::torsion) {
    const auto conn = mode == ElMode::both ? CurvatureConnection::torsion : CurvatureConnection::levi_civita;
    const VectorGrid rt = curvature_gradient_term(active, grid, phi, geo, psi, conn);
    for (std::size_t q = 0; q < rt.values.size(); ++q) res.map_residual.values[q] -= rt.values[q];
    VectorSpinorField cubic = curvature_cubic(active, grid, phi, geo, psi, conn);
    cubic *= Complex(1.0 / 3.0);
    res.spinor_residual -= cubic;
  }
  return res;
}

/// Total energy of the functional selected by `mode` (see ElMode).
inline double mode_energy(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                          const VectorSpinorField& psi, ElMode mode) {
  switch (mode) {
    case ElMode::torsion: return energy_torsion(chart, grid, phi, psi).total;
    case ElMode::curvature_term:
      return energy_curvature(chart, grid, phi, psi, CurvatureEnergyMode::levi_civita).total;
    case ElMode::both:
      if (chart.torsion.is_zero()) return energy_curvature(chart, grid, phi, psi, CurvatureEnergyMode::levi_civita).total;
      return energy_curvature(chart, grid, phi, psi, CurvatureEnergyMode::parallel_skew).total;
  }
  return 0.0;
}

/// Covariant t-derivative of psi_t = psi + t xi_raw along phi_t = phi + t eta:
///   xi^i = xi_raw^i + (Gamma^i_jk + A_jk^i) eta^j psi^k.
inline VectorSpinorField covariant_variation(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                             const VectorSpinorField& psi, const VectorGrid& eta,
                                             const VectorSpinorField& xi_raw, bool torsion) {
  const PulledBackGeometry geo(chart, grid, phi);
  VectorSpinorField xi = xi_raw;
  for (int k = 0; k < phi.nodes; ++k) {
    const Mat c = connection_matrix(geo, k, eta.at(k), torsion);
    xi.node(k) += psi.node(k) * c.transpose().cast<Complex>();
  }
  return xi;
}

/// Analytic first variation int Re<xi, spinor_residual> - <eta, map_residual>
/// for the variation (phi + t eta, psi + t xi_raw).
inline double first_variation(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                              const VectorSpinorField& psi, const VectorGrid& eta, const VectorSpinorField& xi_raw,
                              ElMode mode) {
  const ElResidual r = el_residual(chart, grid, phi, psi, mode);
  const bool torsion = mode != ElMode::curvature_term;
  const VectorSpinorField xi = covariant_variation(chart, grid, phi, psi, eta, xi_raw, torsion);
  const PulledBackGeometry geo(chart, grid, phi);
  return l2_inner(grid, geo, xi, r.spinor_residual).real() - l2_inner(grid, geo, eta, r.map_residual);
}

// ---------------------------------------------------------------------------

struct EnergyMomentum {
  // Per node, row-major (T11, T12, T21, T22).
  std::vector<std::array<double, 4>> t;
  std::array<std::vector<double>, 2> divergence;  // sum_alpha e_alpha T_alpha beta
  double trace_norm = 0.0;
  double antisym_norm = 0.0;
  double divergence_norm = 0.0;
};

/// T_ab = 2<dphi(e_a), dphi(e_b)> - delta_ab |dphi|^2 + Re<psi, gamma_a nabla^Tor_{e_b} psi>.
inline EnergyMomentum energy_momentum(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                      const VectorSpinorField& psi) {
  const PulledBackGeometry geo(chart, grid, phi);
  const auto x = detail::frame_derivatives(grid, phi);
  const std::array<VectorSpinorField, 2> nab = {spinor_covariant_derivative(grid, geo, phi, psi, 0, true),
                                                spinor_covariant_derivative(grid, geo, phi, psi, 1, true)};
  const int nn = phi.nodes;
  EnergyMomentum em;
  em.t.resize(nn);
  std::vector<double> trace(nn), anti(nn);
  for (int k = 0; k < nn; ++k) {
    const Mat& g = geo.g[k];
    const double d2 = x[0].at(k).dot(g * x[0].at(k)) + x[1].at(k).dot(g * x[1].at(k));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        double v = 2.0 * x[a].at(k).dot(g * x[b].at(k)) - (a == b ? d2 : 0.0);
        const Eigen::Matrix2Xcd gp = gamma(a) * nab[b].node(k);
        v += (psi.node(k).adjoint() * gp * g.cast<Complex>()).trace().real();
        em.t[k][2 * a + b] = v;
      }
    trace[k] = em.t[k][0] + em.t[k][3];
    anti[k] = em.t[k][1] - em.t[k][2];
  }
  // Divergence: e_alpha T_alpha beta.
  std::vector<double> comp(static_cast<std::size_t>(4 * nn));
  for (int k = 0; k < nn; ++k)
    for (int q = 0; q < 4; ++q) comp[static_cast<std::size_t>(4 * k + q)] = em.t[k][q];
  const auto dx = grid.partial<double>(comp, 4, 0);
  const auto dy = grid.partial<double>(comp, 4, 1);
  const double inv = 1.0 / grid.conformal_factor();
  for (int b = 0; b < 2; ++b) {
    em.divergence[b].resize(nn);
    for (int k = 0; k < nn; ++k)
      em.divergence[b][k] = inv * (dx[static_cast<std::size_t>(4 * k + b)] + dy[static_cast<std::size_t>(4 * k + 2 + b)]);
  }
  em.trace_norm = detail::scalar_l2(grid, trace);
  em.antisym_norm = detail::scalar_l2(grid, anti);
  std::vector<double> div(static_cast<std::size_t>(2 * nn));
  for (int k = 0; k < nn; ++k) {
    div[static_cast<std::size_t>(2 * k)] = em.divergence[0][k];
    div[static_cast<std::size_t>(2 * k + 1)] = em.divergence[1][k];
  }
  em.divergence_norm = detail::scalar_l2(grid, div);
  return em;
}

struct HopfDifferential {
  std::vector<Complex> values;  // T(z) per node
  double dbar_norm = 0.0;       // L2 norm of 1/2 (e_1 + i e_2) T
};

/// T = |dphi(e_1)|^2 - |dphi(e_2)|^2 - 2i<dphi(e_1), dphi(e_2)>
///     + Re<psi, gamma_1 nabla_{e_1} psi> - i Re<psi, gamma_1 nabla_{e_2} psi>,
/// i.e. T11 - i T12 of the energy-momentum tensor.
inline HopfDifferential hopf_differential(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                          const VectorSpinorField& psi) {
  const PulledBackGeometry geo(chart, grid, phi);
  const auto x = detail::frame_derivatives(grid, phi);
  const auto n1 = spinor_covariant_derivative(grid, geo, phi, psi, 0, true);
  const auto n2 = spinor_covariant_derivative(grid, geo, phi, psi, 1, true);
  const int nn = phi.nodes;
  HopfDifferential hd;
  hd.values.resize(nn);
  for (int k = 0; k < nn; ++k) {
    const Mat& g = geo.g[k];
    const Eigen::MatrixXcd gc = g.cast<Complex>();
    const double s1 = (psi.node(k).adjoint() * gamma(0) * n1.node(k) * gc).trace().real();
    const double s2 = (psi.node(k).adjoint() * gamma(0) * n2.node(k) * gc).trace().real();
    const double re = x[0].at(k).dot(g * x[0].at(k)) - x[1].at(k).dot(g * x[1].at(k)) + s1;
    const double im = -2.0 * x[0].at(k).dot(g * x[1].at(k)) - s2;
    hd.values[k] = Complex(re, im);
  }
  const auto dx = grid.partial<Complex>(hd.values, 1, 0);
  const auto dy = grid.partial<Complex>(hd.values, 1, 1);
  double s = 0.0;
  const double inv = 1.0 / grid.conformal_factor();
  for (int k = 0; k < nn; ++k) s += std::norm(0.5 * inv * (dx[k] + Complex(0.0, 1.0) * dy[k]));
  hd.dbar_norm = std::sqrt(s * grid.area_weight());
  return hd;
}

}  // namespace dhmt
