#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "dhmt/energy.hpp"
#include "dhmt/error.hpp"
#include "dhmt/fields.hpp"
#include "dhmt/operators.hpp"
#include "dhmt/target.hpp"

namespace dhmt {

enum class KernelBackend { dense, iterative };

inline const char* to_string(KernelBackend b) { return b == KernelBackend::dense ? "dense" : "iterative"; }

struct SolverConfig {
  double step_size = 0.5;
  int max_iterations = 500;
  double map_tolerance = 1e-9;      // L2 norm of tau(phi)
  double kernel_tolerance = 1e-8;   // |D psi| / |psi|
  KernelBackend backend = KernelBackend::dense;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(step_size > 0.0)) throw Error(ErrorKind::config, "solver.step_size must be positive");
    if (max_iterations < 0) throw Error(ErrorKind::config, "solver.max_iterations must be non-negative");
    if (!(map_tolerance > 0.0) || !(kernel_tolerance > 0.0))
      throw Error(ErrorKind::config, "solver tolerances must be positive");
  }
};

struct FlowRecord {
  int iteration = 0;
  double dirichlet = 0.0;
  double tension_norm = 0.0;
  double step = 0.0;
};

struct FlowResult {
  MapField phi;
  int iterations = 0;
  std::vector<FlowRecord> trajectory;
};

/// Accepted steps may not raise the Dirichlet energy by more than this
/// relative amount (roundoff of the energy sum near convergence).
inline constexpr double flow_energy_slack = 1e-13;

namespace detail {

/// (I - s lambda^-2 Laplacian)^-1 on a periodic scalar field, diagonalised
/// by the eigenvectors of the 1-D second-derivative matrix.
class ImplicitLaplacian {
 public:
  explicit ImplicitLaplacian(const GridGeometry& grid) : n_(grid.nodes_per_side()), lambda_(grid.conformal_factor()) {
    const Mat& d = grid.differentiator().matrix();
    Eigen::SelfAdjointEigenSolver<Mat> es(d * d);
    q_ = es.eigenvectors();
    ev_ = es.eigenvalues();
  }

  /// Solves in place for one component stored with stride `stride`, offset `offset`.
  void solve(std::vector<double>& f, int stride, int offset, double s) const {
    Mat m(n_, n_);  // m(iy, ix)
    for (int iy = 0; iy < n_; ++iy)
      for (int ix = 0; ix < n_; ++ix) m(iy, ix) = f[static_cast<std::size_t>((iy * n_ + ix) * stride + offset)];
    Mat h = q_.transpose() * m * q_;
    const double c = s / (lambda_ * lambda_);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) h(a, b) /= 1.0 - c * (ev_(a) + ev_(b));
    m = q_ * h * q_.transpose();
    for (int iy = 0; iy < n_; ++iy)
      for (int ix = 0; ix < n_; ++ix) f[static_cast<std::size_t>((iy * n_ + ix) * stride + offset)] = m(iy, ix);
  }

 private:
  int n_;
  double lambda_;
  Mat q_;
  Vec ev_;
};

}  // namespace detail

/// Semi-implicit harmonic map flow
///   phi <- phi + s (I - s lambda^-2 Lap)^-1 tau(phi),
/// halving s (at most 30 times) whenever the Dirichlet energy would rise or
/// the trial map leaves the chart domain. The trajectory is filled even when
/// the flow fails.
inline FlowResult harmonic_map_flow(const TargetChart& chart, const GridGeometry& grid, const MapField& phi0,
                                    const SolverConfig& config, std::vector<FlowRecord>* trajectory_out = nullptr) {
  config.validate();
  TargetChart lc = chart;
  lc.torsion = {};
  const detail::ImplicitLaplacian implicit(grid);
  FlowResult res;
  res.phi = phi0;
  std::vector<FlowRecord>& traj = trajectory_out ? *trajectory_out : res.trajectory;
  traj.clear();

  auto measure = [&](const MapField& phi) {
    const PulledBackGeometry geo(lc, grid, phi);
    return std::pair{dirichlet_energy(grid, geo, phi), l2_norm(grid, geo, tension(grid, geo, phi))};
  };
  auto [energy, tnorm] = measure(res.phi);
  traj.push_back({0, energy, tnorm, 0.0});
  int it = 0;
  while (tnorm > config.map_tolerance) {
    if (it >= config.max_iterations) {
      if (trajectory_out == nullptr) res.trajectory = traj;
      throw Error(ErrorKind::non_convergence, "harmonic map flow: |tau| = " + std::to_string(tnorm) + " after " +
                                                  std::to_string(it) + " iterations");
    }
    const PulledBackGeometry geo(lc, grid, res.phi);
    const VectorGrid tau = tension(grid, geo, res.phi);
    double s = config.step_size;
    bool accepted = false;
    for (int halving = 0; halving <= 30 && !accepted; ++halving, s *= 0.5) {
      std::vector<double> upd = tau.values;
      for (int i = 0; i < res.phi.dim; ++i) implicit.solve(upd, res.phi.dim, i, s);
      MapField trial = res.phi;
      for (std::size_t q = 0; q < upd.size(); ++q) trial.periodic[q] += s * upd[q];
      try {
        const auto [e, t] = measure(trial);
        if (e <= energy * (1.0 + flow_energy_slack)) {
          res.phi = std::move(trial);
          energy = e;
          tnorm = t;
          accepted = true;
          traj.push_back({it + 1, energy, tnorm, s});
        }
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::domain_violation) throw;
      }
    }
    if (!accepted) {
      if (trajectory_out == nullptr) res.trajectory = traj;
      throw Error(ErrorKind::non_convergence, "harmonic map flow: line search failed at iteration " + std::to_string(it));
    }
    ++it;
  }
  res.iterations = it;
  if (trajectory_out != nullptr) res.trajectory = traj;
  return res;
}

struct KernelResult {
  VectorSpinorField psi;  // L2-normalised kernel element, or zero when the kernel is empty
  int dimension = 0;
  double smallest_singular_value = 0.0;
  double operator_norm = 0.0;
  double threshold = 0.0;
  double residual = 0.0;  // |D psi| / |psi|, 0 for the empty kernel
  std::vector<double> singular_values;  // smallest first; all of them (dense) or the block (iterative)
};

inline constexpr double kernel_threshold_factor = 1e-8;

namespace detail {

inline void classify_kernel(KernelResult& kr, const std::vector<double>& sv_sorted) {
  kr.threshold = kernel_threshold_factor * kr.operator_norm;
  kr.singular_values = sv_sorted;
  kr.smallest_singular_value = sv_sorted.empty() ? 0.0 : sv_sorted.front();
  int dim = 0;
  for (double s : sv_sorted) {
    if (s >= kr.threshold / 10.0 && s <= kr.threshold * 10.0)
      throw Error(ErrorKind::ambiguous_kernel, "singular value " + std::to_string(s) + " within a factor 10 of the kernel threshold " +
                                                   std::to_string(kr.threshold));
    if (s < kr.threshold) ++dim;
  }
  kr.dimension = dim;
}

inline void finish_kernel(KernelResult& kr, const AssembledDiracOperator& op, const Eigen::VectorXcd& u,
                          const SolverConfig& config) {
  if (kr.dimension == 0) {
    kr.psi = VectorSpinorField(op.target_dim(), op.map().nodes);
    kr.residual = 0.0;
    return;
  }
  VectorSpinorField psi = op.from_orthonormal(u);
  const double nrm = l2_norm(op.grid(), op.geometry(), psi);
  psi *= Complex(1.0 / nrm);
  kr.residual = l2_norm(op.grid(), op.geometry(), op.apply(psi));
  if (kr.residual > config.kernel_tolerance)
    throw Error(ErrorKind::non_convergence, "kernel element residual " + std::to_string(kr.residual) +
                                                " exceeds kernel_tolerance " + std::to_string(config.kernel_tolerance));
  kr.psi = std::move(psi);
}

/// Chebyshev-filtered subspace iteration on D^2. Each block is projected by
/// a thin SVD of D X, so the reported singular values are |D x| of the
/// returned vectors and the squared values are the Ritz values of D^2.
inline void iterative_kernel(const AssembledDiracOperator& op, const SolverConfig& config, KernelResult& kr,
                             Eigen::VectorXcd& first) {
  const long d = op.dimension();
  const int block = static_cast<int>(std::min<long>(d, 4L * op.target_dim() + 8));
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> nd;
  auto apply_p = [&](Eigen::VectorXcd u) {
    op.project_nyquist_free(u);
    Eigen::VectorXcd y = op.apply(u);
    op.project_nyquist_free(y);
    return y;
  };
  auto apply_block = [&](const Eigen::MatrixXcd& x) {
    Eigen::MatrixXcd y(x.rows(), x.cols());
    for (long c = 0; c < x.cols(); ++c) y.col(c) = apply_p(x.col(c));
    return y;
  };
  auto orthonormalize = [&](const Eigen::MatrixXcd& y) -> Eigen::MatrixXcd {
    return Eigen::HouseholderQR<Eigen::MatrixXcd>(y).householderQ() * Eigen::MatrixXcd::Identity(d, y.cols());
  };

  // Upper spectral bound of D^2 by power iteration.
  Eigen::VectorXcd v(d);
  for (long q = 0; q < d; ++q) v(q) = Complex(nd(rng), nd(rng));
  op.project_nyquist_free(v);
  v.normalize();
  double top = 0.0;
  for (int k = 0; k < 40; ++k) {
    Eigen::VectorXcd w = apply_p(apply_p(v));
    top = w.norm();
    v = w / top;
  }
  const double upper = 1.1 * top;
  kr.operator_norm = std::sqrt(top);
  const double thr = kernel_threshold_factor * kr.operator_norm;

  Eigen::MatrixXcd x(d, block);
  for (long c = 0; c < block; ++c)
    for (long q = 0; q < d; ++q) x(q, c) = Complex(nd(rng), nd(rng));
  for (long c = 0; c < block; ++c) op.project_nyquist_free(x.col(c));
  x = orthonormalize(x);

  const int degree = 30;
  double lower = upper / 100.0;
  for (int outer = 0; outer < 200; ++outer) {
    // Chebyshev filter of D^2 damping [lower, upper].
    const double e = 0.5 * (upper - lower), c = 0.5 * (upper + lower);
    Eigen::MatrixXcd y0 = x;
    Eigen::MatrixXcd y1 = (apply_block(apply_block(x)) - c * x) / e;
    for (int k = 2; k <= degree; ++k) {
      Eigen::MatrixXcd y2 = 2.0 * (apply_block(apply_block(y1)) - c * y1) / e - y0;
      y0 = std::move(y1);
      y1 = std::move(y2);
    }
    for (long col = 0; col < block; ++col) op.project_nyquist_free(y1.col(col));
    x = orthonormalize(y1);

    const Eigen::MatrixXcd dx = apply_block(x);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dx, Eigen::ComputeThinV);
    // Singular values come sorted descending; reverse to smallest first.
    std::vector<double> sv(block);
    Eigen::MatrixXcd xs(d, block);
    for (int q = 0; q < block; ++q) {
      sv[q] = svd.singularValues()(block - 1 - q);
      xs.col(q) = x * svd.matrixV().col(block - 1 - q);
    }
    x = std::move(xs);
    lower = std::max(sv[block - 1] * sv[block - 1], upper * 1e-8);

    int below = 0;
    while (below < block && sv[below] < 10.0 * thr) ++below;
    bool converged = outer > 0 && below < block;
    for (int q = 0; q < below && converged; ++q)
      if (sv[q] >= thr / 10.0) converged = false;
    if (converged) {
      // The first non-kernel level must be resolved as an eigenvalue of D^2.
      const Eigen::VectorXcd xq = x.col(below);
      const Eigen::VectorXcd r = apply_p(apply_p(xq)) - sv[below] * sv[below] * xq;
      if (r.norm() > 1e-3 * sv[below] * sv[below]) converged = false;
    }
    if (converged) {
      classify_kernel(kr, sv);
      first = x.col(0);
      return;
    }
  }
  throw Error(ErrorKind::non_convergence, "iterative kernel solve did not converge");
}

}  // namespace detail

/// Kernel of the assembled D^Tor along phi. Singular values below
/// 1e-8 |D| count as kernel; a singular value within a factor 10 of that
/// threshold is reported as an ambiguous kernel.
inline KernelResult dirac_kernel_solve(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                                       const SolverConfig& config) {
  config.validate();
  const AssembledDiracOperator op(chart, grid, phi, true);
  KernelResult kr;
  Eigen::VectorXcd first;
  if (config.backend == KernelBackend::dense) {
    // Restricted to the Nyquist-free subspace: P D P + mu (I - P) with mu above |D|,
    // so the removed directions sit exactly at mu and are dropped.
    const long d = op.dimension();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
    for (long c = 0; c < d; ++c) op.project_nyquist_free(p.col(c));
    const Eigen::MatrixXcd m = op.materialize();
    const double mu = 2.0 * m.norm() + 1.0;
    Eigen::MatrixXcd h = p * m * p + mu * (Eigen::MatrixXcd::Identity(d, d) - p);
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    std::vector<long> order(d);
    for (long q = 0; q < d; ++q) order[q] = q;
    std::sort(order.begin(), order.end(),
              [&](long a, long b) { return std::abs(es.eigenvalues()(a)) < std::abs(es.eigenvalues()(b)); });
    const long kept = d - op.nyquist_dimension();
    std::vector<double> sv(kept);
    for (long q = 0; q < kept; ++q) sv[q] = std::abs(es.eigenvalues()(order[q]));
    kr.operator_norm = sv.back();
    detail::classify_kernel(kr, sv);
    first = es.eigenvectors().col(order.front());
  } else {
    detail::iterative_kernel(op, config, kr, first);
  }
  detail::finish_kernel(kr, op, first, config);
  return kr;
}

struct ResidualNorms {
  double map = 0.0;     // |tau - R - F^Tor|
  double spinor = 0.0;  // |D psi|
};

struct ElReport {
  ResidualNorms torsion;  // torsion connection
  ResidualNorms plain;    // Levi-Civita connection, torsion switched off
  double harmonic = 0.0;  // |tau(phi)|
  double coupling = 0.0;  // |R + F^Tor|, diagnostic for uncoupled pairs
};

struct SolverResult {
  MapField phi;
  VectorSpinorField psi;
  ElReport el_report;
  KernelResult kernel;
  int kernel_dimension_estimate = 0;
  int iterations_used = 0;
  std::vector<FlowRecord> trajectory;
};

inline ElReport el_report(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                          const VectorSpinorField& psi) {
  TargetChart lc = chart;
  lc.torsion = {};
  const PulledBackGeometry geo(chart, grid, phi);
  ElReport r;
  const ElResidual rt = el_residual(chart, grid, phi, psi, ElMode::torsion);
  const ElResidual rp = el_residual(lc, grid, phi, psi, ElMode::torsion);
  r.torsion = {l2_norm(grid, geo, rt.map_residual), l2_norm(grid, geo, rt.spinor_residual)};
  r.plain = {l2_norm(grid, geo, rp.map_residual), l2_norm(grid, geo, rp.spinor_residual)};
  const VectorGrid tau = tension(grid, geo, phi);
  r.harmonic = l2_norm(grid, geo, tau);
  VectorGrid coupling = tau;
  for (std::size_t q = 0; q < tau.values.size(); ++q) coupling.values[q] -= rt.map_residual.values[q];
  r.coupling = l2_norm(grid, geo, coupling);
  return r;
}

/// Harmonic map flow followed by a kernel element of D^Tor along the limit map.
inline SolverResult uncoupled_solution(const TargetChart& chart, const GridGeometry& grid, const MapField& phi0,
                                       const SolverConfig& config, std::vector<FlowRecord>* trajectory_out = nullptr) {
  SolverResult res;
  FlowResult flow = harmonic_map_flow(chart, grid, phi0, config, trajectory_out);
  res.phi = std::move(flow.phi);
  res.iterations_used = flow.iterations;
  res.trajectory = std::move(flow.trajectory);
  res.kernel = dirac_kernel_solve(chart, grid, res.phi, config);
  res.psi = res.kernel.psi;
  res.kernel_dimension_estimate = res.kernel.dimension;
  res.el_report = el_report(chart, grid, res.phi, res.psi);
  return res;
}

}  // namespace dhmt
