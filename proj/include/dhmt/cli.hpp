#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhmt/catalog.hpp"
#include "dhmt/energy.hpp"
#include "dhmt/io.hpp"
#include "dhmt/operators.hpp"
#include "dhmt/scenario.hpp"
#include "dhmt/solver.hpp"
#include "dhmt/torsion.hpp"

namespace dhmt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { success = 0, check_failure = 1, usage_error = 2, solver_non_convergence = 3 };

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string message;
};

struct Overrides {
  std::optional<KernelBackend> backend;
  std::optional<int> grid_n;
};

inline Scenario apply_overrides(Scenario s, const Overrides& o) {
  if (o.backend) s.solver.backend = *o.backend;
  if (o.grid_n) {
    const int n = *o.grid_n;
    if (n < 4 || (n & (n - 1)) != 0) throw Error(ErrorKind::config, "--grid-override must be a power of two >= 4");
    s.grid.n = n;
  }
  return s;
}

namespace detail {

inline Check measured_check(std::string name, double measured, double tol, std::string message = {}) {
  return {std::move(name), measured, tol, measured <= tol, std::move(message)};
}

inline json to_json(const Check& c) {
  return {{"name", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"passed", c.passed}, {"message", c.message}};
}

inline std::pair<MapField, VectorSpinorField> verify_fields(const Scenario& s, const TargetChart& chart,
                                                            const GridGeometry& grid, std::uint64_t seed) {
  RandomFieldOptions opt;
  if (!s.initial_map.value.empty()) opt.base = Eigen::Map<const Vec>(s.initial_map.value.data(), chart.dim);
  auto fields = random_smooth_fields(chart, grid, seed, opt);
  if (s.initial_map.kind == "wrap" && chart.translation_invariant)
    fields.first.winding(0, 0) = s.initial_map.degree * 2.0 * std::numbers::pi / grid.side_length();
  return fields;
}

/// Largest relative gap between the analytic first variation and a centred
/// difference of the energy, over `samples` random directions.
inline double variational_gap(const TargetChart& chart, const GridGeometry& grid, const MapField& phi,
                              const VectorSpinorField& psi, ElMode mode, std::uint64_t seed, int samples) {
  double worst = 0.0;
  const TargetChart flat = catalog::flat(chart.dim);
  for (int r = 0; r < samples; ++r) {
    auto [dir, xi] = random_smooth_fields(flat, grid, seed + 1000 + r, {});
    VectorGrid eta(chart.dim, phi.nodes);
    eta.values = dir.periodic;
    const double t = 1e-4;
    auto energy = [&](double tt) {
      MapField p = phi;
      for (std::size_t q = 0; q < p.periodic.size(); ++q) p.periodic[q] += tt * eta.values[q];
      VectorSpinorField f = psi;
      for (std::size_t q = 0; q < f.values.size(); ++q) f.values[q] += tt * xi.values[q];
      return mode_energy(chart, grid, p, f, mode);
    };
    const double fd = (energy(t) - energy(-t)) / (2.0 * t);
    const double an = first_variation(chart, grid, phi, psi, eta, xi, mode);
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), 1e-300));
  }
  return worst;
}

}  // namespace detail

/// Named invariant checks for one scenario.
inline std::vector<Check> verify_checks(const Scenario& s) {
  std::vector<Check> checks;
  TargetChart chart;
  if (s.torsion.kind == "raw" || s.torsion.kind == "cartan") {
    const double defect = skewness_defect(tensor_from(s.torsion.components, s.target.dim));
    const double tol = 1e-12;
    checks.push_back(detail::measured_check(
        "torsion-skewness", defect, tol,
        defect <= tol ? "" : "A_ijk + A_ikj must vanish; the torsion endomorphism A(X, .) is not skew-adjoint"));
    if (defect > tol) return checks;
  }
  chart = resolve_target(s);
  const GridGeometry grid = resolve_grid(s);
  const ElMode mode = resolve_mode(s, chart);
  auto [phi, psi] = detail::verify_fields(s, chart, grid, s.seed);

  bool mode_admissible = true;
  if (mode != ElMode::torsion && !chart.torsion.is_zero()) {
    Check c{"real-valuedness-precondition", 0.0, 0.0, true, ""};
    try {
      require_parallel_skew(chart, grid, phi);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::precondition) throw;
      c.passed = false;
      c.measured = 1.0;
      c.message = e.what();
      mode_admissible = false;
    }
    checks.push_back(c);
  }

  const EnergyReport et = energy_torsion(chart, grid, phi, psi);
  checks.push_back(detail::measured_check("real-valuedness-torsion-energy", et.imag_defect, 1e-12));
  if (mode != ElMode::torsion && mode_admissible) {
    const auto cm = mode == ElMode::both && !chart.torsion.is_zero() ? CurvatureEnergyMode::parallel_skew
                                                                     : CurvatureEnergyMode::levi_civita;
    const EnergyReport ec = energy_curvature(chart, grid, phi, psi, cm);
    checks.push_back(detail::measured_check("real-valuedness-curvature-energy", ec.imag_defect, 1e-12));
  }

  const ElMode vmode = mode_admissible ? mode : ElMode::torsion;
  checks.push_back(detail::measured_check(std::string("variational-identity-") + to_string(vmode),
                                          detail::variational_gap(chart, grid, phi, psi, vmode, s.seed, 3), 1e-6));

  {
    auto [phi2, chi] = random_smooth_fields(chart, grid, s.seed + 1, {});
    (void)phi2;
    const PulledBackGeometry geo(chart, grid, phi);
    const Complex a = l2_inner(grid, geo, chi, twisted_dirac(grid, geo, phi, psi, true));
    const Complex b = l2_inner(grid, geo, twisted_dirac(grid, geo, phi, chi, true), psi);
    checks.push_back(detail::measured_check("dirac-self-adjointness", std::abs(a - b) / std::max(std::abs(a), 1e-300), 1e-10));
  }

  {
    const double e0 = mode_energy(chart, grid, phi, psi, vmode);
    double drift = 0.0;
    for (double c : {0.5, 2.0, 7.3}) {
      VectorSpinorField scaled = psi;
      scaled *= Complex(1.0 / std::sqrt(c));
      const double e = mode_energy(chart, grid.with_conformal_factor(c * grid.conformal_factor()), phi, scaled, vmode);
      drift = std::max(drift, std::abs(e - e0) / std::max(1.0, std::abs(e0)));
    }
    checks.push_back(detail::measured_check("conformal-invariance", drift, 1e-12));
  }

  {
    const auto w = weitzenbock_terms(chart, grid, phi, psi);
    checks.push_back(detail::measured_check("weitzenbock-defect", w.defect / std::max(w.scale, 1e-300), 1e-3));
  }

  if (!chart.torsion.is_zero() && chart.dim >= 2) {
    const Vec y = phi.value(grid, 0);
    const Tensor3 a = torsion_at(chart, y);
    const Mat g = metric_at(chart, y);
    const Mat ginv = g.inverse();
    const TorsionDecomposition d = decompose_torsion(a, g);
    const double scale = std::max(1.0, a.max_abs());
    double worst = (d.vectorial + d.antisymmetric + d.cartan - a).max_abs();
    worst = std::max({worst, std::abs(tensor_inner(d.vectorial, d.antisymmetric, ginv)),
                      std::abs(tensor_inner(d.vectorial, d.cartan, ginv)),
                      std::abs(tensor_inner(d.antisymmetric, d.cartan, ginv))});
    checks.push_back(detail::measured_check("cartan-decomposition", worst / scale, 1e-12));
    const Tensor4 r = torsion_curvature_at(chart, y);
    checks.push_back(detail::measured_check("torsion-curvature-pair-antisymmetry",
                                            pair_antisymmetry_defect(r) / std::max(1.0, r.max_abs()), 1e-8));
  }
  return checks;
}

/// Runs `verify`: writes verify.json to `out` and prints one line per check.
inline int cmd_verify(const Scenario& s, const fs::path& out, std::ostream& log) {
  std::vector<Check> checks;
  try {
    checks = verify_checks(s);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::torsion_not_skew) {
      checks.push_back({"torsion-skewness", 1.0, 0.0, false, e.what()});
    } else if (e.kind() == ErrorKind::config) {
      log << "error: " << e.what() << "\n";
      return usage_error;
    } else {
      checks.push_back({to_string(e.kind()), 1.0, 0.0, false, e.what()});
    }
  }
  bool all = true;
  json arr = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    arr.push_back(detail::to_json(c));
    log << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured << " tolerance=" << c.tolerance;
    if (!c.message.empty()) log << " : " << c.message;
    log << "\n";
  }
  fs::create_directories(out);
  io::detail::write_json(out / "verify.json", {{"scenario_id", s.id}, {"passed", all}, {"checks", arr}});
  return all ? success : check_failure;
}

/// Runs `solve`: result.json, phi/psi snapshots and trajectory.csv in `out`.
inline int cmd_solve(const Scenario& s, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  std::vector<FlowRecord> traj;
  try {
    const TargetChart chart = resolve_target(s);
    const GridGeometry grid = resolve_grid(s);
    const ElMode mode = resolve_mode(s, chart);
    const MapField phi0 = resolve_initial_map(s, chart, grid);
    SolverResult r;
    try {
      r = uncoupled_solution(chart, grid, phi0, s.solver, &traj);
    } catch (...) {
      io::write_trajectory_csv(out / "trajectory.csv", traj);
      throw;
    }
    io::write_trajectory_csv(out / "trajectory.csv", traj);
    EnergyReport energy = energy_torsion(chart, grid, r.phi, r.psi);
    if (mode != ElMode::torsion) {
      const auto cm = mode == ElMode::both && !chart.torsion.is_zero() ? CurvatureEnergyMode::parallel_skew
                                                                       : CurvatureEnergyMode::levi_civita;
      energy = energy_curvature(chart, grid, r.phi, r.psi, cm);
    }
    const EnergyMomentum em = energy_momentum(chart, grid, r.phi, r.psi);
    const HopfDifferential hd = hopf_differential(chart, grid, r.phi, r.psi);
    io::write_map_snapshot(out / "phi", grid, r.phi);
    io::write_spinor_snapshot(out / "psi", grid, r.psi);
    json result{{"schema", "dhmt-result/1"},
                {"scenario_id", s.id},
                {"mode", to_string(mode)},
                {"backend", to_string(s.solver.backend)},
                {"iterations_used", r.iterations_used},
                {"kernel_dimension_estimate", r.kernel_dimension_estimate},
                {"kernel", io::to_json(r.kernel)},
                {"energy", io::to_json(energy)},
                {"el_report", io::to_json(r.el_report)},
                {"energy_momentum",
                 {{"trace_norm", em.trace_norm}, {"antisym_norm", em.antisym_norm}, {"divergence_norm", em.divergence_norm}}},
                {"hopf", {{"dbar_norm", hd.dbar_norm}}},
                {"snapshots", {{"phi", "phi.bin"}, {"psi", "psi.bin"}}},
                {"trajectory", "trajectory.csv"},
                {"scenario", emit_scenario(s)}};
    io::detail::write_json(out / "result.json", result);
    log << "solved " << s.id << ": " << r.iterations_used << " flow iterations, dirichlet=" << energy.dirichlet
        << ", kernel dimension " << r.kernel_dimension_estimate << "\n";
    return success;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::non_convergence: return solver_non_convergence;
      case ErrorKind::config: return usage_error;
      default: return check_failure;
    }
  }
}

/// Runs `report`: CSV summary to `out`/report.csv when `out` is given, else to `csv`.
inline int cmd_report(const std::vector<fs::path>& results, const std::optional<fs::path>& out, std::ostream& csv,
                      std::ostream& log) {
  try {
    const std::string table = io::report_csv(results);
    if (out) {
      fs::create_directories(*out);
      std::ofstream f(*out / "report.csv");
      if (!f) throw Error(ErrorKind::io, "cannot write " + (*out / "report.csv").string());
      f << table;
    } else {
      csv << table;
    }
    return success;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return usage_error;
  }
}

}  // namespace dhmt::cli
