#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "dhmt/catalog.hpp"
#include "dhmt/energy.hpp"
#include "dhmt/error.hpp"
#include "dhmt/fields.hpp"
#include "dhmt/solver.hpp"

namespace dhmt {

inline constexpr const char* scenario_schema = "dhmt-scenario/1";

struct TargetConfig {
  std::string chart = "flat";  // flat | sphere | random_metric
  int dim = 2;
  std::uint64_t seed = 0;      // random_metric
  double amplitude = 0.3;      // random_metric
  bool operator==(const TargetConfig&) const = default;
};

struct TorsionConfig {
  std::string kind = "zero";  // zero | raw | cartan | vectorial | skew
  std::vector<double> components;  // raw, cartan: A_ijk row-major, dim^3 values
  std::vector<double> v0;          // vectorial
  std::vector<double> gradient;    // vectorial: dV^r/dy^a row-major (r, a)
  double kappa = 0.0;              // skew
  std::string profile = "parallel";  // skew: parallel | linear
  bool operator==(const TorsionConfig&) const = default;
};

struct GridConfig {
  int n = 16;
  double length = 6.283185307179586;
  double lambda = 1.0;
  std::string derivative = "spectral";  // spectral | fd4
  bool operator==(const GridConfig&) const = default;
};

struct InitialMapConfig {
  std::string kind = "constant";  // constant | wrap | random
  std::vector<double> value;      // constant offset (defaults to the origin)
  int degree = 1;                 // wrap
  std::uint64_t seed = 0;         // random
  int band = 2;                   // random
  double amplitude = 0.3;         // random; also the wrap perturbation size
  bool operator==(const InitialMapConfig&) const = default;
};

struct Scenario {
  std::string id = "scenario";
  TargetConfig target;
  TorsionConfig torsion;
  GridConfig grid;
  InitialMapConfig initial_map;
  std::string mode = "torsion";  // torsion | curvature_term | both
  SolverConfig solver;
  std::uint64_t seed = 0;
};

inline bool operator==(const SolverConfig& a, const SolverConfig& b) {
  return a.step_size == b.step_size && a.max_iterations == b.max_iterations && a.map_tolerance == b.map_tolerance &&
         a.kernel_tolerance == b.kernel_tolerance && a.backend == b.backend && a.seed == b.seed;
}

inline bool operator==(const Scenario& a, const Scenario& b) {
  return a.id == b.id && a.target == b.target && a.torsion == b.torsion && a.grid == b.grid &&
         a.initial_map == b.initial_map && a.mode == b.mode && a.solver == b.solver && a.seed == b.seed;
}

namespace detail {

inline std::string where(const YAML::Node& node) {
  const auto m = node.Mark();
  if (m.line < 0) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

inline void require_map(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) throw Error(ErrorKind::config, path + ": expected a mapping" + where(node));
}

inline void reject_unknown(const YAML::Node& node, const std::string& path, const std::set<std::string>& known) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) throw Error(ErrorKind::config, "unknown key '" + path + key + "'" + where(kv.first));
  }
}

template <class T>
void read(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
  const YAML::Node node = parent[key];
  if (!node) return;
  try {
    out = node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorKind::config, "field '" + path + key + "' has the wrong type" + where(node));
  }
}

inline void one_of(const std::string& value, const std::string& field, const std::set<std::string>& allowed,
                   const YAML::Node& node) {
  if (!allowed.count(value)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw Error(ErrorKind::config, "field '" + field + "' = '" + value + "' is not one of {" + list + "}" + where(node));
  }
}

inline KernelBackend parse_backend(const std::string& s) {
  if (s == "dense") return KernelBackend::dense;
  if (s == "iterative") return KernelBackend::iterative;
  throw Error(ErrorKind::config, "backend must be dense or iterative, got '" + s + "'");
}

}  // namespace detail

/// Parses a scenario document. Unknown keys, wrong types and unknown enum
/// values are config errors carrying the line of the offending node.
inline Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::config, std::string("scenario is not valid YAML: ") + e.what());
  }
  detail::require_map(root, "scenario");
  detail::reject_unknown(root, "", {"schema", "id", "target", "torsion", "grid", "initial_map", "mode", "solver", "seed"});
  std::string schema;
  detail::read(root, "schema", "", schema);
  if (schema != scenario_schema)
    throw Error(ErrorKind::config, "field 'schema' must be '" + std::string(scenario_schema) + "', got '" + schema + "'" +
                                       detail::where(root["schema"]));
  Scenario s;
  detail::read(root, "id", "", s.id);
  detail::read(root, "mode", "", s.mode);
  detail::one_of(s.mode, "mode", {"torsion", "curvature_term", "both"}, root["mode"]);
  detail::read(root, "seed", "", s.seed);

  if (const auto t = root["target"]) {
    detail::require_map(t, "target");
    detail::reject_unknown(t, "target.", {"chart", "dim", "seed", "amplitude"});
    detail::read(t, "chart", "target.", s.target.chart);
    detail::one_of(s.target.chart, "target.chart", {"flat", "sphere", "random_metric"}, t["chart"]);
    detail::read(t, "dim", "target.", s.target.dim);
    detail::read(t, "seed", "target.", s.target.seed);
    detail::read(t, "amplitude", "target.", s.target.amplitude);
  }
  if (const auto t = root["torsion"]) {
    detail::require_map(t, "torsion");
    detail::reject_unknown(t, "torsion.", {"kind", "components", "v0", "gradient", "kappa", "profile"});
    detail::read(t, "kind", "torsion.", s.torsion.kind);
    detail::one_of(s.torsion.kind, "torsion.kind", {"zero", "raw", "cartan", "vectorial", "skew"}, t["kind"]);
    detail::read(t, "components", "torsion.", s.torsion.components);
    detail::read(t, "v0", "torsion.", s.torsion.v0);
    detail::read(t, "gradient", "torsion.", s.torsion.gradient);
    detail::read(t, "kappa", "torsion.", s.torsion.kappa);
    detail::read(t, "profile", "torsion.", s.torsion.profile);
    detail::one_of(s.torsion.profile, "torsion.profile", {"parallel", "linear"}, t["profile"]);
  }
  if (const auto g = root["grid"]) {
    detail::require_map(g, "grid");
    detail::reject_unknown(g, "grid.", {"N", "L", "lambda", "derivative"});
    detail::read(g, "N", "grid.", s.grid.n);
    detail::read(g, "L", "grid.", s.grid.length);
    detail::read(g, "lambda", "grid.", s.grid.lambda);
    detail::read(g, "derivative", "grid.", s.grid.derivative);
    detail::one_of(s.grid.derivative, "grid.derivative", {"spectral", "fd4"}, g["derivative"]);
  }
  if (const auto m = root["initial_map"]) {
    detail::require_map(m, "initial_map");
    detail::reject_unknown(m, "initial_map.", {"kind", "value", "degree", "seed", "band", "amplitude"});
    detail::read(m, "kind", "initial_map.", s.initial_map.kind);
    detail::one_of(s.initial_map.kind, "initial_map.kind", {"constant", "wrap", "random"}, m["kind"]);
    detail::read(m, "value", "initial_map.", s.initial_map.value);
    detail::read(m, "degree", "initial_map.", s.initial_map.degree);
    detail::read(m, "seed", "initial_map.", s.initial_map.seed);
    detail::read(m, "band", "initial_map.", s.initial_map.band);
    detail::read(m, "amplitude", "initial_map.", s.initial_map.amplitude);
  }
  if (const auto c = root["solver"]) {
    detail::require_map(c, "solver");
    detail::reject_unknown(c, "solver.", {"step_size", "max_iterations", "map_tolerance", "kernel_tolerance", "backend", "seed"});
    detail::read(c, "step_size", "solver.", s.solver.step_size);
    detail::read(c, "max_iterations", "solver.", s.solver.max_iterations);
    detail::read(c, "map_tolerance", "solver.", s.solver.map_tolerance);
    detail::read(c, "kernel_tolerance", "solver.", s.solver.kernel_tolerance);
    detail::read(c, "seed", "solver.", s.solver.seed);
    std::string backend = to_string(s.solver.backend);
    detail::read(c, "backend", "solver.", backend);
    detail::one_of(backend, "solver.backend", {"dense", "iterative"}, c["backend"]);
    s.solver.backend = detail::parse_backend(backend);
  }

  // Structural checks that do not need the catalog.
  const int n = s.target.dim;
  if (n < 1) throw Error(ErrorKind::config, "target.dim must be positive" + detail::where(root["target"]));
  if (s.grid.n < 4 || (s.grid.n & (s.grid.n - 1)) != 0)
    throw Error(ErrorKind::config, "grid.N must be a power of two >= 4" + detail::where(root["grid"]));
  if (!(s.grid.length > 0.0) || !(s.grid.lambda > 0.0))
    throw Error(ErrorKind::config, "grid.L and grid.lambda must be positive" + detail::where(root["grid"]));
  const auto& t = s.torsion;
  if ((t.kind == "raw" || t.kind == "cartan") && static_cast<int>(t.components.size()) != n * n * n)
    throw Error(ErrorKind::config, "torsion.components needs dim^3 = " + std::to_string(n * n * n) + " values" +
                                       detail::where(root["torsion"]));
  if (t.kind == "vectorial") {
    if (static_cast<int>(t.v0.size()) != n)
      throw Error(ErrorKind::config, "torsion.v0 needs dim values" + detail::where(root["torsion"]));
    if (!t.gradient.empty() && static_cast<int>(t.gradient.size()) != n * n)
      throw Error(ErrorKind::config, "torsion.gradient needs dim^2 values" + detail::where(root["torsion"]));
  }
  if (t.kind == "skew" && n != 3)
    throw Error(ErrorKind::config, "torsion.kind skew needs target.dim = 3" + detail::where(root["torsion"]));
  if (!s.initial_map.value.empty() && static_cast<int>(s.initial_map.value.size()) != n)
    throw Error(ErrorKind::config, "initial_map.value needs dim values" + detail::where(root["initial_map"]));
  try {
    s.solver.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string(e.what()) + detail::where(root["solver"]));
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot read scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline std::string emit_scenario(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto seq = [&](const std::vector<double>& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << x;
    out << YAML::EndSeq;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "schema" << YAML::Value << scenario_schema;
  out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << s.id;
  out << YAML::Key << "mode" << YAML::Value << s.mode;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "target" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "chart" << YAML::Value << s.target.chart;
  out << YAML::Key << "dim" << YAML::Value << s.target.dim;
  out << YAML::Key << "seed" << YAML::Value << s.target.seed;
  out << YAML::Key << "amplitude" << YAML::Value << s.target.amplitude;
  out << YAML::EndMap;
  out << YAML::Key << "torsion" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << s.torsion.kind;
  out << YAML::Key << "components" << YAML::Value;
  seq(s.torsion.components);
  out << YAML::Key << "v0" << YAML::Value;
  seq(s.torsion.v0);
  out << YAML::Key << "gradient" << YAML::Value;
  seq(s.torsion.gradient);
  out << YAML::Key << "kappa" << YAML::Value << s.torsion.kappa;
  out << YAML::Key << "profile" << YAML::Value << s.torsion.profile;
  out << YAML::EndMap;
  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "N" << YAML::Value << s.grid.n;
  out << YAML::Key << "L" << YAML::Value << s.grid.length;
  out << YAML::Key << "lambda" << YAML::Value << s.grid.lambda;
  out << YAML::Key << "derivative" << YAML::Value << s.grid.derivative;
  out << YAML::EndMap;
  out << YAML::Key << "initial_map" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << s.initial_map.kind;
  out << YAML::Key << "value" << YAML::Value;
  seq(s.initial_map.value);
  out << YAML::Key << "degree" << YAML::Value << s.initial_map.degree;
  out << YAML::Key << "seed" << YAML::Value << s.initial_map.seed;
  out << YAML::Key << "band" << YAML::Value << s.initial_map.band;
  out << YAML::Key << "amplitude" << YAML::Value << s.initial_map.amplitude;
  out << YAML::EndMap;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "step_size" << YAML::Value << s.solver.step_size;
  out << YAML::Key << "max_iterations" << YAML::Value << s.solver.max_iterations;
  out << YAML::Key << "map_tolerance" << YAML::Value << s.solver.map_tolerance;
  out << YAML::Key << "kernel_tolerance" << YAML::Value << s.solver.kernel_tolerance;
  out << YAML::Key << "backend" << YAML::Value << to_string(s.solver.backend);
  out << YAML::Key << "seed" << YAML::Value << s.solver.seed;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Resolution against the catalogs.

inline Tensor3 tensor_from(const std::vector<double>& v, int n) {
  Tensor3 a(n);
  std::size_t q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) a(i, j, k) = v[q++];
  return a;
}

/// Target chart with its torsion. Raw torsion is checked for skewness here
/// so that bad input fails before any field is evaluated.
inline TargetChart resolve_target(const Scenario& s) {
  const int n = s.target.dim;
  TargetChart chart;
  if (s.target.chart == "flat") chart = catalog::flat(n);
  else if (s.target.chart == "sphere") chart = catalog::sphere(n);
  else chart = catalog::random_metric(n, static_cast<unsigned>(s.target.seed), s.target.amplitude);

  const auto& t = s.torsion;
  if (t.kind == "raw") {
    const Tensor3 a = tensor_from(t.components, n);
    require_skew(a);
    chart.torsion = catalog::raw_torsion(chart, a);
  } else if (t.kind == "cartan") {
    chart.torsion = catalog::cartan_torsion(chart, tensor_from(t.components, n));
  } else if (t.kind == "vectorial") {
    const Vec v0 = Eigen::Map<const Vec>(t.v0.data(), n);
    Mat grad = Mat::Zero(n, n);
    if (!t.gradient.empty()) grad = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(t.gradient.data(), n, n);
    chart.torsion = catalog::vectorial_torsion_field(chart, v0, grad);
  } else if (t.kind == "skew") {
    chart.torsion = catalog::skew_torsion(chart, t.kappa,
                                          t.profile == "linear" ? catalog::SkewProfile::linear : catalog::SkewProfile::parallel);
  }
  return chart;
}

inline GridGeometry resolve_grid(const Scenario& s) {
  return GridGeometry(s.grid.n, s.grid.length, s.grid.lambda,
                      s.grid.derivative == "fd4" ? DerivativeMode::fd4 : DerivativeMode::spectral);
}

inline ElMode resolve_mode(const Scenario& s, const TargetChart& chart) {
  if (s.mode == "torsion") return ElMode::torsion;
  if (s.mode == "both") return ElMode::both;
  // The curvature term with torsion present is the combined functional.
  return chart.torsion.is_zero() ? ElMode::curvature_term : ElMode::both;
}

/// Initial map: constant, degree-k wrap phi^1 = k x_1 (plus an optional
/// band-limited perturbation of size `amplitude`), or a random band-limited map.
inline MapField resolve_initial_map(const Scenario& s, const TargetChart& chart, const GridGeometry& grid) {
  const int n = chart.dim;
  const auto& m = s.initial_map;
  MapField phi(n, grid.node_count());
  Vec offset = Vec::Zero(n);
  if (!m.value.empty()) offset = Eigen::Map<const Vec>(m.value.data(), n);
  if (m.kind == "random" || (m.kind == "wrap" && m.amplitude > 0.0)) {
    RandomFieldOptions opt;
    opt.band_limit = m.band;
    opt.map_amplitude = m.amplitude;
    opt.base = offset;
    phi = random_smooth_fields(chart, grid, m.seed, opt).first;
  } else {
    for (int k = 0; k < phi.nodes; ++k)
      for (int i = 0; i < n; ++i) phi.at(k, i) = offset(i);
  }
  if (m.kind == "wrap") {
    if (!chart.translation_invariant)
      throw Error(ErrorKind::config, "initial_map.kind wrap needs a translation-invariant chart (flat)");
    phi.winding(0, 0) = m.degree * 2.0 * std::numbers::pi / grid.side_length();
  }
  return phi;
}

}  // namespace dhmt
