#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhmt/energy.hpp"
#include "dhmt/error.hpp"
#include "dhmt/fields.hpp"
#include "dhmt/solver.hpp"

namespace dhmt::io {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Field snapshots: little-endian float64, node-major, components interleaved.
// A JSON sidecar <name>.json next to <name>.bin describes the shape.

namespace detail {

inline void write_f64(std::ofstream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

inline std::vector<double> read_f64(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::vector<double> v(count);
  for (auto& x : v) {
    std::uint64_t bits;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw Error(ErrorKind::io, "truncated snapshot " + path.string());
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(&x, &bits, sizeof bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::io, "trailing bytes in snapshot " + path.string());
  return v;
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::io, "corrupt JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << std::setw(2) << j << "\n";
}

inline json grid_json(const GridGeometry& grid) {
  return {{"N", grid.nodes_per_side()},
          {"L", grid.side_length()},
          {"lambda", grid.conformal_factor()},
          {"node_index", "iy * N + ix"}};
}

}  // namespace detail

/// phi values (winding included) as shape [nodes, dim].
inline void write_map_snapshot(const fs::path& stem, const GridGeometry& grid, const MapField& phi) {
  std::ofstream out(stem.string() + ".bin", std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + stem.string() + ".bin");
  for (int k = 0; k < phi.nodes; ++k) {
    const Vec y = phi.value(grid, k);
    for (int i = 0; i < phi.dim; ++i) detail::write_f64(out, y(i));
  }
  json wind = json::array();
  for (int i = 0; i < phi.dim; ++i) wind.push_back({phi.winding(i, 0), phi.winding(i, 1)});
  detail::write_json(stem.string() + ".json", {{"field", "map"},
                                               {"dtype", "float64"},
                                               {"endianness", "little"},
                                               {"shape", {phi.nodes, phi.dim}},
                                               {"layout", "node-major, component-minor"},
                                               {"winding", wind},
                                               {"grid", detail::grid_json(grid)}});
}

inline MapField read_map_snapshot(const fs::path& stem, const GridGeometry& grid) {
  const json side = detail::read_json(stem.string() + ".json");
  const int nodes = side.at("shape").at(0), dim = side.at("shape").at(1);
  if (nodes != grid.node_count()) throw Error(ErrorKind::io, "snapshot node count does not match the grid");
  MapField phi(dim, nodes);
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < 2; ++a) phi.winding(i, a) = side.at("winding").at(i).at(a);
  const auto v = detail::read_f64(stem.string() + ".bin", static_cast<std::size_t>(nodes * dim));
  for (int k = 0; k < nodes; ++k)
    for (int i = 0; i < dim; ++i)
      phi.at(k, i) = v[static_cast<std::size_t>(k * dim + i)] - phi.winding(i, 0) * grid.coordinate(k, 0) -
                     phi.winding(i, 1) * grid.coordinate(k, 1);
  return phi;
}

/// psi as shape [nodes, dim, 2, 2]: target component, spinor component, (re, im).
inline void write_spinor_snapshot(const fs::path& stem, const GridGeometry& grid, const VectorSpinorField& psi) {
  std::ofstream out(stem.string() + ".bin", std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + stem.string() + ".bin");
  for (const Complex& z : psi.values) {
    detail::write_f64(out, z.real());
    detail::write_f64(out, z.imag());
  }
  detail::write_json(stem.string() + ".json", {{"field", "vector_spinor"},
                                               {"dtype", "float64"},
                                               {"endianness", "little"},
                                               {"shape", {psi.nodes, psi.dim, 2, 2}},
                                               {"layout", "node-major; target component, spinor component, (re, im)"},
                                               {"grid", detail::grid_json(grid)}});
}

inline VectorSpinorField read_spinor_snapshot(const fs::path& stem) {
  const json side = detail::read_json(stem.string() + ".json");
  const int nodes = side.at("shape").at(0), dim = side.at("shape").at(1);
  VectorSpinorField psi(dim, nodes);
  const auto v = detail::read_f64(stem.string() + ".bin", 2 * psi.values.size());
  for (std::size_t q = 0; q < psi.values.size(); ++q) psi.values[q] = Complex(v[2 * q], v[2 * q + 1]);
  return psi;
}

// ---------------------------------------------------------------------------
// Result JSON and summary CSV.

inline json to_json(const EnergyReport& e) {
  json j{{"total", e.total},
         {"dirichlet", e.dirichlet},
         {"spinor", e.spinor},
         {"torsion_coupling", e.torsion_coupling},
         {"imag_defect", e.imag_defect}};
  j["curvature_term"] = e.curvature_term ? json(*e.curvature_term) : json(nullptr);
  return j;
}

inline json to_json(const ElReport& r) {
  return {{"torsion", {{"map", r.torsion.map}, {"spinor", r.torsion.spinor}}},
          {"plain", {{"map", r.plain.map}, {"spinor", r.plain.spinor}}},
          {"harmonic", r.harmonic},
          {"coupling", r.coupling}};
}

inline json to_json(const KernelResult& k) {
  return {{"dimension", k.dimension},
          {"smallest_singular_value", k.smallest_singular_value},
          {"operator_norm", k.operator_norm},
          {"threshold", k.threshold},
          {"residual", k.residual}};
}

inline void write_trajectory_csv(const fs::path& path, const std::vector<FlowRecord>& traj) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "iteration,dirichlet_energy,tension_norm,step\n" << std::setprecision(17);
  for (const auto& r : traj) out << r.iteration << "," << r.dirichlet << "," << r.tension_norm << "," << r.step << "\n";
}

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "scenario_id",     "energy_total",   "dirichlet",          "spinor_energy",   "torsion_coupling",
      "map_residual",    "spinor_residual", "harmonic_residual", "coupling_residual", "em_trace_norm",
      "em_antisym_norm", "em_divergence_norm", "hopf_dbar_norm", "kernel_dimension"};
  return cols;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

/// One CSV row per result file, columns as report_columns().
inline std::string report_csv(const std::vector<fs::path>& results) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto& cols = report_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  for (const auto& path : results) {
    const json j = detail::read_json(path);
    try {
      out << csv_field(j.at("scenario_id").get<std::string>()) << "," << j.at("energy").at("total").get<double>() << ","
          << j.at("energy").at("dirichlet").get<double>() << "," << j.at("energy").at("spinor").get<double>() << ","
          << j.at("energy").at("torsion_coupling").get<double>() << ","
          << j.at("el_report").at("torsion").at("map").get<double>() << ","
          << j.at("el_report").at("torsion").at("spinor").get<double>() << ","
          << j.at("el_report").at("harmonic").get<double>() << "," << j.at("el_report").at("coupling").get<double>()
          << "," << j.at("energy_momentum").at("trace_norm").get<double>() << ","
          << j.at("energy_momentum").at("antisym_norm").get<double>() << ","
          << j.at("energy_momentum").at("divergence_norm").get<double>() << ","
          << j.at("hopf").at("dbar_norm").get<double>() << "," << j.at("kernel").at("dimension").get<int>() << "\n";
    } catch (const json::exception& e) {
      throw Error(ErrorKind::io, "result file " + path.string() + " is missing fields: " + e.what());
    }
  }
  return out.str();
}

}  // namespace dhmt::io
