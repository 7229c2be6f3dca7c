#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dhmt/cli.hpp"

namespace {

dhmt::cli::Overrides overrides(const std::string& backend, int grid) {
  dhmt::cli::Overrides o;
  if (!backend.empty()) o.backend = dhmt::detail::parse_backend(backend);
  if (grid > 0) o.grid_n = grid;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace dhmt;
  CLI::App app{"Dirac-harmonic maps with torsion: invariant checks, uncoupled solutions, reports"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = ".", backend;
  int grid = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_path, "scenario file (YAML)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--backend", backend, "kernel backend")->check(CLI::IsMember({"dense", "iterative"}));
    sub->add_option("--grid-override", grid, "nodes per side, power of two");
  };
  auto* verify = app.add_subcommand("verify", "run the invariant checks for a scenario");
  add_common(verify);
  auto* solve = app.add_subcommand("solve", "harmonic map flow followed by a Dirac kernel solve");
  add_common(solve);
  auto* report = app.add_subcommand("report", "summarise result.json files as CSV");
  std::vector<std::string> files;
  std::string report_out;
  report->add_option("results", files, "result.json files");
  report->add_option("--out", report_out, "directory for report.csv (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::success : cli::usage_error;
  }

  try {
    if (*report) {
      std::vector<std::filesystem::path> paths(files.begin(), files.end());
      std::optional<std::filesystem::path> out;
      if (!report_out.empty()) out = report_out;
      return cli::cmd_report(paths, out, std::cout, std::cerr);
    }
    const Scenario s = cli::apply_overrides(load_scenario(scenario_path), overrides(backend, grid));
    if (*verify) return cli::cmd_verify(s, out_dir, std::cout);
    return cli::cmd_solve(s, out_dir, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::config ? cli::usage_error : cli::check_failure;
  }
}
