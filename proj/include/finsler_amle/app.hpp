#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "finsler_amle/config.hpp"
#include "finsler_amle/extensions.hpp"
#include "finsler_amle/metric_graph.hpp"
#include "finsler_amle/solver.hpp"

namespace famle {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNotConverged = 2, kExitCheckFailed = 3 };

/// Everything a config describes, materialized.
struct Problem {
  GridDomain domain;
  std::optional<FinslerStructure> structure;
  std::unique_ptr<MetricGraph> graph;
  BoundaryData g;
};

GridDomain build_domain(const ProblemConfig& config);
FinslerStructure build_structure(const ProblemConfig& config);
/// Reads per-node parameter records: one row per node in node order
/// (x fastest), an optional non-numeric header line, columns per family:
///   euclidean-scaled, p-norm: s
///   riemannian:               a11,a12,a22
///   custom-table:             T_0,...,T_{K-1}
///   piecewise-constant-norm:  palette label (0-based)
FinslerStructure load_structure_csv(const std::filesystem::path& path, const ProblemConfig& config);
/// Boundary values in boundary_nodes() order.
std::vector<double> build_boundary_values(const ProblemConfig& config, const MetricGraph& graph);
Problem build_problem(const ProblemConfig& config);

/// Aronsson's function y^(4/3) - x^(4/3).
double aronsson(Vec2 p);

/// `x_index,y_index,x,y,value` over closure nodes, 17 significant digits.
void write_field_csv(const std::filesystem::path& path, const GridDomain& domain, std::span<const double> u,
                     const std::string& value_column = "value");
/// Reads a field CSV; the rows must cover exactly the closure nodes.
/// Nodes outside the closure are NaN. Throws InputError on mismatch.
ScalarField read_field_csv(const std::filesystem::path& path, const GridDomain& domain);

nlohmann::json solve_report_json(const SolveReport& report, bool timing);

int run_solve(const ProblemConfig& config);
/// Runs config.verify.checks on u; returns {"passed", "checks": [CheckReport...]}.
nlohmann::json verify_field(const ProblemConfig& config, const Problem& problem, std::span<const double> u);
int run_verify(const ProblemConfig& config, const std::filesystem::path& solution);
int run_distance(const ProblemConfig& config, std::pair<int, int> source);

}  // namespace famle
