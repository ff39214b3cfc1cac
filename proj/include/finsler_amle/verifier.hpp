#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "finsler_amle/extensions.hpp"
#include "finsler_amle/metric_graph.hpp"
#include "finsler_amle/solver.hpp"

namespace famle {

/// Outcome of one check. `margin` is tolerance minus worst violation, so a
/// check passes iff margin >= 0. Failing reports carry a witness that can be
/// replayed through the matching *_on function.
struct CheckReport {
  std::string name;
  bool passed = true;
  double margin = 0.0;
  nlohmann::json witness;
  nlohmann::json details;

  nlohmann::json to_json() const;
};

/// Test subdomain: a metric ball or an axis rectangle (node index bounds,
/// inclusive), intersected with the interior of U. The node set S splits
/// into its inner boundary (nodes with a stencil neighbour outside S) and
/// the open part V.
struct Subdomain {
  enum class Shape { Ball, Rectangle };
  Shape shape = Shape::Rectangle;
  int center = -1;
  double radius = 0.0;
  int i0 = 0, j0 = 0, i1 = 0, j1 = 0;

  static Subdomain ball(int center, double radius);
  static Subdomain rectangle(int i0, int j0, int i1, int j1);
  nlohmann::json to_json() const;
  static Subdomain from_json(const nlohmann::json& j);
};

struct SubdomainNodes {
  std::vector<int> open;      // V
  std::vector<int> boundary;  // inner boundary of S
  std::vector<int> all;       // S, sorted
};

/// Resolves a subdomain. Empty parts are returned as-is.
SubdomainNodes resolve(const Subdomain& sub, const MetricGraph& graph);

/// Seeded sampler over balls and rectangles with log-uniform sizes. Only
/// subdomains with a nonempty open part and at least two inner-boundary
/// nodes are returned. Throws DegenerateInputError when none can be found.
std::vector<Subdomain> sample_subdomains(const MetricGraph& graph, std::size_t count, std::uint64_t seed);

/// Tolerances of the checks, as functions of the grid. The table is
/// documented in the README.
struct Tolerances {
  /// Cone comparison: max over V of (u - C) <= cone * (a + L) * h, L = lip(u, dV).
  double cone = 0.5;
  /// Best extension, for every pair x, y in V u dV:
  ///   |u(x) - u(y)| <= L * ((1 + lip) * d(x, y) + lip_length),  L = lip(u, dV).
  double lip = 0.0;
  double lip_length = 0.0;
  /// Minimality: cost(u) <= cost(v) * (1 + min).
  double min = 0.0;

  /// lip = min / 2 = stencil anisotropy, lip_length = r / 4 with r the
  /// finest solver radius (default 2h).
  static Tolerances for_graph(const MetricGraph& graph, std::optional<double> finest_radius = std::nullopt);
  /// Prop 3.1 relative tolerance: metric anisotropy of the structure on the
  /// stencil plus h / (2r) for the finite ball radius.
  static double prop31(const FinslerStructure& structure, const MetricGraph& graph, double r);
};

struct ConeSample {
  Subdomain sub;
  int x0 = -1;
  double a = 0.0;
  bool from_above = true;  // (I): u <= C on dV => on V; (II) the mirrored statement
  nlohmann::json to_json() const;
  static ConeSample from_json(const nlohmann::json& j);
};

/// Single cone test; returns (violation, tolerance). b is pinned from the
/// data on dV so the inequality is tight there.
std::pair<double, double> cone_comparison_on(std::span<const double> u, const MetricGraph& graph, const ConeSample& s,
                                             const Tolerances& tol);

CheckReport check_cone_comparison(std::span<const double> u, const MetricGraph& graph, std::size_t samples,
                                  std::uint64_t seed, std::optional<Tolerances> tol = std::nullopt,
                                  std::optional<int> fixed_vertex = std::nullopt);

struct BestExtensionOutcome {
  double lip_subdomain = 0.0;  // lip(u, V u dV)
  double lip_boundary = 0.0;   // lip(u, dV)
  /// max over pairs of |u(x) - u(y)| - L (1 + lip) d(x, y), minus L * lip_length.
  double excess = 0.0;
  int x = -1, y = -1;
};
BestExtensionOutcome best_extension_on(std::span<const double> u, const MetricGraph& graph, const Subdomain& sub,
                                       const Tolerances& tol);

CheckReport check_best_extension(std::span<const double> u, const MetricGraph& graph, std::size_t samples,
                                 std::uint64_t seed, std::optional<Tolerances> tol = std::nullopt);
CheckReport check_best_extension(std::span<const double> u, const MetricGraph& graph,
                                 const std::vector<Subdomain>& subdomains, std::optional<Tolerances> tol = std::nullopt);

/// Centered finite-difference gradient at an interior node.
Vec2 discrete_gradient(std::span<const double> u, const MetricGraph& graph, int x);

CheckReport check_prop31(std::span<const double> u, const FinslerStructure& structure, const MetricGraph& graph,
                         double r, std::optional<double> tol = std::nullopt);

CheckReport check_comparison_principle(std::span<const double> u, std::span<const double> v, const MetricGraph& graph,
                                       double slack = 0.0);

CheckReport check_minimality_vs_competitors(std::span<const double> u, const FinslerStructure& structure,
                                            const MetricGraph& graph, std::size_t competitors, std::uint64_t seed,
                                            std::optional<Tolerances> tol = std::nullopt);

using GraphBuilder = std::function<std::unique_ptr<MetricGraph>(const FinslerStructure&)>;

struct MollificationOptions {
  /// Strictly decreasing, each >= h.
  std::vector<double> epsilons;
  std::vector<std::pair<int, int>> probe_pairs;
  /// Final gap must be <= gap_fraction * diam (diam of the raw graph over probe pairs' endpoints and boundary).
  double gap_fraction = 0.05;
  /// Optional AMLE comparison: boundary values in boundary_nodes() order.
  std::vector<double> boundary_values;
  SolverConfig solver;
  double amle_fraction = 0.05;
};

CheckReport check_mollification_convergence(const FinslerStructure& structure, const GraphBuilder& build,
                                            const MollificationOptions& options);

/// max over boundary pairs of the graph distance.
double intrinsic_diameter(const MetricGraph& graph);

}  // namespace famle
