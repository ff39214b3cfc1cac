#pragma once

#include <vector>

#include "finsler_amle/metric_graph.hpp"

namespace famle {

/// Boundary values g on the domain's boundary nodes, with their intrinsic
/// Lipschitz constant (always computed, never supplied).
struct BoundaryData {
  std::vector<int> nodes;
  std::vector<double> values;
  double lip_const = 0.0;

  double min_value() const;
  double max_value() const;
  double oscillation() const { return max_value() - min_value(); }
};

/// Pairs `values` (one per boundary node, in GridDomain::boundary_nodes()
/// order) with the boundary nodes and computes the Lipschitz constant.
BoundaryData make_boundary_data(const MetricGraph& graph, std::vector<double> values);
/// Samples g from a node-indexed field.
BoundaryData boundary_from_field(const MetricGraph& graph, const ScalarField& field);

/// Cone b + a * d(x0, .).
struct ConeSpec {
  double b = 0.0;
  double a = 1.0;
  int x0 = 0;
};

/// Largest L-Lipschitz extension: min over y of g(y) + L d(x, y).
ScalarField mcshane_upper(const BoundaryData& g, const MetricGraph& graph);
/// Smallest L-Lipschitz extension: max over y of g(y) - L d(x, y).
ScalarField mcshane_lower(const BoundaryData& g, const MetricGraph& graph);
ScalarField cone_field(const ConeSpec& spec, const MetricGraph& graph);

}  // namespace famle
