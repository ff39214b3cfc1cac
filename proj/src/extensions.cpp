#include "finsler_amle/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/parallel.hpp"

namespace famle {

double BoundaryData::min_value() const { return *std::min_element(values.begin(), values.end()); }
double BoundaryData::max_value() const { return *std::max_element(values.begin(), values.end()); }

BoundaryData make_boundary_data(const MetricGraph& graph, std::vector<double> values) {
  const auto& nodes = graph.domain().boundary_nodes();
  if (values.size() != nodes.size()) {
    throw InputError("expected " + std::to_string(nodes.size()) + " boundary values, got " +
                     std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("boundary data must be finite");
  }
  BoundaryData g{nodes, std::move(values), 0.0};
  if (g.nodes.size() >= 2) {
    ScalarField full(graph.size(), 0.0);
    for (std::size_t k = 0; k < g.nodes.size(); ++k) full[g.nodes[k]] = g.values[k];
    g.lip_const = graph.lip_constant(full, g.nodes);
  }
  return g;
}

BoundaryData boundary_from_field(const MetricGraph& graph, const ScalarField& field) {
  if (field.size() != static_cast<std::size_t>(graph.size())) throw InputError("field size does not match the graph");
  std::vector<double> values;
  for (int n : graph.domain().boundary_nodes()) values.push_back(field[n]);
  return make_boundary_data(graph, std::move(values));
}

namespace {

template <class Combine>
ScalarField mcshane(const BoundaryData& g, const MetricGraph& graph, double sign, Combine better) {
  if (g.nodes.empty()) throw InputError("McShane extension needs a nonempty boundary");
  const double lip = g.lip_const;
  const int n = graph.size();
  ScalarField out(n, sign > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const auto dist = graph.distances_from(g.nodes[k]);
    const double gy = g.values[k];
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
      for (std::size_t x = begin; x < end; ++x) {
        const double candidate = gy + sign * lip * (*dist)[x];
        if (better(candidate, out[x])) out[x] = candidate;
      }
    });
  }
  for (std::size_t k = 0; k < g.nodes.size(); ++k) out[g.nodes[k]] = g.values[k];
  return out;
}

}  // namespace

ScalarField mcshane_upper(const BoundaryData& g, const MetricGraph& graph) {
  return mcshane(g, graph, 1.0, [](double a, double b) { return a < b; });
}

ScalarField mcshane_lower(const BoundaryData& g, const MetricGraph& graph) {
  return mcshane(g, graph, -1.0, [](double a, double b) { return a > b; });
}

ScalarField cone_field(const ConeSpec& spec, const MetricGraph& graph) {
  if (spec.x0 < 0 || spec.x0 >= graph.size()) throw InputError("cone vertex outside the grid");
  const auto dist = graph.distances_from(spec.x0);
  ScalarField out(graph.size());
  for (int x = 0; x < graph.size(); ++x) out[x] = spec.b + spec.a * (*dist)[x];
  return out;
}

}  // namespace famle
