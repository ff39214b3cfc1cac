#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "finsler_amle/finsler.hpp"
#include "finsler_amle/grid.hpp"

namespace famle {

/// Node-indexed real values (u, Psi, Phi, cones, ...). Indexed like GridDomain.
using ScalarField = std::vector<double>;

/// Edge quadrature of the dual along a stencil segment.
enum class Quadrature { Midpoint, Simpson };

/// Single-source shortest-path distances (the intrinsic-distance proxy).
struct DistanceField {
  int source = -1;
  std::vector<double> values;
};

/// Node reached by a truncated search, with its distance from the centre.
struct ReachedNode {
  int node;
  double distance;
};

/// Worst ratio (minus one) of the cheapest two-generator stencil path to
/// the dual norm, over directions between angularly adjacent stencil
/// vectors and over (at most `max_records`, evenly strided) lattice nodes.
/// For the Euclidean norm this is stencil_anisotropy(stencil) - 1.
double metric_anisotropy(const FinslerStructure& structure, Stencil stencil, int max_records = 64);

/// Stencil graph over every node of a GridDomain whose edge (x -> y) costs
/// the dual structure integrated along the segment [x, y], rounded to a
/// dyadic grid fine enough that every path sum is exact. Immutable after
/// construction apart from the internal per-source distance cache, which is
/// safe under concurrent use.
class MetricGraph {
 public:
  /// Default cap for all_pairs(): dense storage is refused above this many nodes.
  static constexpr int kAllPairsNodeLimit = 10000;
  /// Relative slack on ball radii. Cost rounding moves exact ties such as
  /// d = 2h at r = 2h by a few ulps; they stay inside the ball.
  static constexpr double kBallSlack = 1e-9;

  MetricGraph(GridDomain domain, const FinslerStructure& structure, Stencil stencil = Stencil::Eight,
              Quadrature quadrature = Quadrature::Midpoint);

  const GridDomain& domain() const { return domain_; }
  Stencil stencil() const { return stencil_; }
  int size() const { return domain_.size(); }
  int degree() const { return degree_; }
  /// Neighbour of `node` along stencil offset k, or -1 off the grid.
  int neighbor(int node, int k) const { return neighbors_[static_cast<std::size_t>(node) * degree_ + k]; }
  double edge_cost(int node, int k) const { return costs_[static_cast<std::size_t>(node) * degree_ + k]; }
  /// Ellipticity of the edge costs per unit length: constants of the dual.
  const EllipticityBounds& edge_bounds() const { return edge_bounds_; }

  /// Exact single-source shortest paths. Ties are settled in ascending
  /// node index, so the result is bitwise reproducible.
  DistanceField shortest_distance(int source) const;
  /// Cached variant of shortest_distance(source).values.
  std::shared_ptr<const std::vector<double>> distances_from(int source) const;
  /// Shortest distance between two nodes (search stops at the target).
  double distance(int a, int b) const;
  /// Every node within distance r (1 + kBallSlack) of `center`, in settle
  /// order (center first).
  std::vector<ReachedNode> reach(int center, double r) const;
  /// Node set { z : d(center, z) <= r (1 + kBallSlack) }, sorted by node index.
  std::vector<int> metric_ball(int center, double r) const;
  /// d(x, x + t v) / t at the smallest representable t >= t_min, for v a
  /// (unit) stencil direction. Throws InputError for other directions or
  /// when x + t v leaves the grid.
  double metric_derivative(int x, Vec2 v, double t_min) const;
  /// max over z != x in the ball of radius r of |u(z) - u(x)| / d(x, z).
  double pointwise_lip(std::span<const double> u, int x, double r) const;
  /// max over unordered pairs of |u(a) - u(b)| / d(a, b).
  double lip_constant(std::span<const double> u, std::span<const int> nodes) const;
  /// Distances from `source` to each of `targets`; the search stops once all
  /// targets are settled. Uses the cache when the source is cached.
  std::vector<double> distances_to(int source, std::span<const int> targets) const;
  /// Dense distance matrix (row-major). Throws DegenerateInputError above `limit` nodes.
  std::vector<double> all_pairs(int limit = kAllPairsNodeLimit) const;

  void clear_cache() const;
  std::size_t cached_sources() const;

 private:
  GridDomain domain_;
  Stencil stencil_;
  int degree_;
  std::vector<int> neighbors_;
  std::vector<double> costs_;
  EllipticityBounds edge_bounds_;
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<int, std::shared_ptr<const std::vector<double>>> cache_;
};

}  // namespace famle
