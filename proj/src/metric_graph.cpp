#include "finsler_amle/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/parallel.hpp"

namespace famle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Upper bound on cached distance values (doubles) before the cache stops growing.
constexpr std::size_t kCacheBudget = std::size_t{1} << 26;

using QueueEntry = std::pair<double, int>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

}  // namespace

MetricGraph::MetricGraph(GridDomain domain, const FinslerStructure& structure, Stencil stencil,
                         Quadrature quadrature)
    : domain_(std::move(domain)),
      stencil_(stencil),
      degree_(static_cast<int>(stencil_offsets(stencil).size())),
      edge_bounds_(structure.dual_bounds()) {
  domain_.validate(stencil_);
  const auto offsets = stencil_offsets(stencil_);
  const int n = domain_.size();
  neighbors_.assign(static_cast<std::size_t>(n) * degree_, -1);
  costs_.assign(static_cast<std::size_t>(n) * degree_, kInf);

  // Numeric duals are memoized per (parameter record, direction): piecewise
  // structures repeat a handful of records over the whole grid.
  const bool memoize = !structure.has_closed_form_dual() && structure.interpolation() == Interpolation::Piecewise;
  std::unordered_map<std::string, double> memo;
  auto dual_at = [&](Vec2 x, Vec2 w, int k) {
    const LocalNorm local = structure.at(x);
    if (!memoize) return local.dual(w);
    const auto rec = local.params();
    std::string key(reinterpret_cast<const char*>(rec.data()), rec.size_bytes());
    key.append(reinterpret_cast<const char*>(&k), sizeof k);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    const double value = local.dual(w);
    memo.emplace(std::move(key), value);
    return value;
  };

  for (int node = 0; node < n; ++node) {
    const int i = domain_.ix(node);
    const int j = domain_.iy(node);
    for (int k = 0; k < degree_; k += 2) {
      const int a = i + offsets[k].di;
      const int b = j + offsets[k].dj;
      if (!domain_.contains(a, b)) continue;
      const int other = domain_.node(a, b);
      const Vec2 x = domain_.position(node);
      const Vec2 y = domain_.position(other);
      const Vec2 step = y - x;
      const Vec2 mid = (x + y) * 0.5;
      double cost = dual_at(mid, step, k);
      if (quadrature == Quadrature::Simpson) {
        cost = (structure.dual_eval(x, step) + 4.0 * cost + structure.dual_eval(y, step)) / 6.0;
      }
      if (!std::isfinite(cost) || cost < 0.0) throw NumericError("non-finite edge cost");
      neighbors_[static_cast<std::size_t>(node) * degree_ + k] = other;
      costs_[static_cast<std::size_t>(node) * degree_ + k] = cost;
      neighbors_[static_cast<std::size_t>(other) * degree_ + (k ^ 1)] = node;
      costs_[static_cast<std::size_t>(other) * degree_ + (k ^ 1)] = cost;
    }
  }

  // Round costs to multiples of a power of two q chosen so that any simple
  // path sums to at most 2^52 q. Path sums are then exact, hence independent
  // of summation order: d(a, b) == d(b, a) bit for bit.
  double largest = 0.0;
  for (double c : costs_) {
    if (std::isfinite(c)) largest = std::max(largest, c);
  }
  if (largest > 0.0) {
    const double q = std::ldexp(1.0, std::ilogb(largest * n) + 1 - 52);
    for (double& c : costs_) {
      if (std::isfinite(c)) c = std::nearbyint(c / q) * q;
    }
  }
}

double metric_anisotropy(const FinslerStructure& structure, Stencil stencil, int max_records) {
  std::vector<Vec2> dirs;
  for (const Offset& o : stencil_offsets(stencil)) dirs.push_back({static_cast<double>(o.di), static_cast<double>(o.dj)});
  std::sort(dirs.begin(), dirs.end(), [](Vec2 a, Vec2 b) { return std::atan2(a.y, a.x) < std::atan2(b.y, b.x); });
  const Lattice& lat = structure.lattice();
  const int total = lat.size();
  const int step = std::max(1, total / std::max(1, max_records));
  double worst = 0.0;
  for (int node = 0; node < total; node += step) {
    const LocalNorm local = structure.at(lat.position(node % lat.nx, node / lat.nx));
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const Vec2 e1 = dirs[k];
      const Vec2 e2 = dirs[(k + 1) % dirs.size()];
      const double c1 = local.dual(e1);
      const double c2 = local.dual(e2);
      // path cost / dual norm is quasi-concave in the mixing weight.
      auto ratio = [&](double t) {
        const Vec2 v = e1 * (1.0 - t) + e2 * t;
        return ((1.0 - t) * c1 + t * c2) / local.dual(v);
      };
      worst = std::max(worst, golden_maximize(ratio, 0.0, 1.0, 40).value);
    }
  }
  return worst - 1.0;
}

DistanceField MetricGraph::shortest_distance(int source) const {
  if (source < 0 || source >= size()) throw InputError("source node outside the grid");
  DistanceField field{source, std::vector<double>(size(), kInf)};
  auto& dist = field.values;
  std::vector<char> done(size(), 0);
  MinQueue queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = 1;
    const std::size_t base = static_cast<std::size_t>(u) * degree_;
    for (int k = 0; k < degree_; ++k) {
      const int v = neighbors_[base + k];
      if (v < 0 || done[v]) continue;
      const double nd = d + costs_[base + k];
      if (nd < dist[v]) {
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  return field;
}

std::shared_ptr<const std::vector<double>> MetricGraph::distances_from(int source) const {
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(source);
    if (it != cache_.end()) return it->second;
  }
  auto values = std::make_shared<const std::vector<double>>(shortest_distance(source).values);
  std::lock_guard lock(cache_mutex_);
  if ((cache_.size() + 1) * static_cast<std::size_t>(size()) <= kCacheBudget) cache_.emplace(source, values);
  return values;
}

double MetricGraph::distance(int a, int b) const {
  if (a < 0 || a >= size() || b < 0 || b >= size()) throw InputError("node outside the grid");
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(a);
    if (it != cache_.end()) return (*it->second)[b];
  }
  std::vector<double> dist(size(), kInf);
  std::vector<char> done(size(), 0);
  MinQueue queue;
  dist[a] = 0.0;
  queue.emplace(0.0, a);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    if (u == b) return d;
    done[u] = 1;
    const std::size_t base = static_cast<std::size_t>(u) * degree_;
    for (int k = 0; k < degree_; ++k) {
      const int v = neighbors_[base + k];
      if (v < 0 || done[v]) continue;
      const double nd = d + costs_[base + k];
      if (nd < dist[v]) {
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  return kInf;
}

std::vector<ReachedNode> MetricGraph::reach(int center, double r) const {
  if (center < 0 || center >= size()) throw InputError("ball centre outside the grid");
  // Per-thread scratch; a generation stamp avoids clearing between calls.
  thread_local std::vector<double> dist;
  thread_local std::vector<unsigned> stamp;
  thread_local unsigned generation = 0;
  if (dist.size() < static_cast<std::size_t>(size())) {
    dist.assign(size(), kInf);
    stamp.assign(size(), 0);
  }
  if (++generation == 0) {
    std::fill(stamp.begin(), stamp.end(), 0);
    generation = 1;
  }
  const unsigned seen = generation;
  const double limit = r * (1.0 + kBallSlack);
  std::vector<ReachedNode> out;
  MinQueue queue;
  dist[center] = 0.0;
  stamp[center] = seen;
  queue.emplace(0.0, center);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    // Entries are pushed only on strict improvement, so a stale entry is
    // exactly one whose distance exceeds the current label.
    if (d > dist[u]) continue;
    out.push_back({u, d});
    const std::size_t base = static_cast<std::size_t>(u) * degree_;
    for (int k = 0; k < degree_; ++k) {
      const int v = neighbors_[base + k];
      if (v < 0) continue;
      const double nd = d + costs_[base + k];
      if (nd > limit) continue;
      if (stamp[v] != seen || nd < dist[v]) {
        stamp[v] = seen;
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  return out;
}

std::vector<int> MetricGraph::metric_ball(int center, double r) const {
  if (!(r >= 0.0)) throw InputError("ball radius must be non-negative");
  std::vector<int> nodes;
  for (const auto& reached : reach(center, r)) nodes.push_back(reached.node);
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

double MetricGraph::metric_derivative(int x, Vec2 v, double t_min) const {
  if (x < 0 || x >= size()) throw InputError("node outside the grid");
  if (!is_finite(v) || norm(v) == 0.0) throw InputError("direction must be finite and nonzero");
  const double h = domain_.h();
  const Vec2 dir = v * (1.0 / norm(v));
  for (const Offset& o : stencil_offsets(stencil_)) {
    const Vec2 step{o.di * h, o.dj * h};
    const double len = norm(step);
    if (norm(step * (1.0 / len) - dir) > 1e-9) continue;
    const int k = std::max(1, static_cast<int>(std::ceil(t_min / len - 1e-12)));
    const int a = domain_.ix(x) + k * o.di;
    const int b = domain_.iy(x) + k * o.dj;
    if (!domain_.contains(a, b)) throw InputError("x + t v leaves the grid");
    return distance(x, domain_.node(a, b)) / (k * len);
  }
  throw InputError("direction is not a stencil direction");
}

std::vector<double> MetricGraph::distances_to(int source, std::span<const int> targets) const {
  if (source < 0 || source >= size()) throw InputError("source node outside the grid");
  std::vector<double> out(targets.size(), kInf);
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(source);
    if (it != cache_.end()) {
      for (std::size_t k = 0; k < targets.size(); ++k) out[k] = (*it->second)[targets[k]];
      return out;
    }
  }
  thread_local std::vector<double> dist;
  thread_local std::vector<unsigned> stamp;
  thread_local std::vector<unsigned> wanted;
  thread_local unsigned generation = 0;
  if (dist.size() < static_cast<std::size_t>(size())) {
    dist.assign(size(), kInf);
    stamp.assign(size(), 0);
    wanted.assign(size(), 0);
  }
  if (++generation == 0) {
    std::fill(stamp.begin(), stamp.end(), 0);
    std::fill(wanted.begin(), wanted.end(), 0);
    generation = 1;
  }
  const unsigned seen = generation;
  std::size_t remaining = 0;
  for (int t : targets) {
    if (t < 0 || t >= size()) throw InputError("target node outside the grid");
    if (wanted[t] != seen) {
      wanted[t] = seen;
      ++remaining;
    }
  }
  MinQueue queue;
  dist[source] = 0.0;
  stamp[source] = seen;
  queue.emplace(0.0, source);
  while (!queue.empty() && remaining > 0) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (wanted[u] == seen) {
      wanted[u] = 0;
      --remaining;
    }
    const std::size_t base = static_cast<std::size_t>(u) * degree_;
    for (int k = 0; k < degree_; ++k) {
      const int v = neighbors_[base + k];
      if (v < 0) continue;
      const double nd = d + costs_[base + k];
      if (stamp[v] != seen || nd < dist[v]) {
        stamp[v] = seen;
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (stamp[targets[k]] == seen) out[k] = dist[targets[k]];
  }
  return out;
}

double MetricGraph::pointwise_lip(std::span<const double> u, int x, double r) const {
  if (u.size() != static_cast<std::size_t>(size())) throw InputError("field size does not match the graph");
  double best = 0.0;
  bool any = false;
  for (const auto& [z, d] : reach(x, r)) {
    if (z == x || d <= 0.0) continue;
    any = true;
    best = std::max(best, std::abs(u[z] - u[x]) / d);
  }
  if (!any) throw DegenerateInputError("punctured metric ball is empty; increase r");
  return best;
}

double MetricGraph::lip_constant(std::span<const double> u, std::span<const int> nodes) const {
  if (u.size() != static_cast<std::size_t>(size())) throw InputError("field size does not match the graph");
  if (nodes.size() < 2) throw DegenerateInputError("Lipschitz constant needs at least two nodes");
  std::vector<double> per_source(nodes.size(), 0.0);
  parallel_for(nodes.size() - 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const auto dist = distances_to(nodes[a], nodes.subspan(a + 1));
      double best = 0.0;
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        const double d = dist[b - a - 1];
        if (d > 0.0) best = std::max(best, std::abs(u[nodes[a]] - u[nodes[b]]) / d);
      }
      per_source[a] = best;
    }
  });
  return *std::max_element(per_source.begin(), per_source.end());
}

std::vector<double> MetricGraph::all_pairs(int limit) const {
  if (size() > limit) {
    throw DegenerateInputError("all-pairs storage refused: " + std::to_string(size()) + " nodes exceed the limit of " +
                               std::to_string(limit));
  }
  std::vector<double> out(static_cast<std::size_t>(size()) * size());
  parallel_for(static_cast<std::size_t>(size()), [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto field = shortest_distance(static_cast<int>(s));
      std::copy(field.values.begin(), field.values.end(), out.begin() + s * size());
    }
  });
  return out;
}

void MetricGraph::clear_cache() const {
  std::lock_guard lock(cache_mutex_);
  cache_.clear();
}

std::size_t MetricGraph::cached_sources() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

}  // namespace famle
