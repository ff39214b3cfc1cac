#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/metric_graph.hpp"
#include "oracles.hpp"

using namespace famle;

namespace {

GridDomain square(int n, int width = 1) { return GridDomain::rectangle(n, n, 2.0 / (n - 1), {-1.0, -1.0}, 0, width); }

FinslerStructure euclid(const GridDomain& d, double s = 1.0) {
  return FinslerStructure::euclidean_scaled(d.lattice(), std::vector<double>(d.size(), s));
}

FinslerStructure two_media(const GridDomain& d) {
  std::vector<double> s(d.size());
  for (int k = 0; k < d.size(); ++k) s[k] = d.position(k).x < 0 ? 1.0 : 3.0;
  return FinslerStructure::euclidean_scaled(d.lattice(), s);
}

FinslerStructure riemann(const GridDomain& d) {
  return FinslerStructure::riemannian(d.lattice(), std::vector<Sym2>(d.size(), Sym2{4.0, 0.0, 1.0}));
}

}  // namespace

TEST_SUITE("metric_graph") {
  TEST_CASE("stencil tables") {
    CHECK(stencil_offsets(Stencil::Eight).size() == 8);
    CHECK(stencil_offsets(Stencil::Sixteen).size() == 16);
    CHECK(stencil_anisotropy(Stencil::Eight) == doctest::Approx(1.0 / std::cos(std::numbers::pi / 8)));
    CHECK(stencil_anisotropy(Stencil::Eight) - 1.0 <= 0.09);
    CHECK(stencil_anisotropy(Stencil::Sixteen) - 1.0 <= 0.03);
  }

  TEST_CASE("domain masks and validation") {
    const auto d = square(7);
    CHECK(d.interior_nodes().size() == 25);
    CHECK(d.boundary_nodes().size() == 24);
    CHECK(d.closure_nodes().size() == 49);
    for (int x : d.interior_nodes()) CHECK_FALSE(d.is_boundary(x));
    CHECK_NOTHROW(d.validate(Stencil::Eight));
    // With an ambient margin, a one-node boundary layer lets 16-stencil edges skip over it.
    const auto padded = GridDomain::rectangle(11, 11, 0.2, {-1.0, -1.0}, 2, 1);
    CHECK_NOTHROW(padded.validate(Stencil::Eight));
    CHECK_THROWS_AS(padded.validate(Stencil::Sixteen), ConstructionError);
    CHECK_NOTHROW(GridDomain::rectangle(11, 11, 0.2, {-1.0, -1.0}, 2, 2).validate(Stencil::Sixteen));
    const auto disk = GridDomain::disk(21, 21, 0.1, {-1, -1}, {0, 0}, 0.75);
    CHECK_NOTHROW(disk.validate(Stencil::Eight));
    for (int x : disk.interior_nodes()) CHECK(norm(disk.position(x)) < 0.75);
  }

  TEST_CASE("shortest paths equal path enumeration exactly") {
    for (Stencil st : {Stencil::Eight, Stencil::Sixteen}) {
      const auto d = square(5, st == Stencil::Sixteen ? 2 : 1);
      for (const auto& F : {euclid(d, 1.3), two_media(d), riemann(d)}) {
        const MetricGraph g(d, F, st);
        for (int s = 0; s < g.size(); ++s) {
          const auto fast = g.shortest_distance(s).values;
          CHECK(fast == oracle::enumerate_distances(g, s));
          CHECK(fast == oracle::relax_distances(g, s));
        }
      }
    }
  }

  TEST_CASE("two-media 9x9 distances match the oracle") {
    const auto d = square(10);
    const MetricGraph g(d, two_media(d), Stencil::Eight);
    for (int s : {0, 44, 99}) CHECK(g.shortest_distance(s).values == oracle::enumerate_distances(g, s));
  }

  TEST_CASE("edge costs are symmetric and within the dual bounds") {
    const auto d = square(12, 2);
    for (const auto& F : {euclid(d, 2.0), two_media(d), riemann(d)}) {
      const MetricGraph g(d, F, Stencil::Sixteen);
      const auto b = g.edge_bounds();
      const auto offsets = stencil_offsets(Stencil::Sixteen);
      for (int x = 0; x < g.size(); ++x) {
        for (int k = 0; k < g.degree(); ++k) {
          const int y = g.neighbor(x, k);
          if (y < 0) continue;
          const double len = std::hypot(offsets[k].di, offsets[k].dj) * d.h();
          CHECK(g.edge_cost(y, k ^ 1) == g.edge_cost(x, k));
          CHECK(g.edge_cost(x, k) >= b.alpha * len * (1 - 1e-9));
          CHECK(g.edge_cost(x, k) <= b.beta * len * (1 + 1e-9));
        }
      }
    }
  }

  TEST_CASE("distances are symmetric and satisfy the triangle inequality") {
    const auto d = square(24);
    const MetricGraph g(d, two_media(d), Stencil::Eight);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, g.size() - 1);
    for (int t = 0; t < 200; ++t) {
      const int a = pick(rng), b = pick(rng), c = pick(rng);
      CHECK(g.distance(a, b) == g.distance(b, a));
      CHECK(g.distance(a, c) <= g.distance(a, b) + g.distance(b, c));
    }
    CHECK(g.distance(5, 5) == 0.0);
  }

  TEST_CASE("Euclidean axis distances are exact and diagonals are exact on the 8-stencil") {
    const auto d = square(9);
    const MetricGraph g(d, euclid(d), Stencil::Eight);
    const double h = d.h();
    CHECK(g.distance(d.node(0, 0), d.node(8, 0)) == doctest::Approx(8 * h).epsilon(1e-12));
    CHECK(g.distance(d.node(0, 0), d.node(8, 8)) == doctest::Approx(8 * std::sqrt(2.0) * h).epsilon(1e-12));
    // Off-grid directions overestimate by at most the stencil anisotropy.
    const double true_len = std::hypot(8.0, 3.0) * h;
    const double dist = g.distance(d.node(0, 0), d.node(8, 3));
    CHECK(dist >= true_len);
    CHECK(dist <= true_len * stencil_anisotropy(Stencil::Eight));
  }

  TEST_CASE("riemannian axis distances match the closed-form dual") {
    const auto d = square(11);
    const MetricGraph g(d, riemann(d), Stencil::Eight);
    const double h = d.h();
    // F*(w) = <A^{-1} w, w>^(1/2) with A = diag(4, 1).
    CHECK(g.distance(d.node(0, 5), d.node(10, 5)) == doctest::Approx(10 * h * 0.5).epsilon(1e-12));
    CHECK(g.distance(d.node(5, 0), d.node(5, 10)) == doctest::Approx(10 * h * 1.0).epsilon(1e-12));
    // Balls are elongated along x1, where travel is cheaper.
    const auto ball = g.metric_ball(d.node(5, 5), 3 * h);
    int wx = 0, wy = 0;
    for (int z : ball) {
      wx = std::max(wx, std::abs(d.ix(z) - 5));
      wy = std::max(wy, std::abs(d.iy(z) - 5));
    }
    CHECK(wx > wy);
  }

  TEST_CASE("metric anisotropy of the Euclidean norm equals the stencil constant") {
    const auto d = square(9, 2);
    CHECK(metric_anisotropy(euclid(d), Stencil::Eight) ==
          doctest::Approx(stencil_anisotropy(Stencil::Eight) - 1.0).epsilon(1e-6));
    CHECK(metric_anisotropy(euclid(d), Stencil::Sixteen) ==
          doctest::Approx(stencil_anisotropy(Stencil::Sixteen) - 1.0).epsilon(1e-6));
    CHECK(metric_anisotropy(riemann(d), Stencil::Eight) > metric_anisotropy(euclid(d), Stencil::Eight));
  }

  TEST_CASE("balls keep lattice ties at the radius") {
    // h = 2/63 is not dyadic, so rounded costs may put d(x, x + 2h e1) a few ulps above 2h.
    const auto d = GridDomain::rectangle(64, 64, 2.0 / 63, {-1.0, -1.0});
    const MetricGraph g(d, euclid(d), Stencil::Eight);
    const int c = d.node(30, 30);
    const auto ball = g.metric_ball(c, 2 * d.h());
    CHECK(ball.size() == 13);
    for (int z : {d.node(32, 30), d.node(28, 30), d.node(30, 32), d.node(30, 28)}) {
      CHECK(std::binary_search(ball.begin(), ball.end(), z));
    }
  }

  TEST_CASE("balls, reach and cache") {
    const auto d = square(15);
    const MetricGraph g(d, two_media(d), Stencil::Eight);
    const int c = d.node(7, 7);
    const double r = 3 * d.h();
    const auto ball = g.metric_ball(c, r);
    CHECK(std::is_sorted(ball.begin(), ball.end()));
    CHECK(std::find(ball.begin(), ball.end(), c) != ball.end());
    const auto full = *g.distances_from(c);
    for (int z = 0; z < g.size(); ++z) {
      const bool inside = std::binary_search(ball.begin(), ball.end(), z);
      CHECK(inside == (full[z] <= r * (1 + MetricGraph::kBallSlack)));
    }
    const auto reached = g.reach(c, r);
    CHECK(reached.front().node == c);
    for (std::size_t k = 1; k < reached.size(); ++k) CHECK(reached[k - 1].distance <= reached[k].distance);
    CHECK(g.cached_sources() >= 1);
    const std::vector<int> targets{0, 20, 100};
    const auto some = g.distances_to(d.node(1, 1), targets);
    for (std::size_t k = 0; k < targets.size(); ++k) CHECK(some[k] == g.distance(d.node(1, 1), targets[k]));
    g.clear_cache();
    CHECK(g.cached_sources() == 0);
  }

  TEST_CASE("metric derivative is bounded by the dual norm") {
    const auto d = square(16, 2);
    for (Stencil st : {Stencil::Eight, Stencil::Sixteen}) {
      for (const auto& F : {euclid(d, 1.7), riemann(d)}) {
        const MetricGraph g(d, F, st);
        const double kappa = stencil_anisotropy(st) - 1.0;
        for (const Offset& o : stencil_offsets(st)) {
          const double len = std::hypot(o.di, o.dj);
          const Vec2 v{o.di / len, o.dj / len};
          const int x = d.node(7, 7);
          const double md = g.metric_derivative(x, v, d.h());
          CHECK(md <= F.dual_eval(d.position(x), v) * (1 + kappa) + 1e-12);
        }
      }
    }
    const MetricGraph g(d, euclid(d), Stencil::Eight);
    CHECK_THROWS_AS(g.metric_derivative(0, {0.6, 0.8}, d.h()), InputError);
    CHECK_THROWS_AS(g.metric_derivative(0, {-1.0, 0.0}, d.h()), InputError);
  }

  TEST_CASE("Lipschitz queries agree with brute force") {
    const auto d = square(8);
    const MetricGraph g(d, two_media(d), Stencil::Eight);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(g.size());
    for (auto& v : f) v = u(rng);
    const std::vector<int> nodes{0, 3, 9, 18, 27, 40, 63};
    CHECK(g.lip_constant(f, nodes) == doctest::Approx(oracle::lip_constant(g, f, nodes)).epsilon(1e-12));
    // pointwise_lip with a radius covering everything equals the max over partners.
    const int x = 27;
    double expect = 0.0;
    const auto row = oracle::relax_distances(g, x);
    for (int z = 0; z < g.size(); ++z) {
      if (z != x) expect = std::max(expect, std::abs(f[z] - f[x]) / row[z]);
    }
    CHECK(g.pointwise_lip(f, x, 100.0) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("all_pairs refuses large graphs") {
    const auto d = square(6);
    const MetricGraph g(d, euclid(d), Stencil::Eight);
    const auto m = g.all_pairs();
    CHECK(m.size() == 36u * 36u);
    CHECK(m[5 * 36 + 7] == m[7 * 36 + 5]);
    CHECK_THROWS_AS(g.all_pairs(10), DegenerateInputError);
  }
}
