#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/finsler.hpp"
#include "oracles.hpp"

using namespace famle;

namespace {

const Lattice kLattice{9, 9, 0.25, {-1.0, -1.0}};

std::vector<FinslerStructure> zoo(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.5, 2.5), off(-0.6, 0.6), turn(0.0, std::numbers::pi);
  const int n = kLattice.size();
  std::vector<double> s(n);
  for (auto& v : s) v = scale(rng);
  std::vector<Sym2> m;
  for (int k = 0; k < n; ++k) {
    const double a = scale(rng), c = scale(rng);
    m.push_back({a, off(rng) * std::sqrt(a * c), c});
  }
  std::vector<FinslerStructure> out;
  out.push_back(FinslerStructure::euclidean_scaled(kLattice, s));
  out.push_back(FinslerStructure::riemannian(kLattice, m));
  out.push_back(FinslerStructure::p_norm(kLattice, 1.0, s));
  out.push_back(FinslerStructure::p_norm(kLattice, 3.0, s));
  out.push_back(FinslerStructure::p_norm(kLattice, std::numeric_limits<double>::infinity(), s));
  std::vector<int> labels(n);
  for (int k = 0; k < n; ++k) labels[k] = k % 2;
  out.push_back(
      FinslerStructure::piecewise_norm(kLattice, {{1.5, 1.0, 2.0, 0.4}, {std::numeric_limits<double>::infinity(), 1.0, 1.0, 0.0}}, labels));
  std::vector<double> table;
  for (int k = 0; k < n; ++k) {
    const double a = scale(rng), b = scale(rng), th = turn(rng);
    for (int d = 0; d < 8; ++d) {
      const double t = d * std::numbers::pi / 8 - th;
      table.push_back(std::hypot(a * std::cos(t), b * std::sin(t)));
    }
  }
  out.push_back(FinslerStructure::custom_table(kLattice, 8, table));
  return out;
}

Vec2 random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng)};
}

Vec2 random_vector(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t(0.0, 2.0 * std::numbers::pi), r(0.05, 20.0);
  const double a = t(rng), m = r(rng);
  return {m * std::cos(a), m * std::sin(a)};
}

}  // namespace

TEST_SUITE("finsler_core") {
  TEST_CASE("family names parse and print back") {
    for (Family f : {Family::EuclideanScaled, Family::Riemannian, Family::PNorm, Family::PiecewiseConstantNorm,
                     Family::CustomTable}) {
      CHECK(parse_family(family_name(f)) == f);
    }
    CHECK_THROWS_AS(parse_family("ellipse"), InputError);
  }

  TEST_CASE("closed forms of the simple families") {
    const auto e = FinslerStructure::euclidean_scaled(kLattice, std::vector<double>(kLattice.size(), 2.0));
    CHECK(e.eval({0.1, 0.2}, {3.0, 4.0}) == doctest::Approx(10.0));
    CHECK(e.dual_eval({0.1, 0.2}, {3.0, 4.0}) == doctest::Approx(2.5));

    const auto r = FinslerStructure::riemannian(kLattice, std::vector<Sym2>(kLattice.size(), Sym2{4.0, 0.0, 1.0}));
    CHECK(r.eval({0, 0}, {1.0, 0.0}) == doctest::Approx(2.0));
    CHECK(r.dual_eval({0, 0}, {1.0, 0.0}) == doctest::Approx(0.5));
    CHECK(r.dual_eval({0, 0}, {0.0, 1.0}) == doctest::Approx(1.0));

    CHECK(lp_norm({3.0, -4.0}, 1.0) == doctest::Approx(7.0));
    CHECK(lp_norm({3.0, -4.0}, std::numeric_limits<double>::infinity()) == doctest::Approx(4.0));
    CHECK(conjugate_exponent(2.0) == doctest::Approx(2.0));
    CHECK(conjugate_exponent(1.0) == std::numeric_limits<double>::infinity());
    CHECK(conjugate_exponent(3.0) == doctest::Approx(1.5));
  }

  TEST_CASE("dual agrees with brute-force angular maximization") {
    std::mt19937_64 rng(7);
    for (const auto& F : zoo(1)) {
      for (int s = 0; s < 40; ++s) {
        const Vec2 x = random_point(rng);
        const Vec2 w = random_vector(rng);
        const double expect = oracle::dual(F, x, w);
        CAPTURE(family_name(F.family()));
        CHECK(std::abs(F.dual_eval(x, w) - expect) <= 1e-6 * expect);
      }
    }
  }

  TEST_CASE("double dual reproduces F") {
    std::mt19937_64 rng(8);
    for (const auto& F : zoo(2)) {
      for (int s = 0; s < 60; ++s) {
        const Vec2 x = random_point(rng);
        const Vec2 v = random_vector(rng);
        const double f = F.eval(x, v);
        CHECK(std::abs(F.double_dual_eval(x, v) - f) <= 1e-4 * f);
      }
    }
  }

  TEST_CASE("norm axioms hold for F and F*") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> lam(-5.0, 5.0);
    for (const auto& F : zoo(3)) {
      for (int s = 0; s < 50; ++s) {
        const Vec2 x = random_point(rng);
        const Vec2 v = random_vector(rng), w = random_vector(rng);
        const double l = lam(rng);
        CHECK(F.eval(x, v * l) == doctest::Approx(std::abs(l) * F.eval(x, v)).epsilon(1e-12));
        CHECK(F.eval(x, v + w) <= F.eval(x, v) + F.eval(x, w) + 1e-12);
        CHECK(F.dual_eval(x, v + w) <= F.dual_eval(x, v) + F.dual_eval(x, w) + 1e-9);
        CHECK(F.eval(x, {0.0, 0.0}) == 0.0);
      }
    }
  }

  TEST_CASE("ellipticity bounds hold for F and swap for F*") {
    std::mt19937_64 rng(10);
    for (const auto& F : zoo(4)) {
      const auto b = F.bounds();
      const auto d = F.dual_bounds();
      CHECK(d.alpha == doctest::Approx(1.0 / b.beta));
      CHECK(d.beta == doctest::Approx(1.0 / b.alpha));
      for (int s = 0; s < 50; ++s) {
        const Vec2 x = random_point(rng);
        const Vec2 v = random_vector(rng);
        const double n = norm(v);
        CHECK(F.eval(x, v) >= b.alpha * n * (1 - 1e-12));
        CHECK(F.eval(x, v) <= b.beta * n * (1 + 1e-12));
        CHECK(F.dual_eval(x, v) >= d.alpha * n * (1 - 1e-9));
        CHECK(F.dual_eval(x, v) <= d.beta * n * (1 + 1e-9));
      }
    }
  }

  TEST_CASE("Cauchy-Schwarz for the pair (F, F*)") {
    std::mt19937_64 rng(11);
    for (const auto& F : zoo(5)) {
      for (int s = 0; s < 50; ++s) {
        const Vec2 x = random_point(rng);
        const Vec2 v = random_vector(rng), w = random_vector(rng);
        CHECK(dot(v, w) <= F.eval(x, v) * F.dual_eval(x, w) * (1 + 1e-9));
      }
    }
  }

  TEST_CASE("mollify keeps bounds and smooths a jump") {
    std::vector<double> s(kLattice.size());
    for (int k = 0; k < kLattice.size(); ++k) s[k] = kLattice.position(k % kLattice.nx, k / kLattice.nx).x < 0 ? 1.0 : 3.0;
    const auto F = FinslerStructure::euclidean_scaled(kLattice, s);
    const auto M = F.mollify(2 * kLattice.h);
    CHECK(M.interpolation() == Interpolation::Bilinear);
    CHECK(M.bounds().alpha >= F.bounds().alpha - 1e-12);
    CHECK(M.bounds().beta <= F.bounds().beta + 1e-12);
    const double left = M.eval({-0.01, 0.0}, {1, 0});
    const double right = M.eval({0.01, 0.0}, {1, 0});
    CHECK(std::abs(left - right) < 0.2);
    CHECK(M.eval({-0.9, 0.0}, {1, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(F.mollify(0.5 * kLattice.h), DegenerateInputError);
  }

  TEST_CASE("constant structure is recognized and unchanged by mollify") {
    const auto F = FinslerStructure::p_norm(kLattice, 3.0, std::vector<double>(kLattice.size(), 1.5));
    CHECK(F.is_constant());
    const auto M = F.mollify(3 * kLattice.h);
    for (Vec2 v : {Vec2{1, 0}, Vec2{0.3, -0.7}}) CHECK(M.eval({0.2, 0.1}, v) == doctest::Approx(F.eval({0.2, 0.1}, v)));
  }

  TEST_CASE("input validation") {
    const int n = kLattice.size();
    CHECK_THROWS_AS(FinslerStructure::euclidean_scaled(kLattice, std::vector<double>(n, -1.0)), InputError);
    CHECK_THROWS_AS(FinslerStructure::euclidean_scaled(kLattice, std::vector<double>(n - 1, 1.0)), InputError);
    CHECK_THROWS_AS(FinslerStructure::riemannian(kLattice, std::vector<Sym2>(n, Sym2{1.0, 2.0, 1.0})), InputError);
    CHECK_THROWS_AS(FinslerStructure::p_norm(kLattice, 0.5, std::vector<double>(n, 1.0)), InputError);
    // A star-shaped but non-convex table.
    std::vector<double> bad;
    for (int k = 0; k < n; ++k) bad.insert(bad.end(), {1.0, 3.0, 1.0, 3.0});
    CHECK_THROWS_AS(FinslerStructure::custom_table(kLattice, 4, bad), InputError);
    const auto F = FinslerStructure::euclidean_scaled(kLattice, std::vector<double>(n, 1.0));
    CHECK_THROWS_AS(F.eval({5.0, 0.0}, {1, 0}), DomainError);
    CHECK_THROWS_AS(F.eval({std::nan(""), 0.0}, {1, 0}), InputError);
  }
}
