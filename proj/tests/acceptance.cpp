// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "finsler_amle/app.hpp"
#include "finsler_amle/verifier.hpp"
#include "oracles.hpp"

#ifndef FINSLER_AMLE_CLI_PATH
#define FINSLER_AMLE_CLI_PATH ""
#endif

using namespace famle;

namespace {

struct Outcome {
  bool passed = false;
  std::string summary;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string format(const char* fmt, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::vector<double> random_records(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = u(rng);
  return out;
}

// 1. F** = F on 1000 samples over every family.
Outcome duality_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const Lattice lat{8, 8, 2.0 / 7.0, {-1.0, -1.0}};
  const int n = lat.size();
  std::vector<FinslerStructure> families;
  families.push_back(FinslerStructure::euclidean_scaled(lat, random_records(rng, n, 0.5, 3.0)));
  {
    std::vector<Sym2> m;
    std::uniform_real_distribution<double> u(0.3, 3.0), off(-0.5, 0.5);
    for (int k = 0; k < n; ++k) {
      const double a = u(rng), c = u(rng);
      m.push_back({a, off(rng) * std::sqrt(a * c), c});
    }
    families.push_back(FinslerStructure::riemannian(lat, m));
  }
  for (double p : {1.0, 1.5, 3.0, std::numeric_limits<double>::infinity()}) {
    families.push_back(FinslerStructure::p_norm(lat, p, random_records(rng, n, 0.5, 2.0)));
  }
  {
    std::vector<NormSpec> palette{{1.0, 1.0, 2.0, 0.3}, {4.0, 1.5, 0.7, -0.8}, {2.0, 1.0, 1.0, 0.0}};
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> pick(0, 2);
    for (auto& l : labels) l = pick(rng);
    families.push_back(FinslerStructure::piecewise_norm(lat, palette, labels));
  }
  {
    // Tables sampled from random ellipses: vertices on a convex curve keep the gauge convex.
    const int K = 6;
    std::uniform_real_distribution<double> axis(0.5, 2.0), turn(0.0, std::numbers::pi);
    std::vector<double> table;
    for (int k = 0; k < n; ++k) {
      const double a = axis(rng), b = axis(rng), th = turn(rng);
      for (int d = 0; d < K; ++d) {
        const double t = d * std::numbers::pi / K - th;
        table.push_back(std::hypot(a * std::cos(t), b * std::sin(t)));
      }
    }
    families.push_back(FinslerStructure::custom_table(lat, K, table));
  }
  std::uniform_real_distribution<double> pos(-1.0, 0.99), ang(0.0, 2.0 * std::numbers::pi), mag(0.1, 10.0);
  double worst = 0.0;
  const int samples = 1000;
  for (int s = 0; s < samples; ++s) {
    const auto& F = families[s % families.size()];
    const Vec2 x{pos(rng), pos(rng)};
    const double t = ang(rng), r = mag(rng);
    const Vec2 v{r * std::cos(t), r * std::sin(t)};
    const double f = F.eval(x, v);
    worst = std::max(worst, std::abs(F.double_dual_eval(x, v) - f) / f);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 5.0,
          format("max |F** - F| / F = %.3g (tol 1e-4) over %d samples, %zu structures; %.2f s (limit 5 s)", worst,
                 samples, families.size(), secs)};
}

ProblemConfig small(const std::string& name, int nodes, int stencil) {
  ProblemConfig c = preset(name);
  c.domain.nx = c.domain.ny = nodes;
  c.domain.margin = 0;
  c.domain.h = 2.0 / (nodes - 1);
  c.domain.origin = {-1.0, -1.0};
  c.domain.shape = "rectangle";
  c.domain.stencil = stencil;
  c.domain.boundary_width = stencil == 16 ? 2 : 1;
  return c;
}

// 2. Search equals exhaustive enumeration, bit for bit.
Outcome metric_oracle() {
  const auto t0 = Clock::now();
  int grids = 0;
  long mismatches = 0;
  for (const char* name : {"aronsson", "two-media", "riemannian-cone"}) {
    for (int stencil : {8, 16}) {
      const ProblemConfig c = small(name, 5, stencil);
      const GridDomain domain = build_domain(c);
      const FinslerStructure F = build_structure(c);
      const MetricGraph g(domain, F, c.stencil());
      for (int s = 0; s < g.size(); ++s) {
        const auto fast = g.shortest_distance(s).values;
        const auto slow = oracle::enumerate_distances(g, s);
        for (int z = 0; z < g.size(); ++z) mismatches += fast[z] != slow[z];
      }
      ++grids;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          format("%ld mismatching entries over %d grids (3 presets x 2 stencils, every source); %.2f s (limit 10 s)",
                 mismatches, grids, secs)};
}

// 3. Symmetry and triangle inequality on 64 x 64 two-media.
Outcome metric_axioms() {
  const auto t0 = Clock::now();
  const ProblemConfig c = preset("two-media");
  const Problem p = build_problem(c);
  const MetricGraph& g = *p.graph;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> node(0, g.size() - 1);
  const int pool_size = 150;
  std::vector<int> pool(pool_size);
  for (auto& x : pool) x = node(rng);
  std::vector<std::vector<double>> rows(pool_size);
  for (int k = 0; k < pool_size; ++k) rows[k] = *g.distances_from(pool[k]);
  long asym = 0;
  for (int a = 0; a < pool_size; ++a) {
    for (int b = 0; b < pool_size; ++b) asym += rows[a][pool[b]] != rows[b][pool[a]];
  }
  std::uniform_int_distribution<int> pick(0, pool_size - 1);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int a = pick(rng), b = pick(rng), c3 = pick(rng);
    worst = std::max(worst, rows[a][pool[c3]] - rows[a][pool[b]] - rows[b][pool[c3]]);
  }
  const double secs = seconds_since(t0);
  return {asym == 0 && worst <= 1e-12 && secs < 30.0,
          format("%ld asymmetric pairs of %d; worst triangle excess %.3g (tol 1e-12) over 10000 triples; %.2f s "
                 "(limit 30 s)",
                 asym, pool_size * pool_size, std::max(worst, 0.0), secs)};
}

// 4. Metric derivative <= F* (1 + kappa) along stencil directions.
Outcome metric_derivative_bound() {
  std::mt19937_64 rng(404);
  double worst8 = -1.0, worst16 = -1.0;
  int samples = 0;
  int block = 0;
  int violations = 0;
  int jump_violations = 0;
  for (int stencil : {8, 16}) {
    for (const char* name : {"aronsson", "two-media", "riemannian-cone"}) {
      ProblemConfig c = small(name, 32, stencil);
      const Problem p = build_problem(c);
      const MetricGraph& g = *p.graph;
      const auto offsets = stencil_offsets(c.stencil());
      const double kappa = stencil_anisotropy(c.stencil()) - 1.0;
      std::uniform_int_distribution<int> node(0, g.size() - 1);
      std::uniform_int_distribution<int> dir(0, static_cast<int>(offsets.size()) - 1);
      const int quota = 500 / 6 + (block++ < 500 % 6);
      int taken = 0;
      while (taken < quota) {
        const int x = node(rng);
        const auto o = offsets[dir(rng)];
        const int i = p.domain.ix(x) + o.di, j = p.domain.iy(x) + o.dj;
        if (!p.domain.contains(i, j)) continue;
        const double len = std::hypot(o.di, o.dj);
        const Vec2 v{o.di / len, o.dj / len};
        const double md = g.metric_derivative(x, v, p.domain.h());
        const double bound = p.structure->dual_eval(p.domain.position(x), v) * (1.0 + kappa);
        const double ratio = md / bound - 1.0;
        (stencil == 8 ? worst8 : worst16) = std::max(stencil == 8 ? worst8 : worst16, ratio);
        if (ratio > 0.0) {
          ++violations;
          const auto here = p.structure->cell_params(p.domain.ix(x), p.domain.iy(x));
          const auto there = p.structure->cell_params(i, j);
          jump_violations += !std::equal(here.begin(), here.end(), there.begin(), there.end());
        }
        ++taken;
        ++samples;
      }
    }
  }
  const double k8 = stencil_anisotropy(Stencil::Eight) - 1.0, k16 = stencil_anisotropy(Stencil::Sixteen) - 1.0;
  const bool ok = worst8 <= 0.0 && worst16 <= 0.0 && k8 <= 0.09 && k16 <= 0.03;
  return {ok, format("%d samples; max md/(F*(1+k)) - 1 = %.3g (8-nbr, k=%.4f), %.3g (16-nbr, k=%.4f); %d violations, "
                     "%d of them on edges whose end cells carry different parameters",
                     samples, worst8, k8, worst16, k16, violations, jump_violations)};
}

double aronsson_error(int n, double* secs) {
  ProblemConfig c = preset("aronsson");
  c.domain.nx = c.domain.ny = n;
  c.domain.h = 2.0 / (n - 1);
  const auto t0 = Clock::now();
  const Problem p = build_problem(c);
  const SolveResult r = solve(*p.graph, p.g, c.solver_config());
  *secs = seconds_since(t0);
  double err = 0.0;
  for (int x : p.domain.interior_nodes()) err = std::max(err, std::abs(r.u[x] - aronsson(p.domain.position(x))));
  return err / p.g.oscillation();
}

// 5. Aronsson regression.
Outcome aronsson_regression() {
  double s64 = 0.0, s128 = 0.0;
  const double e64 = aronsson_error(64, &s64);
  const double e128 = aronsson_error(128, &s128);
  return {e64 <= 0.05 && e128 < e64 && s64 < 60.0,
          format("64x64 error %.4f osc (tol 0.05), 128x128 error %.4f osc (must decrease); 64x64 in %.2f s (limit 60 s)",
                 e64, e128, s64)};
}

// 6. Cone reproduction, riemannian diag(4, 1).
Outcome cone_reproduction() {
  const ProblemConfig c = preset("riemannian-cone");
  const Problem p = build_problem(c);
  const SolveResult r = solve(*p.graph, p.g, c.solver_config());
  const ConeSpec spec{c.boundary.offset, c.boundary.cone_slope,
                      p.domain.node(c.boundary.cone_vertex.first, c.boundary.cone_vertex.second)};
  const ScalarField cone = cone_field(spec, *p.graph);
  double err = 0.0;
  for (int x : p.domain.interior_nodes()) err = std::max(err, std::abs(r.u[x] - cone[x]));
  const double diam = intrinsic_diameter(*p.graph);
  const double rel = err / (spec.a * diam);
  return {rel <= 0.03,
          format("sup |u - cone| = %.4f a diam (tol 0.03), diam %.4f, %d-neighbour stencil", rel, diam, c.domain.stencil)};
}

// 7. Uniqueness: Psi and Phi starts land on the same field.
Outcome uniqueness() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"aronsson", "two-media", "riemannian-cone"}) {
    ProblemConfig c = preset(name);
    const Problem p = build_problem(c);
    c.solver.init = "upper";
    const SolveResult a = solve(*p.graph, p.g, c.solver_config());
    c.solver.init = "lower";
    const SolveResult b = solve(*p.graph, p.g, c.solver_config());
    double diff = 0.0;
    for (int x : p.domain.closure_nodes()) diff = std::max(diff, std::abs(a.u[x] - b.u[x]));
    const double tol = a.report.tol;
    ok = ok && diff <= 2.0 * tol && a.report.converged && b.report.converged;
    detail += format("%s %.3g/%.3g; ", name, diff, 2.0 * tol);
  }
  return {ok, "sup |u_Psi - u_Phi| vs 2 tol: " + detail};
}

// 8. Comparison principle on preset pairs with ordered boundary data.
Outcome comparison_principle() {
  std::string detail;
  bool ok = true;
  int pair = 0;
  for (const char* name : {"aronsson", "two-media", "riemannian-cone"}) {
    const ProblemConfig c = preset(name);
    const Problem p = build_problem(c);
    std::vector<double> lifted = p.g.values;
    for (std::size_t k = 0; k < lifted.size(); ++k) {
      const Vec2 x = p.domain.position(p.g.nodes[k]);
      lifted[k] += pair == 0 ? 0.25 : 0.1 * std::max(0.0, x.x) + 0.05 * std::max(0.0, x.y);
    }
    const BoundaryData g2 = make_boundary_data(*p.graph, lifted);
    const SolveResult u = solve(*p.graph, p.g, c.solver_config());
    const SolveResult v = solve(*p.graph, g2, c.solver_config());
    const CheckReport r = check_comparison_principle(u.u, v.u, *p.graph);
    ok = ok && r.margin >= -1e-10;
    detail += format("%s margin %.3g; ", name, r.margin);
    ++pair;
  }
  return {ok, "margin >= -1e-10: " + detail};
}

// 9. Characterization suite.
Outcome characterization() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"aronsson", "riemannian-cone"}) {
    const ProblemConfig c = preset(name);
    const Problem p = build_problem(c);
    const SolveResult r = solve(*p.graph, p.g, c.solver_config());
    const double rfin = c.solver_config().radii.back();
    const Tolerances tol = Tolerances::for_graph(*p.graph, rfin);
    const CheckReport cone = check_cone_comparison(r.u, *p.graph, 200, 9, tol);
    const CheckReport best = check_best_extension(r.u, *p.graph, 100, 10, tol);
    const CheckReport p31 = check_prop31(r.u, *p.structure, *p.graph, rfin);
    ok = ok && cone.passed && best.passed && p31.passed;
    detail += format("%s AMLE: cones %s (%.3g), best-ext %s (%.3g), prop31 %s (%.3g); ", name,
                     cone.passed ? "pass" : "FAIL", cone.margin, best.passed ? "pass" : "FAIL", best.margin,
                     p31.passed ? "pass" : "FAIL", p31.margin);
  }
  // Foils: McShane extensions where Psi != Phi, searched with 100 subdomains each.
  for (const char* name : {"three-point", "aronsson"}) {
    const ProblemConfig c = preset(name);
    const Problem p = build_problem(c);
    const Tolerances tol = Tolerances::for_graph(*p.graph, c.solver_config().radii.back());
    const ScalarField psi = mcshane_upper(p.g, *p.graph);
    const ScalarField phi = mcshane_lower(p.g, *p.graph);
    for (const auto* foil : {&psi, &phi}) {
      const CheckReport best = check_best_extension(*foil, *p.graph, 100, 11, tol);
      const bool failed_with_witness = !best.passed && !best.witness.is_null();
      ok = ok && failed_with_witness;
      // Diagnostic: a flat cone on a 5h ball around the foil's interior extremum.
      const bool upper = foil == &psi;
      int extremum = p.domain.interior_nodes().front();
      for (int x : p.domain.interior_nodes()) {
        if (upper ? (*foil)[x] > (*foil)[extremum] : (*foil)[x] < (*foil)[extremum]) extremum = x;
      }
      ConeSample flat;
      flat.sub = Subdomain::ball(extremum, 5.0 * p.domain.h());
      flat.a = 0.0;
      flat.from_above = upper;
      const SubdomainNodes sn = resolve(flat.sub, *p.graph);
      std::string probe = "no interior extremum";
      if (!sn.open.empty() && sn.boundary.size() >= 2) {
        flat.x0 = sn.boundary.front();
        const auto [violation, allowed] = cone_comparison_on(*foil, *p.graph, flat, tol);
        probe = format("flat cone %s (%.3g vs %.3g)", violation > allowed ? "rejects" : "passes", violation, allowed);
      }
      detail += format("%s %s foil: best-ext %s (%.3g) [%s]; ", name, upper ? "Psi" : "Phi",
                       failed_with_witness ? "fails with witness" : "NOT rejected", best.margin, probe.c_str());
    }
  }
  return {ok, detail};
}

// 10. Slope balance at convergence.
Outcome slope_balance_check() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"aronsson", "two-media", "riemannian-cone"}) {
    const ProblemConfig c = preset(name);
    const Problem p = build_problem(c);
    const SolverConfig sc = c.solver_config();
    const SolveResult r = solve(*p.graph, p.g, sc);
    const double rfin = sc.radii.back();
    const SlopeBalance b = slope_balance(r.u, *p.graph, rfin);
    const double bound = 3.0 * p.domain.h() / rfin;
    ok = ok && b.value <= bound && b.nodes_checked > 0;
    detail += format("%s %.3g (%zu nodes); ", name, b.value, b.nodes_checked);
  }
  return {ok, "max over U_2r of S- - S+ vs 3h/r = 1.5: " + detail};
}

// 11. Mollification convergence on two-media.
Outcome mollification() {
  const ProblemConfig c = preset("two-media");
  const Problem p = build_problem(c);
  const double h = p.domain.h();
  MollificationOptions opt;
  opt.epsilons = {8 * h, 4 * h, 2 * h};
  std::mt19937_64 rng(1111);
  const auto& closure = p.domain.closure_nodes();
  std::uniform_int_distribution<std::size_t> pick(0, closure.size() - 1);
  for (int k = 0; k < 40; ++k) opt.probe_pairs.emplace_back(closure[pick(rng)], closure[pick(rng)]);
  opt.boundary_values = p.g.values;
  opt.solver = c.solver_config();
  const GridDomain domain = p.domain;
  const Stencil stencil = c.stencil();
  const CheckReport r = check_mollification_convergence(
      *p.structure, [&](const FinslerStructure& F) { return std::make_unique<MetricGraph>(domain, F, stencil); }, opt);
  const auto& d = r.details;
  const auto gaps = d["gaps"].get<std::vector<double>>();
  return {r.passed, format("gaps %.4f, %.4f, %.4f (non-increasing %s, final <= %.4f); AMLE diff %.4f (<= %.4f)", gaps[0],
                           gaps[1], gaps[2], d["monotone"].get<bool>() ? "yes" : "no", d["gap_bound"].get<double>(),
                           d["amle_difference"].get<double>(), d["amle_bound"].get<double>())};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// 12. Two sequential CLI runs are byte-identical.
Outcome cli_determinism() {
  const std::string cli = FINSLER_AMLE_CLI_PATH;
  if (cli.empty() || !std::filesystem::exists(cli)) return {false, "CLI binary not found"};
  const auto dir = std::filesystem::temp_directory_path() / ("famle_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::string outputs[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    const auto out = dir / ("run" + std::to_string(k));
    const std::string cmd = "\"" + cli + "\" --threads 1 solve --preset aronsson --output \"" + out.string() + "\"";
    codes[k] = std::system(cmd.c_str());
    outputs[k] = slurp(out / "u.csv") + "\x1f" + slurp(out / "report.json");
  }
  std::filesystem::remove_all(dir);
  const bool same = outputs[0] == outputs[1] && outputs[0].size() > 100;
  return {same && codes[0] == 0 && codes[1] == 0,
          format("u.csv + report.json %s (%zu bytes), exit codes %d/%d", same ? "byte-identical" : "DIFFER",
                 outputs[0].size(), codes[0], codes[1])};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"duality round trip", duality_round_trip},
      {"metric oracle equivalence", metric_oracle},
      {"metric axioms", metric_axioms},
      {"metric-derivative bound", metric_derivative_bound},
      {"Aronsson regression", aronsson_regression},
      {"cone reproduction", cone_reproduction},
      {"uniqueness", uniqueness},
      {"comparison principle", comparison_principle},
      {"characterization suite", characterization},
      {"fixed-point slope balance", slope_balance_check},
      {"mollification convergence", mollification},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("[%s] %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", k + 1, criteria[k].first, o.summary.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
