#include "finsler_amle/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/parallel.hpp"

namespace famle {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Largest node set a sampled subdomain may hold; pairwise Lipschitz
// constants cost one bounded search per node.
constexpr std::size_t kMaxSubdomainNodes = 400;

void check_field(std::span<const double> u, const MetricGraph& graph) {
  if (u.size() != static_cast<std::size_t>(graph.size())) throw InputError("field size does not match the graph");
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return lo * std::pow(hi / lo, unit(rng));
}

double lip_or_zero(std::span<const double> u, const MetricGraph& graph, std::span<const int> nodes) {
  return nodes.size() < 2 ? 0.0 : graph.lip_constant(u, nodes);
}

double cost(std::span<const double> u, const FinslerStructure& structure, const MetricGraph& graph,
            std::span<const int> nodes, int* where = nullptr) {
  double best = 0.0;
  for (int x : nodes) {
    const double c = structure.eval(graph.domain().position(x), discrete_gradient(u, graph, x));
    if (c > best) {
      best = c;
      if (where) *where = x;
    }
  }
  return best;
}

}  // namespace

json CheckReport::to_json() const {
  json j;
  j["name"] = name;
  j["passed"] = passed;
  j["margin"] = margin;
  j["witness"] = witness;
  j["details"] = details;
  return j;
}

Subdomain Subdomain::ball(int center, double radius) {
  Subdomain s;
  s.shape = Shape::Ball;
  s.center = center;
  s.radius = radius;
  return s;
}

Subdomain Subdomain::rectangle(int i0, int j0, int i1, int j1) {
  Subdomain s;
  s.shape = Shape::Rectangle;
  s.i0 = i0;
  s.j0 = j0;
  s.i1 = i1;
  s.j1 = j1;
  return s;
}

json Subdomain::to_json() const {
  if (shape == Shape::Ball) return {{"shape", "ball"}, {"center", center}, {"radius", radius}};
  return {{"shape", "rectangle"}, {"i0", i0}, {"j0", j0}, {"i1", i1}, {"j1", j1}};
}

Subdomain Subdomain::from_json(const json& j) {
  const std::string shape = j.at("shape");
  if (shape == "ball") return ball(j.at("center"), j.at("radius"));
  if (shape == "rectangle") return rectangle(j.at("i0"), j.at("j0"), j.at("i1"), j.at("j1"));
  throw InputError("unknown subdomain shape '" + shape + "'");
}

SubdomainNodes resolve(const Subdomain& sub, const MetricGraph& graph) {
  const GridDomain& domain = graph.domain();
  SubdomainNodes out;
  if (sub.shape == Subdomain::Shape::Ball) {
    if (sub.center < 0 || sub.center >= graph.size()) throw InputError("subdomain centre outside the grid");
    for (int z : graph.metric_ball(sub.center, sub.radius)) {
      if (domain.is_interior(z)) out.all.push_back(z);
    }
  } else {
    for (int j = std::max(0, sub.j0); j <= std::min(domain.ny() - 1, sub.j1); ++j) {
      for (int i = std::max(0, sub.i0); i <= std::min(domain.nx() - 1, sub.i1); ++i) {
        const int z = domain.node(i, j);
        if (domain.is_interior(z)) out.all.push_back(z);
      }
    }
    std::sort(out.all.begin(), out.all.end());
  }
  std::vector<char> in(graph.size(), 0);
  for (int z : out.all) in[z] = 1;
  for (int z : out.all) {
    bool edge = false;
    for (int k = 0; k < graph.degree() && !edge; ++k) {
      const int w = graph.neighbor(z, k);
      edge = w < 0 || !in[w];
    }
    (edge ? out.boundary : out.open).push_back(z);
  }
  return out;
}

std::vector<Subdomain> sample_subdomains(const MetricGraph& graph, std::size_t count, std::uint64_t seed) {
  const GridDomain& domain = graph.domain();
  const auto& interior = domain.interior_nodes();
  if (interior.empty()) throw DegenerateInputError("domain has no interior nodes");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, interior.size() - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  const double h = domain.h();
  const double unit = graph.edge_bounds().alpha;
  const int span = std::max(domain.nx(), domain.ny());
  std::vector<Subdomain> out;
  const std::size_t attempts = 200 * std::max<std::size_t>(count, 1);
  for (std::size_t t = 0; t < attempts && out.size() < count; ++t) {
    Subdomain sub;
    const int c = interior[pick(rng)];
    if (coin(rng) == 0) {
      sub = Subdomain::ball(c, log_uniform(rng, 1.5 * h * unit, 0.5 * span * h * unit));
    } else {
      const int w = static_cast<int>(std::lround(log_uniform(rng, 2.0, std::max(3.0, span / 2.0))));
      const int ht = static_cast<int>(std::lround(log_uniform(rng, 2.0, std::max(3.0, span / 2.0))));
      const int i0 = domain.ix(c) - w / 2;
      const int j0 = domain.iy(c) - ht / 2;
      sub = Subdomain::rectangle(i0, j0, i0 + w, j0 + ht);
    }
    const SubdomainNodes nodes = resolve(sub, graph);
    if (nodes.open.empty() || nodes.boundary.size() < 2 || nodes.all.size() > kMaxSubdomainNodes) continue;
    out.push_back(sub);
  }
  if (out.empty()) throw DegenerateInputError("no valid subdomain found; the domain is too small");
  return out;
}

Tolerances Tolerances::for_graph(const MetricGraph& graph, std::optional<double> finest_radius) {
  Tolerances t;
  const double aniso = stencil_anisotropy(graph.stencil()) - 1.0;
  t.lip = aniso;
  t.lip_length = finest_radius.value_or(2.0 * graph.domain().h()) / 4.0;
  t.min = 2.0 * aniso;
  return t;
}

double Tolerances::prop31(const FinslerStructure& structure, const MetricGraph& graph, double r) {
  return metric_anisotropy(structure, graph.stencil()) + graph.domain().h() / (2.0 * r);
}

json ConeSample::to_json() const {
  return {{"subdomain", sub.to_json()}, {"x0", x0}, {"a", a}, {"from_above", from_above}};
}

ConeSample ConeSample::from_json(const json& j) {
  ConeSample s;
  s.sub = Subdomain::from_json(j.at("subdomain"));
  s.x0 = j.at("x0");
  s.a = j.at("a");
  s.from_above = j.at("from_above");
  return s;
}

namespace {

struct ConeOutcome {
  double violation = -kInf;
  double tolerance = 0.0;
  double b = 0.0;
  int node = -1;
};

ConeOutcome cone_test(std::span<const double> u, const MetricGraph& graph, const ConeSample& s,
                      const SubdomainNodes& nodes, double boundary_lip, const Tolerances& tol) {
  const std::vector<double> dist = graph.distances_to(s.x0, nodes.all);
  std::vector<double> d_of(graph.size(), kInf);
  for (std::size_t k = 0; k < nodes.all.size(); ++k) d_of[nodes.all[k]] = dist[k];
  ConeOutcome out;
  const double sign = s.from_above ? 1.0 : -1.0;
  // Above: C = b + a d with b = max(u - a d) on dV. Below: C = b - a d, b = min(u + a d).
  double b = s.from_above ? -kInf : kInf;
  for (int y : nodes.boundary) {
    const double value = u[y] - sign * s.a * d_of[y];
    b = s.from_above ? std::max(b, value) : std::min(b, value);
  }
  out.b = b;
  for (int x : nodes.open) {
    const double c = b + sign * s.a * d_of[x];
    const double violation = sign * (u[x] - c);
    if (violation > out.violation) {
      out.violation = violation;
      out.node = x;
    }
  }
  out.tolerance = tol.cone * (s.a + boundary_lip) * graph.domain().h();
  return out;
}

}  // namespace

std::pair<double, double> cone_comparison_on(std::span<const double> u, const MetricGraph& graph, const ConeSample& s,
                                             const Tolerances& tol) {
  check_field(u, graph);
  const SubdomainNodes nodes = resolve(s.sub, graph);
  if (nodes.open.empty()) throw DegenerateInputError("subdomain has an empty open part");
  if (std::binary_search(nodes.open.begin(), nodes.open.end(), s.x0)) {
    throw InputError("cone vertex lies inside the subdomain");
  }
  const auto out = cone_test(u, graph, s, nodes, lip_or_zero(u, graph, nodes.boundary), tol);
  return {out.violation, out.tolerance};
}

CheckReport check_cone_comparison(std::span<const double> u, const MetricGraph& graph, std::size_t samples,
                                  std::uint64_t seed, std::optional<Tolerances> tol, std::optional<int> fixed_vertex) {
  check_field(u, graph);
  const Tolerances t = tol.value_or(Tolerances::for_graph(graph));
  CheckReport report{"cone_comparison", true, kInf, nullptr, json::object()};
  if (samples == 0) return report;
  if (fixed_vertex && (*fixed_vertex < 0 || *fixed_vertex >= graph.size())) {
    throw InputError("cone vertex outside the grid");
  }

  std::mt19937_64 rng(seed);
  // Slope factor t in [-0.15, 1.5] clamped at 0: about 9% of cones are flat.
  std::uniform_real_distribution<double> slope(-0.15, 1.5);
  std::uniform_int_distribution<int> any_node(0, graph.size() - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  struct Pending {
    ConeSample sample;
    SubdomainNodes nodes;
    double t;
  };
  std::vector<Pending> pending;
  std::size_t round = 0;
  while (pending.size() < samples && round < 20) {
    const auto subs = sample_subdomains(graph, samples - pending.size(), seed + 7919 * (++round));
    for (const Subdomain& sub : subs) {
      SubdomainNodes nodes = resolve(sub, graph);
      int x0 = -1;
      if (fixed_vertex) {
        x0 = *fixed_vertex;
      } else if (coin(rng) == 0) {
        x0 = nodes.boundary[std::uniform_int_distribution<std::size_t>(0, nodes.boundary.size() - 1)(rng)];
      } else {
        x0 = any_node(rng);
      }
      const double ts = std::max(0.0, slope(rng));
      const bool above = (pending.size() % 2) == 0;
      if (std::binary_search(nodes.open.begin(), nodes.open.end(), x0)) continue;
      pending.push_back({ConeSample{sub, x0, 0.0, above}, std::move(nodes), ts});
      if (pending.size() == samples) break;
    }
  }
  if (pending.empty()) throw DegenerateInputError("no subdomain avoids the cone vertex");

  std::vector<ConeOutcome> outcomes(pending.size());
  parallel_for(pending.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double lip = lip_or_zero(u, graph, pending[k].nodes.boundary);
      pending[k].sample.a = pending[k].t * lip;
      outcomes[k] = cone_test(u, graph, pending[k].sample, pending[k].nodes, lip, t);
    }
  });

  std::size_t worst = 0;
  std::size_t failures = 0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const double margin = outcomes[k].tolerance - outcomes[k].violation;
    if (margin < 0.0) ++failures;
    if (margin < report.margin) {
      report.margin = margin;
      worst = k;
    }
  }
  report.passed = failures == 0;
  report.details = {{"samples", pending.size()}, {"failures", failures}, {"kappa_cone", t.cone}};
  const ConeOutcome& w = outcomes[worst];
  report.witness = pending[worst].sample.to_json();
  report.witness["b"] = w.b;
  report.witness["node"] = w.node;
  report.witness["violation"] = w.violation;
  report.witness["tolerance"] = w.tolerance;
  if (report.passed) report.witness = nullptr;
  return report;
}

BestExtensionOutcome best_extension_on(std::span<const double> u, const MetricGraph& graph, const Subdomain& sub,
                                       const Tolerances& tol) {
  check_field(u, graph);
  const SubdomainNodes nodes = resolve(sub, graph);
  if (nodes.boundary.size() < 2) throw DegenerateInputError("subdomain boundary has fewer than two nodes");
  BestExtensionOutcome out;
  out.lip_boundary = graph.lip_constant(u, nodes.boundary);
  const double slope = out.lip_boundary * (1.0 + tol.lip);
  out.excess = -kInf;
  const auto& all = nodes.all;
  for (std::size_t a = 0; a + 1 < all.size(); ++a) {
    const std::vector<double> d = graph.distances_to(all[a], std::span<const int>(all).subspan(a + 1));
    for (std::size_t k = 0; k < d.size(); ++k) {
      const int b = all[a + 1 + k];
      const double diff = std::abs(u[all[a]] - u[b]);
      if (d[k] > 0.0) out.lip_subdomain = std::max(out.lip_subdomain, diff / d[k]);
      const double excess = diff - slope * d[k];
      if (excess > out.excess) {
        out.excess = excess;
        out.x = all[a];
        out.y = b;
      }
    }
  }
  out.excess -= out.lip_boundary * tol.lip_length;
  return out;
}

CheckReport check_best_extension(std::span<const double> u, const MetricGraph& graph,
                                 const std::vector<Subdomain>& subdomains, std::optional<Tolerances> tol) {
  check_field(u, graph);
  const Tolerances t = tol.value_or(Tolerances::for_graph(graph));
  CheckReport report{"best_extension", true, kInf, nullptr, json::object()};
  std::vector<BestExtensionOutcome> outcomes(subdomains.size());
  parallel_for(subdomains.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) outcomes[k] = best_extension_on(u, graph, subdomains[k], t);
  });
  std::size_t worst = 0;
  std::size_t failures = 0;
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    // lip(u, V u dV) >= lip(u, dV) holds for any field; a violation is a defect.
    if (o.lip_subdomain < o.lip_boundary) throw NumericError("Lipschitz constant of a superset came out smaller");
    if (o.lip_boundary > 0.0) worst_ratio = std::max(worst_ratio, o.lip_subdomain / o.lip_boundary);
    // Scale-free margin: slack in units of L * h (absolute when L = 0).
    const double unit = o.lip_boundary > 0.0 ? o.lip_boundary * graph.domain().h() : 1.0;
    const double margin = -o.excess / unit + (o.lip_boundary > 0.0 ? 0.0 : 1e-12);
    if (margin < 0.0) ++failures;
    if (margin < report.margin) {
      report.margin = margin;
      worst = k;
    }
  }
  report.passed = failures == 0;
  report.details = {{"samples", subdomains.size()},  {"failures", failures},         {"kappa_lip", t.lip},
                    {"lip_length", t.lip_length},   {"max_lip_ratio", worst_ratio}, {"margin_unit", "L*h"}};
  if (!report.passed) {
    const auto& o = outcomes[worst];
    report.witness = {{"subdomain", subdomains[worst].to_json()},
                      {"lip_subdomain", o.lip_subdomain},
                      {"lip_boundary", o.lip_boundary},
                      {"pair", {o.x, o.y}}};
  }
  return report;
}

CheckReport check_best_extension(std::span<const double> u, const MetricGraph& graph, std::size_t samples,
                                 std::uint64_t seed, std::optional<Tolerances> tol) {
  if (samples == 0) return {"best_extension", true, kInf, nullptr, json::object()};
  return check_best_extension(u, graph, sample_subdomains(graph, samples, seed), tol);
}

Vec2 discrete_gradient(std::span<const double> u, const MetricGraph& graph, int x) {
  const GridDomain& d = graph.domain();
  const int i = d.ix(x);
  const int j = d.iy(x);
  if (i < 1 || j < 1 || i + 1 >= d.nx() || j + 1 >= d.ny()) throw InputError("gradient stencil leaves the grid");
  const double h2 = 2.0 * d.h();
  return {(u[d.node(i + 1, j)] - u[d.node(i - 1, j)]) / h2, (u[d.node(i, j + 1)] - u[d.node(i, j - 1)]) / h2};
}

CheckReport check_prop31(std::span<const double> u, const FinslerStructure& structure, const MetricGraph& graph,
                         double r, std::optional<double> tol) {
  check_field(u, graph);
  const double h = graph.domain().h();
  if (!(r >= 2.0 * h * (1.0 - 1e-12))) throw InputError("check_prop31 needs r >= 2h");
  const double kappa = tol.value_or(Tolerances::prop31(structure, graph, r));
  const std::vector<int> inner = inner_region(graph, r);
  if (inner.empty()) throw DegenerateInputError("interior shrunk by r is empty");

  int grad_node = -1;
  const double gradient_side = cost(u, structure, graph, inner, &grad_node);
  std::vector<double> local(inner.size());
  parallel_for(inner.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) local[k] = graph.pointwise_lip(u, inner[k], r);
  });
  const auto it = std::max_element(local.begin(), local.end());
  const double lip_side = *it;
  const double scale = std::max({gradient_side, lip_side, std::numeric_limits<double>::min()});
  const double rel = std::abs(gradient_side - lip_side) / scale;

  CheckReport report{"prop31", rel <= kappa, kappa - rel, nullptr, json::object()};
  report.details = {{"gradient_side", gradient_side}, {"lipschitz_side", lip_side}, {"relative_gap", rel},
                    {"kappa_31", kappa},          {"r", r},                  {"nodes", inner.size()}};
  if (!report.passed) {
    report.witness = {{"gradient_node", grad_node}, {"lipschitz_node", inner[it - local.begin()]}, {"r", r}};
  }
  return report;
}

CheckReport check_comparison_principle(std::span<const double> u, std::span<const double> v, const MetricGraph& graph,
                                       double slack) {
  check_field(u, graph);
  check_field(v, graph);
  const GridDomain& d = graph.domain();
  double boundary_max = -kInf;
  for (int y : d.boundary_nodes()) boundary_max = std::max(boundary_max, u[y] - v[y]);
  double interior_max = -kInf;
  int node = -1;
  for (int x : d.interior_nodes()) {
    if (u[x] - v[x] > interior_max) {
      interior_max = u[x] - v[x];
      node = x;
    }
  }
  const double margin = boundary_max + slack - interior_max;
  CheckReport report{"comparison_principle", margin >= 0.0, margin, nullptr, json::object()};
  report.details = {{"boundary_max", boundary_max}, {"interior_max", interior_max}, {"slack", slack}};
  if (!report.passed) report.witness = {{"node", node}, {"difference", interior_max}};
  return report;
}

namespace {

struct Competition {
  double u_cost = 0.0;
  double v_cost = 0.0;
  std::string kind;
  double amplitude = 0.0;
};

}  // namespace

CheckReport check_minimality_vs_competitors(std::span<const double> u, const FinslerStructure& structure,
                                            const MetricGraph& graph, std::size_t competitors, std::uint64_t seed,
                                            std::optional<Tolerances> tol) {
  check_field(u, graph);
  const Tolerances t = tol.value_or(Tolerances::for_graph(graph));
  CheckReport report{"minimality", true, kInf, nullptr, json::object()};
  if (competitors == 0) return report;
  constexpr std::size_t kPerSubdomain = 4;
  const auto subs = sample_subdomains(graph, (competitors + kPerSubdomain - 1) / kPerSubdomain, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::array<double, 2>> amplitudes(subs.size());
  for (auto& a : amplitudes) {
    a[0] = log_uniform(rng, 0.01, 0.3);
    a[1] = -log_uniform(rng, 0.01, 0.3);
  }

  std::vector<std::vector<Competition>> results(subs.size());
  parallel_for(subs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const SubdomainNodes nodes = resolve(subs[k], graph);
      const double u_cost = cost(u, structure, graph, nodes.open);
      const double lip = lip_or_zero(u, graph, nodes.boundary);
      // McShane re-extensions of the trace on dV.
      std::vector<double> upper(nodes.open.size(), kInf);
      std::vector<double> lower(nodes.open.size(), -kInf);
      for (int y : nodes.boundary) {
        const std::vector<double> d = graph.distances_to(y, nodes.open);
        for (std::size_t m = 0; m < nodes.open.size(); ++m) {
          upper[m] = std::min(upper[m], u[y] + lip * d[m]);
          lower[m] = std::max(lower[m], u[y] - lip * d[m]);
        }
      }
      ScalarField v(u.begin(), u.end());
      for (std::size_t m = 0; m < nodes.open.size(); ++m) v[nodes.open[m]] = upper[m];
      results[k].push_back({u_cost, cost(v, structure, graph, nodes.open), "mcshane_upper", 0.0});
      for (std::size_t m = 0; m < nodes.open.size(); ++m) v[nodes.open[m]] = lower[m];
      results[k].push_back({u_cost, cost(v, structure, graph, nodes.open), "mcshane_lower", 0.0});

      // Sine bumps over the bounding box of S, zero on dV.
      const GridDomain& d = graph.domain();
      int i0 = d.nx(), j0 = d.ny(), i1 = -1, j1 = -1;
      double lo = kInf, hi = -kInf;
      for (int z : nodes.all) {
        i0 = std::min(i0, d.ix(z));
        i1 = std::max(i1, d.ix(z));
        j0 = std::min(j0, d.iy(z));
        j1 = std::max(j1, d.iy(z));
        lo = std::min(lo, u[z]);
        hi = std::max(hi, u[z]);
      }
      const double osc = std::max(hi - lo, 1e-12);
      for (double amp : amplitudes[k]) {
        v.assign(u.begin(), u.end());
        for (int z : nodes.open) {
          const double sx = std::sin(std::numbers::pi * (d.ix(z) - i0) / std::max(1, i1 - i0));
          const double sy = std::sin(std::numbers::pi * (d.iy(z) - j0) / std::max(1, j1 - j0));
          v[z] = u[z] + amp * osc * sx * sy;
        }
        results[k].push_back({u_cost, cost(v, structure, graph, nodes.open), "bump", amp * osc});
      }
    }
  });

  std::size_t failures = 0;
  std::size_t checked = 0;
  std::size_t worst_sub = 0;
  const Competition* worst = nullptr;
  for (std::size_t k = 0; k < results.size(); ++k) {
    for (const Competition& c : results[k]) {
      if (checked == competitors) break;
      ++checked;
      const double margin = c.v_cost * (1.0 + t.min) + 1e-12 - c.u_cost;
      if (margin < 0.0) ++failures;
      if (margin < report.margin) {
        report.margin = margin;
        worst = &c;
        worst_sub = k;
      }
    }
  }
  report.passed = failures == 0;
  report.details = {{"competitors", checked}, {"failures", failures}, {"kappa_min", t.min}};
  if (!report.passed && worst) {
    report.witness = {{"subdomain", subs[worst_sub].to_json()},
                      {"competitor", worst->kind},
                      {"amplitude", worst->amplitude},
                      {"cost_u", worst->u_cost},
                      {"cost_competitor", worst->v_cost}};
  }
  return report;
}

double intrinsic_diameter(const MetricGraph& graph) {
  const auto& boundary = graph.domain().boundary_nodes();
  std::vector<double> best(boundary.size(), 0.0);
  parallel_for(boundary.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto d = graph.distances_to(boundary[k], boundary);
      best[k] = *std::max_element(d.begin(), d.end());
    }
  });
  return best.empty() ? 0.0 : *std::max_element(best.begin(), best.end());
}

CheckReport check_mollification_convergence(const FinslerStructure& structure, const GraphBuilder& build,
                                            const MollificationOptions& options) {
  const auto& eps = options.epsilons;
  if (eps.empty()) throw InputError("mollification check needs at least one epsilon");
  for (std::size_t k = 1; k < eps.size(); ++k) {
    if (!(eps[k] < eps[k - 1])) throw InputError("epsilons must be strictly decreasing");
  }
  if (options.probe_pairs.empty()) throw InputError("mollification check needs probe pairs");

  const auto raw = build(structure);
  const double diam = intrinsic_diameter(*raw);
  auto probe = [&](const MetricGraph& g) {
    std::vector<double> out;
    for (const auto& [a, b] : options.probe_pairs) out.push_back(g.distances_to(a, std::span<const int>(&b, 1))[0]);
    return out;
  };
  const std::vector<double> reference = probe(*raw);

  std::vector<double> gaps;
  std::unique_ptr<MetricGraph> finest;
  for (double e : eps) {
    auto g = build(structure.mollify(e));
    const std::vector<double> d = probe(*g);
    double gap = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) gap = std::max(gap, std::abs(d[k] - reference[k]));
    gaps.push_back(gap);
    finest = std::move(g);
  }
  const double noise = 1e-9 * diam;
  bool monotone = true;
  double monotone_margin = kInf;
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    monotone_margin = std::min(monotone_margin, gaps[k - 1] + noise - gaps[k]);
    monotone = monotone && gaps[k] <= gaps[k - 1] + noise;
  }
  const double gap_bound = options.gap_fraction * diam;
  double margin = std::min(monotone_margin, gap_bound - gaps.back());

  CheckReport report{"mollification", true, 0.0, nullptr, json::object()};
  report.details = {{"epsilons", eps}, {"gaps", gaps}, {"diam", diam}, {"gap_bound", gap_bound},
                    {"monotone", monotone}};

  if (!options.boundary_values.empty()) {
    const BoundaryData g_raw = make_boundary_data(*raw, options.boundary_values);
    const BoundaryData g_fine = make_boundary_data(*finest, options.boundary_values);
    const SolveResult a = solve(*raw, g_raw, options.solver);
    const SolveResult b = solve(*finest, g_fine, options.solver);
    double diff = 0.0;
    for (int x : raw->domain().closure_nodes()) diff = std::max(diff, std::abs(a.u[x] - b.u[x]));
    const double bound = options.amle_fraction * g_raw.oscillation();
    report.details["amle_difference"] = diff;
    report.details["amle_bound"] = bound;
    margin = std::min(margin, bound - diff);
  }
  report.margin = margin;
  report.passed = margin >= 0.0;
  if (!report.passed) report.witness = {{"gaps", gaps}, {"epsilons", eps}};
  return report;
}

}  // namespace famle
