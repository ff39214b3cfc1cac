#include "finsler_amle/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/parallel.hpp"

namespace famle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kRatioWindow = 8;

std::pair<double, double> ball_extrema(std::span<const double> u, std::span<const int> ball) {
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (int z : ball) {
    hi = std::max(hi, u[z]);
    lo = std::min(lo, u[z]);
  }
  return {hi, lo};
}

std::vector<int> closure_ball(const MetricGraph& graph, int x, double r) {
  std::vector<int> ball;
  for (int z : graph.metric_ball(x, r)) {
    if (graph.domain().in_closure(z)) ball.push_back(z);
  }
  return ball;
}

void check_field(std::span<const double> u, const MetricGraph& graph) {
  if (u.size() != static_cast<std::size_t>(graph.size())) throw InputError("field size does not match the graph");
}

}  // namespace

SolverConfig SolverConfig::defaults(double h) {
  SolverConfig c;
  c.radii = {8.0 * h, 4.0 * h, 2.0 * h};
  return c;
}

void SolverConfig::validate(double h) const {
  if (radii.empty()) throw InputError("solver: radius schedule is empty");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] >= 2.0 * h * (1.0 - 1e-12))) throw InputError("solver: every radius must be at least 2h");
    if (k > 0 && !(radii[k] < radii[k - 1])) throw InputError("solver: radii must be strictly decreasing");
  }
  if (std::isnan(tol)) throw InputError("solver: tolerance is NaN");
  if (max_iter < 1) throw InputError("solver: max_iter must be positive");
}

BallIndex::BallIndex(const MetricGraph& graph, double r) : radius_(r) {
  const auto& domain = graph.domain();
  const int n = graph.size();
  std::vector<std::vector<int>> balls(n);
  const auto& closure = domain.closure_nodes();
  parallel_for(closure.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) balls[closure[k]] = closure_ball(graph, closure[k], r);
  });
  offsets_.assign(n + 1, 0);
  for (int x = 0; x < n; ++x) offsets_[x + 1] = offsets_[x] + balls[x].size();
  members_.reserve(offsets_[n]);
  for (const auto& b : balls) members_.insert(members_.end(), b.begin(), b.end());
}

double ball_sup(std::span<const double> u, const MetricGraph& graph, int x, double r) {
  check_field(u, graph);
  return ball_extrema(u, closure_ball(graph, x, r)).first;
}

double ball_inf(std::span<const double> u, const MetricGraph& graph, int x, double r) {
  check_field(u, graph);
  return ball_extrema(u, closure_ball(graph, x, r)).second;
}

Slopes slopes(std::span<const double> u, const MetricGraph& graph, int x, double r) {
  check_field(u, graph);
  if (!(r > 0.0)) throw InputError("slopes need a positive radius");
  const auto [hi, lo] = ball_extrema(u, closure_ball(graph, x, r));
  return {(hi - u[x]) / r, (u[x] - lo) / r};
}

ScalarField harmonious_step(std::span<const double> u, const BallIndex& balls, const GridDomain& domain,
                            Sweep sweep) {
  ScalarField out(u.begin(), u.end());
  const auto& interior = domain.interior_nodes();
  if (sweep == Sweep::GaussSeidel) {
    for (int x : interior) {
      const auto [hi, lo] = ball_extrema(out, balls.ball(x));
      out[x] = 0.5 * (hi + lo);
    }
  } else {
    parallel_for(interior.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const auto [hi, lo] = ball_extrema(u, balls.ball(interior[k]));
        out[interior[k]] = 0.5 * (hi + lo);
      }
    });
  }
  return out;
}

ScalarField harmonious_step(std::span<const double> u, const MetricGraph& graph, double r, Sweep sweep) {
  check_field(u, graph);
  return harmonious_step(u, BallIndex(graph, r), graph.domain(), sweep);
}

double default_tolerance(const BoundaryData& g) { return 1e-8 * g.oscillation(); }

namespace {

// In-place sweep; returns the sup-norm change.
double sweep_in_place(ScalarField& u, ScalarField& scratch, const BallIndex& balls, const GridDomain& domain,
                      Sweep sweep) {
  const auto& interior = domain.interior_nodes();
  double change = 0.0;
  if (sweep == Sweep::GaussSeidel) {
    for (int x : interior) {
      const auto [hi, lo] = ball_extrema(u, balls.ball(x));
      const double next = 0.5 * (hi + lo);
      change = std::max(change, std::abs(next - u[x]));
      u[x] = next;
    }
    return change;
  }
  scratch = u;
  std::vector<double> chunk_change(std::max(1, thread_count()), 0.0);
  const std::size_t n = interior.size();
  const std::size_t workers = chunk_change.size();
  const std::size_t chunk = (n + workers - 1) / workers;
  parallel_for(workers, [&](std::size_t wb, std::size_t we) {
    for (std::size_t w = wb; w < we; ++w) {
      double local = 0.0;
      for (std::size_t k = w * chunk; k < std::min(n, (w + 1) * chunk); ++k) {
        const int x = interior[k];
        const auto [hi, lo] = ball_extrema(scratch, balls.ball(x));
        const double next = 0.5 * (hi + lo);
        local = std::max(local, std::abs(next - scratch[x]));
        u[x] = next;
      }
      chunk_change[w] = local;
    }
  });
  return *std::max_element(chunk_change.begin(), chunk_change.end());
}

}  // namespace

SolveResult solve(const MetricGraph& graph, const BoundaryData& g, const SolverConfig& config,
                  const std::optional<ScalarField>& initial) {
  const auto start = std::chrono::steady_clock::now();
  const auto& domain = graph.domain();
  config.validate(domain.h());
  if (g.nodes != domain.boundary_nodes() || g.values.size() != g.nodes.size()) {
    throw InputError("boundary data does not match the domain's boundary nodes");
  }
  for (double v : g.values) {
    if (!std::isfinite(v)) throw InputError("boundary data must be finite");
  }

  SolveResult result;
  SolveReport& report = result.report;
  ScalarField& u = result.u;
  u.assign(graph.size(), kNaN);
  const double osc = g.oscillation();
  report.tol = config.tol > 0.0 ? config.tol : default_tolerance(g);

  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  if (osc == 0.0) {
    for (int x : domain.closure_nodes()) u[x] = g.values.front();
    for (std::size_t k = 0; k < config.radii.size(); ++k) {
      report.stages.push_back({config.radii[k], k == 0 ? 1 : 0, 0.0, 0.0, true});
    }
    report.converged = true;
    report.max_log = {g.values.front()};
    report.min_log = {g.values.front()};
    report.wall_ms = elapsed_ms();
    return result;
  }

  if (initial) {
    if (initial->size() != u.size()) throw InputError("initial field size does not match the graph");
    for (int x : domain.interior_nodes()) u[x] = (*initial)[x];
  } else {
    const ScalarField upper = mcshane_upper(g, graph);
    const ScalarField lower = mcshane_lower(g, graph);
    for (int x : domain.interior_nodes()) {
      switch (config.init) {
        case Initialization::Midpoint: u[x] = 0.5 * (upper[x] + lower[x]); break;
        case Initialization::Upper: u[x] = upper[x]; break;
        case Initialization::Lower: u[x] = lower[x]; break;
      }
    }
  }
  for (std::size_t k = 0; k < g.nodes.size(); ++k) u[g.nodes[k]] = g.values[k];

  ScalarField scratch;
  bool all_converged = true;
  for (double r : config.radii) {
    const BallIndex balls(graph, r);
    StageLog stage{r, 0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), false};
    std::deque<double> ratios;
    double previous = -1.0;
    while (stage.iterations < config.max_iter) {
      const double change = sweep_in_place(u, scratch, balls, domain, config.sweep);
      ++stage.iterations;
      if (!std::isfinite(change)) {
        std::ostringstream msg;
        msg << "solver produced a non-finite field at radius " << r << ", sweep " << stage.iterations;
        throw NumericError(msg.str());
      }
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      for (int x : domain.closure_nodes()) {
        hi = std::max(hi, u[x]);
        lo = std::min(lo, u[x]);
      }
      report.max_log.push_back(hi);
      report.min_log.push_back(lo);

      stage.residual = change;
      if (previous > 0.0) {
        ratios.push_back(change / previous);
        if (ratios.size() > kRatioWindow) ratios.pop_front();
      }
      previous = change;
      if (change == 0.0) {
        stage.error_estimate = 0.0;
      } else if (ratios.size() >= 3) {
        const double rho = std::min(*std::max_element(ratios.begin(), ratios.end()), 1.0 - 1e-12);
        stage.error_estimate = change * rho / (1.0 - rho);
      }
      if (change <= report.tol && stage.error_estimate <= report.tol) {
        stage.converged = true;
        break;
      }
    }
    all_converged = all_converged && stage.converged;
    report.stages.push_back(stage);
  }
  report.final_residual = report.stages.back().residual;
  report.converged = all_converged;
  report.wall_ms = elapsed_ms();
  return result;
}

SolveResult solve(const GridDomain& domain, const FinslerStructure& structure, std::span<const double> boundary_values,
                  const SolverConfig& config, Stencil stencil) {
  const MetricGraph graph(domain, structure, stencil);
  const BoundaryData g = make_boundary_data(graph, {boundary_values.begin(), boundary_values.end()});
  return solve(graph, g, config);
}

std::vector<int> inner_region(const MetricGraph& graph, double s) {
  std::vector<int> out;
  for (int x : graph.domain().interior_nodes()) {
    bool inside = true;
    for (const auto& reached : graph.reach(x, s)) {
      if (!graph.domain().is_interior(reached.node)) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(x);
  }
  return out;
}

SlopeBalance slope_balance(std::span<const double> u, const MetricGraph& graph, double r) {
  check_field(u, graph);
  const BallIndex balls(graph, r);
  ScalarField upper(u.size(), kNaN);
  for (int x : graph.domain().closure_nodes()) upper[x] = ball_extrema(u, balls.ball(x)).first;
  SlopeBalance out{-std::numeric_limits<double>::infinity(), -1, 0};
  for (int x : inner_region(graph, 2.0 * r)) {
    const auto [hi, lo] = ball_extrema(upper, balls.ball(x));
    const double value = (2.0 * upper[x] - hi - lo) / r;
    ++out.nodes_checked;
    if (value > out.value) {
      out.value = value;
      out.node = x;
    }
  }
  return out;
}

}  // namespace famle
