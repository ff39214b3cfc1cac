#pragma once

#include <optional>
#include <span>
#include <vector>

#include "finsler_amle/extensions.hpp"
#include "finsler_amle/metric_graph.hpp"

namespace famle {

enum class Sweep { Jacobi, GaussSeidel };
enum class Initialization { Midpoint, Upper, Lower };

/// Discretization parameters of the ball-midpoint iteration.
struct SolverConfig {
  /// Ball radii in length units, strictly decreasing, each >= 2h.
  std::vector<double> radii;
  /// Absolute stopping tolerance; <= 0 selects 1e-8 * osc(g).
  double tol = 0.0;
  /// Per-radius sweep cap.
  int max_iter = 500000;
  Sweep sweep = Sweep::GaussSeidel;
  /// Starting field: (Psi + Phi) / 2, Psi, or Phi.
  Initialization init = Initialization::Midpoint;

  /// Radii {8h, 4h, 2h}.
  static SolverConfig defaults(double h);
  /// Throws InputError when the invariants fail.
  void validate(double h) const;
  bool operator==(const SolverConfig&) const = default;
};

struct StageLog {
  double radius = 0.0;
  int iterations = 0;
  /// Sup-norm change of the last sweep.
  double residual = 0.0;
  /// residual * rho / (1 - rho), rho the observed contraction ratio.
  double error_estimate = 0.0;
  bool converged = false;
};

struct SolveReport {
  std::vector<StageLog> stages;
  double tol = 0.0;
  double final_residual = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
  /// max / min of the field over the closure, one entry per sweep.
  std::vector<double> max_log;
  std::vector<double> min_log;
};

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

/// Metric balls restricted to the closure of U, for every closure node,
/// in compressed row form. Each ball contains its centre.
class BallIndex {
 public:
  BallIndex(const MetricGraph& graph, double r);
  std::span<const int> ball(int node) const {
    return {members_.data() + offsets_[node], static_cast<std::size_t>(offsets_[node + 1] - offsets_[node])};
  }
  double radius() const { return radius_; }

 private:
  double radius_;
  std::vector<std::size_t> offsets_;
  std::vector<int> members_;
};

/// sup / inf of u over the metric ball of radius r around x (restricted to
/// the closure of U, where u is defined).
double ball_sup(std::span<const double> u, const MetricGraph& graph, int x, double r);
double ball_inf(std::span<const double> u, const MetricGraph& graph, int x, double r);

struct Slopes {
  double plus = 0.0;
  double minus = 0.0;
};
/// S+ = (sup - u(x)) / r, S- = (u(x) - inf) / r.
Slopes slopes(std::span<const double> u, const MetricGraph& graph, int x, double r);

/// One sweep replacing every interior value by the midpoint of its ball
/// sup and inf; boundary values are untouched.
ScalarField harmonious_step(std::span<const double> u, const MetricGraph& graph, double r, Sweep sweep);
ScalarField harmonious_step(std::span<const double> u, const BallIndex& balls, const GridDomain& domain, Sweep sweep);

/// Default tolerance 1e-8 * (max g - min g).
double default_tolerance(const BoundaryData& g);

/// Iterates harmonious_step per radius until the error estimate and the
/// sweep residual are both <= tol, warm-starting each radius from the
/// previous one. Ambient nodes (outside the closure) are NaN in the output.
/// Throws NumericError if the field becomes non-finite.
SolveResult solve(const MetricGraph& graph, const BoundaryData& g, const SolverConfig& config,
                  const std::optional<ScalarField>& initial = std::nullopt);
/// Convenience: builds the graph first.
SolveResult solve(const GridDomain& domain, const FinslerStructure& structure, std::span<const double> boundary_values,
                  const SolverConfig& config, Stencil stencil = Stencil::Eight);

/// U_s: interior nodes whose whole metric ball of radius s consists of interior nodes.
std::vector<int> inner_region(const MetricGraph& graph, double s);

struct SlopeBalance {
  double value = 0.0;  // max over U_{2r} of S-(u^r) - S+(u^r)
  int node = -1;
  std::size_t nodes_checked = 0;
};
SlopeBalance slope_balance(std::span<const double> u, const MetricGraph& graph, double r);

}  // namespace famle
