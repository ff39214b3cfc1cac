#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "finsler_amle/geometry.hpp"
#include "finsler_amle/grid.hpp"
#include "finsler_amle/solver.hpp"

namespace famle {

/// Problem description read from a line-oriented `key = value` file.
/// Keys carry a dotted section prefix (`solver.tol = 1e-8`); `#` starts a
/// comment. Lists are comma separated; point lists separate points by `;`.
/// Every field has a default, so an empty file is a valid (constant) problem.
struct ProblemConfig {
  struct Domain {
    int nx = 64;
    int ny = 64;
    /// Grid spacing; 0 means 2 / (max(nx, ny) - 1), i.e. the square [-1, 1]^2.
    double h = 0.0;
    Vec2 origin{-1.0, -1.0};
    std::string shape = "rectangle";  // rectangle | disk | points
    int margin = 0;
    int boundary_width = 1;
    Vec2 center{0.0, 0.0};  // disk
    double radius = 0.9;    // disk
    std::vector<std::pair<int, int>> points;  // points: boundary node indices
    int stencil = 8;                          // 8 | 16
    bool operator==(const Domain&) const = default;
  } domain;

  struct Structure {
    std::string family = "euclidean-scaled";
    double scale = 1.0;
    double p = 2.0;
    std::vector<double> matrix{1.0, 0.0, 1.0};  // a11, a12, a22
    std::vector<double> table;                  // custom-table values, K directions
    std::vector<NormSpec> palette;              // piecewise-constant-norm
    /// Two-media split: cells with x >= interface_x use scale_right
    /// (euclidean-scaled and p-norm only). Unset means homogeneous.
    std::optional<double> interface_x;
    double scale_right = 1.0;
    /// Per-node parameter CSV (overrides constant parameters).
    std::string csv;
    /// Box mollification radius applied after loading; 0 disables.
    double mollify = 0.0;
    bool operator==(const Structure&) const = default;
  } structure;

  struct Boundary {
    std::string kind = "constant";  // constant | linear | aronsson | cone | values | csv
    double value = 0.0;
    Vec2 gradient{1.0, 0.0};
    double offset = 0.0;
    std::pair<int, int> cone_vertex{0, 0};
    double cone_slope = 1.0;
    std::vector<double> values;  // one per domain.points entry, same order
    std::string csv;             // x_index,y_index,value rows
    bool operator==(const Boundary&) const = default;
  } boundary;

  struct Solver {
    /// Radii in multiples of h.
    std::vector<double> radii_h{8.0, 4.0, 2.0};
    double tol = 0.0;
    int max_iter = 500000;
    std::string sweep = "gauss-seidel";  // gauss-seidel | jacobi
    std::string init = "midpoint";       // midpoint | upper | lower
    bool operator==(const Solver&) const = default;
  } solver;

  struct Verify {
    /// cone_comparison, best_extension, prop31, minimality, slope_balance.
    std::vector<std::string> checks{"cone_comparison", "best_extension", "prop31", "slope_balance"};
    int cone_samples = 200;
    int subdomain_samples = 100;
    int competitors = 20;
    std::uint64_t seed = 1;
    /// prop31 / slope-balance radius in multiples of h.
    double radius_h = 2.0;
    bool operator==(const Verify&) const = default;
  } verify;

  struct Output {
    std::string directory = "out";
    bool mcshane = false;  // also write psi.csv / phi.csv
    bool timing = false;   // record wall_ms in report.json
    bool operator==(const Output&) const = default;
  } output;

  /// Directory that relative paths resolve against.
  std::filesystem::path base_dir = ".";

  bool operator==(const ProblemConfig& o) const {
    return domain == o.domain && structure == o.structure && boundary == o.boundary && solver == o.solver &&
           verify == o.verify && output == o.output;
  }

  double spacing() const;
  Stencil stencil() const { return domain.stencil == 16 ? Stencil::Sixteen : Stencil::Eight; }
  SolverConfig solver_config() const;
  /// Resolves a possibly relative path against base_dir.
  std::filesystem::path resolve(const std::string& path) const;
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Parses config text. `preset = NAME` (first) loads a preset that later
/// keys override. Throws ConfigError with "line N: key: message".
ProblemConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
ProblemConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ProblemConfig& config);

std::vector<std::string> preset_names();
/// aronsson, two-media, riemannian-cone, constant, three-point.
ProblemConfig preset(std::string_view name);

}  // namespace famle
