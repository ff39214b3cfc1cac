#include "finsler_amle/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "finsler_amle/errors.hpp"
#include "finsler_amle/verifier.hpp"

namespace famle {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    out.push_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& v) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Rows of numbers; a first row that does not parse is treated as a header.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    bool ok = true;
    for (auto cell : split_csv(line)) {
      double v = 0.0;
      if (!parse_number(cell, v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;
      throw InputError(path.string() + ": line " + std::to_string(line_no) + ": non-numeric cell");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

json null_if_nonfinite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

double aronsson(Vec2 p) {
  const double x = std::cbrt(p.x);
  const double y = std::cbrt(p.y);
  return y * y * y * y - x * x * x * x;
}

GridDomain build_domain(const ProblemConfig& config) {
  const auto& d = config.domain;
  const double h = config.spacing();
  GridDomain domain;
  if (d.shape == "rectangle") {
    domain = GridDomain::rectangle(d.nx, d.ny, h, d.origin, d.margin, d.boundary_width);
  } else if (d.shape == "disk") {
    domain = GridDomain::disk(d.nx, d.ny, h, d.origin, d.center, d.radius, d.boundary_width);
  } else {
    std::vector<int> nodes;
    for (const auto& [i, j] : d.points) nodes.push_back(j * d.nx + i);
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
      throw ConfigError("domain.points: duplicate point");
    }
    domain = GridDomain::point_boundary(d.nx, d.ny, h, d.origin, nodes);
  }
  domain.validate(config.stencil());
  return domain;
}

FinslerStructure load_structure_csv(const std::filesystem::path& path, const ProblemConfig& config) {
  const Family family = parse_family(config.structure.family);
  const double h = config.spacing();
  const Lattice lattice{config.domain.nx, config.domain.ny, h, config.domain.origin};
  const auto rows = read_numeric_csv(path);
  if (rows.size() != static_cast<std::size_t>(lattice.size())) {
    throw InputError("structure.csv: expected " + std::to_string(lattice.size()) + " rows, got " +
                     std::to_string(rows.size()));
  }
  std::size_t width = 0;
  switch (family) {
    case Family::EuclideanScaled:
    case Family::PNorm:
    case Family::PiecewiseConstantNorm: width = 1; break;
    case Family::Riemannian: width = 3; break;
    case Family::CustomTable: width = rows.front().size(); break;
  }
  std::vector<double> flat;
  flat.reserve(rows.size() * width);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != width) {
      throw InputError("structure.csv: row " + std::to_string(k) + " has " + std::to_string(rows[k].size()) +
                       " columns, expected " + std::to_string(width));
    }
    flat.insert(flat.end(), rows[k].begin(), rows[k].end());
  }
  switch (family) {
    case Family::EuclideanScaled: return FinslerStructure::euclidean_scaled(lattice, flat);
    case Family::PNorm: return FinslerStructure::p_norm(lattice, config.structure.p, flat);
    case Family::Riemannian: {
      std::vector<Sym2> m;
      for (std::size_t k = 0; k < flat.size(); k += 3) m.push_back({flat[k], flat[k + 1], flat[k + 2]});
      return FinslerStructure::riemannian(lattice, m);
    }
    case Family::CustomTable: return FinslerStructure::custom_table(lattice, static_cast<int>(width), flat);
    case Family::PiecewiseConstantNorm: {
      std::vector<int> labels;
      for (double v : flat) {
        if (v != std::floor(v) || v < 0 || v >= static_cast<double>(config.structure.palette.size())) {
          throw InputError("structure.csv: palette label out of range");
        }
        labels.push_back(static_cast<int>(v));
      }
      return FinslerStructure::piecewise_norm(lattice, config.structure.palette, labels);
    }
  }
  throw InputError("structure.csv: unsupported family");
}

FinslerStructure build_structure(const ProblemConfig& config) {
  const auto& s = config.structure;
  const Family family = parse_family(s.family);
  const double h = config.spacing();
  const Lattice lattice{config.domain.nx, config.domain.ny, h, config.domain.origin};
  const int n = lattice.size();
  auto scales = [&] {
    std::vector<double> out(n, s.scale);
    if (s.interface_x) {
      for (int k = 0; k < n; ++k) {
        if (lattice.position(k % lattice.nx, k / lattice.nx).x >= *s.interface_x) out[k] = s.scale_right;
      }
    }
    return out;
  };
  std::optional<FinslerStructure> structure;
  if (!s.csv.empty()) {
    structure = load_structure_csv(config.resolve(s.csv), config);
  } else {
    switch (family) {
      case Family::EuclideanScaled: structure = FinslerStructure::euclidean_scaled(lattice, scales()); break;
      case Family::PNorm: structure = FinslerStructure::p_norm(lattice, s.p, scales()); break;
      case Family::Riemannian:
        structure = FinslerStructure::riemannian(lattice, std::vector<Sym2>(n, Sym2{s.matrix[0], s.matrix[1], s.matrix[2]}));
        break;
      case Family::CustomTable: {
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(n) * s.table.size());
        for (int k = 0; k < n; ++k) values.insert(values.end(), s.table.begin(), s.table.end());
        structure = FinslerStructure::custom_table(lattice, static_cast<int>(s.table.size()), values);
        break;
      }
      case Family::PiecewiseConstantNorm:
        structure = FinslerStructure::piecewise_norm(lattice, s.palette, std::vector<int>(n, 0));
        break;
    }
  }
  if (s.mollify > 0.0) structure = structure->mollify(s.mollify);
  return *structure;
}

std::vector<double> build_boundary_values(const ProblemConfig& config, const MetricGraph& graph) {
  const auto& b = config.boundary;
  const GridDomain& domain = graph.domain();
  const auto& nodes = domain.boundary_nodes();
  std::vector<double> values;
  values.reserve(nodes.size());
  if (b.kind == "constant") {
    values.assign(nodes.size(), b.value);
  } else if (b.kind == "linear") {
    for (int x : nodes) values.push_back(b.offset + dot(b.gradient, domain.position(x)));
  } else if (b.kind == "aronsson") {
    for (int x : nodes) values.push_back(aronsson(domain.position(x)));
  } else if (b.kind == "cone") {
    const ConeSpec cone{b.offset, b.cone_slope, domain.node(b.cone_vertex.first, b.cone_vertex.second)};
    const ScalarField field = cone_field(cone, graph);
    for (int x : nodes) values.push_back(field[x]);
  } else if (b.kind == "values") {
    std::vector<std::pair<int, double>> pairs;
    for (std::size_t k = 0; k < b.values.size(); ++k) {
      pairs.emplace_back(domain.node(config.domain.points[k].first, config.domain.points[k].second), b.values[k]);
    }
    std::sort(pairs.begin(), pairs.end());
    if (pairs.size() != nodes.size()) throw ConfigError("boundary.values: count does not match the boundary");
    for (const auto& p : pairs) values.push_back(p.second);
  } else {
    const auto rows = read_numeric_csv(config.resolve(b.csv));
    std::vector<double> by_node(domain.size(), kNaN);
    for (const auto& row : rows) {
      if (row.size() != 3) throw InputError("boundary.csv: rows are x_index,y_index,value");
      const int i = static_cast<int>(row[0]);
      const int j = static_cast<int>(row[1]);
      if (!domain.contains(i, j)) throw InputError("boundary.csv: index outside the grid");
      by_node[domain.node(i, j)] = row[2];
    }
    for (int x : nodes) {
      if (std::isnan(by_node[x])) {
        throw InputError("boundary.csv: no value for boundary node (" + std::to_string(domain.ix(x)) + "," +
                         std::to_string(domain.iy(x)) + ")");
      }
      values.push_back(by_node[x]);
    }
  }
  return values;
}

Problem build_problem(const ProblemConfig& config) {
  config.validate();
  Problem p;
  p.domain = build_domain(config);
  p.structure = build_structure(config);
  p.graph = std::make_unique<MetricGraph>(p.domain, *p.structure, config.stencil());
  p.g = make_boundary_data(*p.graph, build_boundary_values(config, *p.graph));
  return p;
}

void write_field_csv(const std::filesystem::path& path, const GridDomain& domain, std::span<const double> u,
                     const std::string& value_column) {
  if (u.size() != static_cast<std::size_t>(domain.size())) throw InputError("field size does not match the domain");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "x_index,y_index,x,y," << value_column << "\n";
  for (int x : domain.closure_nodes()) {
    const Vec2 p = domain.position(x);
    out << domain.ix(x) << ',' << domain.iy(x) << ',' << fmt17(p.x) << ',' << fmt17(p.y) << ',' << fmt17(u[x]) << "\n";
  }
}

ScalarField read_field_csv(const std::filesystem::path& path, const GridDomain& domain) {
  const auto rows = read_numeric_csv(path);
  ScalarField u(domain.size(), kNaN);
  std::vector<char> seen(domain.size(), 0);
  for (const auto& row : rows) {
    if (row.size() != 5) throw InputError("solution CSV rows need 5 columns (x_index,y_index,x,y,value)");
    const int i = static_cast<int>(row[0]);
    const int j = static_cast<int>(row[1]);
    if (row[0] != i || row[1] != j || !domain.contains(i, j)) {
      throw InputError("solution CSV: node index outside the domain");
    }
    const int x = domain.node(i, j);
    if (!domain.in_closure(x)) throw InputError("solution CSV: node outside the closure of the domain");
    if (seen[x]) throw InputError("solution CSV: duplicate node");
    seen[x] = 1;
    u[x] = row[4];
  }
  for (int x : domain.closure_nodes()) {
    if (!seen[x]) throw InputError("solution CSV does not cover the domain (shape mismatch)");
    if (!std::isfinite(u[x])) throw InputError("solution CSV holds a non-finite value");
  }
  return u;
}

json solve_report_json(const SolveReport& report, bool timing) {
  json stages = json::array();
  int total = 0;
  for (const auto& s : report.stages) {
    stages.push_back({{"radius", s.radius},
                      {"iterations", s.iterations},
                      {"residual", s.residual},
                      {"error_estimate", null_if_nonfinite(s.error_estimate)},
                      {"converged", s.converged}});
    total += s.iterations;
  }
  json j;
  j["converged"] = report.converged;
  j["tol"] = report.tol;
  j["residual"] = report.final_residual;
  j["iterations"] = total;
  j["stages"] = stages;
  j["wall_ms"] = timing ? json(report.wall_ms) : json(nullptr);
  j["max_log"] = report.max_log;
  j["min_log"] = report.min_log;
  return j;
}

int run_solve(const ProblemConfig& config) {
  return guarded([&] {
    const Problem p = build_problem(config);
    const SolverConfig sc = config.solver_config();
    const SolveResult result = solve(*p.graph, p.g, sc);
    const auto dir = config.resolve(config.output.directory);
    ensure_directory(dir);
    write_field_csv(dir / "u.csv", p.domain, result.u);
    if (config.output.mcshane) {
      write_field_csv(dir / "psi.csv", p.domain, mcshane_upper(p.g, *p.graph));
      write_field_csv(dir / "phi.csv", p.domain, mcshane_lower(p.g, *p.graph));
    }
    json report = solve_report_json(result.report, config.output.timing);
    report["boundary"] = {{"nodes", p.g.nodes.size()}, {"lipschitz", p.g.lip_const}, {"oscillation", p.g.oscillation()}};
    report["problem"] = {{"nx", p.domain.nx()},
                         {"ny", p.domain.ny()},
                         {"h", p.domain.h()},
                         {"stencil", config.domain.stencil},
                         {"family", config.structure.family},
                         {"boundary", config.boundary.kind},
                         {"radii", sc.radii}};
    write_json(dir / "report.json", report);
    if (!result.report.converged) {
      std::cerr << "solver did not converge within solver.max_iter sweeps\n";
      return static_cast<int>(kExitNotConverged);
    }
    return static_cast<int>(kExitOk);
  });
}

json verify_field(const ProblemConfig& config, const Problem& p, std::span<const double> u) {
  const MetricGraph& graph = *p.graph;
  const double h = p.domain.h();
  const double r = config.verify.radius_h * h;
  const Tolerances tol = Tolerances::for_graph(graph, config.solver.radii_h.back() * h);
  const std::uint64_t seed = config.verify.seed;
  json checks = json::array();
  bool all = true;
  for (const auto& name : config.verify.checks) {
    CheckReport report;
    if (name == "cone_comparison") {
      report = check_cone_comparison(u, graph, config.verify.cone_samples, seed, tol);
    } else if (name == "best_extension") {
      report = check_best_extension(u, graph, config.verify.subdomain_samples, seed + 1, tol);
    } else if (name == "prop31") {
      report = check_prop31(u, *p.structure, graph, r);
    } else if (name == "minimality") {
      report = check_minimality_vs_competitors(u, *p.structure, graph, config.verify.competitors, seed + 2, tol);
    } else {
      const SlopeBalance b = slope_balance(u, graph, r);
      const double bound = 3.0 * h / r;
      report.name = "slope_balance";
      report.passed = b.nodes_checked == 0 || b.value <= bound;
      report.margin = b.nodes_checked == 0 ? bound : bound - b.value;
      report.details = {{"r", r}, {"bound", bound}, {"nodes", b.nodes_checked}};
      report.witness = nullptr;
      if (!report.passed) report.witness = {{"node", b.node}, {"value", b.value}};
    }
    all = all && report.passed;
    checks.push_back(report.to_json());
  }
  return {{"passed", all}, {"checks", checks}};
}

int run_verify(const ProblemConfig& config, const std::filesystem::path& solution) {
  return guarded([&] {
    const Problem p = build_problem(config);
    const ScalarField u = read_field_csv(solution, p.domain);
    json out = verify_field(config, p, u);
    out["solution"] = solution.filename().string();
    const bool all = out["passed"].get<bool>();
    const auto dir = config.resolve(config.output.directory);
    ensure_directory(dir);
    write_json(dir / "verify.json", out);
    return static_cast<int>(all ? kExitOk : kExitCheckFailed);
  });
}

int run_distance(const ProblemConfig& config, std::pair<int, int> source) {
  return guarded([&] {
    const Problem p = build_problem(config);
    const auto [i, j] = source;
    if (!p.domain.contains(i, j)) throw InputError("source (" + std::to_string(i) + "," + std::to_string(j) + ") outside the grid");
    const DistanceField d = p.graph->shortest_distance(p.domain.node(i, j));
    const auto dir = config.resolve(config.output.directory);
    ensure_directory(dir);
    std::ofstream out(dir / "dist.csv", std::ios::binary);
    if (!out) throw InputError("cannot write dist.csv");
    out << "x_index,y_index,x,y,distance\n";
    for (int x = 0; x < p.domain.size(); ++x) {
      const Vec2 pos = p.domain.position(x);
      out << p.domain.ix(x) << ',' << p.domain.iy(x) << ',' << fmt17(pos.x) << ',' << fmt17(pos.y) << ','
          << fmt17(d.values[x]) << "\n";
    }
    return static_cast<int>(kExitOk);
  });
}

}  // namespace famle
