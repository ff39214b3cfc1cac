#include "finsler_amle/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "finsler_amle/errors.hpp"

namespace famle {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct BadValue {
  std::string message;
};

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v)) {
    throw BadValue{"expected a number, got '" + std::string(s) + "'"};
  }
  return v;
}

long long to_integer(std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw BadValue{"expected an integer, got '" + std::string(s) + "'"};
  }
  return v;
}

int to_int(std::string_view s) {
  const long long v = to_integer(s);
  if (v < -2147483647LL || v > 2147483647LL) throw BadValue{"integer out of range"};
  return static_cast<int>(v);
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw BadValue{"expected true or false, got '" + std::string(s) + "'"};
}

std::vector<double> to_doubles(std::string_view s) {
  std::vector<double> out;
  for (auto part : split(s, ',')) out.push_back(to_double(part));
  return out;
}

Vec2 to_vec2(std::string_view s) {
  const auto v = to_doubles(s);
  if (v.size() != 2) throw BadValue{"expected two comma-separated numbers"};
  return {v[0], v[1]};
}

std::pair<int, int> to_index_pair(std::string_view s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw BadValue{"expected an index pair i,j"};
  return {to_int(parts[0]), to_int(parts[1])};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + fmt(v[k]);
  return out;
}

using Setter = std::function<void(ProblemConfig&, std::string_view)>;
using Getter = std::function<std::optional<std::string>(const ProblemConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

const std::vector<Key>& keys() {
  using C = ProblemConfig;
  using S = std::string_view;
  using O = std::optional<std::string>;
  static const std::vector<Key> table = {
      {"domain.nx", [](C& c, S v) { c.domain.nx = to_int(v); }, [](const C& c) -> O { return std::to_string(c.domain.nx); }},
      {"domain.ny", [](C& c, S v) { c.domain.ny = to_int(v); }, [](const C& c) -> O { return std::to_string(c.domain.ny); }},
      {"domain.h", [](C& c, S v) { c.domain.h = to_double(v); }, [](const C& c) -> O { return fmt(c.domain.h); }},
      {"domain.origin", [](C& c, S v) { c.domain.origin = to_vec2(v); },
       [](const C& c) -> O { return fmt(c.domain.origin.x) + "," + fmt(c.domain.origin.y); }},
      {"domain.shape", [](C& c, S v) { c.domain.shape = v; }, [](const C& c) -> O { return c.domain.shape; }},
      {"domain.margin", [](C& c, S v) { c.domain.margin = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.domain.margin); }},
      {"domain.boundary_width", [](C& c, S v) { c.domain.boundary_width = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.domain.boundary_width); }},
      {"domain.center", [](C& c, S v) { c.domain.center = to_vec2(v); },
       [](const C& c) -> O { return fmt(c.domain.center.x) + "," + fmt(c.domain.center.y); }},
      {"domain.radius", [](C& c, S v) { c.domain.radius = to_double(v); },
       [](const C& c) -> O { return fmt(c.domain.radius); }},
      {"domain.points",
       [](C& c, S v) {
         c.domain.points.clear();
         for (auto p : split(v, ';')) c.domain.points.push_back(to_index_pair(p));
       },
       [](const C& c) -> O {
         std::string out;
         for (std::size_t k = 0; k < c.domain.points.size(); ++k) {
           out += (k ? "; " : "") + std::to_string(c.domain.points[k].first) + "," +
                  std::to_string(c.domain.points[k].second);
         }
         return out;
       }},
      {"domain.stencil", [](C& c, S v) { c.domain.stencil = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.domain.stencil); }},

      {"structure.family", [](C& c, S v) { c.structure.family = v; }, [](const C& c) -> O { return c.structure.family; }},
      {"structure.scale", [](C& c, S v) { c.structure.scale = to_double(v); },
       [](const C& c) -> O { return fmt(c.structure.scale); }},
      {"structure.p", [](C& c, S v) { c.structure.p = to_double(v); }, [](const C& c) -> O { return fmt(c.structure.p); }},
      {"structure.matrix", [](C& c, S v) { c.structure.matrix = to_doubles(v); },
       [](const C& c) -> O { return fmt_list(c.structure.matrix); }},
      {"structure.table", [](C& c, S v) { c.structure.table = to_doubles(v); },
       [](const C& c) -> O { return fmt_list(c.structure.table); }},
      {"structure.palette",
       [](C& c, S v) {
         c.structure.palette.clear();
         for (auto entry : split(v, ';')) {
           const auto parts = split(entry, ':');
           if (parts.size() != 4) throw BadValue{"palette entries are p:s1:s2:theta"};
           c.structure.palette.push_back(
               {to_double(parts[0]), to_double(parts[1]), to_double(parts[2]), to_double(parts[3])});
         }
       },
       [](const C& c) -> O {
         std::string out;
         for (std::size_t k = 0; k < c.structure.palette.size(); ++k) {
           const auto& n = c.structure.palette[k];
           out += (k ? "; " : "") + fmt(n.p) + ":" + fmt(n.s1) + ":" + fmt(n.s2) + ":" + fmt(n.theta);
         }
         return out;
       }},
      {"structure.interface_x", [](C& c, S v) { c.structure.interface_x = to_double(v); },
       [](const C& c) -> O {
         if (!c.structure.interface_x) return std::nullopt;
         return fmt(*c.structure.interface_x);
       }},
      {"structure.scale_right", [](C& c, S v) { c.structure.scale_right = to_double(v); },
       [](const C& c) -> O { return fmt(c.structure.scale_right); }},
      {"structure.csv", [](C& c, S v) { c.structure.csv = v; }, [](const C& c) -> O { return c.structure.csv; }},
      {"structure.mollify", [](C& c, S v) { c.structure.mollify = to_double(v); },
       [](const C& c) -> O { return fmt(c.structure.mollify); }},

      {"boundary.kind", [](C& c, S v) { c.boundary.kind = v; }, [](const C& c) -> O { return c.boundary.kind; }},
      {"boundary.value", [](C& c, S v) { c.boundary.value = to_double(v); },
       [](const C& c) -> O { return fmt(c.boundary.value); }},
      {"boundary.gradient", [](C& c, S v) { c.boundary.gradient = to_vec2(v); },
       [](const C& c) -> O { return fmt(c.boundary.gradient.x) + "," + fmt(c.boundary.gradient.y); }},
      {"boundary.offset", [](C& c, S v) { c.boundary.offset = to_double(v); },
       [](const C& c) -> O { return fmt(c.boundary.offset); }},
      {"boundary.cone_vertex", [](C& c, S v) { c.boundary.cone_vertex = to_index_pair(v); },
       [](const C& c) -> O {
         return std::to_string(c.boundary.cone_vertex.first) + "," + std::to_string(c.boundary.cone_vertex.second);
       }},
      {"boundary.cone_slope", [](C& c, S v) { c.boundary.cone_slope = to_double(v); },
       [](const C& c) -> O { return fmt(c.boundary.cone_slope); }},
      {"boundary.values", [](C& c, S v) { c.boundary.values = to_doubles(v); },
       [](const C& c) -> O { return fmt_list(c.boundary.values); }},
      {"boundary.csv", [](C& c, S v) { c.boundary.csv = v; }, [](const C& c) -> O { return c.boundary.csv; }},

      {"solver.radii_h", [](C& c, S v) { c.solver.radii_h = to_doubles(v); },
       [](const C& c) -> O { return fmt_list(c.solver.radii_h); }},
      {"solver.tol", [](C& c, S v) { c.solver.tol = to_double(v); }, [](const C& c) -> O { return fmt(c.solver.tol); }},
      {"solver.max_iter", [](C& c, S v) { c.solver.max_iter = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.solver.max_iter); }},
      {"solver.sweep", [](C& c, S v) { c.solver.sweep = v; }, [](const C& c) -> O { return c.solver.sweep; }},
      {"solver.init", [](C& c, S v) { c.solver.init = v; }, [](const C& c) -> O { return c.solver.init; }},

      {"verify.checks",
       [](C& c, S v) {
         c.verify.checks.clear();
         for (auto part : split(v, ',')) c.verify.checks.emplace_back(part);
       },
       [](const C& c) -> O {
         std::string out;
         for (std::size_t k = 0; k < c.verify.checks.size(); ++k) out += (k ? "," : "") + c.verify.checks[k];
         return out;
       }},
      {"verify.cone_samples", [](C& c, S v) { c.verify.cone_samples = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.verify.cone_samples); }},
      {"verify.subdomain_samples", [](C& c, S v) { c.verify.subdomain_samples = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.verify.subdomain_samples); }},
      {"verify.competitors", [](C& c, S v) { c.verify.competitors = to_int(v); },
       [](const C& c) -> O { return std::to_string(c.verify.competitors); }},
      {"verify.seed",
       [](C& c, S v) {
         const long long s = to_integer(v);
         if (s < 0) throw BadValue{"seed must be nonnegative"};
         c.verify.seed = static_cast<std::uint64_t>(s);
       },
       [](const C& c) -> O { return std::to_string(c.verify.seed); }},
      {"verify.radius_h", [](C& c, S v) { c.verify.radius_h = to_double(v); },
       [](const C& c) -> O { return fmt(c.verify.radius_h); }},

      {"output.directory", [](C& c, S v) { c.output.directory = v; }, [](const C& c) -> O { return c.output.directory; }},
      {"output.mcshane", [](C& c, S v) { c.output.mcshane = to_bool(v); },
       [](const C& c) -> O { return c.output.mcshane ? "true" : "false"; }},
      {"output.timing", [](C& c, S v) { c.output.timing = to_bool(v); },
       [](const C& c) -> O { return c.output.timing ? "true" : "false"; }},
  };
  return table;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : keys()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

[[noreturn]] void fail(std::string_view key, const std::string& message) {
  throw ConfigError(std::string(key) + ": " + message);
}

const std::vector<std::string> kChecks = {"cone_comparison", "best_extension", "prop31", "minimality",
                                          "slope_balance"};

}  // namespace

double ProblemConfig::spacing() const {
  if (domain.h > 0.0) return domain.h;
  return 2.0 / (std::max(domain.nx, domain.ny) - 1);
}

SolverConfig ProblemConfig::solver_config() const {
  SolverConfig s;
  const double h = spacing();
  for (double r : solver.radii_h) s.radii.push_back(r * h);
  s.tol = solver.tol;
  s.max_iter = solver.max_iter;
  s.sweep = solver.sweep == "jacobi" ? Sweep::Jacobi : Sweep::GaussSeidel;
  s.init = solver.init == "upper" ? Initialization::Upper
           : solver.init == "lower" ? Initialization::Lower
                                    : Initialization::Midpoint;
  return s;
}

std::filesystem::path ProblemConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

void ProblemConfig::validate() const {
  if (domain.nx < 3) fail("domain.nx", "needs at least 3 nodes");
  if (domain.ny < 3) fail("domain.ny", "needs at least 3 nodes");
  if (static_cast<long long>(domain.nx) * domain.ny > 4'000'000) fail("domain.nx", "grid too large");
  if (!(domain.h >= 0.0) || !std::isfinite(domain.h)) fail("domain.h", "must be finite and >= 0 (0 selects 2/(n-1))");
  if (!std::isfinite(domain.origin.x) || !std::isfinite(domain.origin.y)) fail("domain.origin", "must be finite");
  if (domain.shape != "rectangle" && domain.shape != "disk" && domain.shape != "points") {
    fail("domain.shape", "unknown shape '" + domain.shape + "' (rectangle, disk, points)");
  }
  if (domain.margin < 0) fail("domain.margin", "must be >= 0");
  if (domain.boundary_width < 1) fail("domain.boundary_width", "must be >= 1");
  if (domain.stencil != 8 && domain.stencil != 16) fail("domain.stencil", "must be 8 or 16");
  if (domain.shape == "disk" && !(domain.radius > 0.0)) fail("domain.radius", "must be positive");
  if (domain.shape == "points") {
    if (domain.points.empty()) fail("domain.points", "needs at least one boundary point");
    for (const auto& [i, j] : domain.points) {
      if (i < 0 || j < 0 || i >= domain.nx || j >= domain.ny) fail("domain.points", "point outside the grid");
    }
  }

  try {
    parse_family(structure.family);
  } catch (const InputError&) {
    fail("structure.family", "unknown family '" + structure.family + "'");
  }
  if (!(structure.scale > 0.0) || !std::isfinite(structure.scale)) fail("structure.scale", "must be positive");
  if (!(structure.p >= 1.0)) fail("structure.p", "must be >= 1");
  if (structure.matrix.size() != 3) fail("structure.matrix", "expects a11,a12,a22");
  if (structure.interface_x && !(structure.scale_right > 0.0)) fail("structure.scale_right", "must be positive");
  if (structure.interface_x && structure.family != "euclidean-scaled" && structure.family != "p-norm") {
    fail("structure.interface_x", "only euclidean-scaled and p-norm support a two-media split");
  }
  if (structure.family == "custom-table" && structure.csv.empty() && structure.table.size() < 4) {
    fail("structure.table", "custom-table needs at least 4 values");
  }
  if (structure.family == "piecewise-constant-norm" && structure.palette.empty()) {
    fail("structure.palette", "piecewise-constant-norm needs a palette");
  }
  if (!(structure.mollify >= 0.0)) fail("structure.mollify", "must be >= 0");

  const std::vector<std::string> kinds{"constant", "linear", "aronsson", "cone", "values", "csv"};
  if (std::find(kinds.begin(), kinds.end(), boundary.kind) == kinds.end()) {
    fail("boundary.kind", "unknown generator '" + boundary.kind + "'");
  }
  if (boundary.kind == "values" && boundary.values.size() != domain.points.size()) {
    fail("boundary.values", "needs one value per domain.points entry");
  }
  if (boundary.kind == "csv" && boundary.csv.empty()) fail("boundary.csv", "path required for kind = csv");
  if (boundary.kind == "cone") {
    const auto [i, j] = boundary.cone_vertex;
    if (i < 0 || j < 0 || i >= domain.nx || j >= domain.ny) fail("boundary.cone_vertex", "vertex outside the grid");
  }

  if (solver.radii_h.empty()) fail("solver.radii_h", "radius schedule is empty");
  for (std::size_t k = 0; k < solver.radii_h.size(); ++k) {
    if (!(solver.radii_h[k] >= 2.0)) fail("solver.radii_h", "every radius must be at least 2 (in units of h)");
    if (k > 0 && !(solver.radii_h[k] < solver.radii_h[k - 1])) fail("solver.radii_h", "must be strictly decreasing");
  }
  if (!std::isfinite(solver.tol)) fail("solver.tol", "must be finite");
  if (solver.max_iter < 1) fail("solver.max_iter", "must be positive");
  if (solver.sweep != "gauss-seidel" && solver.sweep != "jacobi") fail("solver.sweep", "gauss-seidel or jacobi");
  if (solver.init != "midpoint" && solver.init != "upper" && solver.init != "lower") {
    fail("solver.init", "midpoint, upper or lower");
  }

  for (const auto& c : verify.checks) {
    if (std::find(kChecks.begin(), kChecks.end(), c) == kChecks.end()) fail("verify.checks", "unknown check '" + c + "'");
  }
  if (verify.cone_samples < 0) fail("verify.cone_samples", "must be >= 0");
  if (verify.subdomain_samples < 0) fail("verify.subdomain_samples", "must be >= 0");
  if (verify.competitors < 0) fail("verify.competitors", "must be >= 0");
  if (!(verify.radius_h >= 2.0)) fail("verify.radius_h", "must be at least 2");
  if (output.directory.empty()) fail("output.directory", "must not be empty");
}

ProblemConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ProblemConfig config;
  config.base_dir = base_dir;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  bool seen_key = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "preset") {
      if (seen_key) throw ConfigError(where + "preset: must come before any other key");
      try {
        config = preset(value);
      } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
      }
      config.base_dir = base_dir;
      seen_key = true;
      continue;
    }
    seen_key = true;
    const Key* k = find_key(key);
    if (!k) throw ConfigError(where + std::string(key) + ": unknown key");
    try {
      k->set(config, value);
    } catch (const BadValue& e) {
      throw ConfigError(where + std::string(key) + ": " + e.message);
    }
  }
  config.validate();
  return config;
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::string serialize_config(const ProblemConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    const auto value = k.get(config);
    if (!value) continue;
    const std::string_view name(k.name);
    const std::string prefix(name.substr(0, name.find('.')));
    if (prefix != section) {
      if (!section.empty()) out += "\n";
      out += "# " + prefix + "\n";
      section = prefix;
    }
    out += std::string(name) + " = " + *value + "\n";
  }
  return out;
}

std::vector<std::string> preset_names() { return {"aronsson", "two-media", "riemannian-cone", "constant", "three-point"}; }

ProblemConfig preset(std::string_view name) {
  ProblemConfig c;
  c.domain.h = 2.0 / 63.0;
  if (name == "aronsson") {
    c.boundary.kind = "aronsson";
    c.output.directory = "out/aronsson";
  } else if (name == "two-media") {
    // Even node counts keep every node off the interface x = 0.
    c.structure.interface_x = 0.0;
    c.structure.scale = 1.0;
    c.structure.scale_right = 3.0;
    c.boundary.kind = "aronsson";
    c.output.directory = "out/two-media";
  } else if (name == "riemannian-cone") {
    // 64 x 64 closure inside an 8-node ambient margin; the cone vertex sits in the margin.
    c.domain.nx = c.domain.ny = 80;
    c.domain.margin = 8;
    c.domain.origin = {-1.0 - 8.0 * c.domain.h, -1.0 - 8.0 * c.domain.h};
    c.domain.stencil = 16;
    c.domain.boundary_width = 2;
    c.structure.family = "riemannian";
    c.structure.matrix = {4.0, 0.0, 1.0};
    c.boundary.kind = "cone";
    c.boundary.cone_vertex = {1, 1};
    c.boundary.cone_slope = 1.0;
    c.output.directory = "out/riemannian-cone";
  } else if (name == "constant") {
    c.domain.nx = c.domain.ny = 33;
    c.domain.h = 2.0 / 32.0;
    c.boundary.kind = "constant";
    c.boundary.value = 1.0;
    c.output.directory = "out/constant";
  } else if (name == "three-point") {
    c.domain.nx = c.domain.ny = 33;
    c.domain.h = 2.0 / 32.0;
    c.domain.shape = "points";
    c.domain.points = {{5, 6}, {27, 10}, {14, 28}};
    c.boundary.kind = "values";
    c.boundary.values = {0.0, 1.0, 0.3};
    c.verify.checks = {"best_extension"};
    c.output.directory = "out/three-point";
  } else {
    throw ConfigError("preset: unknown preset '" + std::string(name) + "'");
  }
  return c;
}

}  // namespace famle
