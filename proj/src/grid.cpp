#include "finsler_amle/grid.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "finsler_amle/errors.hpp"

namespace famle {

namespace {

constexpr std::array<Offset, 8> kEight{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
constexpr std::array<Offset, 16> kSixteen{{{1, 0},
                                           {-1, 0},
                                           {0, 1},
                                           {0, -1},
                                           {1, 1},
                                           {-1, -1},
                                           {1, -1},
                                           {-1, 1},
                                           {2, 1},
                                           {-2, -1},
                                           {1, 2},
                                           {-1, -2},
                                           {-1, 2},
                                           {1, -2},
                                           {-2, 1},
                                           {2, -1}}};

}  // namespace

std::span<const Offset> stencil_offsets(Stencil stencil) {
  if (stencil == Stencil::Sixteen) return kSixteen;
  return kEight;
}

int stencil_reach(Stencil stencil) { return stencil == Stencil::Sixteen ? 2 : 1; }

double stencil_anisotropy(Stencil stencil) {
  if (stencil == Stencil::Sixteen) return 1.0 / std::cos(0.5 * std::atan(0.5));
  return 1.0 / std::cos(std::numbers::pi / 8.0);
}

GridDomain::GridDomain(int nx, int ny, double h, Vec2 origin, std::vector<Kind> kinds)
    : nx_(nx), ny_(ny), h_(h), origin_(origin), kinds_(std::move(kinds)) {
  if (nx < 1 || ny < 1) throw ConstructionError("grid needs at least one node per axis");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConstructionError("grid spacing must be positive");
  if (!is_finite(origin)) throw ConstructionError("grid origin must be finite");
  if (kinds_.size() != static_cast<std::size_t>(nx) * ny) {
    throw ConstructionError("mask size does not match the node count");
  }
  for (int n = 0; n < size(); ++n) {
    if (kinds_[n] == Kind::Interior) interior_.push_back(n);
    if (kinds_[n] == Kind::Boundary) boundary_.push_back(n);
    if (kinds_[n] != Kind::Ambient) closure_.push_back(n);
  }
}

GridDomain GridDomain::rectangle(int nx, int ny, double h, Vec2 origin, int margin, int boundary_width) {
  if (margin < 0 || boundary_width < 1) throw ConstructionError("margin must be >= 0 and boundary width >= 1");
  if (nx - 2 * margin < 2 * boundary_width + 1 || ny - 2 * margin < 2 * boundary_width + 1) {
    throw ConstructionError("rectangle too small for its margin and boundary width");
  }
  std::vector<Kind> kinds(static_cast<std::size_t>(nx) * ny, Kind::Ambient);
  for (int j = margin; j < ny - margin; ++j) {
    for (int i = margin; i < nx - margin; ++i) {
      const int depth = std::min({i - margin, j - margin, nx - 1 - margin - i, ny - 1 - margin - j});
      kinds[static_cast<std::size_t>(j) * nx + i] = depth < boundary_width ? Kind::Boundary : Kind::Interior;
    }
  }
  return GridDomain(nx, ny, h, origin, std::move(kinds));
}

GridDomain GridDomain::disk(int nx, int ny, double h, Vec2 origin, Vec2 center, double radius, int boundary_width) {
  std::vector<Kind> kinds(static_cast<std::size_t>(nx) * ny, Kind::Ambient);
  auto inside = [&](int i, int j) {
    const Vec2 p{origin.x + i * h, origin.y + j * h};
    return norm(p - center) < radius;
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!inside(i, j)) continue;
      if (i < boundary_width || j < boundary_width || i >= nx - boundary_width || j >= ny - boundary_width) {
        throw ConstructionError("disk does not fit inside the grid with its boundary layer");
      }
      kinds[static_cast<std::size_t>(j) * nx + i] = Kind::Interior;
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      auto& k = kinds[static_cast<std::size_t>(j) * nx + i];
      if (k == Kind::Interior) continue;
      for (int dj = -boundary_width; dj <= boundary_width && k == Kind::Ambient; ++dj) {
        for (int di = -boundary_width; di <= boundary_width; ++di) {
          const int a = i + di;
          const int b = j + dj;
          if (a >= 0 && b >= 0 && a < nx && b < ny && inside(a, b)) {
            k = Kind::Boundary;
            break;
          }
        }
      }
    }
  }
  return GridDomain(nx, ny, h, origin, std::move(kinds));
}

GridDomain GridDomain::point_boundary(int nx, int ny, double h, Vec2 origin, std::span<const int> boundary_nodes) {
  std::vector<Kind> kinds(static_cast<std::size_t>(nx) * ny, Kind::Interior);
  for (int n : boundary_nodes) {
    if (n < 0 || n >= nx * ny) throw ConstructionError("boundary node outside the grid");
    kinds[n] = Kind::Boundary;
  }
  return GridDomain(nx, ny, h, origin, std::move(kinds));
}

void GridDomain::validate(Stencil stencil) const {
  if (interior_.empty()) throw ConstructionError("domain has no interior nodes");
  if (boundary_.empty()) throw ConstructionError("domain has no boundary nodes");
  const auto offsets = stencil_offsets(stencil);
  for (int n : interior_) {
    for (const Offset& o : offsets) {
      const int a = ix(n) + o.di;
      const int b = iy(n) + o.dj;
      if (!contains(a, b)) continue;
      if (!in_closure(node(a, b))) {
        throw ConstructionError("interior node (" + std::to_string(ix(n)) + ", " + std::to_string(iy(n)) +
                                ") has a stencil neighbour outside the closure; widen the boundary layer");
      }
    }
  }
  std::vector<char> seen(size(), 0);
  std::vector<int> stack{interior_.front()};
  seen[interior_.front()] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    ++reached;
    for (const Offset& o : offsets) {
      const int a = ix(n) + o.di;
      const int b = iy(n) + o.dj;
      if (!contains(a, b)) continue;
      const int m = node(a, b);
      if (is_interior(m) && !seen[m]) {
        seen[m] = 1;
        stack.push_back(m);
      }
    }
  }
  if (reached != interior_.size()) throw ConstructionError("interior is not connected in the stencil graph");
}

}  // namespace famle
