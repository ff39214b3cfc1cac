#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "finsler_amle/finsler.hpp"
#include "finsler_amle/geometry.hpp"

namespace famle {

enum class Stencil { Eight = 8, Sixteen = 16 };

struct Offset {
  int di = 0;
  int dj = 0;
};

/// Neighbour offsets of a stencil. Opposite offsets are stored at
/// positions k and k ^ 1.
std::span<const Offset> stencil_offsets(Stencil stencil);
/// Chebyshev reach of a stencil (1 for 8-neighbour, 2 for 16-neighbour).
int stencil_reach(Stencil stencil);
/// Worst ratio of stencil-path length to straight-line length for a norm:
/// sec(pi/8) for the 8-neighbour stencil, sec(atan(1/2)/2) for 16.
double stencil_anisotropy(Stencil stencil);

/// Rectangular node lattice. Every node belongs to the ambient region;
/// a subset is the open set U (interior) and another its boundary. Nodes in
/// neither mask are ambient nodes outside the closure of U.
class GridDomain {
 public:
  enum class Kind : std::uint8_t { Ambient = 0, Interior = 1, Boundary = 2 };

  GridDomain() = default;
  GridDomain(int nx, int ny, double h, Vec2 origin, std::vector<Kind> kinds);

  /// Closure of U is the block of nodes [margin, nx - margin) x [margin, ny - margin);
  /// its outermost `boundary_width` rings form the boundary.
  static GridDomain rectangle(int nx, int ny, double h, Vec2 origin, int margin = 0, int boundary_width = 1);
  /// U = nodes strictly inside the disk; the boundary is every other node
  /// within `boundary_width` (Chebyshev) of U.
  static GridDomain disk(int nx, int ny, double h, Vec2 origin, Vec2 center, double radius, int boundary_width = 1);
  /// Boundary = the given nodes, U = every other node.
  static GridDomain point_boundary(int nx, int ny, double h, Vec2 origin, std::span<const int> boundary_nodes);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  double h() const { return h_; }
  Vec2 origin() const { return origin_; }
  Lattice lattice() const { return {nx_, ny_, h_, origin_}; }

  int node(int i, int j) const { return j * nx_ + i; }
  int ix(int node) const { return node % nx_; }
  int iy(int node) const { return node / nx_; }
  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  Vec2 position(int node) const { return {origin_.x + ix(node) * h_, origin_.y + iy(node) * h_}; }

  Kind kind(int node) const { return kinds_[node]; }
  bool is_interior(int node) const { return kinds_[node] == Kind::Interior; }
  bool is_boundary(int node) const { return kinds_[node] == Kind::Boundary; }
  bool in_closure(int node) const { return kinds_[node] != Kind::Ambient; }

  const std::vector<int>& interior_nodes() const { return interior_; }
  const std::vector<int>& boundary_nodes() const { return boundary_; }
  const std::vector<int>& closure_nodes() const { return closure_; }
  const std::vector<Kind>& kinds() const { return kinds_; }

  /// Checks the invariants for a stencil: every interior node's in-grid
  /// stencil neighbours lie in the closure, and the interior is connected.
  /// Throws ConstructionError.
  void validate(Stencil stencil) const;

  bool operator==(const GridDomain& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && h_ == o.h_ && origin_ == o.origin_ && kinds_ == o.kinds_;
  }

 private:
  int nx_ = 0;
  int ny_ = 0;
  double h_ = 1.0;
  Vec2 origin_{};
  std::vector<Kind> kinds_;
  std::vector<int> interior_;
  std::vector<int> boundary_;
  std::vector<int> closure_;
};

}  // namespace famle
