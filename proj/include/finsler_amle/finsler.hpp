#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finsler_amle/duality.hpp"
#include "finsler_amle/geometry.hpp"

namespace famle {

enum class Family { EuclideanScaled, Riemannian, PNorm, PiecewiseConstantNorm, CustomTable };

std::string_view family_name(Family family);
/// Accepts the kebab-case names ("euclidean-scaled", "riemannian", "p-norm",
/// "piecewise-constant-norm", "custom-table"); throws InputError otherwise.
Family parse_family(std::string_view name);

/// Uniform comparability with the Euclidean norm: alpha |v| <= F(x, v) <= beta |v|.
struct EllipticityBounds {
  double alpha = 1.0;
  double beta = 1.0;
  bool operator==(const EllipticityBounds&) const = default;
};

/// Node lattice carrying per-cell parameters. Cell (i, j) is the square of
/// side h centred on node (i, j); node (0, 0) sits at `origin`.
struct Lattice {
  int nx = 0;
  int ny = 0;
  double h = 1.0;
  Vec2 origin{};

  int size() const { return nx * ny; }
  Vec2 position(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
  bool operator==(const Lattice&) const = default;
};

/// Palette entry of the piecewise-constant family:
/// v -> || diag(s1, s2) R(-theta) v ||_p, with p in [1, inf].
struct NormSpec {
  double p = 2.0;
  double s1 = 1.0;
  double s2 = 1.0;
  double theta = 0.0;

  double eval(Vec2 v) const;
  /// Valid (not necessarily tight) ellipticity constants.
  EllipticityBounds bounds() const;
  bool operator==(const NormSpec&) const = default;
};

/// lp norm of a plane vector; p = infinity gives the max norm.
double lp_norm(Vec2 v, double p);
/// Conjugate exponent q with 1/p + 1/q = 1.
double conjugate_exponent(double p);

/// How parameters vary between lattice nodes: constant on each cell, or
/// bilinear between nodes (continuous; produced by mollify).
enum class Interpolation { Piecewise, Bilinear };

class FinslerStructure;

/// F(x, .) frozen at one point x.
class LocalNorm {
 public:
  static constexpr int kMaxStride = 256;

  double eval(Vec2 v) const;
  double dual(Vec2 w) const;
  double double_dual(Vec2 v) const;
  std::span<const double> params() const { return {params_.data(), static_cast<std::size_t>(stride_)}; }

 private:
  friend class FinslerStructure;
  double numeric_dual(Vec2 w) const;
  double numeric_double_dual(Vec2 v) const;

  const FinslerStructure* owner_ = nullptr;
  std::array<double, kMaxStride> params_{};
  int stride_ = 0;
};

/// An admissible Finsler structure on a rectangle, stored as per-cell
/// parameter records. Every family is linear in its parameters in the sense
/// that convex combinations of records stay admissible and keep the
/// ellipticity constants inside the range of the combined records; bilinear
/// interpolation and mollification rely on this.
///
/// Parameter records (one per lattice node, `stride()` doubles):
///   euclidean-scaled   s                 F = s |v|
///   riemannian         a11, a12, a22     F = <A v, v>^(1/2)
///   p-norm             s                 F = s ||v||_p  (p shared)
///   piecewise-constant weights[palette]  F = sum_i w_i N_i(v)
///   custom-table       T_0 .. T_{K-1}    F = polygon gauge with F(u_k) = T_k,
///                                        u_k = (cos k pi/K, sin k pi/K)
///
/// Values are immutable after construction and safe to share across threads.
class FinslerStructure {
 public:
  static FinslerStructure euclidean_scaled(Lattice lattice, std::vector<double> scales);
  static FinslerStructure riemannian(Lattice lattice, const std::vector<Sym2>& matrices);
  static FinslerStructure p_norm(Lattice lattice, double p, std::vector<double> scales);
  static FinslerStructure piecewise_norm(Lattice lattice, std::vector<NormSpec> palette,
                                         const std::vector<int>& labels);
  /// `values` holds K entries per node, node-major.
  static FinslerStructure custom_table(Lattice lattice, int directions, std::vector<double> values);
  /// Generic constructor from raw records (used by the CSV loader and mollify).
  static FinslerStructure from_records(Family family, Lattice lattice, int stride, std::vector<double> records,
                                       double p = 2.0, std::vector<NormSpec> palette = {},
                                       Interpolation interpolation = Interpolation::Piecewise);

  Family family() const { return family_; }
  const Lattice& lattice() const { return lattice_; }
  Interpolation interpolation() const { return interpolation_; }
  const EllipticityBounds& bounds() const { return bounds_; }
  /// Constants of the dual: F*(x, w) lies in [|w| / beta, |w| / alpha].
  EllipticityBounds dual_bounds() const { return {1.0 / bounds_.beta, 1.0 / bounds_.alpha}; }
  int stride() const { return stride_; }
  double p() const { return p_; }
  const std::vector<NormSpec>& palette() const { return palette_; }
  const std::vector<double>& records() const { return records_; }
  std::span<const double> cell_params(int i, int j) const;
  bool has_closed_form_dual() const { return family_ != Family::PiecewiseConstantNorm; }
  bool is_constant() const;

  const DualOptions& dual_options() const { return dual_options_; }
  FinslerStructure with_dual_options(DualOptions options) const;

  /// Parameters at point x. Throws DomainError outside the lattice cells.
  LocalNorm at(Vec2 x) const;
  double eval(Vec2 x, Vec2 v) const;
  /// F*(x, w) = sup { <v, w> : F(x, v) <= 1 }. Closed form where available,
  /// angular maximization of <w, v / F(x, v)> otherwise.
  double dual_eval(Vec2 x, Vec2 w) const;
  /// (F*)*(x, v) by the same maximization applied to the dual.
  double double_dual_eval(Vec2 x, Vec2 v) const;

  /// Box-kernel average of the parameter records over [x - eps, x + eps]^2
  /// (cells weighted by overlap area, clipped to the lattice). The result
  /// interpolates bilinearly between nodes. Throws DegenerateInputError when
  /// epsilon is below the cell size.
  FinslerStructure mollify(double epsilon) const;

  // Support for LocalNorm.
  std::span<const Vec2> table_directions() const { return table_dirs_; }

 private:
  FinslerStructure() = default;
  void validate_and_bound();
  EllipticityBounds record_bounds(std::span<const double> record) const;

  Family family_ = Family::EuclideanScaled;
  Lattice lattice_{};
  Interpolation interpolation_ = Interpolation::Piecewise;
  int stride_ = 1;
  std::vector<double> records_;
  double p_ = 2.0;
  std::vector<NormSpec> palette_;
  std::vector<Vec2> table_dirs_;
  EllipticityBounds bounds_{};
  DualOptions dual_options_{};
};

}  // namespace famle
