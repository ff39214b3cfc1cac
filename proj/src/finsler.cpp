#include "finsler_amle/finsler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "finsler_amle/errors.hpp"

namespace famle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp01(double t) { return std::min(1.0, std::max(0.0, t)); }

// Overlap length of [a0, a1] and [b0, b1].
double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

std::string_view family_name(Family family) {
  switch (family) {
    case Family::EuclideanScaled: return "euclidean-scaled";
    case Family::Riemannian: return "riemannian";
    case Family::PNorm: return "p-norm";
    case Family::PiecewiseConstantNorm: return "piecewise-constant-norm";
    case Family::CustomTable: return "custom-table";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::EuclideanScaled, Family::Riemannian, Family::PNorm, Family::PiecewiseConstantNorm,
                   Family::CustomTable}) {
    if (family_name(f) == name) return f;
  }
  throw InputError("unknown Finsler family '" + std::string(name) + "'");
}

double lp_norm(Vec2 v, double p) {
  const double ax = std::abs(v.x);
  const double ay = std::abs(v.y);
  if (std::isinf(p)) return std::max(ax, ay);
  if (p == 1.0) return ax + ay;
  if (p == 2.0) return std::hypot(ax, ay);
  const double m = std::max(ax, ay);
  if (m == 0.0) return 0.0;
  return m * std::pow(std::pow(ax / m, p) + std::pow(ay / m, p), 1.0 / p);
}

double conjugate_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

double NormSpec::eval(Vec2 v) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Vec2 rotated{c * v.x + s * v.y, -s * v.x + c * v.y};
  return lp_norm({s1 * rotated.x, s2 * rotated.y}, p);
}

EllipticityBounds NormSpec::bounds() const {
  // ||z||_p over the unit circle ranges between 1 and 2^(1/p - 1/2).
  const double e = std::isinf(p) ? -0.5 : 1.0 / p - 0.5;
  const double k = std::pow(2.0, e);
  return {std::min(s1, s2) * std::min(1.0, k), std::max(s1, s2) * std::max(1.0, k)};
}

// ---------------------------------------------------------------------------
// LocalNorm

double LocalNorm::eval(Vec2 v) const {
  const auto& s = *owner_;
  switch (s.family()) {
    case Family::EuclideanScaled:
      return params_[0] * norm(v);
    case Family::Riemannian: {
      const Sym2 a{params_[0], params_[1], params_[2]};
      return std::sqrt(std::max(0.0, a.quadratic(v)));
    }
    case Family::PNorm:
      return params_[0] * lp_norm(v, s.p());
    case Family::PiecewiseConstantNorm: {
      double total = 0.0;
      const auto& palette = s.palette();
      for (int i = 0; i < stride_; ++i) {
        if (params_[i] != 0.0) total += params_[i] * palette[i].eval(v);
      }
      return total;
    }
    case Family::CustomTable: {
      if (v.x == 0.0 && v.y == 0.0) return 0.0;
      // Fold into the upper half plane; F is even.
      Vec2 w = v;
      if (w.y < 0.0 || (w.y == 0.0 && w.x < 0.0)) w = -w;
      const int k_count = stride_;
      const double step = std::numbers::pi / k_count;
      double angle = std::atan2(w.y, w.x);
      int k = static_cast<int>(std::floor(angle / step));
      k = std::clamp(k, 0, k_count - 1);
      const auto dirs = s.table_directions();
      const Vec2 a = dirs[k];
      const Vec2 b = k + 1 < k_count ? dirs[k + 1] : -dirs[0];
      const double tb = params_[(k + 1) % k_count];
      const double det = cross(a, b);
      const double ca = cross(w, b) / det;
      const double cb = cross(a, w) / det;
      return ca * params_[k] + cb * tb;
    }
  }
  return 0.0;
}

double LocalNorm::dual(Vec2 w) const {
  const auto& s = *owner_;
  switch (s.family()) {
    case Family::EuclideanScaled:
      return norm(w) / params_[0];
    case Family::Riemannian: {
      const Sym2 a{params_[0], params_[1], params_[2]};
      return std::sqrt(std::max(0.0, a.inverse().quadratic(w)));
    }
    case Family::PNorm:
      return lp_norm(w, conjugate_exponent(s.p())) / params_[0];
    case Family::CustomTable: {
      // Support function of the polygonal unit ball: the maximum of
      // <w, v / F(v)> is attained at a vertex u_k / T_k.
      const auto dirs = s.table_directions();
      double best = 0.0;
      for (int k = 0; k < stride_; ++k) best = std::max(best, std::abs(dot(w, dirs[k])) / params_[k]);
      return best;
    }
    case Family::PiecewiseConstantNorm:
      return numeric_dual(w);
  }
  return 0.0;
}

double LocalNorm::numeric_dual(Vec2 w) const {
  if (w.x == 0.0 && w.y == 0.0) return 0.0;
  auto objective = [&](double theta) {
    const Vec2 u = unit_direction(theta);
    return std::abs(dot(w, u)) / eval(u);
  };
  return maximize_half_circle(objective, owner_->dual_options()).value;
}

double LocalNorm::double_dual(Vec2 v) const {
  if (v.x == 0.0 && v.y == 0.0) return 0.0;
  if (!owner_->has_closed_form_dual()) return numeric_double_dual(v);
  auto objective = [&](double theta) {
    const Vec2 u = unit_direction(theta);
    return std::abs(dot(v, u)) / dual(u);
  };
  return maximize_half_circle(objective, owner_->dual_options()).value;
}

// Nested maximization for the numeric family. The primal unit sphere is
// tabulated once; the inner maximum over the table is tracked by hill
// climbing from the previous argmax (the sequence |<w, b_k>| is unimodal on
// the cycle), then refined by golden section against F itself.
double LocalNorm::numeric_double_dual(Vec2 v) const {
  const DualOptions& opt = owner_->dual_options();
  const int n = opt.directions;
  const double step = std::numbers::pi / n;
  std::vector<Vec2> sphere(n);
  for (int k = 0; k < n; ++k) {
    const Vec2 u = unit_direction(k * step);
    const double f = eval(u);
    if (!(f > 0.0) || !std::isfinite(f)) {
      std::ostringstream msg;
      msg << "double dual: F(u) = " << f << " at theta=" << k * step;
      throw NumericError(msg.str());
    }
    sphere[k] = u * (1.0 / f);
  }
  auto table_value = [&](Vec2 w, int k) {
    const int idx = ((k % n) + n) % n;
    return std::abs(dot(w, sphere[idx]));
  };
  int hint = -1;
  auto inner_coarse = [&](Vec2 w) {
    if (hint < 0) {
      hint = 0;
      double best = table_value(w, 0);
      for (int k = 1; k < n; ++k) {
        const double t = table_value(w, k);
        if (t > best) {
          best = t;
          hint = k;
        }
      }
      return best;
    }
    double best = table_value(w, hint);
    for (int dir : {1, -1}) {
      while (true) {
        const double t = table_value(w, hint + dir);
        if (t > best) {
          best = t;
          hint = ((hint + dir) % n + n) % n;
        } else {
          break;
        }
      }
    }
    return best;
  };
  auto inner_full = [&](Vec2 w) {
    const double coarse = inner_coarse(w);
    const double center = hint * step;
    auto objective = [&](double theta) {
      const Vec2 u = unit_direction(theta);
      return std::abs(dot(w, u)) / eval(u);
    };
    const CircleMaximum refined = golden_maximize(objective, center - step, center + step, opt.refine_iterations);
    return std::max(coarse, refined.value);
  };

  int best_j = 0;
  double best_value = -1.0;
  for (int j = 0; j < n; ++j) {
    const Vec2 u = unit_direction(j * step);
    const double value = std::abs(dot(v, u)) / inner_coarse(u);
    if (!std::isfinite(value)) throw NumericError("double dual: non-finite outer objective");
    if (value > best_value) {
      best_value = value;
      best_j = j;
    }
  }
  auto outer = [&](double phi) {
    const Vec2 u = unit_direction(phi);
    return std::abs(dot(v, u)) / inner_full(u);
  };
  const double at_sample = outer(best_j * step);
  const CircleMaximum refined =
      golden_maximize(outer, best_j * step - step, best_j * step + step, opt.refine_iterations);
  return std::max(at_sample, refined.value);
}

// ---------------------------------------------------------------------------
// FinslerStructure

FinslerStructure FinslerStructure::from_records(Family family, Lattice lattice, int stride,
                                                std::vector<double> records, double p,
                                                std::vector<NormSpec> palette, Interpolation interpolation) {
  FinslerStructure s;
  s.family_ = family;
  s.lattice_ = lattice;
  s.stride_ = stride;
  s.records_ = std::move(records);
  s.p_ = p;
  s.palette_ = std::move(palette);
  s.interpolation_ = interpolation;
  s.validate_and_bound();
  return s;
}

FinslerStructure FinslerStructure::euclidean_scaled(Lattice lattice, std::vector<double> scales) {
  return from_records(Family::EuclideanScaled, lattice, 1, std::move(scales));
}

FinslerStructure FinslerStructure::riemannian(Lattice lattice, const std::vector<Sym2>& matrices) {
  std::vector<double> records;
  records.reserve(matrices.size() * 3);
  for (const Sym2& a : matrices) {
    records.push_back(a.a11);
    records.push_back(a.a12);
    records.push_back(a.a22);
  }
  return from_records(Family::Riemannian, lattice, 3, std::move(records));
}

FinslerStructure FinslerStructure::p_norm(Lattice lattice, double p, std::vector<double> scales) {
  return from_records(Family::PNorm, lattice, 1, std::move(scales), p);
}

FinslerStructure FinslerStructure::piecewise_norm(Lattice lattice, std::vector<NormSpec> palette,
                                                  const std::vector<int>& labels) {
  const int k = static_cast<int>(palette.size());
  std::vector<double> records(labels.size() * static_cast<std::size_t>(k), 0.0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || labels[n] >= k) {
      throw InputError("piecewise-constant-norm: label " + std::to_string(labels[n]) + " outside the palette");
    }
    records[n * k + labels[n]] = 1.0;
  }
  return from_records(Family::PiecewiseConstantNorm, lattice, k, std::move(records), 2.0, std::move(palette));
}

FinslerStructure FinslerStructure::custom_table(Lattice lattice, int directions, std::vector<double> values) {
  return from_records(Family::CustomTable, lattice, directions, std::move(values));
}

void FinslerStructure::validate_and_bound() {
  if (lattice_.nx < 1 || lattice_.ny < 1 || !(lattice_.h > 0.0) || !is_finite(lattice_.origin)) {
    throw InputError("structure lattice must have positive size and spacing");
  }
  if (stride_ < 1 || stride_ > LocalNorm::kMaxStride) {
    throw InputError("parameter record length " + std::to_string(stride_) + " outside [1, " +
                     std::to_string(LocalNorm::kMaxStride) + "]");
  }
  const std::size_t expected = static_cast<std::size_t>(lattice_.size()) * stride_;
  if (records_.size() != expected) {
    throw InputError("expected " + std::to_string(expected) + " parameter values, got " +
                     std::to_string(records_.size()));
  }
  for (double r : records_) {
    if (!std::isfinite(r)) throw InputError("non-finite structure parameter");
  }
  switch (family_) {
    case Family::EuclideanScaled:
    case Family::Riemannian:
      if (stride_ != (family_ == Family::Riemannian ? 3 : 1)) throw InputError("wrong record length for family");
      break;
    case Family::PNorm:
      if (stride_ != 1) throw InputError("wrong record length for family");
      if (!(p_ >= 1.0)) throw InputError("p-norm exponent must satisfy p >= 1");
      break;
    case Family::PiecewiseConstantNorm:
      if (static_cast<int>(palette_.size()) != stride_) throw InputError("palette size must match record length");
      for (const NormSpec& n : palette_) {
        if (!(n.p >= 1.0) || !(n.s1 > 0.0) || !(n.s2 > 0.0) || !std::isfinite(n.theta)) {
          throw InputError("palette norm needs p >= 1 and positive scales");
        }
      }
      break;
    case Family::CustomTable: {
      if (stride_ < 4) throw InputError("custom-table needs at least 4 directions");
      table_dirs_.resize(stride_);
      for (int k = 0; k < stride_; ++k) table_dirs_[k] = unit_direction(k * std::numbers::pi / stride_);
      break;
    }
  }

  double alpha = kInf;
  double beta = 0.0;
  for (int n = 0; n < lattice_.size(); ++n) {
    const EllipticityBounds b = record_bounds({records_.data() + static_cast<std::size_t>(n) * stride_,
                                               static_cast<std::size_t>(stride_)});
    alpha = std::min(alpha, b.alpha);
    beta = std::max(beta, b.beta);
  }
  bounds_ = {alpha, beta};
}

EllipticityBounds FinslerStructure::record_bounds(std::span<const double> r) const {
  switch (family_) {
    case Family::EuclideanScaled:
      if (!(r[0] > 0.0)) throw InputError("euclidean-scaled: scale must be positive");
      return {r[0], r[0]};
    case Family::Riemannian: {
      const Sym2 a{r[0], r[1], r[2]};
      if (!(a.a11 > 0.0) || !(a.det() > 0.0)) throw InputError("riemannian: matrix must be positive definite");
      return {std::sqrt(a.min_eigenvalue()), std::sqrt(a.max_eigenvalue())};
    }
    case Family::PNorm: {
      if (!(r[0] > 0.0)) throw InputError("p-norm: scale must be positive");
      const NormSpec spec{p_, r[0], r[0], 0.0};
      return spec.bounds();
    }
    case Family::PiecewiseConstantNorm: {
      double alpha = 0.0;
      double beta = 0.0;
      double total = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < 0.0) throw InputError("piecewise-constant-norm: negative weight");
        const EllipticityBounds b = palette_[i].bounds();
        alpha += r[i] * b.alpha;
        beta += r[i] * b.beta;
        total += r[i];
      }
      if (!(total > 0.0)) throw InputError("piecewise-constant-norm: weights must not all vanish");
      return {alpha, beta};
    }
    case Family::CustomTable: {
      const int k_count = static_cast<int>(r.size());
      double alpha = kInf;
      double beta = 0.0;
      auto vertex = [&](int k) {
        const int idx = ((k % k_count) + k_count) % k_count;
        const Vec2 u = table_dirs_[idx] * (1.0 / r[idx]);
        return (k % (2 * k_count) + 2 * k_count) % (2 * k_count) >= k_count ? -u : u;
      };
      for (int k = 0; k < k_count; ++k) {
        if (!(r[k] > 0.0)) throw InputError("custom-table: values must be positive");
        alpha = std::min(alpha, r[k]);
      }
      for (int k = 0; k < 2 * k_count; ++k) {
        const Vec2 prev = vertex(k - 1);
        const Vec2 cur = vertex(k);
        const Vec2 next = vertex(k + 1);
        if (cross(cur - prev, next - cur) < -1e-12 * norm(cur) * norm(cur)) {
          throw InputError("custom-table: unit ball is not convex (structure not admissible)");
        }
        // Max of the gauge on the unit circle: 1 / distance from 0 to edge.
        const double dist = std::abs(cross(cur, next)) / norm(next - cur);
        beta = std::max(beta, 1.0 / dist);
      }
      return {alpha, beta};
    }
  }
  return {};
}

std::span<const double> FinslerStructure::cell_params(int i, int j) const {
  const std::size_t n = static_cast<std::size_t>(j) * lattice_.nx + i;
  return {records_.data() + n * stride_, static_cast<std::size_t>(stride_)};
}

bool FinslerStructure::is_constant() const {
  for (std::size_t n = 1; n < static_cast<std::size_t>(lattice_.size()); ++n) {
    if (!std::equal(records_.begin(), records_.begin() + stride_, records_.begin() + n * stride_)) return false;
  }
  return true;
}

FinslerStructure FinslerStructure::with_dual_options(DualOptions options) const {
  FinslerStructure copy = *this;
  copy.dual_options_ = options;
  return copy;
}

LocalNorm FinslerStructure::at(Vec2 x) const {
  if (!is_finite(x)) throw InputError("non-finite evaluation point");
  const double tx = (x.x - lattice_.origin.x) / lattice_.h;
  const double ty = (x.y - lattice_.origin.y) / lattice_.h;
  constexpr double slack = 1e-9;
  if (tx < -0.5 - slack || ty < -0.5 - slack || tx > lattice_.nx - 0.5 + slack || ty > lattice_.ny - 0.5 + slack) {
    std::ostringstream msg;
    msg << "point (" << x.x << ", " << x.y << ") lies outside the structure's domain";
    throw DomainError(msg.str());
  }
  LocalNorm local;
  local.owner_ = this;
  local.stride_ = stride_;
  if (interpolation_ == Interpolation::Piecewise || (lattice_.nx == 1 && lattice_.ny == 1)) {
    const int i = std::clamp(static_cast<int>(std::floor(tx + 0.5)), 0, lattice_.nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor(ty + 0.5)), 0, lattice_.ny - 1);
    const auto rec = cell_params(i, j);
    std::copy(rec.begin(), rec.end(), local.params_.begin());
    return local;
  }
  auto split = [](double t, int n, int& i0, double& f) {
    if (n == 1) {
      i0 = 0;
      f = 0.0;
      return;
    }
    i0 = std::clamp(static_cast<int>(std::floor(t)), 0, n - 2);
    f = clamp01(t - i0);
  };
  int i0 = 0;
  int j0 = 0;
  double fx = 0.0;
  double fy = 0.0;
  split(tx, lattice_.nx, i0, fx);
  split(ty, lattice_.ny, j0, fy);
  const int i1 = std::min(i0 + 1, lattice_.nx - 1);
  const int j1 = std::min(j0 + 1, lattice_.ny - 1);
  const auto r00 = cell_params(i0, j0);
  const auto r10 = cell_params(i1, j0);
  const auto r01 = cell_params(i0, j1);
  const auto r11 = cell_params(i1, j1);
  for (int k = 0; k < stride_; ++k) {
    local.params_[k] = (1 - fy) * ((1 - fx) * r00[k] + fx * r10[k]) + fy * ((1 - fx) * r01[k] + fx * r11[k]);
  }
  return local;
}

namespace {

void check_vector(Vec2 v) {
  if (!is_finite(v)) throw InputError("non-finite direction vector");
}

}  // namespace

double FinslerStructure::eval(Vec2 x, Vec2 v) const {
  check_vector(v);
  return at(x).eval(v);
}

double FinslerStructure::dual_eval(Vec2 x, Vec2 w) const {
  check_vector(w);
  return at(x).dual(w);
}

double FinslerStructure::double_dual_eval(Vec2 x, Vec2 v) const {
  check_vector(v);
  return at(x).double_dual(v);
}

FinslerStructure FinslerStructure::mollify(double epsilon) const {
  if (!(epsilon >= lattice_.h * (1.0 - 1e-12))) {
    std::ostringstream msg;
    msg << "mollify: epsilon " << epsilon << " is smaller than the cell size " << lattice_.h;
    throw DegenerateInputError(msg.str());
  }
  const int nx = lattice_.nx;
  const int ny = lattice_.ny;
  const double h = lattice_.h;
  const int reach = static_cast<int>(std::ceil(epsilon / h + 0.5));
  std::vector<double> out(records_.size());
  std::vector<double> acc(stride_);

  // Window weights along one axis for a window centred on node c.
  auto axis_weights = [&](int c, int n, std::vector<std::pair<int, double>>& w) {
    w.clear();
    const double lo_box = c * h - epsilon;
    const double hi_box = c * h + epsilon;
    const double lo_dom = -0.5 * h;
    const double hi_dom = (n - 0.5) * h;
    for (int k = std::max(0, c - reach); k <= std::min(n - 1, c + reach); ++k) {
      const double len = overlap(std::max(lo_box, lo_dom), std::min(hi_box, hi_dom), (k - 0.5) * h, (k + 0.5) * h);
      if (len > 0.0) w.emplace_back(k, len);
    }
  };

  std::vector<std::pair<int, double>> wx;
  std::vector<std::pair<int, double>> wy;
  for (int j = 0; j < ny; ++j) {
    axis_weights(j, ny, wy);
    for (int i = 0; i < nx; ++i) {
      axis_weights(i, nx, wx);
      const auto first = cell_params(wx.front().first, wy.front().first);
      bool uniform = true;
      for (const auto& [jj, ay] : wy) {
        for (const auto& [ii, ax] : wx) {
          const auto rec = cell_params(ii, jj);
          if (!std::equal(rec.begin(), rec.end(), first.begin())) uniform = false;
        }
      }
      double* dst = out.data() + (static_cast<std::size_t>(j) * nx + i) * stride_;
      if (uniform) {
        std::copy(first.begin(), first.end(), dst);
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      double total = 0.0;
      for (const auto& [jj, ay] : wy) {
        for (const auto& [ii, ax] : wx) {
          const double weight = ax * ay;
          const auto rec = cell_params(ii, jj);
          for (int k = 0; k < stride_; ++k) acc[k] += weight * rec[k];
          total += weight;
        }
      }
      for (int k = 0; k < stride_; ++k) dst[k] = acc[k] / total;
    }
  }
  FinslerStructure result =
      from_records(family_, lattice_, stride_, std::move(out), p_, palette_, Interpolation::Bilinear);
  result.dual_options_ = dual_options_;
  // Convex combinations cannot leave the input's range; rounding can nudge
  // the recomputed constants by an ulp, so keep the input's envelope.
  result.bounds_.alpha = std::max(result.bounds_.alpha, bounds_.alpha);
  result.bounds_.beta = std::min(result.bounds_.beta, bounds_.beta);
  return result;
}

}  // namespace famle
