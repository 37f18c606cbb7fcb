#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "proxthresh/ext_real.hpp"

namespace proxthresh {

/// Raised when a partition or set fails its structural checks.
class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// { x : <normal, x> <= bound } (or < bound when strict).
struct HalfSpace {
  std::vector<double> normal;
  double bound = 0.0;
  bool strict = false;

  bool contains(std::span<const double> x) const {
    const double s = dot(normal, x);
    return strict ? s < bound : s <= bound;
  }

  // Interior of the closed halfspace. A zero normal gives R^n or the empty set.
  bool interior_contains(std::span<const double> x) const {
    if (std::all_of(normal.begin(), normal.end(), [](double a) { return a == 0.0; }))
      return strict ? 0.0 < bound : 0.0 <= bound;
    return dot(normal, x) < bound;
  }

  friend bool operator==(const HalfSpace&, const HalfSpace&) = default;
};

/// Finite intersection of halfspaces; the empty list is all of R^n.
class Polyhedron {
 public:
  explicit Polyhedron(int dim = 1, std::vector<HalfSpace> constraints = {})
      : dim_(dim), constraints_(std::move(constraints)) {
    if (dim_ < 1) throw PartitionError("polyhedron dimension must be positive");
    for (const auto& h : constraints_)
      if (static_cast<int>(h.normal.size()) != dim_)
        throw PartitionError("halfspace normal has wrong dimension");
  }

  int dim() const { return dim_; }
  const std::vector<HalfSpace>& constraints() const { return constraints_; }
  bool is_whole_space() const { return constraints_.empty(); }

  bool contains(std::span<const double> x) const {
    return std::all_of(constraints_.begin(), constraints_.end(),
                       [&](const HalfSpace& h) { return h.contains(x); });
  }

  bool interior_contains(std::span<const double> x) const {
    return std::all_of(constraints_.begin(), constraints_.end(),
                       [&](const HalfSpace& h) { return h.interior_contains(x); });
  }

  Polyhedron intersect(const Polyhedron& other) const {
    if (other.dim_ != dim_) throw PartitionError("intersecting polyhedra of different dimension");
    auto cs = constraints_;
    cs.insert(cs.end(), other.constraints_.begin(), other.constraints_.end());
    return Polyhedron(dim_, std::move(cs));
  }

  /// Exact-in-structure emptiness test by Fourier-Motzkin elimination.
  bool is_empty() const {
    struct Row {
      std::vector<double> a;
      double b;
      bool strict;
    };
    std::vector<Row> rows;
    rows.reserve(constraints_.size());
    for (const auto& h : constraints_) rows.push_back({h.normal, h.bound, h.strict});
    for (int j = dim_ - 1; j >= 0; --j) {
      std::vector<Row> pos, neg, next;
      for (auto& r : rows) {
        if (r.a[j] > 0) pos.push_back(r);
        else if (r.a[j] < 0) neg.push_back(r);
        else next.push_back(r);
      }
      for (const auto& p : pos) {
        for (const auto& q : neg) {
          const double wp = -q.a[j];
          const double wq = p.a[j];
          Row c{std::vector<double>(dim_, 0.0), wp * p.b + wq * q.b, p.strict || q.strict};
          for (int k = 0; k < dim_; ++k) c.a[k] = wp * p.a[k] + wq * q.a[k];
          c.a[j] = 0.0;
          next.push_back(std::move(c));
        }
      }
      rows = std::move(next);
    }
    for (const auto& r : rows) {
      double scale = 1.0;
      for (double v : r.a) scale = std::max(scale, std::abs(v));
      if (r.strict ? !(r.b > 0.0) : r.b < -1e-12 * scale) return true;
    }
    return false;
  }

  /// Membership of a direction in the recession cone { d : <a_i, d> <= 0 }.
  bool recession_contains(std::span<const double> d, double tol = 1e-12) const {
    return std::all_of(constraints_.begin(), constraints_.end(),
                       [&](const HalfSpace& h) { return dot(h.normal, d) <= tol; });
  }

  /// Unit directions of the recession cone that contain every extreme point of
  /// the cone's intersection with the unit sphere, for dim <= 2. `extra`
  /// directions are added to the candidate set before filtering. Returns
  /// nullopt for dim > 2.
  std::optional<std::vector<Point>> recession_candidates(const std::vector<Point>& extra = {}) const {
    std::vector<Point> cand;
    if (dim_ == 1) {
      cand = {{1.0}, {-1.0}};
    } else if (dim_ == 2) {
      cand = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
      for (const auto& h : constraints_) {
        const double n = norm2(h.normal);
        if (n == 0.0) continue;
        cand.push_back({-h.normal[1] / n, h.normal[0] / n});
        cand.push_back({h.normal[1] / n, -h.normal[0] / n});
      }
      for (const auto& e : extra) {
        const double n = norm2(e);
        if (n == 0.0) continue;
        cand.push_back({e[0] / n, e[1] / n});
        cand.push_back({-e[0] / n, -e[1] / n});
      }
    } else {
      return std::nullopt;
    }
    std::vector<Point> out;
    for (auto& d : cand)
      if (recession_contains(d)) out.push_back(std::move(d));
    return out;
  }

  /// For dim == 1: (lo, lo_closed, hi, hi_closed) of the interval.
  struct Interval {
    double lo = -kInf;
    bool lo_closed = false;
    double hi = kInf;
    bool hi_closed = false;
  };
  Interval interval() const {
    if (dim_ != 1) throw PartitionError("interval() requires a one-dimensional polyhedron");
    Interval iv;
    for (const auto& h : constraints_) {
      const double a = h.normal[0];
      if (a == 0.0) continue;
      const double t = h.bound / a;
      if (a > 0) {
        if (t < iv.hi || (t == iv.hi && h.strict)) {
          iv.hi = t;
          iv.hi_closed = !h.strict;
        }
      } else {
        if (t > iv.lo || (t == iv.lo && h.strict)) {
          iv.lo = t;
          iv.lo_closed = !h.strict;
        }
      }
    }
    return iv;
  }

  friend bool operator==(const Polyhedron&, const Polyhedron&) = default;

 private:
  int dim_;
  std::vector<HalfSpace> constraints_;
};

/// A cell given only by a membership predicate (used for active sets of
/// finite-max functions). Compared by identity.
struct PredicateCell {
  std::string label;
  int dimension = 1;
  std::shared_ptr<const std::function<bool(std::span<const double>)>> member;

  int dim() const { return dimension; }
  bool contains(std::span<const double> x) const { return (*member)(x); }
  friend bool operator==(const PredicateCell& a, const PredicateCell& b) { return a.member == b.member; }
};

class Cell {
 public:
  Cell(Polyhedron p) : v_(std::move(p)) {}  // NOLINT
  Cell(PredicateCell p) : v_(std::move(p)) {}  // NOLINT

  int dim() const {
    return std::visit([](const auto& c) { return c.dim(); }, v_);
  }
  bool contains(std::span<const double> x) const {
    return std::visit([&](const auto& c) { return c.contains(x); }, v_);
  }
  const Polyhedron* polyhedron() const { return std::get_if<Polyhedron>(&v_); }
  const PredicateCell* predicate() const { return std::get_if<PredicateCell>(&v_); }

  friend bool operator==(const Cell&, const Cell&) = default;

 private:
  std::variant<Polyhedron, PredicateCell> v_;
};

/// The cells S_1..S_m of a piecewise definition.
class RegionPartition {
 public:
  RegionPartition() = default;
  explicit RegionPartition(std::vector<Cell> cells) : cells_(std::move(cells)) {
    if (cells_.empty()) throw PartitionError("partition needs at least one cell");
    for (const auto& c : cells_)
      if (c.dim() != cells_.front().dim()) throw PartitionError("partition cells differ in dimension");
  }

  int dim() const { return cells_.front().dim(); }
  std::size_t size() const { return cells_.size(); }
  const Cell& operator[](std::size_t i) const { return cells_.at(i); }
  const std::vector<Cell>& cells() const { return cells_; }

  bool all_polyhedral() const {
    return std::all_of(cells_.begin(), cells_.end(), [](const Cell& c) { return c.polyhedron() != nullptr; });
  }

  /// Lowest-index cell containing x.
  std::optional<std::size_t> locate(std::span<const double> x) const {
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].contains(x)) return i;
    return std::nullopt;
  }

  friend bool operator==(const RegionPartition&, const RegionPartition&) = default;

 private:
  std::vector<Cell> cells_;
};

/// Calls fn(point) for a regular grid with `per_dim` points per axis on
/// [lo, hi]^dim (dim in {1, 2}), row-major.
template <class Fn>
void for_each_grid_point(int dim, int per_dim, double lo, double hi, Fn&& fn) {
  const double h = (hi - lo) / (per_dim - 1);
  if (dim == 1) {
    Point p(1);
    for (int i = 0; i < per_dim; ++i) {
      p[0] = lo + h * i;
      fn(std::span<const double>(p));
    }
  } else if (dim == 2) {
    Point p(2);
    for (int i = 0; i < per_dim; ++i) {
      p[0] = lo + h * i;
      for (int j = 0; j < per_dim; ++j) {
        p[1] = lo + h * j;
        fn(std::span<const double>(p));
      }
    }
  } else {
    throw PartitionError("sample grids are limited to dimensions 1 and 2");
  }
}

inline constexpr int kPartitionSamplesPerDim = 1000;
inline constexpr double kPartitionSampleBox = 100.0;

/// Sample points used for partition checks: the regular grid plus points on
/// and next to each polyhedral boundary, where gaps and overlaps hide.
template <class Fn>
void for_each_partition_sample(const RegionPartition& part, Fn&& fn) {
  const int dim = part.dim();
  if (dim > 2) return;
  for_each_grid_point(dim, kPartitionSamplesPerDim, -kPartitionSampleBox, kPartitionSampleBox, fn);
  for (const auto& cell : part.cells()) {
    const auto* poly = cell.polyhedron();
    if (!poly) continue;
    for (const auto& h : poly->constraints()) {
      const double nn = dot(h.normal, h.normal);
      if (nn == 0.0) continue;
      const double eps = 1e-7 * (1.0 + std::abs(h.bound) / std::sqrt(nn));
      Point base(dim);
      for (int k = 0; k < dim; ++k) base[k] = h.normal[k] * h.bound / nn;
      auto emit = [&](const Point& p) {
        for (double off : {0.0, eps, -eps}) {
          Point q = p;
          for (int k = 0; k < dim; ++k) q[k] += off * h.normal[k] / std::sqrt(nn);
          fn(std::span<const double>(q));
        }
      };
      if (dim == 1) {
        emit(base);
      } else {
        const Point tangent{-h.normal[1] / std::sqrt(nn), h.normal[0] / std::sqrt(nn)};
        const int n = kPartitionSamplesPerDim;
        for (int i = 0; i < n; ++i) {
          const double t = -kPartitionSampleBox + 2.0 * kPartitionSampleBox * i / (n - 1);
          emit(Point{base[0] + t * tangent[0], base[1] + t * tangent[1]});
        }
      }
    }
  }
}

/// Sample-checks that the cells cover R^n and that no cell meets the interior
/// of another. Predicate cells cover by construction and are skipped.
inline void validate_partition(const RegionPartition& part) {
  if (!part.all_polyhedral() || part.dim() > 2) return;
  for_each_partition_sample(part, [&](std::span<const double> x) {
    std::optional<std::size_t> interior_of;
    int members = 0;
    for (std::size_t i = 0; i < part.size(); ++i) {
      const auto& poly = *part[i].polyhedron();
      if (poly.contains(x)) ++members;
      if (!interior_of && poly.interior_contains(x)) interior_of = i;
    }
    if (members == 0) {
      std::string at;
      for (double v : x) at += (at.empty() ? "" : ",") + format_double(v);
      throw PartitionError("cells do not cover the point (" + at + ")");
    }
    if (interior_of && members > 1) {
      std::string at;
      for (double v : x) at += (at.empty() ? "" : ",") + format_double(v);
      throw PartitionError("cell " + std::to_string(*interior_of + 1) +
                           " overlaps another cell in its interior at (" + at + ")");
    }
  });
}

}  // namespace proxthresh
