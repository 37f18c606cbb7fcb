#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "proxthresh/ext_real.hpp"

namespace proxthresh {

/// f(x) = <slope, x> + offset
struct AffineParams {
  std::vector<double> slope;
  double offset = 0.0;

  bool is_constant() const {
    return std::all_of(slope.begin(), slope.end(), [](double a) { return a == 0.0; });
  }
  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

/// Semantic tags attached to every expression node. Each optional is
/// three-valued: empty means "not established", never a guess.
struct AttributeRecord {
  std::optional<bool> convex;
  std::optional<bool> bounded_below;
  std::optional<bool> bounded_above;
  std::optional<double> lipschitz;  // global Lipschitz constant when known
  std::optional<AffineParams> affine;
  std::optional<double> quadratic_min_curvature;  // lambda_min(Q) of a quadratic atom
  std::optional<bool> linear_lower_growth;        // liminf f(x)/|x| > -inf
  std::optional<bool> majorized_by_affine;
  std::optional<bool> full_domain;  // dom f = R^n

  /// Closes the record under the implications between tags.
  AttributeRecord& normalize() {
    if (affine) {
      convex = true;
      const bool constant = affine->is_constant();
      if (!bounded_below) bounded_below = constant;
      if (!bounded_above) bounded_above = constant;
      const double k = norm2(affine->slope);
      if (!lipschitz || *lipschitz > k) lipschitz = k;
      majorized_by_affine = true;
      full_domain = true;
    }
    if (lipschitz) {
      linear_lower_growth = true;
      full_domain = true;
    }
    if (convex == true) linear_lower_growth = true;
    if (bounded_below == true) linear_lower_growth = true;
    if (bounded_above == true) {
      majorized_by_affine = true;
      full_domain = true;
    }
    return *this;
  }
};

namespace attr {

using Tri = std::optional<bool>;

inline Tri all_true(std::span<const AttributeRecord> rs, Tri AttributeRecord::*field) {
  for (const auto& r : rs)
    if (r.*field != true) return std::nullopt;
  return true;
}

inline Tri any_true(std::span<const AttributeRecord> rs, Tri AttributeRecord::*field) {
  for (const auto& r : rs)
    if (r.*field == true) return true;
  return std::nullopt;
}

inline AttributeRecord constant_record(double c, int dim) {
  AttributeRecord r;
  r.affine = AffineParams{std::vector<double>(dim, 0.0), c};
  r.quadratic_min_curvature = std::nullopt;
  return r.normalize();
}

/// Attributes of f_1 + ... + f_m.
inline AttributeRecord sum(std::span<const AttributeRecord> rs) {
  AttributeRecord out;
  out.convex = all_true(rs, &AttributeRecord::convex);
  out.bounded_below = all_true(rs, &AttributeRecord::bounded_below);
  out.bounded_above = all_true(rs, &AttributeRecord::bounded_above);
  // One addend unbounded below while every other is bounded above forces the
  // sum to be unbounded below (and symmetrically).
  for (std::size_t i = 0; i < rs.size(); ++i) {
    bool others_above = true, others_below = true;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      if (j == i) continue;
      others_above = others_above && rs[j].bounded_above == true;
      others_below = others_below && rs[j].bounded_below == true;
    }
    if (rs[i].bounded_below == false && others_above) out.bounded_below = false;
    if (rs[i].bounded_above == false && others_below) out.bounded_above = false;
  }
  bool all_lip = true, all_affine = true;
  double k = 0.0;
  for (const auto& r : rs) {
    all_lip = all_lip && r.lipschitz.has_value();
    all_affine = all_affine && r.affine.has_value();
    if (r.lipschitz) k += *r.lipschitz;
  }
  if (all_lip) out.lipschitz = k;
  if (all_affine && !rs.empty()) {
    AffineParams a{std::vector<double>(rs.front().affine->slope.size(), 0.0), 0.0};
    for (const auto& r : rs) {
      for (std::size_t i = 0; i < a.slope.size(); ++i) a.slope[i] += r.affine->slope[i];
      a.offset += r.affine->offset;
    }
    out.affine = std::move(a);
  }
  out.linear_lower_growth = all_true(rs, &AttributeRecord::linear_lower_growth);
  out.majorized_by_affine = all_true(rs, &AttributeRecord::majorized_by_affine);
  out.full_domain = all_true(rs, &AttributeRecord::full_domain);
  for (const auto& r : rs)
    if (r.full_domain == false) out.full_domain = false;
  return out.normalize();
}

/// Attributes of s * f + c for any real s. s == 0 yields the indicator of
/// dom f shifted by c.
inline AttributeRecord affine_image(const AttributeRecord& f, double s, double c, int dim) {
  if (s == 0.0) {
    if (f.full_domain == true) return constant_record(c, dim);
    AttributeRecord out;
    out.convex = f.convex == true ? Tri(true) : std::nullopt;
    out.bounded_below = true;
    out.bounded_above = f.full_domain;
    out.full_domain = f.full_domain;
    return out.normalize();
  }
  AttributeRecord out;
  if (f.lipschitz) out.lipschitz = std::abs(s) * *f.lipschitz;
  if (f.affine) {
    AffineParams a = *f.affine;
    for (double& v : a.slope) v *= s;
    a.offset = s * a.offset + c;
    out.affine = std::move(a);
  }
  out.full_domain = f.full_domain;
  if (s > 0.0) {
    out.convex = f.convex;
    out.bounded_below = f.bounded_below;
    out.bounded_above = f.bounded_above;
    out.linear_lower_growth = f.linear_lower_growth;
    out.majorized_by_affine = f.majorized_by_affine;
    if (f.quadratic_min_curvature) out.quadratic_min_curvature = s * *f.quadratic_min_curvature;
  } else {
    out.bounded_below = f.bounded_above;
    out.bounded_above = f.bounded_below;
    if (f.majorized_by_affine == true) out.linear_lower_growth = true;
    if (f.convex == true || f.bounded_below == true) out.majorized_by_affine = true;
  }
  return out.normalize();
}

/// Attributes of lambda * f with lambda >= 0 (a Scale node).
inline AttributeRecord scale(const AttributeRecord& f, double lambda, int dim) {
  AttributeRecord out = affine_image(f, lambda, 0.0, dim);
  out.quadratic_min_curvature = std::nullopt;
  return out;
}

/// Attributes of max(f_1, ..., f_m).
inline AttributeRecord max(std::span<const AttributeRecord> rs) {
  if (rs.size() == 1) {
    AttributeRecord out = rs.front();
    out.quadratic_min_curvature = std::nullopt;
    return out;
  }
  AttributeRecord out;
  out.convex = all_true(rs, &AttributeRecord::convex);
  out.bounded_below = any_true(rs, &AttributeRecord::bounded_below);
  out.bounded_above = all_true(rs, &AttributeRecord::bounded_above);
  for (const auto& r : rs)
    if (r.bounded_above == false) out.bounded_above = false;
  bool all_lip = true;
  double k = 0.0;
  for (const auto& r : rs) {
    all_lip = all_lip && r.lipschitz.has_value();
    if (r.lipschitz) k = std::max(k, *r.lipschitz);
  }
  if (all_lip) out.lipschitz = k;
  out.linear_lower_growth = any_true(rs, &AttributeRecord::linear_lower_growth);
  out.full_domain = all_true(rs, &AttributeRecord::full_domain);
  for (const auto& r : rs)
    if (r.full_domain == false) out.full_domain = false;
  return out.normalize();
}

/// Attributes of a piecewise function from its pieces alone.
inline AttributeRecord piecewise(std::span<const AttributeRecord> pieces) {
  AttributeRecord out;
  out.bounded_below = all_true(pieces, &AttributeRecord::bounded_below);
  out.bounded_above = all_true(pieces, &AttributeRecord::bounded_above);
  out.linear_lower_growth = all_true(pieces, &AttributeRecord::linear_lower_growth);
  out.full_domain = all_true(pieces, &AttributeRecord::full_domain);
  return out.normalize();
}

/// Attributes of outer(inner(x)), outer acting on R.
inline AttributeRecord compose(const AttributeRecord& outer, const AttributeRecord& inner, int dim) {
  if (outer.affine) return affine_image(inner, outer.affine->slope.at(0), outer.affine->offset, dim);
  AttributeRecord out;
  if (inner.affine && !inner.affine->is_constant()) {
    // outer(<s, x> + b) with s != 0 sweeps all of R.
    out.convex = outer.convex;
    out.bounded_below = outer.bounded_below;
    out.bounded_above = outer.bounded_above;
    if (outer.lipschitz) out.lipschitz = *outer.lipschitz * norm2(inner.affine->slope);
    if (outer.linear_lower_growth == true) out.linear_lower_growth = true;
    if (outer.majorized_by_affine == true) out.majorized_by_affine = true;
    out.full_domain = outer.full_domain;
    return out.normalize();
  }
  if (outer.bounded_below == true) out.bounded_below = true;
  if (outer.bounded_above == true) out.bounded_above = true;
  if (outer.lipschitz && inner.lipschitz) out.lipschitz = *outer.lipschitz * *inner.lipschitz;
  if (outer.full_domain == true && inner.full_domain == true) out.full_domain = true;
  return out.normalize();
}

}  // namespace attr
}  // namespace proxthresh
