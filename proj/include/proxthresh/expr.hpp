#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "proxthresh/attributes.hpp"
#include "proxthresh/ext_real.hpp"
#include "proxthresh/region.hpp"

namespace proxthresh {

/// Raised when an expression cannot be constructed as a proper function.
class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind { constant, affine, quadratic, power, abs, bounded, indicator, sum, scale, max, piecewise, compose };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::constant: return "constant";
    case NodeKind::affine: return "affine";
    case NodeKind::quadratic: return "quadratic";
    case NodeKind::power: return "power";
    case NodeKind::abs: return "abs";
    case NodeKind::bounded: return "bounded";
    case NodeKind::indicator: return "indicator";
    case NodeKind::sum: return "sum";
    case NodeKind::scale: return "scale";
    case NodeKind::max: return "max";
    case NodeKind::piecewise: return "piecewise";
    case NodeKind::compose: return "compose";
  }
  return "?";
}

enum class BoundedKind { sin, cos, atan, tanh };

inline const char* to_string(BoundedKind k) {
  switch (k) {
    case BoundedKind::sin: return "sin";
    case BoundedKind::cos: return "cos";
    case BoundedKind::atan: return "atan";
    case BoundedKind::tanh: return "tanh";
  }
  return "?";
}

/// Bound M with |g| <= M for the unit-coefficient bounded atom g.
inline double bounded_atom_bound(BoundedKind k) {
  return k == BoundedKind::atan ? std::numbers::pi / 2 : 1.0;
}

struct Node;

/// Immutable, shared expression tree for a proper function R^n -> R ∪ {+inf}.
/// Copies share structure; evaluation is pure and thread-safe.
class Expr {
 public:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const { return *node_; }
  const std::shared_ptr<const Node>& ptr() const { return node_; }
  NodeKind kind() const;
  int dim() const;
  const AttributeRecord& attributes() const;

  template <class T>
  const T* as() const;

  ExtReal operator()(std::span<const double> x) const;
  ExtReal operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  std::shared_ptr<const Node> node_;
};

struct ConstantNode {
  double value = 0.0;
  friend bool operator==(const ConstantNode&, const ConstantNode&) = default;
};

/// <slope, x> + offset
struct AffineNode {
  std::vector<double> slope;
  double offset = 0.0;
  friend bool operator==(const AffineNode&, const AffineNode&) = default;
};

/// 1/2 x^T Q x + <linear, x> + offset, Q symmetric, stored row-major.
struct QuadraticNode {
  std::vector<double> hessian;
  std::vector<double> linear;
  double offset = 0.0;
  friend bool operator==(const QuadraticNode&, const QuadraticNode&) = default;
};

/// coef * |x_var|^exponent, or coef * sign(x_var) |x_var|^exponent when odd.
struct PowerNode {
  double coef = 1.0;
  double exponent = 1.0;
  bool odd = false;
  int var = 0;
  friend bool operator==(const PowerNode&, const PowerNode&) = default;
};

/// coef * |x_var|, or coef * ||x|| when var < 0.
struct AbsNode {
  double coef = 1.0;
  int var = 0;
  friend bool operator==(const AbsNode&, const AbsNode&) = default;
};

/// coef * g(x_var) with g one of the bounded Lipschitz library functions.
struct BoundedNode {
  BoundedKind fn = BoundedKind::sin;
  double coef = 1.0;
  int var = 0;
  friend bool operator==(const BoundedNode&, const BoundedNode&) = default;
};

struct IndicatorNode {
  Cell set;
  friend bool operator==(const IndicatorNode&, const IndicatorNode&) = default;
};

struct SumNode {
  std::vector<Expr> terms;
  friend bool operator==(const SumNode&, const SumNode&) = default;
};

struct ScaleNode {
  double factor = 1.0;
  Expr child;
  friend bool operator==(const ScaleNode&, const ScaleNode&) = default;
};

struct MaxNode {
  std::vector<Expr> terms;
  friend bool operator==(const MaxNode&, const MaxNode&) = default;
};

struct PiecewiseNode {
  RegionPartition partition;
  std::vector<Expr> pieces;
  friend bool operator==(const PiecewiseNode&, const PiecewiseNode&) = default;
};

/// outer(inner(x)); outer acts on R.
struct ComposeNode {
  Expr outer;
  Expr inner;
  friend bool operator==(const ComposeNode&, const ComposeNode&) = default;
};

struct Node {
  using Variant = std::variant<ConstantNode, AffineNode, QuadraticNode, PowerNode, AbsNode, BoundedNode,
                               IndicatorNode, SumNode, ScaleNode, MaxNode, PiecewiseNode, ComposeNode>;
  Variant v;
  int dim = 1;
  AttributeRecord attrs;

  friend bool operator==(const Node& a, const Node& b) { return a.dim == b.dim && a.v == b.v; }
};

inline NodeKind Expr::kind() const { return static_cast<NodeKind>(node_->v.index()); }
inline int Expr::dim() const { return node_->dim; }
inline const AttributeRecord& Expr::attributes() const { return node_->attrs; }

template <class T>
const T* Expr::as() const {
  return std::get_if<T>(&node_->v);
}

inline bool operator==(const Expr& a, const Expr& b) { return a.node_ == b.node_ || *a.node_ == *b.node_; }

inline bool is_atom(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::sum:
    case NodeKind::scale:
    case NodeKind::max:
    case NodeKind::piecewise:
    case NodeKind::compose: return false;
    default: return true;
  }
}

namespace detail {

inline double apply_bounded(BoundedKind k, double t) {
  switch (k) {
    case BoundedKind::sin: return std::sin(t);
    case BoundedKind::cos: return std::cos(t);
    case BoundedKind::atan: return std::atan(t);
    case BoundedKind::tanh: return std::tanh(t);
  }
  return 0.0;
}

inline ExtReal evaluate(const Node& n, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    ExtReal operator()(const ConstantNode& c) const { return c.value; }
    ExtReal operator()(const AffineNode& a) const { return dot(a.slope, x) + a.offset; }
    ExtReal operator()(const QuadraticNode& q) const {
      const std::size_t d = x.size();
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) s += x[i] * q.hessian[i * d + j] * x[j];
      return 0.5 * s + dot(q.linear, x) + q.offset;
    }
    ExtReal operator()(const PowerNode& p) const {
      const double t = x[p.var];
      const double m = std::pow(std::abs(t), p.exponent);
      if (p.coef == 0.0) return 0.0;
      return p.coef * (p.odd && t < 0 ? -m : m);
    }
    ExtReal operator()(const AbsNode& a) const {
      if (a.coef == 0.0) return 0.0;
      return a.coef * (a.var < 0 ? norm2(x) : std::abs(x[a.var]));
    }
    ExtReal operator()(const BoundedNode& b) const { return b.coef * apply_bounded(b.fn, x[b.var]); }
    ExtReal operator()(const IndicatorNode& i) const { return i.set.contains(x) ? 0.0 : kInf; }
    ExtReal operator()(const SumNode& s) const {
      double acc = 0.0;
      for (const auto& t : s.terms) {
        acc += t(x);
        if (acc == kInf) return kInf;
      }
      return acc;
    }
    ExtReal operator()(const ScaleNode& s) const {
      const double v = s.child(x);
      if (s.factor == 0.0) return v == kInf ? kInf : 0.0;
      return s.factor * v;
    }
    ExtReal operator()(const MaxNode& m) const {
      double best = -kInf;
      for (const auto& t : m.terms) best = std::max(best, t(x));
      return best;
    }
    ExtReal operator()(const PiecewiseNode& p) const {
      const auto i = p.partition.locate(x);
      return i ? p.pieces[*i](x) : kInf;
    }
    ExtReal operator()(const ComposeNode& c) const {
      const double v = c.inner(x);
      if (v == kInf) return kInf;
      return c.outer(std::span<const double>(&v, 1));
    }
  };
  return std::visit(Visitor{x}, n.v);
}

inline Expr make(Node::Variant v, int dim, AttributeRecord attrs) {
  return Expr(std::make_shared<const Node>(Node{std::move(v), dim, std::move(attrs)}));
}

inline void require_dim(int dim) {
  if (dim < 1) throw ExprError("dimension must be positive");
}

inline void require_var(int var, int dim) {
  if (var >= dim) throw ExprError("variable index " + std::to_string(var) + " exceeds dimension " + std::to_string(dim));
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ExprError(std::string(what) + " must be finite");
}

inline int common_dim(const std::vector<Expr>& es, const char* what) {
  if (es.empty()) throw ExprError(std::string(what) + " needs at least one term");
  for (const auto& e : es)
    if (e.dim() != es.front().dim()) throw ExprError(std::string(what) + " terms differ in dimension");
  return es.front().dim();
}

inline std::vector<AttributeRecord> records(const std::vector<Expr>& es) {
  std::vector<AttributeRecord> rs;
  rs.reserve(es.size());
  for (const auto& e : es) rs.push_back(e.attributes());
  return rs;
}

}  // namespace detail

inline ExtReal Expr::operator()(std::span<const double> x) const { return detail::evaluate(*node_, x); }

// ---------------------------------------------------------------------------
// Atoms

inline Expr constant(double c, int dim = 1) {
  detail::require_dim(dim);
  detail::require_finite(c, "constant");
  return detail::make(ConstantNode{c}, dim, attr::constant_record(c, dim));
}

inline Expr affine(std::vector<double> slope, double offset = 0.0) {
  const int dim = static_cast<int>(slope.size());
  detail::require_dim(dim);
  for (double a : slope) detail::require_finite(a, "affine slope");
  detail::require_finite(offset, "affine offset");
  AttributeRecord r;
  r.affine = AffineParams{slope, offset};
  r.normalize();
  return detail::make(AffineNode{std::move(slope), offset}, dim, std::move(r));
}

inline Expr quadratic(std::vector<double> hessian, std::vector<double> linear, double offset = 0.0) {
  const int dim = static_cast<int>(linear.size());
  detail::require_dim(dim);
  if (hessian.size() != static_cast<std::size_t>(dim * dim)) throw ExprError("quadratic hessian has wrong size");
  for (double v : hessian) detail::require_finite(v, "quadratic coefficient");
  for (double v : linear) detail::require_finite(v, "quadratic coefficient");
  detail::require_finite(offset, "quadratic offset");
  Eigen::MatrixXd q(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) q(i, j) = hessian[i * dim + j];
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ExprError("quadratic hessian must be symmetric");

  AttributeRecord r;
  if (q.isZero(0.0)) {
    r.affine = AffineParams{linear, offset};
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
    const auto& ev = es.eigenvalues();
    const double lmin = ev.minCoeff();
    const double lmax = ev.maxCoeff();
    const double tol = 1e-14 * std::max(std::abs(lmin), std::abs(lmax));
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(linear.data(), dim);
    // b orthogonal to the kernel of Q, i.e. b in range(Q)
    auto in_range = [&] {
      for (int k = 0; k < dim; ++k)
        if (std::abs(ev(k)) <= tol && std::abs(es.eigenvectors().col(k).dot(b)) > 1e-12 * (1.0 + b.norm())) return false;
      return true;
    };
    r.quadratic_min_curvature = lmin;
    r.convex = lmin >= -tol;
    r.bounded_below = lmin > tol ? true : (lmin < -tol ? false : in_range());
    r.bounded_above = lmax < -tol ? true : (lmax > tol ? false : in_range());
    r.linear_lower_growth = lmin >= -tol;
    r.majorized_by_affine = lmax <= tol;
    r.full_domain = true;
  }
  r.normalize();
  return detail::make(QuadraticNode{std::move(hessian), std::move(linear), offset}, dim, std::move(r));
}

/// coef * |x_var|^p for p >= 1; with odd = true, coef * x_var^p for odd integer p.
inline Expr power(double coef, double exponent, bool odd = false, int var = 0, int dim = 1) {
  detail::require_dim(dim);
  detail::require_var(var, dim);
  detail::require_finite(coef, "power coefficient");
  if (!(exponent >= 1.0) || !std::isfinite(exponent)) throw ExprError("power exponent must be >= 1");
  if (odd && (exponent != std::floor(exponent) || static_cast<long long>(exponent) % 2 == 0))
    throw ExprError("signed power requires an odd integer exponent");
  AttributeRecord r;
  if (coef == 0.0) {
    r = attr::constant_record(0.0, dim);
  } else if (odd && exponent == 1.0) {
    std::vector<double> s(dim, 0.0);
    s[var] = coef;
    r.affine = AffineParams{std::move(s), 0.0};
  } else if (odd) {
    r.convex = false;
    r.bounded_below = false;
    r.bounded_above = false;
    r.linear_lower_growth = false;
    r.majorized_by_affine = false;
    r.full_domain = true;
  } else {
    const bool up = coef > 0;
    if (exponent == 1.0) r.lipschitz = std::abs(coef);
    r.convex = up;
    r.bounded_below = up;
    r.bounded_above = !up;
    r.linear_lower_growth = up || exponent == 1.0;
    r.majorized_by_affine = !up;
    r.full_domain = true;
    if (exponent == 2.0 && dim == 1) r.quadratic_min_curvature = 2.0 * coef;
  }
  r.normalize();
  return detail::make(PowerNode{coef, exponent, odd, var}, dim, std::move(r));
}

/// coef * |x_var|, or coef * ||x|| with var = -1.
inline Expr abs_norm(double coef = 1.0, int var = 0, int dim = 1) {
  detail::require_dim(dim);
  detail::require_var(var, dim);
  detail::require_finite(coef, "abs coefficient");
  AttributeRecord r;
  if (coef == 0.0) {
    r = attr::constant_record(0.0, dim);
  } else {
    const bool up = coef > 0;
    r.lipschitz = std::abs(coef);
    r.convex = up;
    r.bounded_below = up;
    r.bounded_above = !up;
    r.majorized_by_affine = !up;
  }
  r.normalize();
  return detail::make(AbsNode{coef, var}, dim, std::move(r));
}

inline Expr bounded(BoundedKind fn, double coef = 1.0, int var = 0, int dim = 1) {
  detail::require_dim(dim);
  detail::require_var(var, dim);
  detail::require_finite(coef, "bounded atom coefficient");
  AttributeRecord r;
  if (coef == 0.0) {
    r = attr::constant_record(0.0, dim);
  } else {
    r.lipschitz = std::abs(coef);
    r.convex = false;
    r.bounded_below = true;
    r.bounded_above = true;
  }
  r.normalize();
  return detail::make(BoundedNode{fn, coef, var}, dim, std::move(r));
}

inline Expr indicator(Cell set) {
  AttributeRecord r;
  const int dim = set.dim();
  if (const auto* p = set.polyhedron()) {
    if (p->is_empty()) throw ExprError("indicator of an empty set is not proper");
    if (p->is_whole_space()) {
      r = attr::constant_record(0.0, dim);
    } else {
      r.convex = true;
      r.bounded_below = true;
      r.bounded_above = false;
      r.majorized_by_affine = false;
      r.full_domain = false;
    }
  } else {
    r.bounded_below = true;
  }
  r.normalize();
  return detail::make(IndicatorNode{std::move(set)}, dim, std::move(r));
}

// ---------------------------------------------------------------------------
// Combinators

inline Expr sum(std::vector<Expr> terms) {
  const int dim = detail::common_dim(terms, "sum");
  const auto rs = detail::records(terms);
  return detail::make(SumNode{std::move(terms)}, dim, attr::sum(rs));
}

/// lambda * f for lambda >= 0; 0 * f is the indicator of dom f.
inline Expr scale(double factor, Expr child) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) throw ExprError("scale factor must be finite and nonnegative");
  const int dim = child.dim();
  auto r = attr::scale(child.attributes(), factor, dim);
  return detail::make(ScaleNode{factor, std::move(child)}, dim, std::move(r));
}

inline Expr max_of(std::vector<Expr> terms) {
  const int dim = detail::common_dim(terms, "max");
  const auto rs = detail::records(terms);
  return detail::make(MaxNode{std::move(terms)}, dim, attr::max(rs));
}

namespace detail {
inline Expr piecewise_unchecked(RegionPartition partition, std::vector<Expr> pieces) {
  const int dim = partition.dim();
  const auto rs = records(pieces);
  return make(PiecewiseNode{std::move(partition), std::move(pieces)}, dim, attr::piecewise(rs));
}
}  // namespace detail

/// Piecewise function; the partition is sample-checked for coverage and
/// interior-disjointness. Ties on shared boundaries go to the lowest index.
inline Expr piecewise(RegionPartition partition, std::vector<Expr> pieces) {
  if (pieces.size() != partition.size()) throw ExprError("piecewise: piece count differs from cell count");
  for (const auto& p : pieces)
    if (p.dim() != partition.dim()) throw ExprError("piecewise: piece dimension differs from partition");
  try {
    validate_partition(partition);
  } catch (const PartitionError& e) {
    throw ExprError(std::string("invalid partition: ") + e.what());
  }
  return detail::piecewise_unchecked(std::move(partition), std::move(pieces));
}

/// outer(inner(x)). The range of inner must lie in dom outer; this is checked
/// on sample points when outer is not finite everywhere.
inline Expr compose(Expr outer, Expr inner) {
  if (outer.dim() != 1) throw ExprError("compose: the outer function must be univariate");
  const int dim = inner.dim();
  if (outer.attributes().full_domain != true && dim <= 2) {
    const int per_dim = dim == 1 ? kPartitionSamplesPerDim : 200;
    for_each_grid_point(dim, per_dim, -kPartitionSampleBox, kPartitionSampleBox, [&](std::span<const double> x) {
      const double v = inner(x);
      if (v != kInf && outer(v) == kInf)
        throw ExprError("compose: range of inner is not contained in the domain of outer (inner value " +
                        format_double(v) + ")");
    });
  }
  auto r = attr::compose(outer.attributes(), inner.attributes(), dim);
  return detail::make(ComposeNode{std::move(outer), std::move(inner)}, dim, std::move(r));
}

/// k * f as an algebraic product, folding the factor into atoms where
/// possible. Negative multiples of max are expressed through an affine outer.
inline Expr scaled(const Expr& e, double k) {
  detail::require_finite(k, "scalar factor");
  if (k == 1.0) return e;
  const int dim = e.dim();
  switch (e.kind()) {
    case NodeKind::constant: return constant(k * e.as<ConstantNode>()->value, dim);
    case NodeKind::affine: {
      auto a = *e.as<AffineNode>();
      for (double& v : a.slope) v *= k;
      return affine(std::move(a.slope), k * a.offset);
    }
    case NodeKind::quadratic: {
      auto q = *e.as<QuadraticNode>();
      for (double& v : q.hessian) v *= k;
      for (double& v : q.linear) v *= k;
      return quadratic(std::move(q.hessian), std::move(q.linear), k * q.offset);
    }
    case NodeKind::power: {
      const auto& p = *e.as<PowerNode>();
      return power(k * p.coef, p.exponent, p.odd, p.var, dim);
    }
    case NodeKind::abs: {
      const auto& a = *e.as<AbsNode>();
      return abs_norm(k * a.coef, a.var, dim);
    }
    case NodeKind::bounded: {
      const auto& b = *e.as<BoundedNode>();
      return bounded(b.fn, k * b.coef, b.var, dim);
    }
    case NodeKind::indicator:
      if (k > 0.0) return e;
      if (k == 0.0) return scale(0.0, e);
      throw ExprError("a negative multiple of an indicator is not proper");
    case NodeKind::sum: {
      std::vector<Expr> ts;
      for (const auto& t : e.as<SumNode>()->terms) ts.push_back(scaled(t, k));
      return sum(std::move(ts));
    }
    case NodeKind::scale: {
      const auto& s = *e.as<ScaleNode>();
      if (s.factor == 0.0) return e;
      if (k >= 0.0) return scale(k * s.factor, s.child);
      return scaled(s.child, k * s.factor);
    }
    case NodeKind::max: {
      if (k >= 0.0) {
        std::vector<Expr> ts;
        for (const auto& t : e.as<MaxNode>()->terms) ts.push_back(scaled(t, k));
        return max_of(std::move(ts));
      }
      return compose(affine({k}, 0.0), e);
    }
    case NodeKind::piecewise: {
      const auto& p = *e.as<PiecewiseNode>();
      std::vector<Expr> ps;
      for (const auto& t : p.pieces) ps.push_back(scaled(t, k));
      return detail::piecewise_unchecked(p.partition, std::move(ps));
    }
    case NodeKind::compose: {
      const auto& c = *e.as<ComposeNode>();
      return compose(scaled(c.outer, k), c.inner);
    }
  }
  throw ExprError("scaled: unhandled node kind");
}

/// A finite-max function viewed as a piecewise function over its active
/// sets S_i = { x : f_i(x) = max_j f_j(x) }.
inline Expr as_piecewise(const Expr& f) {
  if (f.kind() == NodeKind::piecewise) return f;
  const auto* m = f.as<MaxNode>();
  if (!m) throw ExprError("as_piecewise: expression is neither piecewise nor max");
  std::vector<Cell> cells;
  const auto terms = m->terms;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    auto member = std::make_shared<const std::function<bool(std::span<const double>)>>(
        [terms, i](std::span<const double> x) {
          const double fi = terms[i](x);
          for (const auto& t : terms)
            if (t(x) > fi) return false;
          return true;
        });
    cells.emplace_back(PredicateCell{"active(" + std::to_string(i + 1) + ")", f.dim(), std::move(member)});
  }
  return detail::piecewise_unchecked(RegionPartition(std::move(cells)), terms);
}

/// f_i + indicator(S_i) for a piecewise (or finite-max) f; `index` is 0-based.
inline Expr constrained_piece(const Expr& f, std::size_t index) {
  const Expr pw = as_piecewise(f);
  const auto& p = *pw.as<PiecewiseNode>();
  if (index >= p.pieces.size())
    throw std::out_of_range("constrained_piece: index " + std::to_string(index) + " out of range for " +
                            std::to_string(p.pieces.size()) + " pieces");
  return sum({p.pieces[index], indicator(p.partition[index])});
}

/// (r/2) ||x||^2 on R^dim.
inline Expr half_squared_norm(double r, int dim) {
  std::vector<double> q(dim * dim, 0.0);
  for (int i = 0; i < dim; ++i) q[i * dim + i] = r;
  return quadratic(std::move(q), std::vector<double>(dim, 0.0), 0.0);
}

/// Boundary points of a one-dimensional piecewise function where the value is
/// not below the one-sided limits (sampled lower semicontinuity check).
inline std::vector<double> lsc_violations(const Expr& f, double tol = 1e-9) {
  std::vector<double> out;
  const auto* p = f.as<PiecewiseNode>();
  if (!p || f.dim() != 1 || !p->partition.all_polyhedral()) return out;
  for (const auto& c : p->partition.cells()) {
    for (const auto& h : c.polyhedron()->constraints()) {
      if (h.normal[0] == 0.0) continue;
      const double b = h.bound / h.normal[0];
      const double eps = 1e-7 * (1.0 + std::abs(b));
      const double at = f(b);
      const double side = std::min(f(b - eps), f(b + eps));
      if (at > side + tol * (1.0 + std::abs(side)) + 1e-6 * (1.0 + std::abs(side)) &&
          std::find(out.begin(), out.end(), b) == out.end())
        out.push_back(b);
    }
  }
  return out;
}

}  // namespace proxthresh
