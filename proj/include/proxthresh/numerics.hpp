#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxthresh/expr.hpp"
#include "proxthresh/threshold.hpp"

namespace proxthresh {

struct SolverConfig {
  double divergence_bound = 1e12;
  double max_radius = 1e6;
  double radius_growth = 2.0;
  int grid_points = 257;  // per dimension, per radius
  double arg_tol = 1e-8;
  double bisection_tol = 1e-3;
  int liminf_radii = 40;
  int sphere_samples_2d = 64;

  void validate() const {
    if (!(divergence_bound > 0) || !(max_radius > 0) || !(arg_tol > 0) || !(bisection_tol > 0))
      throw std::invalid_argument("solver config: tolerances and bounds must be positive");
    if (!(radius_growth > 1.0)) throw std::invalid_argument("solver config: radius growth must exceed 1");
    if (grid_points < 3) throw std::invalid_argument("solver config: need at least 3 grid points");
    if (liminf_radii < 4) throw std::invalid_argument("solver config: need at least 4 liminf radii");
    if (sphere_samples_2d < 4) throw std::invalid_argument("solver config: need at least 4 sphere samples");
  }
};

enum class EnvelopeStatus { finite, negative_infinity, inconclusive, improper };

inline const char* to_string(EnvelopeStatus s) {
  switch (s) {
    case EnvelopeStatus::finite: return "finite";
    case EnvelopeStatus::negative_infinity: return "negative_infinity";
    case EnvelopeStatus::inconclusive: return "inconclusive";
    case EnvelopeStatus::improper: return "improper";
  }
  return "?";
}

/// Outcome of a global minimization. `value` is -inf exactly when a witness
/// point pushed the objective below -divergence_bound.
struct EnvelopeResult {
  EnvelopeStatus status = EnvelopeStatus::inconclusive;
  ExtReal value = kInf;
  std::vector<Point> minimizers;
  std::optional<Point> witness;
  std::size_t evaluations = 0;

  bool is_finite() const { return status == EnvelopeStatus::finite; }
};

inline nlohmann::json to_json(const EnvelopeResult& r) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["value"] = std::isfinite(r.value) ? nlohmann::json(r.value) : nlohmann::json(format_double(r.value));
  j["minimizers"] = r.minimizers;
  j["witness"] = r.witness ? nlohmann::json(*r.witness) : nlohmann::json(nullptr);
  j["evaluations"] = r.evaluations;
  return j;
}

using Objective = std::function<double(std::span<const double>)>;

namespace detail {

struct GridCandidate {
  Point p;
  double v;
  double h;  // grid spacing it was found at
};

inline std::vector<double> radius_schedule(const SolverConfig& cfg) {
  std::vector<double> rs;
  for (double r = 1.0; r < cfg.max_radius; r *= cfg.radius_growth) rs.push_back(r);
  rs.push_back(cfg.max_radius);
  return rs;
}

/// Golden-section search on [a, b]; returns the best point evaluated.
inline std::pair<double, double> golden_section(const std::function<double(double)>& g, double a, double b, double tol,
                                                double best_x, double best_v) {
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = g(c), fd = g(d);
  auto keep = [&](double x, double v) {
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  };
  keep(c, fc);
  keep(d, fd);
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = g(c);
      keep(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = g(d);
      keep(d, fd);
    }
  }
  return {best_x, best_v};
}

/// Compass search with 8 directions and step halving.
inline std::pair<Point, double> compass_search(const Objective& phi, Point p, double v, double step, double tol) {
  static constexpr double dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  Point q(2);
  for (int it = 0; it < 20000 && step > tol; ++it) {
    int best = -1;
    double bv = v;
    for (int k = 0; k < 8; ++k) {
      q[0] = p[0] + step * dirs[k][0];
      q[1] = p[1] + step * dirs[k][1];
      const double w = phi(q);
      if (w < bv) {
        bv = w;
        best = k;
      }
    }
    if (best < 0) {
      step *= 0.5;
    } else {
      p[0] += step * dirs[best][0];
      p[1] += step * dirs[best][1];
      v = bv;
    }
  }
  return {p, v};
}

}  // namespace detail

/// Global minimization of phi over R^n (n = 1, 2) by grids over expanding
/// boxes around `center`, local refinement of the best grid minima, and a ray
/// probe beyond max_radius when the per-radius minima keep decreasing.
inline EnvelopeResult minimize_globally(const Objective& objective, const Point& center, const SolverConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(center.size());
  if (n < 1 || n > 2) throw std::invalid_argument("numerical minimization supports dimensions 1 and 2 only");

  EnvelopeResult out;
  const Objective phi = [&](std::span<const double> y) {
    ++out.evaluations;
    return objective(y);
  };
  auto diverged = [&](const Point& p, double v) {
    if (v < -cfg.divergence_bound) {
      out.status = EnvelopeStatus::negative_infinity;
      out.value = -kInf;
      out.witness = p;
      return true;
    }
    return false;
  };

  const int G = cfg.grid_points;
  const auto radii = detail::radius_schedule(cfg);
  std::vector<detail::GridCandidate> cands;
  std::vector<double> best_per_radius;
  double best = kInf;
  Point best_p = center;
  std::vector<double> vals;
  Point y(n);
  constexpr std::size_t kKeep = 16;

  for (double R : radii) {
    const double h = 2.0 * R / (G - 1);
    auto coord = [&](int d, int i) { return i == (G - 1) / 2 ? center[d] : center[d] - R + h * i; };
    if (n == 1) {
      vals.assign(G, kInf);
      for (int i = 0; i < G; ++i) {
        y[0] = coord(0, i);
        vals[i] = phi(y);
        if (diverged(y, vals[i])) return out;
      }
      for (int i = 0; i < G; ++i) {
        const double v = vals[i];
        if (!std::isfinite(v)) continue;
        if ((i == 0 || v <= vals[i - 1]) && (i == G - 1 || v <= vals[i + 1])) cands.push_back({{coord(0, i)}, v, h});
      }
    } else {
      vals.assign(static_cast<std::size_t>(G) * G, kInf);
      for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
          y[0] = coord(0, i);
          y[1] = coord(1, j);
          const double v = phi(y);
          vals[static_cast<std::size_t>(i) * G + j] = v;
          if (diverged(y, v)) return out;
        }
      for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
          const double v = vals[static_cast<std::size_t>(i) * G + j];
          if (!std::isfinite(v)) continue;
          bool is_min = true;
          for (int di = -1; di <= 1 && is_min; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const int a = i + di, b = j + dj;
              if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= G || b >= G) continue;
              if (vals[static_cast<std::size_t>(a) * G + b] < v) {
                is_min = false;
                break;
              }
            }
          if (is_min) cands.push_back({{coord(0, i), coord(1, j)}, v, h});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.v < b.v; });
    if (cands.size() > kKeep) cands.resize(kKeep);
    if (!cands.empty() && cands.front().v < best) {
      best = cands.front().v;
      best_p = cands.front().p;
    }
    best_per_radius.push_back(best);
  }

  if (!std::isfinite(best)) {
    out.status = EnvelopeStatus::improper;
    out.value = kInf;
    return out;
  }

  const std::size_t K = best_per_radius.size();
  const std::size_t q = std::max<std::size_t>(1, K / 4);
  const double drop = best_per_radius[K - 1 - q] - best_per_radius[K - 1];
  const bool stabilized = !(drop >= 0.01 * std::max(1.0, std::abs(best)));

  if (!stabilized) {
    Point u(n, 0.0);
    double un = 0.0;
    for (int d = 0; d < n; ++d) {
      u[d] = best_p[d] - center[d];
      un += u[d] * u[d];
    }
    un = std::sqrt(un);
    if (un == 0.0) {
      u.assign(n, 0.0);
      u[0] = 1.0;
      un = 1.0;
    }
    for (double s : {1.0, -1.0})
      for (int j = 1; j <= 60; ++j) {
        const double t = cfg.max_radius * std::ldexp(1.0, j);
        for (int d = 0; d < n; ++d) y[d] = center[d] + s * t * u[d] / un;
        if (diverged(y, phi(y))) return out;
      }
  }

  std::vector<std::pair<Point, double>> refined;
  for (const auto& c : cands) {
    if (n == 1) {
      const auto g = [&](double t) {
        const double p[1] = {t};
        return phi(p);
      };
      auto [x, v] = detail::golden_section(g, c.p[0] - c.h, c.p[0] + c.h, cfg.arg_tol, c.p[0], c.v);
      refined.push_back({{x}, v});
    } else {
      refined.push_back(detail::compass_search(phi, c.p, c.v, c.h, cfg.arg_tol));
    }
  }
  double v = kInf;
  for (const auto& r : refined) v = std::min(v, r.second);
  out.value = v;
  out.status = stabilized ? EnvelopeStatus::finite : EnvelopeStatus::inconclusive;
  for (const auto& [p, w] : refined) {
    if (w - v > 1e-6 * (1.0 + std::abs(v))) continue;
    const bool dup = std::any_of(out.minimizers.begin(), out.minimizers.end(),
                                 [&](const Point& m) { return std::sqrt(squared_distance(m, p)) <= 1e-6; });
    if (!dup) out.minimizers.push_back(p);
  }
  if (!stabilized) out.witness = best_p;
  return out;
}

namespace detail {
inline void require_numeric_dim(const Expr& f) {
  if (f.dim() < 1 || f.dim() > 2) throw std::invalid_argument("numerics support dimensions 1 and 2 only");
}
inline void require_point(const Expr& f, const Point& x) {
  require_numeric_dim(f);
  if (static_cast<int>(x.size()) != f.dim())
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(f.dim()));
}
}  // namespace detail

/// e_r f(x) = inf_y f(y) + (r/2)|y - x|^2
inline EnvelopeResult moreau_envelope(const Expr& f, double r, const Point& x, const SolverConfig& cfg = {}) {
  if (!(r >= 0.0)) throw std::invalid_argument("envelope parameter r must be nonnegative");
  detail::require_point(f, x);
  const Objective phi = [&](std::span<const double> yy) {
    const double fv = f(yy);
    if (fv == kInf) return kInf;
    return fv + 0.5 * r * squared_distance(yy, x);
  };
  return minimize_globally(phi, x, cfg);
}

/// Minimizers attaining e_r f(x).
inline std::vector<Point> prox_points(const Expr& f, double r, const Point& x, const SolverConfig& cfg = {}) {
  if (!(r > 0.0)) throw std::invalid_argument("prox requires r > 0");
  const auto e = moreau_envelope(f, r, x, cfg);
  if (!e.is_finite()) throw std::domain_error(std::string("prox undefined: envelope is ") + to_string(e.status));
  return e.minimizers;
}

/// g*(y) = sup_x <y, x> - g(x); +inf when certified unbounded.
inline ExtReal fenchel_conjugate(const Expr& g, const Point& y, const SolverConfig& cfg = {}) {
  detail::require_point(g, y);
  const Objective neg = [&](std::span<const double> x) {
    const double gv = g(x);
    if (gv == kInf) return kInf;
    return gv - dot(y, x);
  };
  const auto m = minimize_globally(neg, Point(g.dim(), 0.0), cfg);
  switch (m.status) {
    case EnvelopeStatus::negative_infinity: return kInf;
    case EnvelopeStatus::improper: return -kInf;
    default: return 0.0 - m.value;
  }
}

/// e_r f(x) through the conjugate of g = f + (r/2)|.|^2.
inline ExtReal envelope_via_conjugate(const Expr& f, double r, const Point& x, const SolverConfig& cfg = {}) {
  if (!(r > 0.0)) throw std::invalid_argument("conjugate path requires r > 0");
  detail::require_point(f, x);
  const Expr g = sum({f, half_squared_norm(r, f.dim())});
  Point rx = x;
  for (double& v : rx) v *= r;
  const double c = fenchel_conjugate(g, rx, cfg);
  if (c == kInf) return -kInf;
  return 0.5 * r * dot(x, x) - c;
}

struct BoundedBelowProbe {
  bool bounded_below = false;
  double minimum = -kInf;
  Point point;  // minimizer when bounded, witness otherwise
};

inline BoundedBelowProbe bounded_below_probe(const Objective& g, int dim, const SolverConfig& cfg = {}) {
  const auto m = minimize_globally(g, Point(dim, 0.0), cfg);
  BoundedBelowProbe out;
  out.bounded_below = m.status == EnvelopeStatus::finite;
  out.minimum = m.value;
  if (m.witness)
    out.point = *m.witness;
  else if (!m.minimizers.empty())
    out.point = m.minimizers.front();
  return out;
}

inline BoundedBelowProbe bounded_below_probe(const Expr& g, const SolverConfig& cfg = {}) {
  detail::require_numeric_dim(g);
  return bounded_below_probe([&](std::span<const double> x) { return g(x); }, g.dim(), cfg);
}

struct MinorantCheck {
  bool holds = false;
  std::optional<double> m;
  Point point;  // minimizer of f + (r/2)|.|^2, or the divergence witness
};

/// Whether f >= -(r/2)|x|^2 + m for some m, with m the sampled infimum.
inline MinorantCheck check_quadratic_minorant(const Expr& f, double r, const SolverConfig& cfg = {}) {
  if (!(r >= 0.0)) throw std::invalid_argument("minorant curvature parameter must be nonnegative");
  detail::require_numeric_dim(f);
  const auto probe = bounded_below_probe(
      [&](std::span<const double> x) {
        const double v = f(x);
        return v == kInf ? kInf : v + 0.5 * r * dot(x, x);
      },
      f.dim(), cfg);
  MinorantCheck out;
  out.holds = probe.bounded_below;
  out.point = probe.point;
  if (out.holds) out.m = probe.minimum;
  return out;
}

/// Threshold estimate from the growth rate min f(x)/|x|^2 on spheres of
/// radius 2^k. Rates that keep falling by more than 1% per doubling over the
/// last quarter of radii indicate superquadratic decrease.
inline ThresholdResult estimate_threshold_liminf(const Expr& f, const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require_numeric_dim(f);
  const int n = f.dim();
  const int K = cfg.liminf_radii;
  std::vector<double> m(K + 1, kInf);
  Point x(n);
  for (int k = 0; k <= K; ++k) {
    const double R = std::ldexp(1.0, k);
    const int samples = n == 1 ? 2 : cfg.sphere_samples_2d;
    for (int s = 0; s < samples; ++s) {
      if (n == 1) {
        x[0] = s == 0 ? R : -R;
      } else {
        const double th = 2.0 * std::numbers::pi * s / samples;
        x[0] = R * std::cos(th);
        x[1] = R * std::sin(th);
      }
      m[k] = std::min(m[k], f(x) / (R * R));
    }
  }
  const int first = K + 1 - std::max(2, (K + 1) / 4);
  ThresholdResult out;
  bool falling = true;
  for (int k = first; k < K; ++k)
    falling = falling && m[k + 1] < 0.0 && m[k + 1] < 1.01 * m[k];
  bool nonfinite = false;
  for (int k = first; k <= K; ++k) nonfinite = nonfinite || std::isnan(m[k]) || m[k] == -kInf;
  std::vector<std::string> in;
  for (int k = first; k <= K; ++k) in.push_back("m_" + std::to_string(k) + "=" + format_double(m[k]));
  if (falling || nonfinite) {
    out.bound = Bound::not_prox_bounded();
    out.trace.push_back({"growth rate diverges", "Fact4.3", "root", in, out.bound});
    return out;
  }
  double L = kInf;
  for (int k = first; k <= K; ++k) L = std::min(L, m[k]);
  const double v = std::isfinite(L) ? std::max(0.0, -2.0 * L) : 0.0;
  const double tol = 0.05 * (1.0 + v);
  out.bound = Bound::interval(std::max(0.0, v - tol), v + tol);
  out.estimate = v;
  out.trace.push_back({"liminf of f/|x|^2", "Fact4.3", "root", in, out.bound});
  return out;
}

/// Threshold estimate by bisection on r for "f + (r/2)|.|^2 bounded below".
inline ThresholdResult estimate_threshold_bisection(const Expr& f, const SolverConfig& cfg = {}) {
  cfg.validate();
  detail::require_numeric_dim(f);
  auto bounded = [&](double r) {
    return bounded_below_probe(
               [&](std::span<const double> x) {
                 const double v = f(x);
                 return v == kInf ? kInf : v + 0.5 * r * dot(x, x);
               },
               f.dim(), cfg)
        .bounded_below;
  };
  ThresholdResult out;
  if (bounded(0.0)) {
    out.bound = Bound::interval(0.0, cfg.bisection_tol);
    out.estimate = 0.0;
    out.trace.push_back({"bounded below at r = 0", "Fact4.3", "root", {}, out.bound});
    return out;
  }
  double lo = 0.0, hi = 1.0;
  while (!bounded(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > std::ldexp(1.0, 20)) {
      out.bound = Bound::not_prox_bounded();
      out.trace.push_back({"no bracket below 2^20", "Fact4.3", "root", {}, out.bound});
      return out;
    }
  }
  while (hi - lo > cfg.bisection_tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (bounded(mid) ? hi : lo) = mid;
  }
  out.bound = Bound::interval(lo, hi);
  out.estimate = 0.5 * (lo + hi);
  out.trace.push_back({"bisection on bounded-below probe", "Fact4.3", "root",
                       {"lo=" + format_double(lo), "hi=" + format_double(hi)}, out.bound});
  return out;
}

}  // namespace proxthresh
