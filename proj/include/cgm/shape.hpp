#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cgm/environment.hpp"
#include "cgm/exec.hpp"
#include "cgm/lpp.hpp"
#include "cgm/rng.hpp"
#include "cgm/weights.hpp"

namespace cgm {

// Exactly solvable shape: gamma(s) = m(1+s) + 2*sigma*sqrt(s), with
// gamma'(s) = m + sigma/sqrt(s) and queueing dual f(a) = m + sigma^2/(a - m).
struct SolvableModel {
  FamilyKind kind = FamilyKind::exponential;
  double m = 1.0;
  double var = 1.0;

  double sigma() const { return std::sqrt(var); }
  WeightFamily family() const {
    return kind == FamilyKind::exponential ? WeightFamily::exponential(m)
                                           : WeightFamily::geometric(m);
  }
};

inline SolvableModel solvable_model(const WeightFamily& f) {
  if (!f.solvable())
    throw std::invalid_argument(std::string("not an exactly solvable family: ") +
                                family_name(f.kind));
  return SolvableModel{f.kind, f.mean, f.variance};
}

inline double gamma_curve(const SolvableModel& mo, double s) {
  if (s < 0) throw std::domain_error("gamma: need s >= 0");
  return mo.m * (1 + s) + 2 * mo.sigma() * std::sqrt(s);
}

inline double grad_gamma(const SolvableModel& mo, double s) {
  if (s < 0) throw std::domain_error("grad_gamma: need s >= 0");
  if (s == 0) return std::numeric_limits<double>::infinity();
  return mo.m + mo.sigma() / std::sqrt(s);
}

// g_pp on R_+^2 by homogeneity.
inline double gpp(const SolvableModel& mo, Vec2 xi) {
  if (xi.x < 0 || xi.y < 0) throw std::domain_error("gpp: need xi >= 0");
  return mo.m * (xi.x + xi.y) + 2 * mo.sigma() * std::sqrt(xi.x * xi.y);
}

inline Vec2 grad_gpp(const SolvableModel& mo, Vec2 xi) {
  const double s = xi.x / xi.y;
  return {grad_gamma(mo, s), grad_gamma(mo, 1.0 / s)};
}

inline double f_closed(const SolvableModel& mo, double alpha) {
  if (alpha <= mo.m) return std::numeric_limits<double>::infinity();
  return mo.m + mo.var / (alpha - mo.m);
}

// ---------------------------------------------------------------------------
// Shape curves: closed form or Monte Carlo grid.

struct ShapePoint {
  double s = 0;
  double gamma_hat = 0;
  double ci_half = 0;  // 1.96 * sd / sqrt(replicates)
  double sd = 0;
  int n = 0;
  int replicates = 0;
};

struct ShapeCurve {
  std::optional<SolvableModel> closed;
  std::vector<ShapePoint> points;
  bool concave_projected = false;

  bool is_closed() const { return closed.has_value(); }
};

// Upper concave majorant of the empirical points (in place), used when duality
// experiments need a concave input.
inline void project_concave(ShapeCurve& curve) {
  auto& pts = curve.points;
  if (pts.size() < 3) {
    curve.concave_projected = true;
    return;
  }
  // upper hull by monotone chain on (s, gamma_hat)
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (hull.size() >= 2) {
      const auto& a = pts[hull[hull.size() - 2]];
      const auto& b = pts[hull[hull.size() - 1]];
      const auto& c = pts[i];
      const double cross = (b.s - a.s) * (c.gamma_hat - a.gamma_hat) -
                           (b.gamma_hat - a.gamma_hat) * (c.s - a.s);
      if (cross >= 0) hull.pop_back();  // b below chord a-c: drop
      else break;
    }
    hull.push_back(i);
  }
  std::size_t seg = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (seg + 1 < hull.size() && pts[hull[seg + 1]].s <= pts[i].s) ++seg;
    if (seg + 1 < hull.size()) {
      const auto& a = pts[hull[seg]];
      const auto& b = pts[hull[seg + 1]];
      const double w = (pts[i].s - a.s) / (b.s - a.s);
      pts[i].gamma_hat = (1 - w) * a.gamma_hat + w * b.gamma_hat;
    }
  }
  curve.concave_projected = true;
}

namespace detail {

// Golden-section maximum of a unimodal function on [a, b], |interval| -> tol.
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

struct LegendreResult {
  double value = 0;
  double err_bound = 0;  // nonzero only for grid curves
};

// f(alpha) = sup_{s>=0} { gamma(s) - s*alpha }. Returns +inf for alpha <= mean
// (the paper's extension convention). Closed curves: golden-section around the
// stationary point, tolerance 1e-10 in s. Grid curves: discrete max with a
// concavity-based discretization bound.
inline LegendreResult f_legendre(const ShapeCurve& curve, double alpha) {
  if (curve.is_closed()) {
    const SolvableModel& mo = *curve.closed;
    if (alpha <= mo.m) return {std::numeric_limits<double>::infinity(), 0};
    const double s_star = mo.var / ((alpha - mo.m) * (alpha - mo.m));
    const double lo = s_star / 4, hi = s_star * 4;
    const double s =
        detail::golden_max([&](double u) { return gamma_curve(mo, u) - u * alpha; }, lo, hi, 1e-10);
    return {gamma_curve(mo, s) - s * alpha, 0};
  }
  const auto& pts = curve.points;
  if (pts.size() < 2) throw std::invalid_argument("f_legendre: empirical curve needs >= 2 points");
  std::size_t best = 0;
  double val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double phi = pts[i].gamma_hat - pts[i].s * alpha;
    if (phi > val) {
      val = phi;
      best = i;
    }
  }
  double bound = 0;
  auto chord = [&](std::size_t i, std::size_t j) {
    return (pts[j].gamma_hat - pts[i].gamma_hat) / (pts[j].s - pts[i].s) - alpha;
  };
  if (best == 0) {
    bound = std::abs(chord(0, 1)) * (pts[1].s - pts[0].s);
  } else if (best + 1 == pts.size()) {
    bound = std::abs(chord(best - 1, best)) * (pts[best].s - pts[best - 1].s);
  } else {
    const double a = chord(best - 1, best), b = chord(best, best + 1);
    bound = std::max(std::max(a, 0.0) * (pts[best + 1].s - pts[best].s),
                     std::max(-b, 0.0) * (pts[best].s - pts[best - 1].s));
  }
  return {val, bound};
}

// gamma(s) = inf_{alpha > m} { f(alpha) + s*alpha } (convex duality).
inline double gamma_from_f(const SolvableModel& mo, double s) {
  if (s < 0) throw std::domain_error("gamma_from_f: need s >= 0");
  if (s == 0) return mo.m;  // infimum, approached as alpha -> infinity
  const double d_star = mo.sigma() / std::sqrt(s);  // minimizer at m + d_star
  const double lo = mo.m + d_star / 4, hi = mo.m + d_star * 4;
  const double a = detail::golden_max([&](double u) { return -(f_closed(mo, u) + s * u); }, lo, hi,
                                      1e-10 * std::max(1.0, d_star));
  return f_closed(mo, a) + s * a;
}

// ---------------------------------------------------------------------------
// Tilt <-> velocity duality: h = -(alpha, f(alpha)) + t(e1+e2).

struct DualPoint {
  double alpha = 0;
  double f_alpha = 0;
  double t = 0;
  Vec2 xi{};  // in the simplex interior
  Vec2 h{};
};

// Unique (alpha, t) with h = -(alpha, f(alpha)) + t(e1+e2), by bisection on
// the strictly decreasing map alpha -> f(alpha) - alpha.
inline DualPoint tilt_to_velocity(const SolvableModel& mo, Vec2 h) {
  const double target = h.x - h.y;  // = f(alpha) - alpha at the solution
  auto g = [&](double a) { return f_closed(mo, a) - a - target; };
  double lo = mo.m + 1e-12, hi = mo.m + 1.0;
  while (g(hi) > 0) hi = mo.m + 2 * (hi - mo.m);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? lo : hi) = mid;
  }
  DualPoint d;
  d.alpha = 0.5 * (lo + hi);
  d.f_alpha = f_closed(mo, d.alpha);
  d.t = h.x + d.alpha;
  const double s = mo.var / ((d.alpha - mo.m) * (d.alpha - mo.m));  // inverts alpha = gamma'(s)
  d.xi = {s / (1 + s), 1 / (1 + s)};
  d.h = h;
  return d;
}

inline Vec2 velocity_to_tilt(const SolvableModel& mo, Vec2 xi, double t) {
  if (!(xi.x > 0 && xi.y > 0))
    throw std::domain_error("velocity_to_tilt: xi must be strictly interior");
  const double s = xi.x / xi.y;
  const double a = grad_gamma(mo, s);
  return {t - a, t - f_closed(mo, a)};
}

// ---------------------------------------------------------------------------
// Monte Carlo estimation of gamma: mean over replicates of n^{-1} G_{0,(ns,n)}.

inline ShapeCurve estimate_gamma_mc(const WeightFamily& family, const std::vector<double>& s_grid,
                                    int n, int replicates, std::uint64_t seed,
                                    double max_total_area = 4e9, int workers = 1) {
  if (n < 1 || replicates < 2)
    throw std::invalid_argument("estimate_gamma_mc: need n >= 1, replicates >= 2");
  double total_area = 0;
  for (double s : s_grid) {
    const auto a = std::max<std::int64_t>(1, std::int64_t(n * s));
    total_area += double(a + 1) * double(n + 1) * replicates;
  }
  if (total_area > max_total_area)
    throw std::invalid_argument("estimate_gamma_mc: requested lattice area exceeds the guard");

  ShapeCurve curve;
  for (std::size_t si = 0; si < s_grid.size(); ++si) {
    const double s = s_grid[si];
    const auto a = std::max<std::int64_t>(1, std::int64_t(n * s));
    std::vector<double> vals(replicates);
    parallel_for(replicates, workers, [&](int r) {
      const auto sub = rng::derive(seed, si * 1000003ull + std::uint64_t(r));
      const Environment env = sample_environment(family, int(a) + 1, n + 1, Pt{0, 0}, sub);
      vals[r] = last_passage(env, Pt{0, 0}, Pt{a, n}) / double(n);
    });
    double mu = 0;
    for (double v : vals) mu += v;
    mu /= replicates;
    double s2 = 0;
    for (double v : vals) s2 += (v - mu) * (v - mu);
    const double sd = std::sqrt(s2 / (replicates - 1));
    curve.points.push_back({s, mu, 1.96 * sd / std::sqrt(double(replicates)), sd, n, replicates});
  }
  return curve;
}

}  // namespace cgm
