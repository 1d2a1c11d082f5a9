#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cgm/environment.hpp"
#include "cgm/lattice.hpp"
#include "cgm/lpp.hpp"
#include "cgm/rng.hpp"
#include "cgm/shape.hpp"
#include "cgm/stats.hpp"

namespace cgm {

// Stationary cocycle sampled on the north/east boundary rays of an anchor v.
// Horizontal edges are i.i.d. with mean alpha = m + sigma sqrt(xi2/xi1),
// vertical edges i.i.d. with mean f(alpha) = m + sigma sqrt(xi1/xi2); the two
// sequences are independent of each other and of the bulk weights southwest
// of v. Edge draws share per-edge uniforms across directions (inverse CDF),
// so cocycles for different xi are monotonically coupled edge-for-edge.
struct BoundaryCocycle {
  SolvableModel model;
  Vec2 xi{};
  double alpha = 0;    // E B(x, x+e1)
  double f_alpha = 0;  // E B(x, x+e2)
  Vec2 h_mean{};       // (alpha, f_alpha); the centering vector is h(B) = -h_mean
  Pt anchor{};
  std::vector<double> horiz;  // horiz[k-1] = B(v - k e1, v - (k-1) e1)
  std::vector<double> vert;   // vert[k-1]  = B(v - k e2, v - (k-1) e2)
  std::uint64_t seed = 0;

  Vec2 h_of_B() const { return {-alpha, -f_alpha}; }
  NeBoundary ne_boundary() const { return {horiz, vert}; }
};

namespace detail {
inline double draw_with_mean(FamilyKind kind, double mean, double u) {
  return kind == FamilyKind::exponential ? -mean * std::log1p(-u)
                                         : WeightFamily::geometric_icdf(mean, u);
}
}  // namespace detail

inline BoundaryCocycle solvable_cocycle(const SolvableModel& model, Vec2 xi, Pt v, int ray_length,
                                        std::uint64_t seed) {
  if (!(xi.x > 0 && xi.y > 0))
    throw std::domain_error("solvable_cocycle: xi must be strictly interior");
  const double norm = xi.x + xi.y;
  xi = {xi.x / norm, xi.y / norm};
  const double s = xi.x / xi.y;
  BoundaryCocycle b;
  b.model = model;
  b.xi = xi;
  b.alpha = grad_gamma(model, s);            // m + sigma sqrt(xi2/xi1)
  b.f_alpha = f_closed(model, b.alpha);      // m + sigma sqrt(xi1/xi2)
  b.h_mean = {b.alpha, b.f_alpha};
  b.anchor = v;
  b.seed = seed;
  b.horiz.resize(ray_length);
  b.vert.resize(ray_length);
  for (int k = 0; k < ray_length; ++k) {
    b.horiz[k] = detail::draw_with_mean(model.kind, b.alpha,
                                        rng::uniform01(seed, k, 0, rng::StreamTag::boundary_h));
    b.vert[k] = detail::draw_with_mean(model.kind, b.f_alpha,
                                       rng::uniform01(seed, k, 0, rng::StreamTag::boundary_v));
  }
  return b;
}

// Cocycle extended over a rectangle by stationary LPP: B(x,y) = G^NE_{x,v} - G^NE_{y,v}.
// Additivity and antisymmetry are exact by construction; recovery
// min_i B(x, x+e_i) = w_x holds at every bulk x.
struct ExtendedCocycle {
  BoundaryCocycle boundary;
  Environment env;
  PassageTable table;  // NE table over [lo, v]

  Pt lo() const { return table.lo; }
  Pt anchor() const { return table.hi; }

  double B(Pt x, Pt y) const { return table.at(x) - table.at(y); }

  // Burke weight: minimum over the edges into x. Needs x - e1, x - e2 in range.
  double Y(Pt x) const { return std::min(B(x - e1, x), B(x - e2, x)); }
};

inline ExtendedCocycle extend_cocycle(const BoundaryCocycle& boundary, const Environment& env,
                                      Pt lo) {
  PassageTable t = ne_boundary_lpp(env, boundary.anchor, boundary.ne_boundary(), lo);
  return ExtendedCocycle{boundary, env, std::move(t)};
}

// ---------------------------------------------------------------------------
// Burke property: Y_x = B(x-e1,x) ^ B(x-e2,x) is i.i.d. with the weight law.

struct BurkeReport {
  double y_mean = 0, y_se = 0, expected_mean = 0;
  double rho_e1 = 0, rho_e2 = 0, rho_bound = 0;
  double marginal_p = 1;  // KS (exponential) or chi-square (geometric)
  std::size_t n = 0;

  bool pass(double level = 0.01, double z = 3.0) const {
    return std::abs(y_mean - expected_mean) < z * y_se && std::abs(rho_e1) < rho_bound &&
           std::abs(rho_e2) < rho_bound && marginal_p > level;
  }
};

inline BurkeReport burke_check(const ExtendedCocycle& ext, Pt region_lo, Pt region_hi) {
  if (!(ext.lo() + e1 + e2 <= region_lo) || !(region_lo <= region_hi) ||
      !(region_hi <= ext.anchor()))
    throw std::out_of_range("burke_check: region must lie inside the extended rectangle");
  const int w = int(region_hi.x - region_lo.x) + 1;
  const int h = int(region_hi.y - region_lo.y) + 1;
  Grid<double> Y(w, h);
  std::vector<double> flat;
  flat.reserve(std::size_t(w) * h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      Y(i, j) = ext.Y(region_lo + Pt{i, j});
      flat.push_back(Y(i, j));
    }
  BurkeReport rep;
  rep.n = flat.size();
  rep.expected_mean = ext.boundary.model.m;
  rep.y_mean = stats::mean(flat);
  rep.y_se = stats::se_mean(flat);

  auto pair_corr = [&](Pt step) {
    std::vector<double> a, bvals;
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) {
        const int i2 = i + int(step.x), j2 = j + int(step.y);
        if (i2 < w && j2 < h) {
          a.push_back(Y(i, j));
          bvals.push_back(Y(i2, j2));
        }
      }
    const double ma = stats::mean(a), mb = stats::mean(bvals);
    double num = 0, da = 0, db = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
      num += (a[t] - ma) * (bvals[t] - mb);
      da += (a[t] - ma) * (a[t] - ma);
      db += (bvals[t] - mb) * (bvals[t] - mb);
    }
    return da > 0 && db > 0 ? num / std::sqrt(da * db) : 0.0;
  };
  rep.rho_e1 = pair_corr(e1);
  rep.rho_e2 = pair_corr(e2);
  rep.rho_bound = 3.0 / std::sqrt(double(rep.n));

  const double m = ext.boundary.model.m;
  if (ext.boundary.model.kind == FamilyKind::exponential) {
    rep.marginal_p =
        stats::ks_one_sample(flat, [m](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x / m); })
            .p_value;
  } else {
    constexpr int K = 20;
    std::vector<double> counts(K + 1, 0), probs(K + 1, 0);
    double tail = 1.0;
    for (int k = 1; k <= K; ++k) {
      probs[k - 1] = std::pow(1 - 1 / m, k - 1) / m;
      tail -= probs[k - 1];
    }
    probs[K] = std::max(tail, 0.0);
    for (double v : flat) {
      const int k = int(v);
      counts[k >= 1 && k <= K ? k - 1 : K] += 1;
    }
    rep.marginal_p = stats::chi_square_gof(counts, probs, double(flat.size())).p_value;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Busemann estimators

struct BusemannSequence {
  std::vector<int> n_list;
  std::vector<double> diffs;
  int stabilized_from = -1;  // first index from which the sequence is constant
  double last = 0;
};

// G_{x,v_n} - G_{y,v_n} along v_n = floor(n xi).
inline BusemannSequence busemann_estimate(const Environment& env, Pt x, Pt y, Vec2 xi,
                                          const std::vector<int>& n_list) {
  if (!(xi.x > 0 && xi.y > 0))
    throw std::domain_error("busemann_estimate: xi must be strictly interior");
  const double norm = xi.x + xi.y;
  xi = {xi.x / norm, xi.y / norm};
  BusemannSequence seq;
  seq.n_list = n_list;
  const Pt lo{std::min(x.x, y.x), std::min(x.y, y.y)};
  for (int n : n_list) {
    const Pt v{std::int64_t(n * xi.x), std::int64_t(n * xi.y)};
    if (!(x <= v) || !(y <= v))
      throw std::out_of_range("busemann_estimate: v_n does not dominate x, y");
    const PassageTable t = backward_table(env, v, lo);
    seq.diffs.push_back(t.at(x) - t.at(y));
  }
  if (!seq.diffs.empty()) {
    seq.last = seq.diffs.back();
    int from = int(seq.diffs.size()) - 1;
    while (from > 0 && seq.diffs[from - 1] == seq.last) --from;
    seq.stabilized_from = from < int(seq.diffs.size()) - 1 ? from : -1;
  }
  return seq;
}

// Point-to-line differences G_n(h) - G_{n-1}(h) o T_z -> B(0,z) + h.z.
inline BusemannSequence busemann_point_to_line(const Environment& env, Pt z, Vec2 h,
                                               const std::vector<int>& n_list) {
  if (!(z == e1 || z == e2)) throw std::invalid_argument("busemann_point_to_line: z must be e1 or e2");
  int n_max = 0;
  for (int n : n_list) n_max = std::max(n_max, n);
  if (n_max < 1) throw std::domain_error("busemann_point_to_line: need n >= 1");
  const auto from_origin = point_to_line_levels(env, Pt{0, 0}, n_max, h);
  const auto from_z = point_to_line_levels(env, z, n_max - 1, h);
  BusemannSequence seq;
  seq.n_list = n_list;
  for (int n : n_list) seq.diffs.push_back(from_origin[n].value - from_z[n - 1].value);
  seq.last = seq.diffs.back();
  return seq;
}

// ---------------------------------------------------------------------------
// Variational identities (exact, given the formula tilt)

struct VariationalReport {
  double max_resid_pl = 0;  // | max_i {w_x + h.e_i + F(x,x+e_i)} - t |
  double max_resid_pp = 0;  // | max_i {w_x - B(x,x+e_i) - h(B).xi} + h(B).xi |
  std::size_t points = 0;
};

inline VariationalReport variational_identity_check(const ExtendedCocycle& ext, double t,
                                                    const std::vector<Pt>& sample_points) {
  const Vec2 hB = ext.boundary.h_of_B();
  const Vec2 h = hB + Vec2{t, t};
  const Vec2 xi = ext.boundary.xi;
  VariationalReport rep;
  for (Pt x : sample_points) {
    if (!(ext.lo() <= x) || !(x <= ext.anchor() - e1 - e2))
      throw std::out_of_range("variational_identity_check: sample point not in the bulk");
    const double w = ext.env.at(x);
    const double B1 = ext.B(x, x + e1), B2 = ext.B(x, x + e2);
    const double F1 = -hB.x - B1, F2 = -hB.y - B2;  // F(x,y) = h(B).(x-y) - B(x,y)
    const double val_pl = std::max(w + h.x + F1, w + h.y + F2);
    rep.max_resid_pl = std::max(rep.max_resid_pl, std::abs(val_pl - t));
    const double hBxi = hB.x * xi.x + hB.y * xi.y;
    const double val_pp = std::max(w - B1 - hBxi, w - B2 - hBxi);
    rep.max_resid_pp = std::max(rep.max_resid_pp, std::abs(val_pp - (-hBxi)));
    ++rep.points;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Centered cocycle and the uniform ergodic diagnostic

struct CenteredCocycle {
  const ExtendedCocycle* ext = nullptr;
  Vec2 h{};  // formula means, h(B)

  double F(Pt x, Pt y) const { return h.dot(x - y) - ext->B(x, y); }
};

inline CenteredCocycle center(const ExtendedCocycle& ext) {
  return CenteredCocycle{&ext, ext.boundary.h_of_B()};
}

// max over up-right-reachable x with |x|_1 = n of |F(0,x)| / n, base at the
// table's lower corner. Decays to 0 by the cocycle ergodic theorem.
inline std::vector<double> ergodic_diagnostic(const CenteredCocycle& c,
                                              const std::vector<int>& n_list) {
  const ExtendedCocycle& ext = *c.ext;
  const Pt base = ext.lo();
  const Pt span = ext.anchor() - base;
  std::vector<double> curve;
  for (int n : n_list) {
    if (n < 1 || n > span.x + span.y)
      throw std::out_of_range("ergodic_diagnostic: window too small for level n");
    double worst = 0;
    for (int i = std::max<int>(0, n - int(span.y)); i <= std::min<int>(n, int(span.x)); ++i) {
      const Pt x = base + Pt{i, n - i};
      worst = std::max(worst, std::abs(c.F(base, x)));
    }
    curve.push_back(worst / double(n));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// First-quadrant stationary model driven by the same cocycle: south/west
// boundary sums and bulk weights Y_x, so that G^SW_{v,x} = B(v,x) exactly.

struct SwResult {
  PassageTable table;
  double max_resid_vs_B = 0;  // |G^SW_{v,x} - B(v,x)| over the rectangle
};

inline SwResult sw_boundary_lpp(const ExtendedCocycle& ext, Pt v, Pt hi) {
  if (!(ext.lo() + e1 + e2 <= v) || !(hi <= ext.anchor()))
    throw std::out_of_range("sw_boundary_lpp: rectangle must fit inside the extended cocycle");
  SwBoundary b;
  for (Pt p = v; p.x < hi.x; p.x += 1) b.south.push_back(ext.B(p, p + e1));
  for (Pt p = v; p.y < hi.y; p.y += 1) b.west.push_back(ext.B(p, p + e2));
  PassageTable t =
      sw_boundary_lpp([&](Pt x) { return ext.Y(x); }, v, hi, b);
  SwResult res{std::move(t), 0};
  for (std::int64_t j = v.y; j <= hi.y; ++j)
    for (std::int64_t i = v.x; i <= hi.x; ++i) {
      const Pt x{i, j};
      res.max_resid_vs_B = std::max(res.max_resid_vs_B, std::abs(res.table.at(x) - ext.B(v, x)));
    }
  return res;
}

}  // namespace cgm
