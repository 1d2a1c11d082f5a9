#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cgm/environment.hpp"
#include "cgm/lattice.hpp"

namespace cgm {

// Last-passage times over up-right paths. The weight at the terminal point of
// a path is excluded everywhere. Forward tables are source-anchored
// (G_{x, p} for p in the rectangle), backward tables sink-anchored
// (G_{u, v} for u in the rectangle); both dense, row-major.
enum class TableKind { forward, backward };

struct PassageTable {
  TableKind kind = TableKind::forward;
  Pt lo{}, hi{};  // inclusive rectangle
  Pt anchor{};    // source (forward) or sink (backward)
  Grid<double> g;

  double at(Pt p) const { return g((p - lo).x, (p - lo).y); }
  bool contains(Pt p) const { return lo <= p && p <= hi; }
};

// Increment views of a sink-anchored table:
//   I(x) = G_{x,v} - G_{x+e1,v},   J(y) = G_{y,v} - G_{y+e2,v}.
struct IncrementField {
  Pt lo{}, hi{};  // rectangle of the parent table
  Grid<double> I;  // width-1 x height
  Grid<double> J;  // width x height-1

  double I_at(Pt x) const { return I((x - lo).x, (x - lo).y); }
  double J_at(Pt y) const { return J((y - lo).x, (y - lo).y); }
};

inline IncrementField increments(const PassageTable& t) {
  const int w = t.g.width(), h = t.g.height();
  if (w < 2 || h < 2) throw std::invalid_argument("increments: table too small");
  IncrementField f{t.lo, t.hi, Grid<double>(w - 1, h), Grid<double>(w, h - 1)};
  for (int j = 0; j < h; ++j)
    for (int i = 0; i + 1 < w; ++i) f.I(i, j) = t.g(i, j) - t.g(i + 1, j);
  for (int j = 0; j + 1 < h; ++j)
    for (int i = 0; i < w; ++i) f.J(i, j) = t.g(i, j) - t.g(i, j + 1);
  return f;
}

// ---------------------------------------------------------------------------
// Point-to-point

inline PassageTable forward_table(const Environment& env, Pt x, Pt y) {
  if (!(x <= y)) throw std::domain_error("last_passage: need x <= y coordinatewise");
  if (!env.contains_rect(x, y)) throw std::out_of_range("last_passage: rectangle outside window");
  const int w = int(y.x - x.x) + 1, h = int(y.y - x.y) + 1;
  PassageTable t{TableKind::forward, x, y, x, Grid<double>(w, h)};
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (i == 0 && j == 0) {
        t.g(0, 0) = 0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      if (i > 0) best = t.g(i - 1, j) + env.at(x + Pt{i - 1, j});
      if (j > 0) best = std::max(best, t.g(i, j - 1) + env.at(x + Pt{i, j - 1}));
      t.g(i, j) = best;
    }
  return t;
}

inline double last_passage(const Environment& env, Pt x, Pt y) {
  if (!(x <= y)) throw std::domain_error("last_passage: need x <= y coordinatewise");
  if (!env.contains_rect(x, y)) throw std::out_of_range("last_passage: rectangle outside window");
  const int w = int(y.x - x.x) + 1, h = int(y.y - x.y) + 1;
  std::vector<double> row(w);  // rolling row, O(width) memory
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (i == 0 && j == 0) {
        row[0] = 0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      if (i > 0) best = row[i - 1] + env.at(x + Pt{i - 1, j});
      if (j > 0) best = std::max(best, row[i] + env.at(x + Pt{i, j - 1}));
      row[i] = best;
    }
  return row[w - 1];
}

// G_{u,v} for every u in [lo, v], plain bulk weights.
inline PassageTable backward_table(const Environment& env, Pt v, Pt lo) {
  if (!(lo <= v)) throw std::domain_error("backward_table: need lo <= v");
  if (!env.contains_rect(lo, v)) throw std::out_of_range("backward_table: rectangle outside window");
  const int w = int(v.x - lo.x) + 1, h = int(v.y - lo.y) + 1;
  PassageTable t{TableKind::backward, lo, v, v, Grid<double>(w, h)};
  for (int j = h - 1; j >= 0; --j)
    for (int i = w - 1; i >= 0; --i) {
      if (i == w - 1 && j == h - 1) {
        t.g(i, j) = 0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      if (i + 1 < w) best = t.g(i + 1, j);
      if (j + 1 < h) best = std::max(best, t.g(i, j + 1));
      t.g(i, j) = env.at(lo + Pt{i, j}) + best;
    }
  return t;
}

// ---------------------------------------------------------------------------
// Point-to-line

struct PointToLine {
  double value = 0;
  Pt argmax{};  // endpoint; ties broken toward larger e1 coordinate
};

// G_n(h) for every level n = 0..n_max at once, from one triangular table.
// Needs the triangle {base + p : p >= 0, |p|_1 <= n_max} inside the window.
inline std::vector<PointToLine> point_to_line_levels(const Environment& env, Pt base, int n_max,
                                                     Vec2 h) {
  if (n_max < 0) throw std::domain_error("point_to_line: need n >= 0");
  if (!env.contains(base) || !env.contains(base + Pt{n_max, 0}) ||
      !env.contains(base + Pt{0, n_max}))
    throw std::out_of_range("point_to_line: level-n anti-diagonal outside window");
  Grid<double> L(n_max + 1, n_max + 1);  // L(p) = G_{base, base+p}
  std::vector<PointToLine> out(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    PointToLine best{-std::numeric_limits<double>::infinity(), {}};
    for (int i = n; i >= 0; --i) {  // descending i: e1-preference on ties
      const int j = n - i;
      if (n == 0) {
        L(0, 0) = 0;
      } else {
        double v = -std::numeric_limits<double>::infinity();
        if (i > 0) v = L(i - 1, j) + env.at(base + Pt{i - 1, j});
        if (j > 0) v = std::max(v, L(i, j - 1) + env.at(base + Pt{i, j - 1}));
        L(i, j) = v;
      }
      const double score = L(i, j) + h.dot(Pt{i, j});
      if (score > best.value) best = {score, base + Pt{i, j}};
    }
    out[n] = best;
  }
  return out;
}

inline PointToLine point_to_line(const Environment& env, int n, Vec2 h) {
  return point_to_line_levels(env, Pt{0, 0}, n, h).back();
}

// ---------------------------------------------------------------------------
// Growth cluster C_t = {x >= 0 in window : G_{0,x} + w_x <= t}

inline std::vector<Pt> growth_cluster(const Environment& env, double t) {
  if (!env.family().nonnegative())
    throw std::domain_error("growth_cluster: needs a nonnegative weight family");
  const Pt origin{0, 0};
  if (!env.contains(origin)) throw std::out_of_range("growth_cluster: window must contain 0");
  const PassageTable g = forward_table(env, origin, env.hi());
  std::vector<Pt> cluster;
  for (std::int64_t j = 0; j <= env.hi().y; ++j)
    for (std::int64_t i = 0; i <= env.hi().x; ++i) {
      const Pt p{i, j};
      if (g.at(p) + env.at(p) <= t) cluster.push_back(p);
    }
  return cluster;
}

// ---------------------------------------------------------------------------
// Boundary-driven stationary LPP

// Edge weights along the north/east rays from the sink v:
//   north[k-1] = B(v - k e1, v - (k-1) e1),  east[k-1] = B(v - k e2, v - (k-1) e2).
struct NeBoundary {
  std::vector<double> north;
  std::vector<double> east;
};

// G^NE_{u,v} over [lo, v]: cumulative boundary sums on the two rays,
// G^NE = w_u + max(G^NE_{u+e1}, G^NE_{u+e2}) in the bulk.
inline PassageTable ne_boundary_lpp(const Environment& env, Pt v, const NeBoundary& b, Pt lo) {
  if (!(lo <= v)) throw std::domain_error("ne_boundary_lpp: need lo <= v");
  const std::size_t need_n = std::size_t(v.x - lo.x), need_e = std::size_t(v.y - lo.y);
  if (b.north.size() < need_n || b.east.size() < need_e)
    throw std::invalid_argument("ne_boundary_lpp: boundary arrays shorter than the rectangle");
  if (need_n >= 1 && need_e >= 1 && !env.contains_rect(lo, v - e1 - e2))
    throw std::out_of_range("ne_boundary_lpp: bulk rectangle outside window");
  const int w = int(need_n) + 1, h = int(need_e) + 1;
  PassageTable t{TableKind::backward, lo, v, v, Grid<double>(w, h)};
  t.g(w - 1, h - 1) = 0;
  for (int k = 1; k < w; ++k) t.g(w - 1 - k, h - 1) = t.g(w - k, h - 1) + b.north[k - 1];
  for (int k = 1; k < h; ++k) t.g(w - 1, h - 1 - k) = t.g(w - 1, h - k) + b.east[k - 1];
  for (int j = h - 2; j >= 0; --j)
    for (int i = w - 2; i >= 0; --i)
      t.g(i, j) = env.at(lo + Pt{i, j}) + std::max(t.g(i + 1, j), t.g(i, j + 1));
  return t;
}

// The combined weight field of the NE model seen by a path: bulk w, edge
// values on the rays.
inline double ne_field_weight(const Environment& env, Pt v, const NeBoundary& b, Pt q) {
  if (q.y == v.y && q.x < v.x) return b.north[std::size_t(v.x - q.x) - 1];
  if (q.x == v.x && q.y < v.y) return b.east[std::size_t(v.y - q.y) - 1];
  return env.at(q);
}

struct NeRestricted {
  double via_e1 = 0;  // last step forced to e1, i.e. v - e1 on the path
  double via_e2 = 0;
  double unrestricted = 0;
};

// G^NE_{lo,v}(v - e_i on the path): forward DP over the combined field.
inline NeRestricted ne_boundary_lpp_restricted(const Environment& env, Pt v, const NeBoundary& b,
                                               Pt lo) {
  if (!(lo + e1 + e2 <= v))
    throw std::domain_error("ne_boundary_lpp_restricted: rectangle must be at least 2x2");
  const std::size_t need_n = std::size_t(v.x - lo.x), need_e = std::size_t(v.y - lo.y);
  if (b.north.size() < need_n || b.east.size() < need_e)
    throw std::invalid_argument("ne_boundary_lpp_restricted: boundary arrays too short");
  const int w = int(need_n) + 1, h = int(need_e) + 1;
  Grid<double> F(w, h);  // max path sum lo -> p, terminal excluded
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (i == 0 && j == 0) {
        F(0, 0) = 0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      if (i > 0) best = F(i - 1, j) + ne_field_weight(env, v, b, lo + Pt{i - 1, j});
      if (j > 0) best = std::max(best, F(i, j - 1) + ne_field_weight(env, v, b, lo + Pt{i, j - 1}));
      F(i, j) = best;
    }
  NeRestricted r;
  r.via_e1 = F(w - 2, h - 1) + ne_field_weight(env, v, b, v - e1);
  r.via_e2 = F(w - 1, h - 2) + ne_field_weight(env, v, b, v - e2);
  r.unrestricted = std::max(r.via_e1, r.via_e2);
  return r;
}

// South/west mirror. Edge weights along the rays from the origin v:
//   south[k-1] = B(v + (k-1) e1, v + k e1),  west[k-1] = B(v + (k-1) e2, v + k e2).
struct SwBoundary {
  std::vector<double> south;
  std::vector<double> west;
};

// G^SW_{v,x} over [v, hi] with bulk weights Y (for the stationary model,
// Y_x = B(x-e1,x) ^ B(x-e2,x) derived from the cocycle).
inline PassageTable sw_boundary_lpp(const std::function<double(Pt)>& Y, Pt v, Pt hi,
                                    const SwBoundary& b) {
  if (!(v <= hi)) throw std::domain_error("sw_boundary_lpp: need v <= hi");
  const std::size_t need_s = std::size_t(hi.x - v.x), need_w = std::size_t(hi.y - v.y);
  if (b.south.size() < need_s || b.west.size() < need_w)
    throw std::invalid_argument("sw_boundary_lpp: boundary arrays shorter than the rectangle");
  const int w = int(need_s) + 1, h = int(need_w) + 1;
  PassageTable t{TableKind::forward, v, hi, v, Grid<double>(w, h)};
  t.g(0, 0) = 0;
  for (int k = 1; k < w; ++k) t.g(k, 0) = t.g(k - 1, 0) + b.south[k - 1];
  for (int k = 1; k < h; ++k) t.g(0, k) = t.g(0, k - 1) + b.west[k - 1];
  for (int j = 1; j < h; ++j)
    for (int i = 1; i < w; ++i)
      t.g(i, j) = Y(v + Pt{i, j}) + std::max(t.g(i - 1, j), t.g(i, j - 1));
  return t;
}

}  // namespace cgm
