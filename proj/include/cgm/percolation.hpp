#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cgm/environment.hpp"
#include "cgm/lattice.hpp"
#include "cgm/lpp.hpp"
#include "cgm/rng.hpp"
#include "cgm/stats.hpp"

namespace cgm {

// Oriented site percolation indicators sigma_z = 1{w_z = 1} of a
// Bernoulli-capped environment.
struct OrientedField {
  Grid<std::uint8_t> sigma;
  Pt lo{};
  double p1 = 0;

  bool open(Pt p) const { return sigma((p - lo).x, (p - lo).y) != 0; }
};

inline OrientedField oriented_field(const Environment& env) {
  if (env.family().kind != FamilyKind::bernoulli_capped)
    throw std::invalid_argument("oriented_field: needs a bernoulli_capped environment");
  OrientedField f{Grid<std::uint8_t>(env.width(), env.height()), env.lo(), env.family().p1};
  for (int j = 0; j < env.height(); ++j)
    for (int i = 0; i < env.width(); ++i)
      f.sigma(i, j) = env.at(env.lo() + Pt{i, j}) == 1.0 ? 1 : 0;
  return f;
}

// Sites on level n reachable from 0 along open up-right paths; openness of
// the initial point is ignored. reach[i] corresponds to u = (i, n - i).
inline std::vector<std::uint8_t> wet_level(const OrientedField& f, int n) {
  std::vector<std::uint8_t> prev{1}, cur;
  for (int lvl = 1; lvl <= n; ++lvl) {
    cur.assign(lvl + 1, 0);
    for (int i = 0; i <= lvl; ++i) {
      const bool from_e1 = i >= 1 && prev[i - 1];
      const bool from_e2 = i <= lvl - 1 && prev[i];
      if ((from_e1 || from_e2) && f.open(Pt{i, lvl - i})) cur[i] = 1;
    }
    prev = cur;
  }
  return prev;
}

struct RightEdgeEstimate {
  double beta_hat = 0;
  double se = 0;
  double survival = 0;  // fraction of replicates with a reachable level-n site
  int n = 0;
  int replicates = 0;
  std::vector<double> per_replicate;  // a_n / n for surviving replicates, NaN otherwise
};

// Right-edge speed a_n / n of the wet region, averaged over surviving
// replicates. Coupled uniforms: the same seed gives nested fields across p1.
inline RightEdgeEstimate right_edge(double p1, int n, std::uint64_t seed, int replicates) {
  if (!(p1 > 0 && p1 <= 1)) throw std::invalid_argument("right_edge: need 0 < p1 <= 1");
  if (n < 1 || replicates < 1) throw std::invalid_argument("right_edge: need n, replicates >= 1");
  RightEdgeEstimate est;
  est.n = n;
  est.replicates = replicates;
  std::vector<double> speeds;
  for (int r = 0; r < replicates; ++r) {
    const auto sub = rng::derive(seed, r);
    const Environment env =
        sample_environment(WeightFamily::bernoulli_capped(p1, 0.0), n + 1, n + 1, Pt{0, 0}, sub);
    const auto level = wet_level(oriented_field(env), n);
    int a_n = -1;
    for (int i = n; i >= 0; --i)
      if (level[i]) {
        a_n = i;
        break;
      }
    if (a_n >= 0) {
      speeds.push_back(double(a_n) / n);
      est.per_replicate.push_back(double(a_n) / n);
    } else {
      est.per_replicate.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  est.survival = double(speeds.size()) / replicates;
  if (!speeds.empty()) {
    est.beta_hat = stats::mean(speeds);
    est.se = stats::se_mean(speeds);
  }
  return est;
}

// ---------------------------------------------------------------------------
// psi_N = N - G_N(0), the nondecreasing approximation of the path functional
// psi = inf over infinite up-right paths of sum (1 - w).

struct PsiEstimate {
  std::vector<int> N_grid;
  std::vector<double> psi;
  bool stabilized = false;  // constant over the last quarter of the grid
  double psi_final = 0;
};

inline PsiEstimate psi_estimate(const Environment& env, Pt base, const std::vector<int>& N_grid) {
  if (env.family().kind == FamilyKind::bernoulli_capped) {
    // fine: values in {lo, 1}
  } else if (env.family().kind == FamilyKind::empirical) {
    for (double v : env.family().samples)
      if (v > 1) throw std::invalid_argument("psi_estimate: needs weights <= 1");
  } else {
    throw std::invalid_argument("psi_estimate: needs a weight family bounded by 1");
  }
  if (N_grid.empty()) throw std::invalid_argument("psi_estimate: empty N grid");
  int n_max = 0;
  for (int N : N_grid) n_max = std::max(n_max, N);
  const auto levels = point_to_line_levels(env, base, n_max, Vec2{0, 0});
  PsiEstimate est;
  est.N_grid = N_grid;
  for (int N : N_grid) est.psi.push_back(double(N) - levels[N].value);
  est.psi_final = est.psi.back();
  const std::size_t quarter = std::max<std::size_t>(1, est.psi.size() / 4);
  est.stabilized = true;
  for (std::size_t i = est.psi.size() - quarter; i < est.psi.size(); ++i)
    if (est.psi[i] != est.psi_final) est.stabilized = false;
  return est;
}

// ---------------------------------------------------------------------------
// Flat edge of the shape in the percolation cone

struct FlatEdgeDirection {
  Vec2 xi{};
  double estimate = 0;
  double se = 0;
  bool consistent_with_one = false;  // |est - 1| <= 3 se
  bool below_one = false;            // est < 1 - 3 se
};

struct FlatEdgeReport {
  std::vector<FlatEdgeDirection> fan;
  RightEdgeEstimate beta;
};

inline FlatEdgeReport flat_edge_check(double p1, double lo_value, int n, int replicates,
                                      const std::vector<Vec2>& directions, std::uint64_t seed) {
  const WeightFamily fam = WeightFamily::bernoulli_capped(p1, lo_value);
  FlatEdgeReport rep;
  for (Vec2 xi : directions) {
    if (!(xi.x > 0 && xi.y > 0)) throw std::domain_error("flat_edge_check: directions must be interior");
    const double norm = xi.x + xi.y;
    xi = {xi.x / norm, xi.y / norm};
    const Pt v{std::int64_t(n * xi.x), std::int64_t(n * xi.y)};
    std::vector<double> vals(replicates);
    for (int r = 0; r < replicates; ++r) {
      const Environment env = sample_environment(fam, int(v.x) + 1, int(v.y) + 1, Pt{0, 0},
                                                 rng::derive(seed, r));
      vals[r] = last_passage(env, Pt{0, 0}, v) / double(n);
    }
    FlatEdgeDirection d;
    d.xi = xi;
    d.estimate = stats::mean(vals);
    d.se = stats::se_mean(vals);
    d.consistent_with_one = std::abs(d.estimate - 1.0) <= 3 * d.se;
    d.below_one = d.estimate < 1.0 - 3 * d.se;
    rep.fan.push_back(d);
  }
  rep.beta = right_edge(p1, n, rng::derive(seed, 0xBEDD), replicates);
  return rep;
}

// ---------------------------------------------------------------------------
// Explicit percolation-cone Busemann formula
//   B(w,x,y) = (y-x).(e1+e2) + psi(T_y w) - psi(T_x w)

struct ConeBusemannSample {
  double lhs = 0;  // G_{x,v_n} - G_{y,v_n}
  double rhs = 0;  // (y-x).(e1+e2) + psi_N(T_y) - psi_N(T_x)
  bool agree = false;
};

inline ConeBusemannSample cone_busemann_check(const Environment& env, Pt x, Pt y, int n, int N) {
  const Pt v{n, n};
  const Pt lo{std::min(x.x, y.x), std::min(x.y, y.y)};
  const PassageTable t = backward_table(env, v, lo);
  ConeBusemannSample s;
  s.lhs = t.at(x) - t.at(y);
  const auto psi_x = psi_estimate(env, x, {N}).psi_final;
  const auto psi_y = psi_estimate(env, y, {N}).psi_final;
  s.rhs = double((y - x).x + (y - x).y) + psi_y - psi_x;
  s.agree = std::abs(s.lhs - s.rhs) < 1e-9;
  return s;
}

// G_n(0) - n = -psi_n, nonincreasing; its across-seed spread stays O(1) in
// the supercritical cone (zero fluctuation exponent).
inline std::vector<double> weak_disorder_diagnostic(const Environment& env, Pt base,
                                                    const std::vector<int>& n_grid) {
  const PsiEstimate est = psi_estimate(env, base, n_grid);
  std::vector<double> out;
  for (double p : est.psi) out.push_back(-p);
  return out;
}

}  // namespace cgm
