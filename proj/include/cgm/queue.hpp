#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgm/lattice.hpp"
#include "cgm/rng.hpp"
#include "cgm/shape.hpp"
#include "cgm/stats.hpp"
#include "cgm/weights.hpp"

namespace cgm {

// Tandem FIFO queues. Customer n, station k:
//   Lindley      W_{n+1,k} = (W_{n,k} + S_{n,k} - A_{n,k})^+
//   departures   A_{n,k+1} = (W_{n,k} + S_{n,k} - A_{n,k})^- + S_{n+1,k}
//   recovery     S_{n+1,k} = (S_{n+1,k} + W_{n+1,k}) ^ A_{n,k+1}
//   conservation W_{n+1,k} + S_{n+1,k} + A_{n,k} = W_{n,k} + S_{n,k} + A_{n,k+1}
// all exact at machine precision on every constructed window.

inline double pos_part(double x) { return x > 0 ? x : 0; }
inline double neg_part(double x) { return x < 0 ? -x : 0; }

struct EdgePolicy {
  enum class Kind { zero_start, burn_in } kind = Kind::zero_start;
  int b = 0;

  static EdgePolicy zero_start() { return {Kind::zero_start, 0}; }
  static EdgePolicy burn_in(int b) { return {Kind::burn_in, b}; }
};

inline std::vector<double> lindley_waits(std::span<const double> A, std::span<const double> S,
                                         EdgePolicy edge = EdgePolicy::zero_start()) {
  if (A.size() != S.size() || A.empty())
    throw std::invalid_argument("lindley_waits: rows must have equal length >= 1");
  for (std::size_t i = 0; i < A.size(); ++i)
    if (A[i] < 0 || S[i] < 0)
      throw std::invalid_argument("lindley_waits: negative service/arrival entry");
  std::vector<double> W(A.size());
  W[0] = 0;
  for (std::size_t n = 0; n + 1 < A.size(); ++n) W[n + 1] = pos_part(W[n] + S[n] - A[n]);
  if (edge.kind == EdgePolicy::Kind::burn_in) {
    const std::size_t b = std::min<std::size_t>(std::size_t(std::max(edge.b, 0)), W.size());
    W.erase(W.begin(), W.begin() + b);
  }
  return W;
}

// Inter-departure times; one shorter than the inputs (A'_n needs S_{n+1}).
inline std::vector<double> departures(std::span<const double> A, std::span<const double> S,
                                      std::span<const double> W) {
  if (A.size() != S.size() || A.size() != W.size() || A.size() < 2)
    throw std::invalid_argument("departures: rows must have equal length >= 2");
  std::vector<double> out(A.size() - 1);
  for (std::size_t n = 0; n + 1 < A.size(); ++n)
    out[n] = neg_part(W[n] + S[n] - A[n]) + S[n + 1];
  return out;
}

struct ArrivalLaw {
  enum class Kind { constant, exponential, geometric, empirical } kind = Kind::constant;
  double alpha = 0;
  std::vector<double> seq;

  static ArrivalLaw iid_constant(double a) { return {Kind::constant, a, {}}; }
  static ArrivalLaw iid_exponential(double a) { return {Kind::exponential, a, {}}; }
  static ArrivalLaw iid_geometric(double a) { return {Kind::geometric, a, {}}; }
  static ArrivalLaw empirical(std::vector<double> xs) {
    double s = 0;
    for (double v : xs) s += v;
    const double a = xs.empty() ? 0 : s / double(xs.size());
    return {Kind::empirical, a, std::move(xs)};
  }

  double at(std::uint64_t seed, std::int64_t n) const {
    switch (kind) {
      case Kind::constant: return alpha;
      case Kind::exponential:
        return -alpha * std::log1p(-rng::uniform01(seed, n, 0, rng::StreamTag::arrivals));
      case Kind::geometric:
        return WeightFamily::geometric_icdf(alpha,
                                            rng::uniform01(seed, n, 0, rng::StreamTag::arrivals));
      case Kind::empirical: return seq.at(std::size_t(n));
    }
    return 0;
  }
};

// Finite window of the tandem system. Row k of A holds arrivals at station k;
// each station pass consumes one customer, so row lengths shrink by one per
// station. Customer labels are preserved: X[k][n] is customer n.
//
// Families bounded below by c < 0 are handled by shifting service and
// arrival times up by -c; waits are unaffected and A-statistics are reported
// net of the shift via `shift`.
struct QueueWindow {
  std::vector<std::vector<double>> A;  // size stations+1
  std::vector<std::vector<double>> S;  // size stations
  std::vector<std::vector<double>> W;  // size stations
  double shift = 0;
  EdgePolicy edge = EdgePolicy::zero_start();

  int stations() const { return int(S.size()); }
  int customers() const { return A.empty() ? 0 : int(A[0].size()); }
};

inline QueueWindow tandem_pass(const ArrivalLaw& arrival, const WeightFamily& service,
                               int customers, int stations, std::uint64_t seed) {
  if (customers < stations + 1 || customers < 1)
    throw std::invalid_argument("tandem_pass: need customers > stations");
  if (!(arrival.alpha > service.mean))
    throw std::invalid_argument("tandem_pass: unstable, need arrival mean > service mean");
  const double shift = std::max(0.0, -service.lower_bound);
  QueueWindow win;
  win.shift = shift;
  win.A.resize(stations + 1);
  win.S.resize(stations);
  win.W.resize(stations);
  win.A[0].resize(customers);
  for (int n = 0; n < customers; ++n) win.A[0][n] = arrival.at(seed, n) + shift;
  for (int k = 0; k < stations; ++k) {
    const std::size_t len = win.A[k].size();
    if (len < 2) throw std::invalid_argument("tandem_pass: window exhausted before last station");
    win.S[k].resize(len);
    for (std::size_t n = 0; n < len; ++n)
      win.S[k][n] = service.at(seed, std::int64_t(n), k, rng::StreamTag::service) + shift;
    win.W[k] = lindley_waits(win.A[k], win.S[k]);
    win.A[k + 1] = departures(win.A[k], win.S[k], win.W[k]);
  }
  return win;
}

// Max residuals of the four cell identities over the whole window.
struct WindowResiduals {
  double lindley = 0, departure = 0, recovery = 0, conservation = 0;
  std::size_t cells = 0;
  double max_all() const {
    return std::max(std::max(lindley, departure), std::max(recovery, conservation));
  }
};

inline WindowResiduals verify_window(const QueueWindow& win) {
  WindowResiduals r;
  for (int k = 0; k < win.stations(); ++k) {
    const auto& A = win.A[k];
    const auto& S = win.S[k];
    const auto& W = win.W[k];
    const auto& An = win.A[k + 1];
    for (std::size_t n = 0; n + 1 < A.size(); ++n) {
      r.lindley = std::max(r.lindley, std::abs(W[n + 1] - pos_part(W[n] + S[n] - A[n])));
      r.departure = std::max(r.departure, std::abs(An[n] - (neg_part(W[n] + S[n] - A[n]) + S[n + 1])));
      r.recovery = std::max(r.recovery, std::abs(S[n + 1] - std::min(S[n + 1] + W[n + 1], An[n])));
      r.conservation = std::max(
          r.conservation, std::abs(W[n + 1] + S[n + 1] + A[n] - (W[n] + S[n] + An[n])));
      ++r.cells;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Fixed-point iteration diagnostics

struct StationStats {
  int k = 0;
  std::size_t n = 0;
  double mean = 0;        // of A^k, net of shift
  double variance = 0;
  double lag1 = 0;
  double se = 0;          // batch-means SE of the mean
  double ks_to_next = 0;  // two-sample KS distance to A^{k+1}
  double ks_p = 1;
  bool ks_pass = false;   // at the 5% level
};

struct FixedPointReport {
  std::vector<StationStats> stations;
  bool cesaro = false;
  double cesaro_mean = 0, cesaro_variance = 0, cesaro_lag1 = 0;
  double burn_fraction = 0.2;
};

inline FixedPointReport fixed_point_iterate(const ArrivalLaw& arrival,
                                            const WeightFamily& service, int customers,
                                            int stations, bool cesaro, std::uint64_t seed) {
  const QueueWindow win = tandem_pass(arrival, service, customers, stations, seed);
  FixedPointReport rep;
  rep.cesaro = cesaro;
  auto tail = [&](const std::vector<double>& row) {
    const std::size_t b = std::size_t(rep.burn_fraction * double(row.size()));
    std::vector<double> out(row.begin() + b, row.end());
    for (double& v : out) v -= win.shift;
    return out;
  };
  for (int k = 0; k <= stations; ++k) {
    const auto xs = tail(win.A[k]);
    StationStats st;
    st.k = k;
    st.n = xs.size();
    st.mean = stats::mean(xs);
    st.variance = stats::sample_variance(xs);
    st.lag1 = stats::lag1_autocorr(xs);
    st.se = stats::batch_se(xs);
    if (k < stations) {
      const auto ks = stats::ks_two_sample(xs, tail(win.A[k + 1]));
      st.ks_to_next = ks.d;
      st.ks_p = ks.p_value;
      st.ks_pass = ks.p_value > 0.05;
    }
    rep.stations.push_back(st);
  }
  if (cesaro) {
    double m = 0, v = 0, l = 0;
    for (const auto& st : rep.stations) {
      m += st.mean;
      v += st.variance;
      l += st.lag1;
    }
    const double c = double(rep.stations.size());
    rep.cesaro_mean = m / c;
    rep.cesaro_variance = v / c;
    rep.cesaro_lag1 = l / c;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Solvable fixed-point checks

struct SojournReport {
  double alpha = 0;
  double predicted = 0;  // f(alpha)
  double empirical = 0;
  double se = 0;  // batch means
  double z = 0;
  std::size_t n = 0;
};

// One station at the known fixed-point arrival law; E[W + S] should be f(alpha).
inline SojournReport sojourn_mean_check(double alpha, const WeightFamily& service, int customers,
                                        std::uint64_t seed) {
  if (!service.solvable())
    throw std::invalid_argument("sojourn_mean_check: fixed point known only for solvable families");
  const ArrivalLaw law = service.kind == FamilyKind::exponential
                             ? ArrivalLaw::iid_exponential(alpha)
                             : ArrivalLaw::iid_geometric(alpha);
  const QueueWindow win = tandem_pass(law, service, customers, 1, seed);
  const std::size_t b = std::size_t(0.2 * customers);
  std::vector<double> J;
  J.reserve(customers - b);
  for (std::size_t n = b; n < win.W[0].size(); ++n) J.push_back(win.W[0][n] + win.S[0][n]);
  SojournReport rep;
  rep.alpha = alpha;
  rep.predicted = f_closed(solvable_model(service), alpha);
  rep.empirical = stats::mean(J);
  rep.se = stats::batch_se(J);
  rep.z = rep.se > 0 ? (rep.empirical - rep.predicted) / rep.se : 0;
  rep.n = J.size();
  return rep;
}

struct GeometricFixedPointReport {
  double m = 0, alpha = 0, f_alpha = 0;
  stats::ChiSquareResult departures_chi2;  // marginal vs Geom(alpha)
  double departures_lag1 = 0;
  double lag1_bound = 0;  // 3/sqrt(N)
  double p_w0_hat = 0, p_w0_pred = 0, p_w0_se = 0;
  stats::ChiSquareResult waiting_chi2;  // full waiting law, thinned sample
  stats::ChiSquareResult joint_chi2;    // independence of (A_{n-1,1}, J_n), thinned
  std::size_t n = 0;

  bool pass(double level = 0.01, double z = 3.0) const {
    return departures_chi2.p_value > level && std::abs(departures_lag1) < lag1_bound &&
           std::abs(p_w0_hat - p_w0_pred) < z * p_w0_se && waiting_chi2.p_value > level &&
           joint_chi2.p_value > level;
  }
};

// One tandem pass with i.i.d. Geom(alpha) arrivals and Geom(m) service.
// Waiting law (k >= 1 uses f = f(alpha)):
//   P(W=0) = (alpha-m)/(alpha-1),  P(W=k) = ((m-1)/(alpha-1)) (1-1/f)^{k-1} / f.
inline GeometricFixedPointReport geometric_fixed_point_check(double m, double alpha, int customers,
                                                             std::uint64_t seed) {
  if (!(m > 1) || !(alpha > m))
    throw std::invalid_argument("geometric_fixed_point_check: need 1 < m < alpha");
  const WeightFamily service = WeightFamily::geometric(m);
  const QueueWindow win = tandem_pass(ArrivalLaw::iid_geometric(alpha), service, customers, 1, seed);
  const std::size_t b = std::size_t(0.2 * customers);

  GeometricFixedPointReport rep;
  rep.m = m;
  rep.alpha = alpha;
  rep.f_alpha = f_closed(solvable_model(service), alpha);

  // (a) departures marginal: i.i.d. Geom(alpha) at the fixed point
  std::vector<double> dep(win.A[1].begin() + b, win.A[1].end());
  rep.n = dep.size();
  {
    constexpr int K = 20;
    std::vector<double> counts(K + 1, 0), probs(K + 1, 0);
    double tail = 1.0;
    for (int k = 1; k <= K; ++k) {
      probs[k - 1] = std::pow(1 - 1 / alpha, k - 1) / alpha;
      tail -= probs[k - 1];
    }
    probs[K] = std::max(tail, 0.0);
    for (double v : dep) {
      const int k = int(v);
      counts[k >= 1 && k <= K ? k - 1 : K] += 1;
    }
    rep.departures_chi2 = stats::chi_square_gof(counts, probs, double(dep.size()));
  }

  // (b) no serial correlation in departures
  rep.departures_lag1 = stats::lag1_autocorr(dep);
  rep.lag1_bound = 3.0 / std::sqrt(double(dep.size()));

  // (c) waiting-time law
  {
    std::vector<double> w0(win.W[0].begin() + b, win.W[0].end());
    std::vector<double> ind(w0.size());
    for (std::size_t i = 0; i < w0.size(); ++i) ind[i] = w0[i] == 0 ? 1.0 : 0.0;
    rep.p_w0_hat = stats::mean(ind);
    rep.p_w0_pred = (alpha - m) / (alpha - 1);
    rep.p_w0_se = stats::batch_se(ind);

    constexpr int K = 20;
    constexpr int thin = 20;  // W_n is serially correlated; subsample for the GOF test
    const double f = rep.f_alpha;
    std::vector<double> counts(K + 2, 0), probs(K + 2, 0);
    probs[0] = (alpha - m) / (alpha - 1);
    double tail = 1.0 - probs[0];
    for (int k = 1; k <= K; ++k) {
      probs[k] = (m - 1) / (alpha - 1) * std::pow(1 - 1 / f, k - 1) / f;
      tail -= probs[k];
    }
    probs[K + 1] = std::max(tail, 0.0);
    double total = 0;
    for (std::size_t i = 0; i < w0.size(); i += thin) {
      const int k = int(w0[i]);
      counts[k >= 0 && k <= K ? k : K + 1] += 1;
      total += 1;
    }
    rep.waiting_chi2 = stats::chi_square_gof(counts, probs, total);
  }

  // (d) product form of (A_{n-1,1}, J_n)
  {
    constexpr int B = 8;
    constexpr int thin = 20;
    std::vector<std::vector<double>> table(B + 1, std::vector<double>(B + 1, 0));
    for (std::size_t n = b; n + 1 < win.A[1].size(); n += thin) {
      const int a = int(win.A[1][n]);
      const int j = int(win.W[0][n + 1] + win.S[0][n + 1]);
      const int ra = a >= 1 && a <= B ? a - 1 : B;
      const int rj = j >= 1 && j <= B ? j - 1 : B;
      table[ra][rj] += 1;
    }
    rep.joint_chi2 = stats::chi_square_independence(table);
  }
  return rep;
}

struct ExponentialFixedPointReport {
  double m = 0, alpha = 0, f_alpha = 0;
  double departures_ks_p = 1;  // vs Exp(alpha)
  double departures_lag1 = 0;
  double lag1_bound = 0;
  double p_w0_hat = 0, p_w0_pred = 0, p_w0_se = 0;  // P(W=0) = (alpha-m)/alpha
  std::size_t n = 0;

  bool pass(double level = 0.01, double z = 3.0) const {
    return departures_ks_p > level && std::abs(departures_lag1) < lag1_bound &&
           std::abs(p_w0_hat - p_w0_pred) < z * p_w0_se;
  }
};

// Exponential analogue of the geometric computation: i.i.d. Exp(alpha)
// arrivals are the fixed point for Exp(m) service.
inline ExponentialFixedPointReport exponential_fixed_point_check(double m, double alpha,
                                                                 int customers,
                                                                 std::uint64_t seed) {
  if (!(m > 0) || !(alpha > m))
    throw std::invalid_argument("exponential_fixed_point_check: need 0 < m < alpha");
  const WeightFamily service = WeightFamily::exponential(m);
  const QueueWindow win =
      tandem_pass(ArrivalLaw::iid_exponential(alpha), service, customers, 1, seed);
  const std::size_t b = std::size_t(0.2 * customers);

  ExponentialFixedPointReport rep;
  rep.m = m;
  rep.alpha = alpha;
  rep.f_alpha = f_closed(solvable_model(service), alpha);

  std::vector<double> dep(win.A[1].begin() + b, win.A[1].end());
  rep.n = dep.size();
  rep.departures_ks_p =
      stats::ks_one_sample(dep, [alpha](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x / alpha); })
          .p_value;
  rep.departures_lag1 = stats::lag1_autocorr(dep);
  rep.lag1_bound = 3.0 / std::sqrt(double(dep.size()));

  std::vector<double> ind;
  for (std::size_t i = b; i < win.W[0].size(); ++i) ind.push_back(win.W[0][i] == 0 ? 1.0 : 0.0);
  rep.p_w0_hat = stats::mean(ind);
  rep.p_w0_pred = (alpha - m) / alpha;
  rep.p_w0_se = stats::batch_se(ind);
  return rep;
}

// ---------------------------------------------------------------------------
// Transpose system (A~, S~, W~)_{ij} = (W_{j-1,i+1}+S_{j-1,i+1}, S_{j,i}, A_{j-1,i+1}-S_{j,i})

struct TransposeWindow {
  // local (ii, jj) <-> transposed customer i = ii, station j = jj + 1
  Grid<double> A, S, W;
  int customers = 0, stations = 0;
  double shift = 0;

  double mean_A() const {  // net of shift (A~ = W + S and only S carries the shift)
    double s = 0;
    for (double v : A.data()) s += v;
    return s / double(A.size()) - shift;
  }
};

inline TransposeWindow transpose_system(const QueueWindow& win) {
  const int K = win.stations();
  const int N = win.customers();
  const int I = K - 1;      // transposed customers: i in [0, K-2]
  const int J = N - K;      // transposed stations:  j in [1, N-K]
  if (I < 2 || J < 2) throw std::invalid_argument("transpose_system: window too small");
  TransposeWindow t;
  t.customers = I;
  t.stations = J;
  t.shift = win.shift;
  t.A = Grid<double>(I, J);
  t.S = Grid<double>(I, J);
  t.W = Grid<double>(I, J);
  for (int jj = 0; jj < J; ++jj) {
    const int j = jj + 1;
    for (int i = 0; i < I; ++i) {
      t.A(i, jj) = win.W[i + 1][j - 1] + win.S[i + 1][j - 1];
      t.S(i, jj) = win.S[i][j];
      t.W(i, jj) = win.A[i + 1][j - 1] - win.S[i][j];
    }
  }
  return t;
}

struct TransposeResiduals {
  double lindley = 0, departure = 0, recovery = 0, conservation = 0, w_negative = 0;
  std::size_t cells = 0;
  double max_all() const {
    return std::max({lindley, departure, recovery, conservation, w_negative});
  }
};

// The transposed system satisfies the same queueing identities exactly.
inline TransposeResiduals verify_transpose(const TransposeWindow& t) {
  TransposeResiduals r;
  const auto& A = t.A;
  const auto& S = t.S;
  const auto& W = t.W;
  for (int jj = 0; jj < t.stations; ++jj)
    for (int i = 0; i < t.customers; ++i) {
      r.w_negative = std::max(r.w_negative, -W(i, jj));
      if (i >= 1)
        r.lindley = std::max(
            r.lindley,
            std::abs(W(i, jj) - pos_part(W(i - 1, jj) + S(i - 1, jj) - A(i - 1, jj))));
      if (i + 1 < t.customers && jj + 1 < t.stations) {
        r.departure = std::max(
            r.departure, std::abs(A(i, jj + 1) -
                                  (neg_part(W(i, jj) + S(i, jj) - A(i, jj)) + S(i + 1, jj))));
        r.recovery = std::max(
            r.recovery,
            std::abs(S(i + 1, jj) - std::min(S(i + 1, jj) + W(i + 1, jj), A(i, jj + 1))));
        r.conservation = std::max(
            r.conservation, std::abs(W(i + 1, jj) + S(i + 1, jj) + A(i, jj) -
                                     (W(i, jj) + S(i, jj) + A(i, jj + 1))));
      }
      ++r.cells;
    }
  return r;
}

}  // namespace cgm
