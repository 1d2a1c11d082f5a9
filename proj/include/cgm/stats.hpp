#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace cgm::stats {

inline double mean(std::span<const double> xs) {
  double s = 0;
  for (double v : xs) s += v;
  return xs.empty() ? 0.0 : s / double(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s2 = 0;
  for (double v : xs) s2 += (v - m) * (v - m);
  return s2 / double(xs.size() - 1);
}

inline double sample_sd(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

// Standard error of the mean for i.i.d. samples.
inline double se_mean(std::span<const double> xs) {
  return xs.size() < 2 ? 0.0 : sample_sd(xs) / std::sqrt(double(xs.size()));
}

// Standard error of the mean of an autocorrelated sequence, by batch means.
// Splits into `batches` equal blocks and uses the spread of block averages.
inline double batch_se(std::span<const double> xs, int batches = 32) {
  if (xs.size() < std::size_t(2 * batches)) return se_mean(xs);
  const std::size_t bl = xs.size() / batches;
  std::vector<double> bm(batches);
  for (int b = 0; b < batches; ++b)
    bm[b] = mean(xs.subspan(b * bl, bl));
  return sample_sd(bm) / std::sqrt(double(batches));
}

inline double lag1_autocorr(std::span<const double> xs) {
  if (xs.size() < 3) return 0.0;
  const double m = mean(xs);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += (xs[i] - m) * (xs[i] - m);
    if (i + 1 < xs.size()) num += (xs[i] - m) * (xs[i + 1] - m);
  }
  return den > 0 ? num / den : 0.0;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0, sign = 1;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double d = 0;        // sup-distance
  double p_value = 1;  // asymptotic, Stephens-corrected
};

// One-sample KS against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::max(double(i + 1) / n - f, f - double(i) / n));
  }
  const double en = std::sqrt(n);
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

// Two-sample KS.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  const double ne = double(a.size()) * b.size() / double(a.size() + b.size());
  const double en = std::sqrt(ne);
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

// ---------------------------------------------------------------------------
// Chi-square

struct ChiSquareResult {
  double stat = 0;
  int dof = 0;
  double p_value = 1;
};

inline double chi_squared_sf(double stat, int dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Goodness of fit of observed counts against expected probabilities. Bins with
// expected count below `min_expected` are merged into their right neighbor.
inline ChiSquareResult chi_square_gof(std::vector<double> observed, std::vector<double> probs,
                                      double total, double min_expected = 5.0) {
  if (observed.size() != probs.size() || observed.empty())
    throw std::invalid_argument("chi_square_gof: bin mismatch");
  std::vector<double> obs, exp;
  double co = 0, ce = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    co += observed[i];
    ce += probs[i] * total;
    if (ce >= min_expected || i + 1 == observed.size()) {
      obs.push_back(co);
      exp.push_back(ce);
      co = ce = 0;
    }
  }
  if (exp.size() >= 2 && exp.back() < min_expected) {
    exp[exp.size() - 2] += exp.back();
    obs[obs.size() - 2] += obs.back();
    exp.pop_back();
    obs.pop_back();
  }
  double stat = 0;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (exp[i] > 0) stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  const int dof = int(obs.size()) - 1;
  return {stat, dof, chi_squared_sf(stat, dof)};
}

// Independence test on a contingency table (rows x cols of counts).
inline ChiSquareResult chi_square_independence(const std::vector<std::vector<double>>& table) {
  const std::size_t R = table.size();
  if (R < 2) throw std::invalid_argument("chi_square_independence: need >= 2 rows");
  const std::size_t C = table[0].size();
  std::vector<double> row(R, 0), col(C, 0);
  double total = 0;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      row[r] += table[r][c];
      col[c] += table[r][c];
      total += table[r][c];
    }
  double stat = 0;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const double e = row[r] * col[c] / total;
      if (e > 0) stat += (table[r][c] - e) * (table[r][c] - e) / e;
    }
  const int dof = int(R - 1) * int(C - 1);
  return {stat, dof, chi_squared_sf(stat, dof)};
}

// Normal-approximation binomial confidence half-width for a proportion.
inline double binomial_ci_half(double p_hat, std::size_t n, double z = 3.0) {
  return z * std::sqrt(std::max(p_hat * (1 - p_hat), 1e-12) / double(n));
}

}  // namespace cgm::stats
