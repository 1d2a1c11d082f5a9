#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgm/rng.hpp"

namespace cgm {

enum class FamilyKind { exponential, geometric, bernoulli_capped, empirical };

inline const char* family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::exponential: return "exponential";
    case FamilyKind::geometric: return "geometric";
    case FamilyKind::bernoulli_capped: return "bernoulli_capped";
    case FamilyKind::empirical: return "empirical";
  }
  return "?";
}

// i.i.d. weight family. All families are bounded below and have finite
// variance. Draws go through the inverse CDF so that a shared uniform couples
// monotonically across parameter values.
struct WeightFamily {
  FamilyKind kind = FamilyKind::exponential;
  double mean = 1.0;
  double variance = 1.0;
  double lower_bound = 0.0;
  double p1 = 0.0;  // bernoulli_capped: P(value = 1)
  double lo = 0.0;  // bernoulli_capped: the alternative value, lo < 1
  std::vector<double> samples;

  static WeightFamily exponential(double m) {
    if (!(m > 0)) throw std::invalid_argument("exponential family needs mean > 0");
    WeightFamily f;
    f.kind = FamilyKind::exponential;
    f.mean = m;
    f.variance = m * m;
    f.lower_bound = 0.0;
    return f;
  }

  // Support {1,2,...}, P(w > k) = (1 - 1/m)^k, mean m, variance m(m-1).
  static WeightFamily geometric(double m) {
    if (!(m > 1)) throw std::invalid_argument("geometric family needs mean > 1");
    WeightFamily f;
    f.kind = FamilyKind::geometric;
    f.mean = m;
    f.variance = m * (m - 1);
    f.lower_bound = 1.0;
    return f;
  }

  static WeightFamily bernoulli_capped(double p1, double lo = 0.0) {
    if (!(p1 > 0 && p1 <= 1)) throw std::invalid_argument("bernoulli_capped needs 0 < p1 <= 1");
    if (!(lo < 1)) throw std::invalid_argument("bernoulli_capped needs lo < 1");
    WeightFamily f;
    f.kind = FamilyKind::bernoulli_capped;
    f.p1 = p1;
    f.lo = lo;
    f.mean = p1 + lo * (1 - p1);
    f.variance = (1 - lo) * (1 - lo) * p1 * (1 - p1);
    f.lower_bound = std::min(lo, 1.0);
    return f;
  }

  static WeightFamily empirical(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("empirical family needs at least one sample");
    WeightFamily f;
    f.kind = FamilyKind::empirical;
    f.samples = std::move(xs);
    double s = 0, s2 = 0;
    for (double v : f.samples) s += v;
    f.mean = s / double(f.samples.size());
    for (double v : f.samples) s2 += (v - f.mean) * (v - f.mean);
    // draws are uniform over the sample list, so the population variance
    f.variance = s2 / double(f.samples.size());
    f.lower_bound = *std::min_element(f.samples.begin(), f.samples.end());
    return f;
  }

  double sigma() const { return std::sqrt(variance); }
  bool solvable() const {
    return kind == FamilyKind::exponential || kind == FamilyKind::geometric;
  }
  bool nonnegative() const { return lower_bound >= 0.0; }

  // Inverse CDF at u in [0,1). Monotone in u for every family.
  double draw(double u) const {
    switch (kind) {
      case FamilyKind::exponential:
        return -mean * std::log1p(-u);
      case FamilyKind::geometric:
        return geometric_icdf(mean, u);
      case FamilyKind::bernoulli_capped:
        return u < p1 ? 1.0 : lo;
      case FamilyKind::empirical: {
        auto i = static_cast<std::size_t>(u * double(samples.size()));
        if (i >= samples.size()) i = samples.size() - 1;
        return samples[i];
      }
    }
    return 0.0;
  }

  double at(std::uint64_t seed, std::int64_t x, std::int64_t y,
            rng::StreamTag tag = rng::StreamTag::weights) const {
    return draw(rng::uniform01(seed, x, y, tag));
  }

  // Geometric on {1,2,...} with the given mean, by inversion: the exact tail
  // law P(w > k) = (1 - 1/mean)^k holds for every k >= 0.
  static double geometric_icdf(double mean, double u) {
    const double q = 1.0 - 1.0 / mean;  // in (0,1)
    const double k = 1.0 + std::floor(std::log1p(-u) / std::log(q));
    return k;
  }
};

}  // namespace cgm
