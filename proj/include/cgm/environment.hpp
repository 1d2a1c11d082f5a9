#pragma once

#include <cstdint>
#include <stdexcept>

#include "cgm/lattice.hpp"
#include "cgm/rng.hpp"
#include "cgm/weights.hpp"

namespace cgm {

// A finite window of the i.i.d. weight field. Cell values are keyed by their
// absolute coordinate, so windows with the same (seed, family) agree wherever
// they overlap, regardless of extents or traversal order. Immutable after
// sampling.
class Environment {
 public:
  Environment(WeightFamily family, std::uint64_t seed, Pt lo, Pt shift, int width, int height)
      : family_(std::move(family)), seed_(seed), lo_(lo), shift_(shift), w_(width), h_(height),
        grid_(width, height) {
    for (int j = 0; j < h_; ++j)
      for (int i = 0; i < w_; ++i) {
        const Pt key = lo_ + shift_ + Pt{i, j};
        grid_(i, j) = family_.at(seed_, key.x, key.y);
      }
  }

  const WeightFamily& family() const { return family_; }
  std::uint64_t seed() const { return seed_; }
  Pt lo() const { return lo_; }
  Pt hi() const { return lo_ + Pt{w_ - 1, h_ - 1}; }  // inclusive
  Pt shift() const { return shift_; }
  int width() const { return w_; }
  int height() const { return h_; }

  bool contains(Pt p) const {
    return p.x >= lo_.x && p.x < lo_.x + w_ && p.y >= lo_.y && p.y < lo_.y + h_;
  }
  bool contains_rect(Pt a, Pt b) const { return contains(a) && contains(b); }

  double at(Pt p) const {
#ifndef NDEBUG
    if (!contains(p)) throw std::out_of_range("Environment::at: " + p.str() + " outside window");
#endif
    return grid_((p - lo_).x, (p - lo_).y);
  }

  // Wrap an explicit weight grid (imported or hand-set values). The family
  // descriptor becomes the empirical law of the given values.
  static Environment from_grid(const Grid<double>& g, Pt lo) {
    Environment env;
    env.family_ =
        WeightFamily::empirical(std::vector<double>(g.data().begin(), g.data().end()));
    env.lo_ = lo;
    env.w_ = g.width();
    env.h_ = g.height();
    env.grid_ = g;
    return env;
  }

 private:
  friend Environment translate(const Environment&, Pt);
  Environment() = default;

  WeightFamily family_;
  std::uint64_t seed_ = 0;
  Pt lo_{}, shift_{};
  int w_ = 0, h_ = 0;
  Grid<double> grid_;
};

inline Environment sample_environment(const WeightFamily& family, int width, int height, Pt origin,
                                      std::uint64_t seed) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("sample_environment: extents must be >= 1");
  return Environment(family, seed, origin, Pt{0, 0}, width, height);
}

// Shift of the underlying field: translate(env, z).at(w) == env.at(w + z)
// wherever both windows are defined. Shares the sampled grid.
inline Environment translate(const Environment& env, Pt z) {
  Environment out = env;
  out.lo_ = env.lo_ - z;
  out.shift_ = env.shift_ + z;
  return out;
}

}  // namespace cgm
