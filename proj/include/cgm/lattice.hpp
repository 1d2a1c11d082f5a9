#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgm {

// Lattice point in Z^2. e1 = (1,0), e2 = (0,1).
struct Pt {
  std::int64_t x = 0;
  std::int64_t y = 0;

  friend Pt operator+(Pt a, Pt b) { return {a.x + b.x, a.y + b.y}; }
  friend Pt operator-(Pt a, Pt b) { return {a.x - b.x, a.y - b.y}; }
  friend Pt operator*(std::int64_t c, Pt a) { return {c * a.x, c * a.y}; }
  friend bool operator==(Pt a, Pt b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(Pt a, Pt b) { return !(a == b); }
  // coordinatewise partial order
  friend bool operator<=(Pt a, Pt b) { return a.x <= b.x && a.y <= b.y; }

  std::int64_t l1() const { return (x < 0 ? -x : x) + (y < 0 ? -y : y); }
  std::string str() const { return "(" + std::to_string(x) + "," + std::to_string(y) + ")"; }
};

inline constexpr Pt e1{1, 0};
inline constexpr Pt e2{0, 1};

// Real 2-vector (directions xi, tilts h).
struct Vec2 {
  double x = 0;
  double y = 0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double dot(Pt p) const { return x * double(p.x) + y * double(p.y); }
};

// Dense row-major grid addressed by local (i,j), 0 <= i < width, 0 <= j < height.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : w_(width), h_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("Grid: extents must be positive");
  }

  int width() const { return w_; }
  int height() const { return h_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::int64_t i, std::int64_t j) { return data_[idx(i, j)]; }
  const T& operator()(std::int64_t i, std::int64_t j) const { return data_[idx(i, j)]; }

  bool in_range(std::int64_t i, std::int64_t j) const {
    return i >= 0 && i < w_ && j >= 0 && j < h_;
  }

  const std::vector<T>& data() const { return data_; }

 private:
  std::size_t idx(std::int64_t i, std::int64_t j) const {
    return static_cast<std::size_t>(j) * w_ + static_cast<std::size_t>(i);
  }

  int w_ = 0, h_ = 0;
  std::vector<T> data_;
};

}  // namespace cgm
