#pragma once

#include <iomanip>
#include <ostream>

#include "cgm/lpp.hpp"

namespace cgm {

// Plotting exports: one row per lattice point, columns x,y,value.

inline void write_csv(const PassageTable& t, std::ostream& os) {
  os << "x,y,value\n" << std::setprecision(17);
  for (std::int64_t y = t.lo.y; y <= t.hi.y; ++y)
    for (std::int64_t x = t.lo.x; x <= t.hi.x; ++x)
      os << x << ',' << y << ',' << t.at(Pt{x, y}) << '\n';
}

enum class IncrementAxis { I, J };

inline void write_csv(const IncrementField& f, IncrementAxis axis, std::ostream& os) {
  os << "x,y,value\n" << std::setprecision(17);
  const bool horiz = axis == IncrementAxis::I;
  const std::int64_t xmax = horiz ? f.hi.x - 1 : f.hi.x;
  const std::int64_t ymax = horiz ? f.hi.y : f.hi.y - 1;
  for (std::int64_t y = f.lo.y; y <= ymax; ++y)
    for (std::int64_t x = f.lo.x; x <= xmax; ++x)
      os << x << ',' << y << ','
         << (horiz ? f.I_at(Pt{x, y}) : f.J_at(Pt{x, y})) << '\n';
}

}  // namespace cgm
