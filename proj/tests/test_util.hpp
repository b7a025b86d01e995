// Shared fixtures for the test suites.
#pragma once

#include <doctest.h>

#include "alp/lp.hpp"

namespace alp::test {

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r ? static_cast<int>(rows.begin()->size()) : 0;
  Matrix out(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double x : row) out(i, j++) = x;
    ++i;
  }
  return out;
}

// min x s.t. x = 1.
inline LinearProgram tiny_equality_lp() {
  return make_lp(vec({1}), mat({{1}}), vec({1}), Matrix(0, 1), Vector(0));
}

// min -x s.t. x <= 2, -x <= 0.
inline LinearProgram tiny_box_lp() {
  return make_lp(vec({-1}), Matrix(0, 1), Vector(0), mat({{1}, {-1}}),
                 vec({2, 0}));
}

// The two-variable four-inequality benchmark realized in hardware:
//   (5/12) x1 - x2 <= 35/12,  (5/2) x1 + x2 <= 35/2,  -x1 <= 5,  x2 <= 5,
// solved for a given maximize direction (encoded as min of its negation).
inline LinearProgram hardware_lp(double dir1, double dir2) {
  return make_lp(vec({-dir1, -dir2}), Matrix(0, 2), Vector(0),
                 mat({{5.0 / 12.0, -1.0}, {5.0 / 2.0, 1.0}, {-1.0, 0.0},
                      {0.0, 1.0}}),
                 vec({35.0 / 12.0, 35.0 / 2.0, 5.0, 5.0}));
}

}  // namespace alp::test
