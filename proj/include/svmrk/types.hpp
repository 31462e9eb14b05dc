#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace svmrk {

/// Physical coordinates. One-dimensional problems use only x(0); x(1) stays 0.
using Vec2 = Eigen::Vector2d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a moment matrix cannot be inverted at an evaluation point.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Axis-aligned interval (dim == 1) or rectangle (dim == 2).
struct Domain {
  int dim = 2;
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Ones();

  double measure() const {
    return dim == 1 ? hi(0) - lo(0) : (hi(0) - lo(0)) * (hi(1) - lo(1));
  }
  bool contains(const Vec2& x, double tol = 0.0) const {
    for (int k = 0; k < dim; ++k) {
      if (x(k) < lo(k) - tol || x(k) > hi(k) + tol) return false;
    }
    return true;
  }
};

/// Domain sides. 1D uses Left/Right only.
enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline const char* to_string(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

/// Runs the hot loops either on one thread or across the OpenMP team.
enum class Exec { Serial, Parallel };

}  // namespace svmrk
