#pragma once

// Moment-matrix correction shared by the standard and interface-modified shapes.

#include "svmrk/rk.hpp"

#include <vector>

namespace svmrk::detail {

struct Weighted {
  int node;
  double w;
  Vec2 dw;
};

enum class Inverse {
  Strict,  ///< fail when the moment matrix is numerically singular
  Pseudo   ///< truncated inverse, accepted if the reproducing system stays consistent
};

enum class CoreStatus {
  Ok,
  Singular,      ///< no consistent correction
  RankDeficient  ///< pseudo-inverse used; values valid, gradients unavailable
};

/// Fills out.nodes / value / grad from kernel samples at x.
CoreStatus correct(const NodeSet& nodes, const Vec2& x, int order, const std::vector<Weighted>& samples,
                   bool gradient, Inverse mode, ShapeEval& out);

}  // namespace svmrk::detail
