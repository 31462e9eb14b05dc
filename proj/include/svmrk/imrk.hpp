#pragma once

#include "svmrk/rk.hpp"

#include <memory>
#include <string>

namespace svmrk {

/// max(0, tanh(xi)) and its derivative (sech^2 for xi > 0, zero otherwise).
KernelValue regularized_heaviside(double xi);

struct ImRkOptions {
  BasisSpec basis;
  RkKernelSpec bulk_kernel;       ///< kernel of nodes off the interface
  RkKernelSpec interface_kernel;  ///< b3 or power, unmodified
  double c_multiplier = 1.0;      ///< Heaviside length c = c_multiplier * h
  /// Gradients within gradient_layer * h of S = 0 are taken at that distance along
  /// grad S on the requested side; values are unaffected. 0 disables.
  double gradient_layer = 0.0;
};

/// Interface-modified RK shape functions. Bulk-node kernels are scaled by
/// H(sign(s_I) S(x) / c), so they vanish on and beyond the interface; interface
/// nodes keep their plain kernel. One coefficient per node.
class ImRkShapes : public ShapeProvider {
 public:
  ImRkShapes(NodeSet nodes, ImRkOptions opts, std::shared_ptr<const ScoreField> score);

  void evaluate(const Vec2& x, bool gradient, int side, ShapeEval& out) const override;
  using ShapeProvider::evaluate;
  const NodeSet& nodes() const override { return *nodes_; }
  std::string name() const override { return "imrk"; }

  /// Kernel of node i at x after interface modification, with its gradient.
  void modified_kernel(int i, const Vec2& x, double& w, Vec2& dw) const;
  const ScoreField& score() const { return *score_; }
  const ImRkOptions& options() const { return opts_; }
  double heaviside_length() const { return c_; }

 private:
  bool kernel_at(int i, const Vec2& x, const ScoreSample& s, double& w, Vec2& dw) const;
  CoverageError gap(const Vec2& x) const;

  std::shared_ptr<const NodeSet> nodes_;
  ImRkOptions opts_;
  std::shared_ptr<const ScoreField> score_;
  double c_;
  NeighborGrid grid_;
};

}  // namespace svmrk
