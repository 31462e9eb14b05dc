#include "svmrk/imrk.hpp"

#include "rk_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace svmrk {

KernelValue regularized_heaviside(double xi) {
  if (!(xi > 0.0)) return {0.0, 0.0};
  const double t = std::tanh(xi);
  return {t, 1.0 - t * t};
}

ImRkShapes::ImRkShapes(NodeSet nodes, ImRkOptions opts, std::shared_ptr<const ScoreField> score)
    : nodes_(std::make_shared<const NodeSet>(std::move(nodes))), opts_(opts), score_(std::move(score)) {
  opts_.basis.validate();
  opts_.bulk_kernel.validate();
  opts_.interface_kernel.validate();
  if (!score_) throw Error("interface-modified shapes need a score field");
  if (!(opts_.c_multiplier > 0.0)) throw Error("Heaviside length multiplier must be positive");
  if (!(opts_.gradient_layer >= 0.0)) throw Error("gradient layer must be non-negative");
  if (nodes_->size() == 0) throw Error("shape functions need at least one node");
  for (std::size_t i = 0; i < nodes_->size(); ++i) {
    if (nodes_->role[i] != NodeRole::Interface && nodes_->score[i] == 0.0) {
      throw Error("bulk node " + std::to_string(i) + " has zero score");
    }
  }
  c_ = opts_.c_multiplier * nodes_->spacing;
  grid_ = NeighborGrid(nodes_->x, nodes_->support, nodes_->dim);
}

bool ImRkShapes::kernel_at(int i, const Vec2& x, const ScoreSample& s, double& w, Vec2& dw) const {
  const NodeSet& ns = *nodes_;
  if (ns.role[i] == NodeRole::Interface) {
    tensor_kernel(opts_.interface_kernel, x, ns.x[i], ns.support[i], ns.dim, w, dw);
    return w > 0.0;
  }
  const double sgn = ns.score[i] > 0.0 ? 1.0 : -1.0;
  const KernelValue H = regularized_heaviside(sgn * s.value / c_);
  if (H.value <= 0.0) {
    w = 0.0;
    dw.setZero();
    return false;
  }
  double k;
  Vec2 dk;
  tensor_kernel(opts_.bulk_kernel, x, ns.x[i], ns.support[i], ns.dim, k, dk);
  w = k * H.value;
  dw = dk * H.value + k * H.dz * (sgn / c_) * s.grad;
  return w > 0.0;
}

void ImRkShapes::modified_kernel(int i, const Vec2& x, double& w, Vec2& dw) const {
  if (i < 0 || static_cast<std::size_t>(i) >= nodes_->size()) throw Error("node index out of range");
  if (!kernel_at(i, x, score_->sample(x), w, dw)) {
    w = 0.0;
    dw.setZero();
  }
}

CoverageError ImRkShapes::gap(const Vec2& x) const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "interface coverage gap at x = (%.6g, %.6g)", x(0), x(1));
  return CoverageError(buf);
}

void ImRkShapes::evaluate(const Vec2& x, bool gradient, int side, ShapeEval& out) const {
  thread_local std::vector<int> cand;
  thread_local std::vector<detail::Weighted> samples;
  auto gather = [&](const Vec2& p) {
    const ScoreSample s = score_->sample(p);
    grid_.query(p, cand);
    samples.clear();
    for (int i : cand) {
      double w;
      Vec2 dw;
      if (kernel_at(i, p, s, w, dw)) samples.push_back({i, w, dw});
    }
    return s;
  };

  const ScoreSample s = gather(x);
  const double gn = s.grad.norm();
  const double layer = opts_.gradient_layer * nodes_->spacing;
  const double dist = gn > 0.0 ? std::abs(s.value) / gn : 0.0;
  const bool in_layer = gradient && layer > 0.0 && gn > 0.0 && dist < layer;
  const auto status =
      detail::correct(*nodes_, x, opts_.basis.order, samples, gradient && !in_layer, detail::Inverse::Pseudo, out);
  if (status == detail::CoreStatus::Singular) throw gap(x);
  if (!gradient || (status == detail::CoreStatus::Ok && !in_layer)) return;

  // Inside the layer, or where the moment matrix loses rank (on the interface):
  // gradients from the requested material side, values at x.
  if (!(gn > 0.0)) throw gap(x);
  const double dir = side != 0 ? (side > 0 ? 1.0 : -1.0) : (s.value >= 0.0 ? 1.0 : -1.0);
  const double same = s.value == 0.0 || (s.value > 0.0) == (dir > 0.0) ? 1.0 : -1.0;
  const double step = in_layer ? layer - same * dist : 1e-7 * nodes_->spacing;
  const Vec2 xs = x + dir * step * (s.grad / gn);
  gather(xs);
  ShapeEval shifted;
  if (detail::correct(*nodes_, xs, opts_.basis.order, samples, true, detail::Inverse::Pseudo, shifted) !=
      detail::CoreStatus::Ok) {
    throw gap(x);
  }
  // Nodes absent at x carry zero value there.
  std::vector<double> value(shifted.size(), 0.0);
  for (std::size_t k = 0, m = 0; k < shifted.size(); ++k) {
    while (m < out.size() && out.nodes[m] < shifted.nodes[k]) ++m;
    if (m < out.size() && out.nodes[m] == shifted.nodes[k]) value[k] = out.value[m];
  }
  const double cond = out.cond;
  out = std::move(shifted);
  out.x = x;
  out.value = std::move(value);
  out.cond = cond;
}

}  // namespace svmrk
