#pragma once

#include "svmrk/image.hpp"
#include "svmrk/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace svmrk {

enum class RkKernelKind { Tent, BSpline2, BSpline3, Power };

struct RkKernelSpec {
  RkKernelKind kind = RkKernelKind::BSpline3;
  double exponent = 4.0;  ///< power kernel (1 - z)^exponent
  double support = 2.0;   ///< normalized support: a = support * h

  static RkKernelSpec power(double alpha, double support = 2.0) {
    return {RkKernelKind::Power, alpha, support};
  }
  void validate() const;
  std::string describe() const;
};

/// tent | b2 | b3 | power
RkKernelKind parse_rk_kernel(const std::string& name);
std::string to_string(RkKernelKind kind);

struct KernelValue {
  double value = 0.0;
  double dz = 0.0;
};

/// Kernel profile at normalized distance z >= 0; zero for z >= 1.
KernelValue rk_kernel_eval(const RkKernelSpec& spec, double z);

/// Tensor-product kernel prod_k phi(|x_k - c_k| / a) and its gradient in x.
void tensor_kernel(const RkKernelSpec& spec, const Vec2& x, const Vec2& center, double a, int dim,
                   double& w, Vec2& dw);

struct BasisSpec {
  int order = 1;  ///< complete polynomials up to this degree (0, 1 or 2)

  int size(int dim) const { return dim == 1 ? order + 1 : (order + 1) * (order + 2) / 2; }
  void validate() const;
};

enum class NodeRole : int { Matrix = -1, Interface = 0, Inclusion = 1 };

const char* to_string(NodeRole role);
NodeRole parse_node_role(const std::string& name);

/// Bulk role from the sign of a score: positive is the inclusion phase.
inline NodeRole role_from_score(double s) { return s >= 0.0 ? NodeRole::Inclusion : NodeRole::Matrix; }

struct NodeSet {
  int dim = 2;
  double spacing = 1.0;  ///< nominal nodal spacing h
  std::vector<Vec2> x;
  std::vector<NodeRole> role;
  std::vector<double> score;    ///< signed score s_I
  std::vector<double> support;  ///< support radius a_I
  std::vector<Vec2> normal;     ///< unit normal for interface nodes, zero otherwise

  std::size_t size() const { return x.size(); }
  void add(const Vec2& p, NodeRole r, double s, double a, const Vec2& n = Vec2::Zero());
  std::vector<int> indices_of(NodeRole r) const;
  std::size_t count(NodeRole r) const;
  /// Bulk roles agree with the score sign and no bulk score is zero;
  /// interface scores are within `interface_tol`.
  void validate(double interface_tol = 1e-8) const;
};

/// a_I = factor * h for every node.
void assign_support(NodeSet& nodes, double factor);

/// Regular grid of n[0] x n[1] nodes spanning the closed domain (n[1] ignored in 1D).
/// Roles and scores are left as matrix / -1.
NodeSet grid_nodes(const Domain& domain, std::array<int, 2> n, double support_factor);

/// Evaluation of all nonzero shape functions at one point.
struct ShapeEval {
  Vec2 x = Vec2::Zero();
  std::vector<int> nodes;
  std::vector<double> value;
  std::vector<Vec2> grad;
  bool has_gradient = false;
  double cond = 1.0;  ///< eigenvalue ratio of the moment matrix

  std::size_t size() const { return nodes.size(); }
  void clear() {
    nodes.clear();
    value.clear();
    grad.clear();
    has_gradient = false;
    cond = 1.0;
  }
};

/// Uniform bin grid over box supports. A node covers x when |x_k - x_Ik| < a_I on every axis.
class NeighborGrid {
 public:
  NeighborGrid() = default;
  NeighborGrid(const std::vector<Vec2>& x, const std::vector<double>& a, int dim);
  /// Covering nodes in ascending index order.
  void query(const Vec2& p, std::vector<int>& out) const;

 private:
  const std::vector<Vec2>* x_ = nullptr;
  const std::vector<double>* a_ = nullptr;
  int dim_ = 2;
  Vec2 lo_ = Vec2::Zero();
  double cell_ = 1.0;
  std::array<int, 2> n_{1, 1};
  std::vector<int> start_;
  std::vector<int> items_;
};

class ShapeProvider {
 public:
  virtual ~ShapeProvider() = default;
  /// side: material side (+1 / -1) used when a gradient is requested exactly on an
  /// interface; 0 means unspecified. Ignored by smooth approximations.
  virtual void evaluate(const Vec2& x, bool gradient, int side, ShapeEval& out) const = 0;
  virtual const NodeSet& nodes() const = 0;
  virtual std::string name() const = 0;

  ShapeEval evaluate(const Vec2& x, bool gradient = true, int side = 0) const {
    ShapeEval e;
    evaluate(x, gradient, side, e);
    return e;
  }
};

/// Standard reproducing-kernel shape functions.
class RkShapes : public ShapeProvider {
 public:
  RkShapes(NodeSet nodes, BasisSpec basis, RkKernelSpec kernel);
  void evaluate(const Vec2& x, bool gradient, int side, ShapeEval& out) const override;
  using ShapeProvider::evaluate;
  const NodeSet& nodes() const override { return *nodes_; }
  std::string name() const override { return "rk"; }
  const BasisSpec& basis() const { return basis_; }
  const RkKernelSpec& kernel() const { return kernel_; }

 private:
  std::shared_ptr<const NodeSet> nodes_;
  BasisSpec basis_;
  RkKernelSpec kernel_;
  NeighborGrid grid_;
};

struct ScoreSample {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
};

/// Signed score whose zero level set is the material interface; positive inside inclusions.
class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual ScoreSample sample(const Vec2& x) const = 0;
  double value(const Vec2& x) const { return sample(x).value; }
};

class AnalyticScore : public ScoreField {
 public:
  explicit AnalyticScore(std::function<ScoreSample(const Vec2&)> f) : f_(std::move(f)) {}
  ScoreSample sample(const Vec2& x) const override { return f_(x); }

  /// grad . x + offset
  static AnalyticScore affine(const Vec2& grad, double offset);
  /// max_j (R_j - |x - c_j|)
  static AnalyticScore circles(std::vector<Circle> circles);

 private:
  std::function<ScoreSample(const Vec2&)> f_;
};

/// RK interpolation of nodal scores: sum_I Psi_I(x) s_I with its exact gradient.
class InterpolatedScore : public ScoreField {
 public:
  InterpolatedScore(NodeSet nodes, BasisSpec basis, RkKernelSpec kernel);
  ScoreSample sample(const Vec2& x) const override;
  const RkShapes& shapes() const { return shapes_; }

 private:
  RkShapes shapes_;
};

}  // namespace svmrk
