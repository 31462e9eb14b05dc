#include "svmrk/rk.hpp"

#include "rk_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace svmrk {

void RkKernelSpec::validate() const {
  if (!(support > 0.0)) throw Error("RK kernel support must be positive");
  if (kind == RkKernelKind::Power && !(exponent >= 1.0)) throw Error("power kernel exponent must be >= 1");
}

std::string RkKernelSpec::describe() const {
  std::ostringstream s;
  s << to_string(kind);
  if (kind == RkKernelKind::Power) s << "(" << exponent << ")";
  s << " a=" << support << "h";
  return s.str();
}

RkKernelKind parse_rk_kernel(const std::string& name) {
  if (name == "tent") return RkKernelKind::Tent;
  if (name == "b2") return RkKernelKind::BSpline2;
  if (name == "b3") return RkKernelKind::BSpline3;
  if (name == "power") return RkKernelKind::Power;
  throw Error("unknown RK kernel '" + name + "' (expected tent|b2|b3|power)");
}

std::string to_string(RkKernelKind kind) {
  switch (kind) {
    case RkKernelKind::Tent: return "tent";
    case RkKernelKind::BSpline2: return "b2";
    case RkKernelKind::BSpline3: return "b3";
    case RkKernelKind::Power: return "power";
  }
  return "?";
}

KernelValue rk_kernel_eval(const RkKernelSpec& spec, double z) {
  z = std::abs(z);
  if (z >= 1.0) return {};
  switch (spec.kind) {
    case RkKernelKind::Tent:
      return {1.0 - z, -1.0};
    case RkKernelKind::BSpline2:
      if (z <= 1.0 / 3.0) return {0.75 - 2.25 * z * z, -4.5 * z};
      return {0.5 * (1.5 - 1.5 * z) * (1.5 - 1.5 * z), -1.5 * (1.5 - 1.5 * z)};
    case RkKernelKind::BSpline3:
      if (z <= 0.5) return {2.0 / 3.0 - 4.0 * z * z + 4.0 * z * z * z, -8.0 * z + 12.0 * z * z};
      return {4.0 / 3.0 - 4.0 * z + 4.0 * z * z - 4.0 / 3.0 * z * z * z, -4.0 + 8.0 * z - 4.0 * z * z};
    case RkKernelKind::Power:
      return {std::pow(1.0 - z, spec.exponent), -spec.exponent * std::pow(1.0 - z, spec.exponent - 1.0)};
  }
  return {};
}

void tensor_kernel(const RkKernelSpec& spec, const Vec2& x, const Vec2& c, double a, int dim, double& w,
                   Vec2& dw) {
  KernelValue k[2];
  double sgn[2] = {1.0, 1.0};
  for (int d = 0; d < dim; ++d) {
    const double r = x(d) - c(d);
    sgn[d] = r < 0.0 ? -1.0 : 1.0;
    k[d] = rk_kernel_eval(spec, std::abs(r) / a);
  }
  if (dim == 1) {
    w = k[0].value;
    dw = Vec2(k[0].dz * sgn[0] / a, 0.0);
  } else {
    w = k[0].value * k[1].value;
    dw = Vec2(k[0].dz * sgn[0] / a * k[1].value, k[1].dz * sgn[1] / a * k[0].value);
  }
}

void BasisSpec::validate() const {
  if (order < 0 || order > 2) throw Error("basis order must be 0, 1 or 2");
}

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Matrix: return "matrix";
    case NodeRole::Interface: return "interface";
    case NodeRole::Inclusion: return "inclusion";
  }
  return "?";
}

NodeRole parse_node_role(const std::string& name) {
  if (name == "matrix") return NodeRole::Matrix;
  if (name == "interface") return NodeRole::Interface;
  if (name == "inclusion") return NodeRole::Inclusion;
  throw Error("unknown node role '" + name + "'");
}

void NodeSet::add(const Vec2& p, NodeRole r, double s, double a, const Vec2& n) {
  x.push_back(p);
  role.push_back(r);
  score.push_back(s);
  support.push_back(a);
  normal.push_back(n);
}

std::vector<int> NodeSet::indices_of(NodeRole r) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (role[i] == r) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t NodeSet::count(NodeRole r) const {
  return static_cast<std::size_t>(std::count(role.begin(), role.end(), r));
}

void NodeSet::validate(double interface_tol) const {
  if (dim != 1 && dim != 2) throw Error("node set dimension must be 1 or 2");
  if (!(spacing > 0.0)) throw Error("node spacing must be positive");
  const std::size_t n = size();
  if (role.size() != n || score.size() != n || support.size() != n || normal.size() != n) {
    throw Error("node set arrays have inconsistent sizes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(support[i] > 0.0)) throw Error("node " + std::to_string(i) + " has non-positive support");
    switch (role[i]) {
      case NodeRole::Interface:
        if (!(std::abs(score[i]) <= interface_tol)) throw Error("interface node " + std::to_string(i) + " has nonzero score");
        break;
      case NodeRole::Inclusion:
        if (!(score[i] > 0.0)) throw Error("inclusion node " + std::to_string(i) + " must have positive score");
        break;
      case NodeRole::Matrix:
        if (!(score[i] < 0.0)) throw Error("matrix node " + std::to_string(i) + " must have negative score");
        break;
    }
  }
}

void assign_support(NodeSet& nodes, double factor) {
  if (!(factor > 0.0)) throw Error("support factor must be positive");
  nodes.support.assign(nodes.size(), factor * nodes.spacing);
}

NodeSet grid_nodes(const Domain& domain, std::array<int, 2> n, double support_factor) {
  if (domain.dim == 1) n[1] = 1;
  if (n[0] < 2 || (domain.dim == 2 && n[1] < 2)) throw Error("grid needs at least two nodes per axis");
  NodeSet ns;
  ns.dim = domain.dim;
  const double hx = (domain.hi(0) - domain.lo(0)) / (n[0] - 1);
  const double hy = domain.dim == 2 ? (domain.hi(1) - domain.lo(1)) / (n[1] - 1) : hx;
  ns.spacing = std::max(hx, hy);
  for (int j = 0; j < n[1]; ++j) {
    for (int i = 0; i < n[0]; ++i) {
      Vec2 p(domain.lo(0) + hx * i, domain.dim == 2 ? domain.lo(1) + hy * j : 0.0);
      if (i == n[0] - 1) p(0) = domain.hi(0);
      if (domain.dim == 2 && j == n[1] - 1) p(1) = domain.hi(1);
      ns.add(p, NodeRole::Matrix, -1.0, support_factor * ns.spacing);
    }
  }
  return ns;
}

NeighborGrid::NeighborGrid(const std::vector<Vec2>& x, const std::vector<double>& a, int dim)
    : x_(&x), a_(&a), dim_(dim) {
  if (x.empty()) throw Error("neighbor grid needs at least one node");
  Vec2 lo = x[0], hi = x[0];
  double amax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lo = lo.cwiseMin(x[i]);
    hi = hi.cwiseMax(x[i]);
    amax = std::max(amax, a[i]);
  }
  cell_ = amax;
  lo_ = lo;
  for (int d = 0; d < 2; ++d) {
    n_[d] = d < dim ? std::max(1, static_cast<int>(std::floor((hi(d) - lo(d)) / cell_)) + 1) : 1;
  }
  const std::size_t nb = static_cast<std::size_t>(n_[0]) * n_[1];
  std::vector<int> cnt(nb + 1, 0);
  auto bin_of = [&](const Vec2& p) {
    int b[2] = {0, 0};
    for (int d = 0; d < dim_; ++d) b[d] = std::clamp(static_cast<int>(std::floor((p(d) - lo_(d)) / cell_)), 0, n_[d] - 1);
    return b[0] + n_[0] * b[1];
  };
  for (const auto& p : x) ++cnt[bin_of(p) + 1];
  for (std::size_t b = 0; b < nb; ++b) cnt[b + 1] += cnt[b];
  start_ = cnt;
  items_.resize(x.size());
  std::vector<int> fill(cnt.begin(), cnt.end() - 1);
  for (std::size_t i = 0; i < x.size(); ++i) items_[fill[bin_of(x[i])]++] = static_cast<int>(i);
}

void NeighborGrid::query(const Vec2& p, std::vector<int>& out) const {
  out.clear();
  if (!x_) return;
  int b[2] = {0, 0};
  for (int d = 0; d < dim_; ++d) b[d] = static_cast<int>(std::floor((p(d) - lo_(d)) / cell_));
  const int r1 = dim_ == 2 ? 1 : 0;
  for (int j = b[1] - r1; j <= b[1] + r1; ++j) {
    if (j < 0 || j >= n_[1]) continue;
    for (int i = b[0] - 1; i <= b[0] + 1; ++i) {
      if (i < 0 || i >= n_[0]) continue;
      const int bin = i + n_[0] * j;
      for (int k = start_[bin]; k < start_[bin + 1]; ++k) {
        const int node = items_[k];
        const Vec2& q = (*x_)[node];
        const double a = (*a_)[node];
        bool inside = std::abs(p(0) - q(0)) < a;
        if (dim_ == 2) inside = inside && std::abs(p(1) - q(1)) < a;
        if (inside) out.push_back(node);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

namespace detail {

namespace {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

// Monomials of the scaled offset y and their y-derivatives.
void monomials(const Vec2& y, int dim, int order, SmallVec& H, SmallVec& H0, SmallVec& H1) {
  const int nb = dim == 1 ? order + 1 : (order + 1) * (order + 2) / 2;
  H.resize(nb);
  H0.setZero(nb);
  H1.setZero(nb);
  H(0) = 1.0;
  if (order == 0) return;
  if (dim == 1) {
    H(1) = y(0);
    H0(1) = 1.0;
    if (order == 2) {
      H(2) = y(0) * y(0);
      H0(2) = 2.0 * y(0);
    }
    return;
  }
  H(1) = y(0);
  H(2) = y(1);
  H0(1) = 1.0;
  H1(2) = 1.0;
  if (order == 2) {
    H(3) = y(0) * y(0);
    H(4) = y(0) * y(1);
    H(5) = y(1) * y(1);
    H0(3) = 2.0 * y(0);
    H0(4) = y(1);
    H1(4) = y(0);
    H1(5) = 2.0 * y(1);
  }
}

}  // namespace

CoreStatus correct(const NodeSet& ns, const Vec2& x, int order, const std::vector<Weighted>& samples,
                   bool gradient, Inverse mode, ShapeEval& out) {
  const int dim = ns.dim;
  const int nb = dim == 1 ? order + 1 : (order + 1) * (order + 2) / 2;
  const double h = ns.spacing;
  const std::size_t n = samples.size();
  out.clear();
  out.x = x;
  if (n == 0) return CoreStatus::Singular;

  thread_local std::vector<SmallVec> Hs, D0, D1;
  Hs.resize(n);
  D0.resize(n);
  D1.resize(n);
  SmallMat M = SmallMat::Zero(nb, nb);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 y = (x - ns.x[samples[k].node]) / h;
    monomials(y, dim, order, Hs[k], D0[k], D1[k]);
    M.noalias() += samples[k].w * Hs[k] * Hs[k].transpose();
  }

  Eigen::SelfAdjointEigenSolver<SmallMat> es(M);
  const SmallVec lam = es.eigenvalues();
  const double lmax = lam(nb - 1);
  if (!(lmax > 0.0)) return CoreStatus::Singular;
  const double lmin = lam(0);
  out.cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  constexpr double kRankTol = 1e-12;
  bool truncated = false;
  SmallVec inv(nb);
  for (int i = 0; i < nb; ++i) {
    if (lam(i) > kRankTol * lmax) {
      inv(i) = 1.0 / lam(i);
    } else {
      inv(i) = 0.0;
      truncated = true;
    }
  }
  if (truncated && mode == Inverse::Strict) return CoreStatus::Singular;
  const SmallMat Minv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  SmallVec e0 = SmallVec::Zero(nb);
  e0(0) = 1.0;
  const SmallVec b = Minv * e0;
  if (truncated && (M * b - e0).norm() > 1e-8) return CoreStatus::Singular;

  out.nodes.resize(n);
  out.value.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.nodes[k] = samples[k].node;
    out.value[k] = samples[k].w * b.dot(Hs[k]);
  }
  if (!gradient) return truncated ? CoreStatus::RankDeficient : CoreStatus::Ok;
  if (truncated) return CoreStatus::RankDeficient;

  out.grad.assign(n, Vec2::Zero());
  for (int d = 0; d < dim; ++d) {
    const auto& D = d == 0 ? D0 : D1;
    SmallMat dM = SmallMat::Zero(nb, nb);
    for (std::size_t k = 0; k < n; ++k) {
      const SmallVec dH = D[k] / h;
      dM.noalias() += samples[k].w * (dH * Hs[k].transpose() + Hs[k] * dH.transpose());
      dM.noalias() += samples[k].dw(d) * Hs[k] * Hs[k].transpose();
    }
    const SmallVec db = -(Minv * (dM * b));
    for (std::size_t k = 0; k < n; ++k) {
      const double bh = b.dot(Hs[k]);
      out.grad[k](d) = samples[k].w * (db.dot(Hs[k]) + b.dot(D[k]) / h) + samples[k].dw(d) * bh;
    }
  }
  out.has_gradient = true;
  return CoreStatus::Ok;
}

}  // namespace detail

RkShapes::RkShapes(NodeSet nodes, BasisSpec basis, RkKernelSpec kernel)
    : nodes_(std::make_shared<const NodeSet>(std::move(nodes))), basis_(basis), kernel_(kernel) {
  basis_.validate();
  kernel_.validate();
  if (nodes_->size() == 0) throw Error("shape functions need at least one node");
  for (double a : nodes_->support) {
    if (!(a > 0.0)) throw Error("node support must be positive");
  }
  grid_ = NeighborGrid(nodes_->x, nodes_->support, nodes_->dim);
}

void RkShapes::evaluate(const Vec2& x, bool gradient, int /*side*/, ShapeEval& out) const {
  thread_local std::vector<int> cand;
  thread_local std::vector<detail::Weighted> samples;
  grid_.query(x, cand);
  samples.clear();
  const NodeSet& ns = *nodes_;
  for (int i : cand) {
    double w;
    Vec2 dw;
    tensor_kernel(kernel_, x, ns.x[i], ns.support[i], ns.dim, w, dw);
    if (w > 0.0) samples.push_back({i, w, dw});
  }
  if (detail::correct(ns, x, basis_.order, samples, gradient, detail::Inverse::Strict, out) !=
      detail::CoreStatus::Ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "insufficient coverage at x = (%.6g, %.6g)", x(0), x(1));
    throw CoverageError(buf);
  }
}

AnalyticScore AnalyticScore::affine(const Vec2& grad, double offset) {
  return AnalyticScore([grad, offset](const Vec2& x) { return ScoreSample{grad.dot(x) + offset, grad}; });
}

AnalyticScore AnalyticScore::circles(std::vector<Circle> cs) {
  if (cs.empty()) throw Error("circle score needs at least one circle");
  return AnalyticScore([cs = std::move(cs)](const Vec2& x) {
    ScoreSample best{-std::numeric_limits<double>::infinity(), Vec2::Zero()};
    for (const auto& c : cs) {
      const Vec2 r = x - c.center;
      const double d = r.norm();
      const double s = c.radius - d;
      if (s > best.value) best = {s, d > 0.0 ? Vec2(-r / d) : Vec2::Zero()};
    }
    return best;
  });
}

InterpolatedScore::InterpolatedScore(NodeSet nodes, BasisSpec basis, RkKernelSpec kernel)
    : shapes_(std::move(nodes), basis, kernel) {}

ScoreSample InterpolatedScore::sample(const Vec2& x) const {
  thread_local ShapeEval e;
  shapes_.evaluate(x, true, 0, e);
  ScoreSample s;
  const auto& sc = shapes_.nodes().score;
  for (std::size_t k = 0; k < e.size(); ++k) {
    s.value += e.value[k] * sc[e.nodes[k]];
    s.grad += e.grad[k] * sc[e.nodes[k]];
  }
  return s;
}

}  // namespace svmrk
