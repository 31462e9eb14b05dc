#include "svmrk/quadrature.hpp"

#include "../oracles/brute_force.hpp"
#include "doctest.h"

#include <random>

using namespace svmrk;

namespace {

NodeSet circle_nodes(int n, double R) {
  Domain d;
  const NodeSet g = grid_nodes(d, {n, n}, 2.0);
  const double h = g.spacing;
  const Vec2 c(0.5, 0.5);
  NodeSet ns;
  ns.spacing = h;
  const int m = static_cast<int>(std::ceil(2 * 3.14159265358979 * R / (0.75 * h)));
  for (int k = 0; k < m; ++k) {
    const double t = 2 * 3.14159265358979 * k / m;
    const Vec2 dir(std::cos(t), std::sin(t));
    ns.add(c + R * dir, NodeRole::Interface, 0.0, 2.0 * h, -dir);
  }
  for (const Vec2& p : g.x) {
    const double v = R - (p - c).norm();
    if (std::abs(v) > h / 3) ns.add(p, role_from_score(v), v, 2.0 * h);
  }
  return ns;
}

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials of degree 2n - 1 exactly") {
  for (int n = 1; n <= 10; ++n) {
    const auto [x, w] = gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], p);
      CHECK(s == doctest::Approx(p % 2 ? 0.0 : 2.0 / (p + 1)).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("gauss scheme and boundary weights add up to measures") {
  Domain d;
  d.hi = Vec2(2.0, 3.0);
  const GaussScheme g = gauss_scheme(d, {4, 6}, 5);
  CHECK(g.points.size() == 4 * 6 * 25);
  CHECK(g.total_weight() == doctest::Approx(6.0).epsilon(1e-13));
  double perim = 0.0;
  for (const auto& b : gauss_boundary(d, {4, 6}, 5)) perim += b.w;
  CHECK(perim == doctest::Approx(10.0).epsilon(1e-13));
}

TEST_CASE("voronoi cells tile the domain with and without mirror pairs") {
  Domain d;
  for (bool mirrors : {false, true}) {
    NodeSet ns = mirrors ? circle_nodes(15, 0.3) : grid_nodes(d, {12, 12}, 2.0);
    if (!mirrors) {
      std::mt19937_64 rng(3);
      std::uniform_real_distribution<double> u(-0.3, 0.3);
      for (auto& x : ns.x)
        for (int k = 0; k < 2; ++k)
          if (x(k) > 0 && x(k) < 1) x(k) += u(rng) * ns.spacing;
    }
    const SmoothingCellComplex c = scni_cells(ns, d);
    CHECK(c.total_area() == doctest::Approx(1.0).epsilon(1e-8));
    std::size_t mirror_sites = 0;
    for (const auto& cell : c.cells) {
      CHECK(cell.area > 0.0);
      CHECK(cell.area == doctest::Approx(oracle::polygon_area(cell.polygon)).epsilon(1e-10));
      mirror_sites += cell.site.mirror;
    }
    if (mirrors) CHECK(mirror_sites > 0);
  }
}

TEST_CASE("mirror pairs sit symmetrically on the stored normal") {
  const NodeSet ns = circle_nodes(12, 0.3);
  const auto pairs = mirror_interface_nodes(ns, 1e-3 * ns.spacing);
  CHECK(pairs.size() == ns.count(NodeRole::Interface));
  for (const auto& p : pairs) {
    CHECK((0.5 * (p.plus + p.minus) - p.x).norm() < 1e-15);
    CHECK((p.plus - p.minus).norm() == doctest::Approx(2e-3 * ns.spacing));
    CHECK((p.plus - Vec2(0.5, 0.5)).norm() < (p.minus - Vec2(0.5, 0.5)).norm());
  }
}

TEST_CASE("one-dimensional cells are midpoint intervals") {
  Domain d;
  d.dim = 1;
  d.hi = Vec2(10.0, 0.0);
  NodeSet ns = grid_nodes(d, {11, 1}, 2.0);
  const SmoothingCellComplex c = scni_cells(ns, d);
  CHECK(c.total_area() == doctest::Approx(10.0));
  for (const auto& cell : c.cells) {
    const double x = cell.site.x(0);
    CHECK(cell.area == doctest::Approx(x == 0.0 || x == 10.0 ? 0.5 : 1.0));
  }
}

TEST_CASE("smoothed gradients reproduce constants and linears per cell") {
  const NodeSet ns = circle_nodes(12, 0.3);
  const Domain d;
  const SmoothingCellComplex c = scni_cells(ns, d);
  RkShapes sh(ns, BasisSpec{1}, RkKernelSpec{});
  const auto grads = smoothed_gradients(sh, c, Exec::Serial);
  for (const auto& g : grads) {
    Vec2 s0 = Vec2::Zero();
    Eigen::Matrix2d s1 = Eigen::Matrix2d::Zero();
    for (std::size_t m = 0; m < g.nodes.size(); ++m) {
      s0 += g.b[m];
      s1 += ns.x[g.nodes[m]] * g.b[m].transpose();
    }
    CHECK(s0.norm() < 1e-8);
    CHECK((s1 - Eigen::Matrix2d::Identity()).norm() < 1e-8);
  }
}

TEST_CASE("first-order integration constraint holds node by node") {
  const NodeSet ns = circle_nodes(10, 0.3);
  const Domain d;
  const SmoothingCellComplex c = scni_cells(ns, d);
  RkShapes sh(ns, BasisSpec{1}, RkKernelSpec{});
  const auto grads = smoothed_gradients(sh, c, Exec::Serial);
  std::vector<Vec2> lhs(ns.size(), Vec2::Zero()), rhs(ns.size(), Vec2::Zero());
  for (std::size_t L = 0; L < c.cells.size(); ++L)
    for (std::size_t m = 0; m < grads[L].nodes.size(); ++m) lhs[grads[L].nodes[m]] += c.cells[L].area * grads[L].b[m];
  for (const auto& bp : c.boundary_points()) {
    const ShapeEval e = sh.evaluate(bp.x, false);
    for (std::size_t m = 0; m < e.size(); ++m) rhs[e.nodes[m]] += bp.w * e.value[m] * bp.n;
  }
  for (std::size_t I = 0; I < ns.size(); ++I) CHECK((lhs[I] - rhs[I]).norm() < 1e-8);
}
