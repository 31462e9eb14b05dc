#include "svmrk/interface.hpp"

#include "../oracles/brute_force.hpp"
#include "doctest.h"

#include <random>

using namespace svmrk;

namespace {

const Circle kCircle{Vec2(5.0, 5.0), 2.2};

NodeSet pixel_grid(int n, double L, const ScoreField& f) {
  Domain d;
  d.hi = Vec2(L, L);
  const double v = L / n;
  NodeSet ns;
  ns.spacing = v;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 p((i + 0.5) * v, (j + 0.5) * v);
      const double s = f.value(p);
      ns.add(p, role_from_score(s), s, 2.0 * v);
    }
  return ns;
}

std::vector<Vec2> ring(const Circle& c, int n, double offset) {
  std::vector<Vec2> pts;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * 3.14159265358979 * k / n;
    pts.push_back(c.center + (c.radius + offset) * Vec2(std::cos(t), std::sin(t)));
  }
  return pts;
}

}  // namespace

TEST_CASE("newton search lands on the zero level set") {
  const AnalyticScore f = AnalyticScore::circles({kCircle});
  SearchPair p;
  p.master = Vec2(5.0 + 1.9, 5.0);
  p.slave = Vec2(5.0 + 2.6, 5.1);
  p.length = (p.slave - p.master).norm();
  p.dir = (p.slave - p.master) / p.length;
  const auto r = newton_search(p, f, 1e-12, 25);
  REQUIRE(r.has_value());
  CHECK(std::abs(f.value(r->x)) <= 1e-12);
  CHECK(r->residual <= 1e-12);
  CHECK(r->normal.norm() == doctest::Approx(1.0));
  CHECK(r->normal.dot(kCircle.center - r->x) > 0.0);
  CHECK(r->iterations <= 10);
}

TEST_CASE("candidate pairs straddle the interface near support vectors") {
  const AnalyticScore f = AnalyticScore::circles({kCircle});
  const NodeSet px = pixel_grid(40, 10.0, f);
  const auto svs = ring(kCircle, 60, 0.0);
  const auto pairs = candidate_pairs(px, svs, f, 1.5, px.spacing);
  REQUIRE(!pairs.empty());
  for (const auto& p : pairs) {
    CHECK(f.value(p.master) >= 0.0);
    CHECK(f.value(p.slave) < 0.0);
    CHECK(oracle::nearest_distance(svs, p.master) <= 1.5 * px.spacing + 1e-12);
    CHECK((p.master + p.length * p.dir - p.slave).norm() < 1e-12);
  }
}

TEST_CASE("merging removes near-duplicates only") {
  std::vector<InterfaceNode> raw(4);
  raw[0].x = Vec2(0.0, 0.0);
  raw[1].x = Vec2(1e-5, 0.0);
  raw[2].x = Vec2(1.0, 1.0);
  raw[3].x = Vec2(0.5, 0.0);
  const auto merged = merge_interface_nodes(raw, 0.01);
  CHECK(merged.size() == 3);
}

TEST_CASE("assembled node set keeps bulk nodes away from interface nodes") {
  const AnalyticScore f = AnalyticScore::circles({kCircle});
  const NodeSet px = pixel_grid(40, 10.0, f);
  InterfaceOptions o;
  const auto pairs = candidate_pairs(px, ring(kCircle, 80, 0.0), f, o.xi, px.spacing);
  const SearchSummary s = search_interface(pairs, f, o, Exec::Serial);
  AssemblyReport rep;
  const NodeSet ns = assemble_nodeset(px, s.nodes, f, o, px.spacing, 2.0, &rep);
  ns.validate();
  std::vector<Vec2> iface;
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns.role[i] == NodeRole::Interface) iface.push_back(ns.x[i]);
  CHECK(iface.size() == rep.interface_nodes);
  CHECK(iface.size() > 20);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns.role[i] == NodeRole::Interface) {
      CHECK(std::abs(f.value(ns.x[i])) < 1e-9);
      CHECK(ns.normal[i].norm() == doctest::Approx(1.0));
    } else {
      CHECK(oracle::nearest_distance(iface, ns.x[i]) > o.zeta * px.spacing);
    }
  }
  CHECK(ns.size() + rep.pruned_near_interface + rep.pruned_zero_score == px.size() + rep.interface_nodes);
}

TEST_CASE("interface mse follows its definition") {
  SyntheticTruth t;
  t.extent_x = 10.0;
  t.circles = {kCircle, Circle{Vec2(1.5, 1.5), 0.8}};
  CHECK(interface_mse(ring(kCircle, 30, 0.0), t) == doctest::Approx(0.0).scale(1.0));
  const double d = 0.05;
  auto pts = ring(kCircle, 30, d);
  const auto more = ring(t.circles[1], 10, -d);
  pts.insert(pts.end(), more.begin(), more.end());
  CHECK(interface_mse(pts, t) == doctest::Approx(std::sqrt(40 * d * d) / (2 * 10.0)).epsilon(1e-12));
}
