#include "svmrk/quadrature.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace svmrk {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1 || n > 64) throw Error("Gauss-Legendre order must lie in [1, 64]");
  std::vector<double> x(n), w(n);
  // Legendre P_n and its derivative by the three-term recurrence.
  auto legendre = [n](double z, double& dp) {
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    return p1;
  };
  if (n == 1) return {{0.0}, {2.0}};
  for (int i = 0; i < n / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double dz = legendre(z, dp) / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    legendre(z, dp);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) {
    double dp = 0.0;
    legendre(0.0, dp);
    x[n / 2] = 0.0;
    w[n / 2] = 2.0 / (dp * dp);
  }
  return {x, w};
}

double GaussScheme::total_weight() const {
  double s = 0.0;
  for (const auto& p : points) s += p.w;
  return s;
}

GaussScheme gauss_scheme(const Domain& domain, std::array<int, 2> cells, int ppa) {
  if (domain.dim == 1) cells[1] = 1;
  if (cells[0] < 1 || cells[1] < 1 || ppa < 1) throw Error("Gauss scheme needs positive cell and point counts");
  GaussScheme g;
  g.domain = domain;
  g.cells = cells;
  g.points_per_axis = ppa;
  const auto [gx, gw] = gauss_legendre(ppa);
  const double hx = (domain.hi(0) - domain.lo(0)) / cells[0];
  const double hy = domain.dim == 2 ? (domain.hi(1) - domain.lo(1)) / cells[1] : 0.0;
  const int py = domain.dim == 2 ? ppa : 1;
  g.points.reserve(static_cast<std::size_t>(cells[0]) * cells[1] * ppa * py);
  for (int cj = 0; cj < cells[1]; ++cj) {
    for (int ci = 0; ci < cells[0]; ++ci) {
      const double x0 = domain.lo(0) + ci * hx;
      const double y0 = domain.dim == 2 ? domain.lo(1) + cj * hy : 0.0;
      for (int b = 0; b < py; ++b) {
        for (int a = 0; a < ppa; ++a) {
          QuadPoint q;
          q.x(0) = x0 + 0.5 * hx * (gx[a] + 1.0);
          q.w = 0.5 * hx * gw[a];
          if (domain.dim == 2) {
            q.x(1) = y0 + 0.5 * hy * (gx[b] + 1.0);
            q.w *= 0.5 * hy * gw[b];
          }
          g.points.push_back(q);
        }
      }
    }
  }
  return g;
}

void tag_points(GaussScheme& scheme, const ScoreField& field) {
  for (auto& p : scheme.points) p.tag = field.value(p.x) >= 0.0 ? 1 : -1;
}

std::vector<BoundaryPoint> gauss_boundary(const Domain& d, std::array<int, 2> cells, int ppa) {
  std::vector<BoundaryPoint> out;
  if (d.dim == 1) {
    out.push_back({d.lo, 1.0, Vec2(-1.0, 0.0), Side::Left, -1});
    out.push_back({Vec2(d.hi(0), 0.0), 1.0, Vec2(1.0, 0.0), Side::Right, -1});
    return out;
  }
  const auto [gx, gw] = gauss_legendre(ppa);
  auto edge = [&](Vec2 a, Vec2 b, int n, Vec2 normal, Side side) {
    for (int c = 0; c < n; ++c) {
      const Vec2 p = a + (b - a) * (static_cast<double>(c) / n);
      const Vec2 q = a + (b - a) * (static_cast<double>(c + 1) / n);
      const double len = (q - p).norm();
      for (int k = 0; k < ppa; ++k) {
        out.push_back({p + 0.5 * (gx[k] + 1.0) * (q - p), 0.5 * len * gw[k], normal, side, -1});
      }
    }
  };
  const Vec2 lo = d.lo, hi = d.hi;
  edge(lo, Vec2(hi(0), lo(1)), cells[0], Vec2(0, -1), Side::Bottom);
  edge(Vec2(hi(0), lo(1)), hi, cells[1], Vec2(1, 0), Side::Right);
  edge(Vec2(lo(0), hi(1)), hi, cells[0], Vec2(0, 1), Side::Top);
  edge(lo, Vec2(lo(0), hi(1)), cells[1], Vec2(-1, 0), Side::Left);
  return out;
}

std::vector<MirrorPair> mirror_interface_nodes(const NodeSet& nodes, double eps, std::size_t* excluded) {
  if (!(eps > 0.0)) throw Error("mirror offset must be positive");
  std::vector<MirrorPair> out;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes.role[i] != NodeRole::Interface) continue;
    const double len = nodes.normal[i].norm();
    if (!(len >= 1e-14)) {
      ++skipped;
      continue;
    }
    const Vec2 n = nodes.normal[i] / len;
    out.push_back({static_cast<int>(i), nodes.x[i], nodes.x[i] + eps * n, nodes.x[i] - eps * n});
  }
  if (excluded) *excluded = skipped;
  return out;
}

std::vector<Site> scni_sites(const NodeSet& nodes, const std::vector<MirrorPair>& pairs) {
  std::vector<Site> sites;
  sites.reserve(nodes.size() + pairs.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes.role[i] == NodeRole::Interface) continue;
    sites.push_back({nodes.x[i], static_cast<int>(i), nodes.role[i] == NodeRole::Inclusion ? 1 : -1, false});
  }
  for (const auto& p : pairs) {
    sites.push_back({p.plus, p.node, 1, true});
    sites.push_back({p.minus, p.node, -1, true});
  }
  return sites;
}

double SmoothingCellComplex::total_area() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.area;
  return s;
}

std::vector<BoundaryPoint> SmoothingCellComplex::boundary_points() const {
  std::vector<BoundaryPoint> out;
  for (const auto& c : cells) {
    for (const auto& s : c.segments) {
      if (s.neighbor >= 0) continue;
      for (int q = 0; q < s.nq; ++q) out.push_back({s.qp[q], s.qw[q], s.normal, s.side, c.tag});
    }
  }
  return out;
}

namespace {

void fill_quadrature(Segment& s, int dim) {
  if (dim == 1) {
    s.nq = 1;
    s.qp[0] = s.a;
    s.qw[0] = 1.0;
    return;
  }
  static const double g = 1.0 / std::sqrt(3.0);
  s.nq = 2;
  const Vec2 mid = 0.5 * (s.a + s.b), half = 0.5 * (s.b - s.a);
  s.qp[0] = mid - g * half;
  s.qp[1] = mid + g * half;
  s.qw[0] = s.qw[1] = 0.5 * s.length;
}

SmoothingCellComplex intervals_1d(const std::vector<Site>& sites, const Domain& d) {
  std::vector<int> order(sites.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sites[a].x(0) < sites[b].x(0); });
  SmoothingCellComplex cx;
  cx.dim = 1;
  cx.domain = d;
  const int n = static_cast<int>(order.size());
  for (int k = 0; k + 1 < n; ++k) {
    if (!(sites[order[k + 1]].x(0) > sites[order[k]].x(0))) throw Error("duplicate Voronoi sites");
  }
  for (int k = 0; k < n; ++k) {
    const Site& s = sites[order[k]];
    const double lo = k == 0 ? d.lo(0) : 0.5 * (sites[order[k - 1]].x(0) + s.x(0));
    const double hi = k == n - 1 ? d.hi(0) : 0.5 * (sites[order[k + 1]].x(0) + s.x(0));
    if (!(hi > lo)) throw Error("degenerate zero-length cell");
    SmoothingCell c;
    c.site = s;
    c.tag = s.tag;
    c.polygon = {Vec2(lo, 0.0), Vec2(hi, 0.0)};
    c.area = hi - lo;
    Segment left;
    left.a = left.b = Vec2(lo, 0.0);
    left.normal = Vec2(-1.0, 0.0);
    left.neighbor = k == 0 ? -1 : k - 1;
    left.side = Side::Left;
    fill_quadrature(left, 1);
    Segment right;
    right.a = right.b = Vec2(hi, 0.0);
    right.normal = Vec2(1.0, 0.0);
    right.neighbor = k == n - 1 ? -1 : k + 1;
    right.side = Side::Right;
    fill_quadrature(right, 1);
    c.segments = {left, right};
    cx.cells.push_back(std::move(c));
  }
  return cx;
}

// Boundary edge labels are encoded as -(side + 1).
int side_label(Side s) { return -(static_cast<int>(s) + 1); }
Side label_side(int lab) { return static_cast<Side>(-lab - 1); }

struct LabeledPolygon {
  std::vector<Vec2> v;
  std::vector<int> lab;  // label of edge v[k] -> v[k + 1]
};

void clip(LabeledPolygon& poly, const Vec2& m, const Vec2& d, int label, LabeledPolygon& out) {
  out.v.clear();
  out.lab.clear();
  const std::size_t n = poly.v.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& P = poly.v[k];
    const Vec2& Q = poly.v[(k + 1) % n];
    const double fP = (P - m).dot(d), fQ = (Q - m).dot(d);
    const bool inP = fP <= 0.0, inQ = fQ <= 0.0;
    if (inP) {
      out.v.push_back(P);
      out.lab.push_back(poly.lab[k]);
      if (!inQ) {
        out.v.push_back(P + (fP / (fP - fQ)) * (Q - P));
        out.lab.push_back(label);
      }
    } else if (inQ) {
      out.v.push_back(P + (fP / (fP - fQ)) * (Q - P));
      out.lab.push_back(poly.lab[k]);
    }
  }
  std::swap(poly, out);
}

void drop_short_edges(LabeledPolygon& poly, double tol) {
  for (std::size_t k = 0; k < poly.v.size() && poly.v.size() > 2;) {
    const std::size_t next = (k + 1) % poly.v.size();
    if ((poly.v[next] - poly.v[k]).norm() <= tol) {
      poly.v.erase(poly.v.begin() + static_cast<long>(k));
      poly.lab.erase(poly.lab.begin() + static_cast<long>(k));
    } else {
      ++k;
    }
  }
}

double polygon_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec2& p = v[k];
    const Vec2& q = v[(k + 1) % v.size()];
    a += p(0) * q(1) - q(0) * p(1);
  }
  return 0.5 * a;
}

}  // namespace

SmoothingCellComplex voronoi_cells(const std::vector<Site>& sites, const Domain& d, double sliver_area) {
  if (sites.empty()) throw Error("Voronoi tessellation needs at least one site");
  if (d.dim == 1) return intervals_1d(sites, d);

  const int n = static_cast<int>(sites.size());
  const Vec2 ext = d.hi - d.lo;
  const double diam = ext.norm();
  const double tol = 1e-12 * diam;

  // Bin grid over sites.
  const double cell = std::max(std::sqrt(d.measure() / n), 1e-9 * diam);
  const int nx = std::max(1, static_cast<int>(std::ceil(ext(0) / cell)));
  const int ny = std::max(1, static_cast<int>(std::ceil(ext(1) / cell)));
  auto bin_of = [&](const Vec2& p, int& i, int& j) {
    i = std::clamp(static_cast<int>(std::floor((p(0) - d.lo(0)) / cell)), 0, nx - 1);
    j = std::clamp(static_cast<int>(std::floor((p(1) - d.lo(1)) / cell)), 0, ny - 1);
  };
  std::vector<std::vector<int>> bins(static_cast<std::size_t>(nx) * ny);
  for (int s = 0; s < n; ++s) {
    int i, j;
    bin_of(sites[s].x, i, j);
    bins[i + nx * j].push_back(s);
  }
  for (const auto& b : bins) {
    for (std::size_t p = 0; p < b.size(); ++p) {
      for (std::size_t q = p + 1; q < b.size(); ++q) {
        if ((sites[b[p]].x - sites[b[q]].x).norm() <= tol) throw Error("duplicate Voronoi sites");
      }
    }
  }

  SmoothingCellComplex cx;
  cx.dim = 2;
  cx.domain = d;
  cx.cells.resize(n);
  std::vector<std::vector<int>> labels(n);

#pragma omp parallel for schedule(dynamic, 64)
  for (int s = 0; s < n; ++s) {
    const Vec2 xs = sites[s].x;
    LabeledPolygon poly, scratch;
    poly.v = {d.lo, Vec2(d.hi(0), d.lo(1)), d.hi, Vec2(d.lo(0), d.hi(1))};
    poly.lab = {side_label(Side::Bottom), side_label(Side::Right), side_label(Side::Top), side_label(Side::Left)};
    int bi, bj;
    bin_of(xs, bi, bj);
    std::vector<std::pair<double, int>> ring;
    const int rmax = std::max(nx, ny);
    for (int r = 0; r <= rmax; ++r) {
      double reach = 0.0;
      for (const auto& v : poly.v) reach = std::max(reach, (v - xs).norm());
      // Sites in ring r lie at least (r - 1) * cell away.
      if (r >= 1 && (r - 1) * cell > 2.0 * reach) break;
      ring.clear();
      for (int j = bj - r; j <= bj + r; ++j) {
        if (j < 0 || j >= ny) continue;
        for (int i = bi - r; i <= bi + r; ++i) {
          if (i < 0 || i >= nx) continue;
          if (std::max(std::abs(i - bi), std::abs(j - bj)) != r) continue;
          for (int t : bins[i + nx * j]) {
            if (t != s) ring.emplace_back((sites[t].x - xs).squaredNorm(), t);
          }
        }
      }
      std::sort(ring.begin(), ring.end());
      for (const auto& [d2, t] : ring) {
        reach = 0.0;
        for (const auto& v : poly.v) reach = std::max(reach, (v - xs).norm());
        if (std::sqrt(d2) > 2.0 * reach) break;
        clip(poly, 0.5 * (xs + sites[t].x), sites[t].x - xs, t, scratch);
        if (poly.v.size() < 3) break;
      }
      if (poly.v.size() < 3) break;
    }
    drop_short_edges(poly, tol);
    SmoothingCell& c = cx.cells[s];
    c.site = sites[s];
    c.tag = sites[s].tag;
    if (poly.v.size() >= 3) {
      c.polygon = poly.v;
      c.area = polygon_area(poly.v);
      labels[s] = poly.lab;
    }
  }

  // Segments with outward normals.
  for (int s = 0; s < n; ++s) {
    SmoothingCell& c = cx.cells[s];
    const std::size_t m = c.polygon.size();
    for (std::size_t k = 0; k < m; ++k) {
      Segment seg;
      seg.a = c.polygon[k];
      seg.b = c.polygon[(k + 1) % m];
      seg.length = (seg.b - seg.a).norm();
      if (seg.length <= tol) continue;
      const Vec2 t = (seg.b - seg.a) / seg.length;
      seg.normal = Vec2(t(1), -t(0));
      const int lab = labels[s][k];
      seg.neighbor = lab >= 0 ? lab : -1;
      if (lab < 0) seg.side = label_side(lab);
      fill_quadrature(seg, 2);
      c.segments.push_back(seg);
    }
  }

  // Merge slivers into the neighbor across the longest shared edge.
  std::vector<int> target(n);
  std::iota(target.begin(), target.end(), 0);
  for (int s = 0; s < n; ++s) {
    SmoothingCell& c = cx.cells[s];
    if (c.area >= sliver_area) continue;
    if (c.polygon.empty()) {
      if (d.contains(c.site.x)) throw Error("degenerate zero-area Voronoi cell");
      target[s] = -1;
      continue;
    }
    int best = -1;
    double best_len = -1.0;
    for (const auto& seg : c.segments) {
      if (seg.neighbor >= 0 && target[seg.neighbor] == seg.neighbor && seg.length > best_len) {
        best_len = seg.length;
        best = seg.neighbor;
      }
    }
    if (best < 0) throw Error("degenerate Voronoi cell without a neighbor to merge into");
    SmoothingCell& into = cx.cells[best];
    std::erase_if(into.segments, [&](const Segment& g) { return g.neighbor == s; });
    for (const auto& seg : c.segments) {
      if (seg.neighbor != best) into.segments.push_back(seg);
    }
    into.area += c.area;
    target[s] = best;
    ++cx.merged_slivers;
  }
  if (cx.merged_slivers > 0 || std::any_of(target.begin(), target.end(), [](int t) { return t < 0; })) {
    std::vector<int> index(n, -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
      if (target[s] == s) index[s] = next++;
    }
    auto resolve = [&](int s) {
      while (s >= 0 && target[s] != s) s = target[s];
      return s < 0 ? -1 : index[s];
    };
    std::vector<SmoothingCell> kept;
    kept.reserve(next);
    for (int s = 0; s < n; ++s) {
      if (target[s] != s) continue;
      SmoothingCell c = std::move(cx.cells[s]);
      for (auto& seg : c.segments) {
        if (seg.neighbor >= 0) seg.neighbor = resolve(seg.neighbor);
      }
      kept.push_back(std::move(c));
    }
    cx.cells = std::move(kept);
  }
  return cx;
}

SmoothingCellComplex scni_cells(const NodeSet& nodes, const Domain& domain, double eps_factor) {
  const auto pairs = mirror_interface_nodes(nodes, eps_factor * nodes.spacing);
  return voronoi_cells(scni_sites(nodes, pairs), domain, 1e-12 * nodes.spacing * nodes.spacing);
}

void smoothed_gradient(const ShapeProvider& shapes, const SmoothingCell& cell, CellGradient& out) {
  thread_local std::vector<std::pair<int, Vec2>> acc;
  thread_local ShapeEval e;
  acc.clear();
  for (const auto& seg : cell.segments) {
    for (int q = 0; q < seg.nq; ++q) {
      shapes.evaluate(seg.qp[q], false, cell.tag, e);
      const double w = seg.qw[q];
      for (std::size_t k = 0; k < e.size(); ++k) acc.emplace_back(e.nodes[k], (w * e.value[k]) * seg.normal);
    }
  }
  std::sort(acc.begin(), acc.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out.nodes.clear();
  out.b.clear();
  const double inv = 1.0 / cell.area;
  for (std::size_t k = 0; k < acc.size();) {
    const int node = acc[k].first;
    Vec2 s = Vec2::Zero();
    for (; k < acc.size() && acc[k].first == node; ++k) s += acc[k].second;
    out.nodes.push_back(node);
    out.b.push_back(s * inv);
  }
}

std::vector<CellGradient> smoothed_gradients(const ShapeProvider& shapes, const SmoothingCellComplex& cx, Exec exec) {
  std::vector<CellGradient> out(cx.cells.size());
  detail::for_each_index(static_cast<long>(cx.cells.size()), exec,
                         [&](long c) { smoothed_gradient(shapes, cx.cells[c], out[c]); });
  return out;
}

}  // namespace svmrk
