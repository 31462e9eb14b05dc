#pragma once

#include "svmrk/rk.hpp"
#include "svmrk/types.hpp"

#include <array>
#include <utility>
#include <vector>

namespace svmrk {

/// Gauss-Legendre abscissae and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

struct QuadPoint {
  Vec2 x = Vec2::Zero();
  double w = 0.0;
  int tag = -1;  ///< material side: +1 inclusion, -1 matrix
};

/// Integration point on the domain boundary with the outward normal.
struct BoundaryPoint {
  Vec2 x = Vec2::Zero();
  double w = 0.0;
  Vec2 n = Vec2::Zero();
  Side side = Side::Left;
  int tag = -1;
};

struct GaussScheme {
  Domain domain;
  std::array<int, 2> cells{1, 1};
  int points_per_axis = 5;
  std::vector<QuadPoint> points;

  double total_weight() const;
};

/// Tensor-product Gauss cells over a uniform background grid (untagged: tag = -1).
GaussScheme gauss_scheme(const Domain& domain, std::array<int, 2> cells, int points_per_axis);

/// Tags every point by the sign of the score (zero counts as inclusion).
void tag_points(GaussScheme& scheme, const ScoreField& field);

/// Gauss points along the domain boundary following the background cell edges
/// (1D: the two end points with unit weight).
std::vector<BoundaryPoint> gauss_boundary(const Domain& domain, std::array<int, 2> cells, int points_per_axis);

struct MirrorPair {
  int node = -1;
  Vec2 x = Vec2::Zero();
  Vec2 plus = Vec2::Zero();   ///< x + eps n, inclusion side
  Vec2 minus = Vec2::Zero();  ///< x - eps n, matrix side
};

/// Offsets every interface node along its stored normal. Nodes with a vanishing normal
/// are skipped and counted in `excluded`.
std::vector<MirrorPair> mirror_interface_nodes(const NodeSet& nodes, double eps, std::size_t* excluded = nullptr);

struct Site {
  Vec2 x = Vec2::Zero();
  int node = -1;  ///< generating node (the interface node for mirror sites)
  int tag = -1;
  bool mirror = false;
};

/// Bulk nodes plus both sites of every mirror pair.
std::vector<Site> scni_sites(const NodeSet& nodes, const std::vector<MirrorPair>& pairs);

struct Segment {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  ///< outward unit normal of the owning cell
  double length = 0.0;
  int neighbor = -1;     ///< adjacent cell, or -1 on the domain boundary
  Side side = Side::Left;  ///< valid when neighbor == -1
  int nq = 0;
  std::array<Vec2, 2> qp{};
  std::array<double, 2> qw{};
};

struct SmoothingCell {
  Site site;
  std::vector<Vec2> polygon;  ///< counterclockwise (1D: the two end points)
  double area = 0.0;          ///< length in 1D
  std::vector<Segment> segments;
  int tag = -1;
};

struct SmoothingCellComplex {
  int dim = 2;
  Domain domain;
  std::vector<SmoothingCell> cells;
  std::size_t merged_slivers = 0;

  double total_area() const;
  /// Quadrature on the domain-boundary segments of the cells.
  std::vector<BoundaryPoint> boundary_points() const;
};

/// Voronoi tessellation of the sites clipped to the domain (1D: midpoint intervals).
/// Cells smaller than sliver_area are merged into the neighbor across their longest edge.
SmoothingCellComplex voronoi_cells(const std::vector<Site>& sites, const Domain& domain, double sliver_area);

/// Mirror pairs plus tessellation with eps = eps_factor * spacing.
SmoothingCellComplex scni_cells(const NodeSet& nodes, const Domain& domain, double eps_factor = 1e-3);

/// b_I = (1 / W) sum over boundary segments of Psi_I n.
struct CellGradient {
  std::vector<int> nodes;
  std::vector<Vec2> b;
};

void smoothed_gradient(const ShapeProvider& shapes, const SmoothingCell& cell, CellGradient& out);

std::vector<CellGradient> smoothed_gradients(const ShapeProvider& shapes, const SmoothingCellComplex& cells,
                                             Exec exec = Exec::Parallel);

}  // namespace svmrk
