#pragma once

#include "svmrk/image.hpp"
#include "svmrk/rk.hpp"

#include <optional>
#include <vector>

namespace svmrk {

struct SearchPair {
  Vec2 master = Vec2::Zero();  ///< non-negative score side
  Vec2 slave = Vec2::Zero();   ///< negative score side
  Vec2 dir = Vec2::Zero();     ///< unit vector master -> slave
  double length = 0.0;
  int master_node = -1;
  int slave_node = -1;
};

struct InterfaceNode {
  Vec2 x = Vec2::Zero();
  double residual = 0.0;  ///< |S(x)|
  int iterations = 0;
  Vec2 normal = Vec2::Zero();  ///< unit normal, pointing to the positive side
  bool bisection = false;      ///< at least one bisection step was taken
};

struct InterfaceOptions {
  double xi = 1.5;           ///< candidate radius around support vectors, in voxels
  double zeta = 1.0 / 3.0;   ///< bulk exclusion radius around interface nodes, in voxels
  double merge_tol = 0.01;   ///< relative to the coordinate span of the interface set
  double newton_tol = 1e-10;
  int max_iter = 25;
};

/// Pairs every non-negative-score node near a support vector with its nearest
/// negative-score counterpart (all equidistant ones). Node signs come from `field`.
std::vector<SearchPair> candidate_pairs(const NodeSet& pixel_nodes, const std::vector<Vec2>& support_vectors,
                                        const ScoreField& field, double xi, double voxel);

/// Newton iteration on d along the pair direction, safeguarded by bisection.
/// Returns nothing when the search does not converge or no normal can be formed.
std::optional<InterfaceNode> newton_search(const SearchPair& pair, const ScoreField& field, double tol,
                                           int max_iter);

struct SearchSummary {
  std::vector<InterfaceNode> nodes;
  std::size_t rejected = 0;
  double mean_iterations = 0.0;
  double mean_residual = 0.0;
};

SearchSummary search_interface(const std::vector<SearchPair>& pairs, const ScoreField& field,
                               const InterfaceOptions& opts, Exec exec = Exec::Parallel);

/// Lexicographic sort, then greedy removal of nodes within the merge tolerance (inf-norm)
/// of an already kept node.
std::vector<InterfaceNode> merge_interface_nodes(std::vector<InterfaceNode> raw, double merge_tol);

struct AssemblyReport {
  std::size_t raw = 0;
  std::size_t interface_nodes = 0;
  std::size_t pruned_near_interface = 0;
  std::size_t pruned_zero_score = 0;
};

/// Final RK node set: merged interface nodes plus the pixel nodes farther than
/// zeta * voxel from every interface node. Bulk roles and scores come from `field`.
NodeSet assemble_nodeset(const NodeSet& pixel_nodes, std::vector<InterfaceNode> raw, const ScoreField& field,
                         const InterfaceOptions& opts, double voxel, double support_factor,
                         AssemblyReport* report = nullptr);

/// (1 / (NC L)) * sqrt(sum_k (|x_k - c_owner| - R_owner)^2)
double interface_mse(const std::vector<Vec2>& nodes, const SyntheticTruth& truth);

}  // namespace svmrk
