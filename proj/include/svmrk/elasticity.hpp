#pragma once

#include "svmrk/quadrature.hpp"
#include "svmrk/rk.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace svmrk {

struct Material {
  double E = 1.0;
  double nu = 0.0;
  double eigenstrain = 0.0;  ///< dilatational, in-plane

  static Material from_lame(double lambda, double mu, double eigenstrain = 0.0);
  double lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
  double mu() const { return E / (2.0 * (1.0 + nu)); }
  void validate() const;
};

enum class Analysis { Bar1D, PlaneStrain };

/// Voigt (11, 22, 12) with engineering shear; 1D uses entry (0, 0) = E.
Eigen::Matrix3d material_matrix(const Material& m, Analysis mode);

/// Phase +1 (inclusion) and phase -1 (matrix).
struct Materials {
  Material inclusion;
  Material matrix;

  const Material& of(int tag) const { return tag > 0 ? inclusion : matrix; }
  /// Largest axial stiffness: E in 1D, lambda + 2 mu in plane strain.
  double max_modulus(Analysis mode) const;
};

using VectorFn = std::function<Vec2(const Vec2&)>;

struct DirichletSpec {
  std::vector<Side> sides;
  VectorFn value;
  std::array<bool, 2> constrained{true, true};  ///< per displacement component
};

struct NeumannSpec {
  std::vector<Side> sides;
  VectorFn traction;
};

struct BvpSpec {
  Analysis mode = Analysis::PlaneStrain;
  Domain domain;
  std::vector<DirichletSpec> dirichlet;
  std::vector<NeumannSpec> neumann;
  VectorFn body_force;  ///< optional

  int dim() const { return mode == Analysis::Bar1D ? 1 : 2; }
  void validate() const;
};

enum class Integration { Gauss, Scni };

Integration parse_integration(const std::string& name);
const char* to_string(Integration i);

/// Domain and boundary integration rule shared by assembly and recovery.
struct DomainQuadrature {
  Integration kind = Integration::Gauss;
  GaussScheme gauss;
  SmoothingCellComplex cells;
  std::vector<BoundaryPoint> boundary;
};

/// Background Gauss cells; material tags from the score sign.
DomainQuadrature gauss_quadrature(const Domain& domain, std::array<int, 2> cells, int points_per_axis,
                                  const ScoreField& tags);

/// Interface-conforming smoothing cells with mirror offset eps_factor * h.
DomainQuadrature scni_quadrature(const NodeSet& nodes, const Domain& domain, double eps_factor = 1e-3);

struct AssemblyOptions {
  double beta0 = 100.0;  ///< Nitsche penalty: beta = beta0 * max_modulus / h
  Exec exec = Exec::Parallel;
};

/// Global stiffness in node-block CSR form, dim x dim blocks.
struct BlockPattern {
  int dim = 2;
  std::vector<int> row_start;
  std::vector<int> cols;
  int find(int row, int col) const;
  std::size_t blocks() const { return cols.size(); }
};

/// Block pairs whose box supports overlap.
BlockPattern support_pattern(const NodeSet& nodes);

struct LinearSystem {
  int dim = 2;
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd F;
  double beta = 0.0;
};

/// Volume terms only: stiffness, body force, eigenstrain and Neumann loads.
LinearSystem assemble(const ShapeProvider& shapes, const DomainQuadrature& quad, const Materials& mats,
                      const BvpSpec& bvp, const AssemblyOptions& opts = {});

/// Adds symmetric Nitsche terms for every Dirichlet segment.
void apply_dirichlet_nitsche(LinearSystem& sys, const ShapeProvider& shapes, const DomainQuadrature& quad,
                             const Materials& mats, const BvpSpec& bvp, const AssemblyOptions& opts = {});

struct SolveReport {
  bool dense = false;
  double relative_residual = 0.0;
  int refinements = 0;
};

/// Symmetric LDL^T solve with pivot checks and iterative refinement.
Eigen::VectorXd solve_system(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& F,
                             SolveReport* report = nullptr);

struct SolutionField {
  int dim = 2;
  Analysis mode = Analysis::PlaneStrain;
  std::shared_ptr<const ShapeProvider> shapes;
  Eigen::VectorXd coeffs;  ///< d_{iI} at index dim * I + i

  Vec2 coefficient(int node) const;
};

struct FieldSample {
  Vec2 x = Vec2::Zero();
  int tag = -1;
  Vec2 u = Vec2::Zero();
  Eigen::Vector3d strain = Eigen::Vector3d::Zero();  ///< Voigt, engineering shear
  Eigen::Vector3d stress = Eigen::Vector3d::Zero();
};

/// Displacement and direct-gradient strain/stress at a point on the given side.
FieldSample sample_field(const SolutionField& sol, const Vec2& x, int tag, const Materials& mats);

std::vector<FieldSample> recover_fields(const SolutionField& sol, const std::vector<Vec2>& points,
                                        const std::vector<int>& tags, const Materials& mats);

/// Smoothed strain/stress per cell, displacement at the generating site.
std::vector<FieldSample> cell_fields(const SolutionField& sol, const SmoothingCellComplex& cells,
                                     const Materials& mats);

struct ElasticRun {
  SolutionField solution;
  LinearSystem system;
  SolveReport solve;
};

/// assemble + apply_dirichlet_nitsche + solve_system
ElasticRun solve_elasticity(std::shared_ptr<const ShapeProvider> shapes, const DomainQuadrature& quad,
                            const Materials& mats, const BvpSpec& bvp, const AssemblyOptions& opts = {});

}  // namespace svmrk
