#pragma once

#include "svmrk/elasticity.hpp"
#include "svmrk/imrk.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace svmrk {

/// Bimaterial rod on [0, 10]: E1 = 10000 on [0, 5], E2 = 1000 on [5, 10], u(0) = 0, u(10) = 1.
struct RodConstants {
  double E1 = 10000.0;
  double E2 = 1000.0;
  double length = 10.0;
  double interface = 5.0;
};

struct RodSample {
  double u = 0.0;
  double strain = 0.0;
  double stress = 0.0;
};

/// case 1: no body force; case 2: b(x) = 25x - 7.5x^2 + 0.5x^3.
RodSample rod_exact(int rod_case, double x, const RodConstants& k = {});
double rod_body_force(int rod_case, double x);

/// Circular inclusion of radius R with dilatational eigenstrain in an unbounded matrix.
struct InclusionConstants {
  double lambda1 = 497.16, mu1 = 390.63;  ///< inclusion
  double lambda2 = 656.79, mu2 = 338.35;  ///< matrix
  double eigenstrain = 0.01;
  double radius = 1.0;
  double side = 5.0;  ///< quarter-domain edge length

  /// u_r = A r inside
  double interior_slope() const { return (lambda1 + mu1) * eigenstrain / (lambda1 + mu1 + mu2); }
  /// u_r = B / r outside
  double exterior_coefficient() const { return interior_slope() * radius * radius; }
  Materials materials() const;
};

struct RadialSample {
  double u_r = 0.0;
  double e_rr = 0.0;
  double e_tt = 0.0;
  double s_rr = 0.0;
};

RadialSample inclusion_exact(double r, const InclusionConstants& k = {});

struct ExactSample {
  Vec2 u = Vec2::Zero();
  Eigen::Vector3d strain = Eigen::Vector3d::Zero();
  int tag = -1;
};

struct ExactSolution {
  std::string id;
  Analysis mode = Analysis::PlaneStrain;
  Domain domain;
  Materials materials;
  std::function<ExactSample(const Vec2&)> eval;
  std::vector<double> breaks;  ///< interface position: x in 1D, the radius in 2D

  int dim() const { return mode == Analysis::Bar1D ? 1 : 2; }
};

ExactSolution rod_solution(int rod_case, const RodConstants& k = {});
ExactSolution inclusion_solution(const InclusionConstants& k = {});

/// Sampling points of the error integrals: 10-point segments split at the breaks (1D)
/// or 10 x 10 points per background cell (2D), tagged by the exact solution.
std::vector<QuadPoint> norm_quadrature(const ExactSolution& exact, std::array<int, 2> cells, int points = 10);

struct ErrorReport {
  int nodes = 0;
  int dof = 0;
  double h = 0.0;
  double l2 = 0.0;      ///< relative displacement error
  double energy = 0.0;  ///< relative energy error
};

ErrorReport error_norms(const SolutionField& sol, const ExactSolution& exact, const std::vector<QuadPoint>& points);

struct RateFit {
  double rate = 0.0;
  double half_width = 0.0;  ///< 95% confidence half-width (0 for two levels)
};

/// Least-squares slope of log(error) against log(h).
RateFit fit_rate(const std::vector<double>& h, const std::vector<double>& error);

enum class Benchmark { RodCase1, RodCase2, Inclusion };
enum class Method { Rkpm, Imrk };

Benchmark parse_benchmark(const std::string& id);
const char* to_string(Benchmark b);
Method parse_method(const std::string& name);
const char* to_string(Method m);

struct StudyOptions {
  Benchmark problem = Benchmark::RodCase2;
  Method method = Method::Imrk;
  Integration integration = Integration::Gauss;
  BasisSpec basis;
  RkKernelSpec bulk_kernel;       ///< cubic B-spline, support 2
  RkKernelSpec interface_kernel;  ///< IM-RK only
  double c_multiplier = 1.0;
  double gradient_layer = 0.02;  ///< IM-RK only, in units of h
  int gauss_points = 5;
  double beta0 = 100.0;
  std::vector<int> levels;  ///< empty: the default sequence of the benchmark
  Exec exec = Exec::Parallel;
};

/// Rod: 11/21/41/81 nodes; inclusion: 14/20/28/40 grid nodes per axis.
std::vector<int> default_levels(Benchmark b);

/// Everything needed to solve one refinement level.
struct Discretization {
  ExactSolution exact;
  std::shared_ptr<const NodeSet> nodes;
  std::shared_ptr<const ScoreField> score;
  std::shared_ptr<const ShapeProvider> shapes;
  DomainQuadrature quadrature;
  BvpSpec bvp;
  std::array<int, 2> cells{1, 1};  ///< background cells of the norm quadrature
};

/// Rod: uniform nodes (odd count, one node on the interface).
/// Inclusion: level x level grid on the quarter domain, grid nodes within h / 3 of the
/// arc removed, interface nodes spaced about 0.75 h along the arc including its ends.
Discretization build_benchmark(const StudyOptions& opts, int level);

struct LevelResult {
  ErrorReport error;
  ElasticRun run;
};

LevelResult solve_level(const Discretization& disc, const StudyOptions& opts);

struct StudyResult {
  StudyOptions options;
  std::vector<ErrorReport> levels;
  RateFit l2;
  RateFit energy;
};

StudyResult convergence_study(const StudyOptions& opts);

/// Long format: one row per (level, norm) plus one rate row per norm.
void write_study_csv(std::ostream& out, const std::vector<StudyResult>& studies);

/// Largest strain error within `width` of the interface along the sampling line
/// (rod: the axis; inclusion: y = x). Radial/hoop components in 2D, axial in 1D.
struct BandError {
  double radial = 0.0;
  double hoop = 0.0;
};

BandError interface_band_error(const SolutionField& sol, const ExactSolution& exact, double width, int samples = 201);

}  // namespace svmrk
