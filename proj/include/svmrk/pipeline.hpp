#pragma once

#include "svmrk/elasticity.hpp"
#include "svmrk/image.hpp"
#include "svmrk/imrk.hpp"
#include "svmrk/interface.hpp"
#include "svmrk/svm.hpp"
#include "svmrk/verification.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace svmrk {

/// The trained SVM decision function S(x).
class SvmScore : public ScoreField {
 public:
  explicit SvmScore(std::shared_ptr<const SvmModel> model) : model_(std::move(model)) {}
  ScoreSample sample(const Vec2& x) const override;
  const SvmModel& model() const { return *model_; }

 private:
  std::shared_ptr<const SvmModel> model_;
};

struct Segmentation {
  OtsuResult otsu;
  LabeledDataset data;
  std::shared_ptr<const SvmModel> model;
};

/// Otsu labels at pixel centroids, then soft-margin SVM training.
Segmentation segment(const ImageGrid& img, const TrainOptions& opts);

/// Score of the model on every pixel centroid, row-major.
std::vector<double> pixel_scores(const ImageGrid& img, const SvmModel& model, Exec exec = Exec::Parallel);

struct DiscretizeOptions {
  InterfaceOptions iface;
  BasisSpec basis;
  RkKernelSpec score_kernel;    ///< interpolant of the pixel scores
  double support_factor = 2.0;  ///< support of the final RK nodes, in voxels
  Exec exec = Exec::Parallel;
};

/// One node per pixel centroid carrying the SVM score; support from the score kernel.
NodeSet pixel_nodes(const ImageGrid& img, const std::vector<double>& scores, double support_factor);

struct Discretized {
  NodeSet pixels;
  std::shared_ptr<const InterpolatedScore> score;  ///< smoothed score on the pixel nodes
  std::vector<SearchPair> pairs;
  SearchSummary search;
  AssemblyReport report;
  std::shared_ptr<const NodeSet> nodes;  ///< final RK node set
};

Discretized discretize(const ImageGrid& img, const SvmModel& model, const DiscretizeOptions& opts);

/// Three circles in a 10 x 10 square.
SyntheticTruth validation_circles();
/// 224 px, Gaussian noise sigma = 0.1, resampled to 100 px.
SynthOptions validation_image_options();

struct ExtractionMetrics {
  std::size_t interface_nodes = 0;
  double mean_iterations = 0.0;
  double mean_residual = 0.0;
  double mse = 0.0;
};

ExtractionMetrics extraction_metrics(const Discretized& d, const SyntheticTruth& truth);

struct SolveOptions {
  Method method = Method::Imrk;
  Integration integration = Integration::Scni;
  BasisSpec basis;
  RkKernelSpec bulk_kernel;
  RkKernelSpec interface_kernel;
  double c_multiplier = 1.0;
  double gradient_layer = 0.02;  ///< IM-RK only, in units of h
  int gauss_points = 5;
  double beta0 = 100.0;
  Exec exec = Exec::Parallel;
};

struct ModelRun {
  Domain domain;
  std::shared_ptr<const ScoreField> score;
  DomainQuadrature quadrature;
  ElasticRun run;
  std::vector<FieldSample> node_fields;  ///< at the node positions
  std::vector<FieldSample> cell_fields;  ///< SCNI only
};

/// Builds shapes and quadrature for the node set and solves the boundary value problem.
ModelRun solve_model(std::shared_ptr<const NodeSet> nodes, std::shared_ptr<const ScoreField> score,
                     const Materials& mats, const BvpSpec& bvp, const SolveOptions& opts);

/// Median, over interface nodes, of |strain| on the matrix side over |strain| on the
/// inclusion side, sampled at x -/+ offset * n.
double strain_jump_ratio(const ModelRun& run, const Materials& mats, double offset);

/// Alumina inclusions (E = 320 GPa, nu = 0.23) in epoxy (3.66 GPa, 0.358), in MPa.
Materials alumina_epoxy();

struct DemoOptions {
  int pixels = 200;             ///< image side
  double pixel_size = 0.008;    ///< mm
  int node_downscale = 2;       ///< box factor between image and pixel nodes
  int inclusions = 14;
  double area_fraction = 0.3;
  std::uint64_t seed = 7;
  Vec2 top_displacement = Vec2(-0.01, -0.01);  ///< mm
  Materials materials = alumina_epoxy();
};

/// Non-overlapping circles filling about `area_fraction` of the square.
SyntheticTruth demo_microstructure(const DemoOptions& opts);

/// Bottom fixed, top displaced, vertical edges traction-free.
BvpSpec compression_shear(const Domain& domain, const Vec2& top_displacement);

}  // namespace svmrk
