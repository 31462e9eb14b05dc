#pragma once

#include "svmrk/image.hpp"
#include "svmrk/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace svmrk {

enum class SvmKernelKind { Linear, Polynomial, Gaussian };

struct SvmKernelSpec {
  SvmKernelKind kind = SvmKernelKind::Gaussian;
  int degree = 2;       ///< polynomial degree q
  double gamma = 16.0;  ///< exp(-gamma |a-b|^2), on standardized coordinates

  static SvmKernelSpec linear() { return {SvmKernelKind::Linear, 2, 1.0}; }
  static SvmKernelSpec polynomial(int q) { return {SvmKernelKind::Polynomial, q, 1.0}; }
  static SvmKernelSpec gaussian(double g) { return {SvmKernelKind::Gaussian, 2, g}; }
  /// Gaussian kernel given as a length scale s, i.e. gamma = 1 / s^2.
  static SvmKernelSpec gaussian_scale(double s);

  void validate() const;
  std::string describe() const;
};

SvmKernelKind parse_svm_kernel(const std::string& name);

double kernel_eval(const SvmKernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Same as above on the first `dim` coordinates of two Vec2 points.
double kernel_eval(const SvmKernelSpec& spec, const Vec2& a, const Vec2& b);

struct Standardization {
  int dim = 2;
  Vec2 mean = Vec2::Zero();
  Vec2 sd = Vec2::Ones();  ///< population standard deviation

  Vec2 apply(const Vec2& x) const;
  Vec2 invert(const Vec2& z) const;
};

/// Zero mean, unit population standard deviation per used coordinate.
std::pair<LabeledDataset, Standardization> standardize(const LabeledDataset& data);

struct TrainStats {
  long iterations = 0;
  double dual_objective = 0.0;
  double kkt_gap = 0.0;  ///< final max violation Gmax - Gmin
  std::size_t free_sv = 0;
  std::size_t bounded_sv = 0;
};

struct SvmModel {
  int dim = 2;
  std::vector<Vec2> support_vectors;  ///< standardized coordinates
  std::vector<int> sv_labels;
  std::vector<double> alpha;
  double bias = 0.0;
  SvmKernelSpec kernel;
  double C = 500.0;
  Standardization standardization;
  TrainStats stats;

  std::size_t n() const { return support_vectors.size(); }
  /// Support vectors mapped back to physical coordinates.
  std::vector<Vec2> support_vectors_physical() const;
  void validate() const;
};

struct TrainOptions {
  double C = 500.0;
  SvmKernelSpec kernel;
  double tol = 1e-6;
  long max_iter = 1000000;
  std::size_t cache_bytes = std::size_t{512} << 20;
  Exec exec = Exec::Parallel;  ///< kernel-row evaluation
};

SvmModel train(const LabeledDataset& data, const TrainOptions& opts);

/// Dual solution on already-prepared points (no standardization).
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  TrainStats stats;
};

DualSolution solve_dual(const std::vector<Vec2>& points, const std::vector<int>& labels, int dim,
                        const TrainOptions& opts);

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
double dual_objective(const std::vector<Vec2>& points, const std::vector<int>& labels, int dim,
                      const std::vector<double>& alpha, const SvmKernelSpec& kernel);

/// S(x) for x in physical coordinates.
double score(const SvmModel& model, const Vec2& x);

/// S(x) and its gradient with respect to physical x.
std::pair<double, Vec2> score_gradient(const SvmModel& model, const Vec2& x);

std::vector<double> score_batch(const SvmModel& model, const std::vector<Vec2>& xs,
                                Exec exec = Exec::Parallel);

struct SlackReport {
  std::vector<double> slack;  ///< max(0, 1 - y S(x))
  std::size_t misclassified = 0;
};

SlackReport slack_report(const SvmModel& model, const LabeledDataset& data);

void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace svmrk
