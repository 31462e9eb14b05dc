// One PASS/FAIL line per acceptance criterion; each runs in its own process.

#include "cli.hpp"
#include "svmrk/pipeline.hpp"

#include "../oracles/qp_oracle.hpp"
#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace svmrk;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::string name;
  double value;
  double lower;
  double upper;
  bool pass() const { return value >= lower && value <= upper; }
};

Check at_most(std::string name, double value, double bound) { return {std::move(name), value, -INFINITY, bound}; }
Check within(std::string name, double value, double target, double tol) {
  return {std::move(name), value, target - tol, target + tol};
}
Check below(std::string name, double value, double other) {
  return {std::move(name), value, -INFINITY, std::nextafter(other, -INFINITY)};
}

// Tolerances and budgets.
constexpr double kRod1Displacement = 1e-10, kRod1Strain = 1e-8, kRod1Budget = 1.0;
constexpr double kRodRateTol = 0.2, kRodRkpmL2 = 1.3, kRodRkpmEnergy = 0.8, kRod2Budget = 10.0;
constexpr double kInclusionRateTol = 0.3, kInclusionBudget = 300.0;
constexpr int kBandLevel = 14;
constexpr double kMse = 0.010, kIterations = 10.0, kResidual = 1e-8, kCountVariation = 0.05, kExtractionBudget = 120.0;
constexpr int kDatasets = 50, kMaxPoints = 12, kProbes = 20;
constexpr double kObjective = 1e-6, kOracleBudget = 30.0;
constexpr int kRandomPoints = 200;
constexpr double kReproduction = 1e-9, kGradientFd = 1e-5, kApproxBudget = 10.0;
constexpr double kPatch = 1e-9, kArea = 1e-8, kConstraint = 1e-8, kIntegrationBudget = 30.0;
constexpr double kJumpRatio = 5.0, kDemoBudget = 600.0;

int criterion_one(std::vector<Check>& out) {
  StudyOptions o;
  o.problem = Benchmark::RodCase1;
  o.method = Method::Imrk;
  o.integration = Integration::Scni;
  const Discretization d = build_benchmark(o, 11);
  const LevelResult r = solve_level(d, o);
  double u_err = 0.0, e_err = 0.0;
  for (std::size_t i = 0; i < d.nodes->size(); ++i) {
    const Vec2& x = d.nodes->x[i];
    const int tag = d.nodes->role[i] == NodeRole::Matrix ? -1 : 1;
    u_err = std::max(u_err, std::abs(sample_field(r.run.solution, x, tag, d.exact.materials).u(0) - d.exact.eval(x).u(0)));
  }
  for (const auto& s : cell_fields(r.run.solution, d.quadrature.cells, d.exact.materials)) {
    e_err = std::max(e_err, std::abs(s.strain(0) - d.exact.eval(s.x).strain(0)));
  }
  out.push_back(at_most("max nodal |u^h - u|", u_err, kRod1Displacement));
  out.push_back(at_most("max cell strain error", e_err, kRod1Strain));
  return 0;
}

StudyResult study(Benchmark b, Method m, Integration in, RkKernelKind iface = RkKernelKind::BSpline3) {
  StudyOptions o;
  o.problem = b;
  o.method = m;
  o.integration = in;
  o.interface_kernel.kind = iface;
  return convergence_study(o);
}

int criterion_two(std::vector<Check>& out) {
  const StudyResult im = study(Benchmark::RodCase2, Method::Imrk, Integration::Gauss);
  const StudyResult rk = study(Benchmark::RodCase2, Method::Rkpm, Integration::Gauss);
  out.push_back(within("IM-RKPM L2 rate", im.l2.rate, 2.0, kRodRateTol));
  out.push_back(within("IM-RKPM energy rate", im.energy.rate, 1.0, kRodRateTol));
  out.push_back(at_most("RKPM L2 rate", rk.l2.rate, kRodRkpmL2));
  out.push_back(at_most("RKPM energy rate", rk.energy.rate, kRodRkpmEnergy));
  return 0;
}

int criterion_three(std::vector<Check>& out) {
  for (Integration in : {Integration::Gauss, Integration::Scni}) {
    for (RkKernelKind k : {RkKernelKind::BSpline3, RkKernelKind::Power}) {
      const StudyResult s = study(Benchmark::Inclusion, Method::Imrk, in, k);
      const std::string tag = std::string(to_string(in)) + "/" + to_string(k);
      out.push_back(within(tag + " L2 rate", s.l2.rate, 2.0, kInclusionRateTol));
      out.push_back(within(tag + " energy rate", s.energy.rate, 1.0, kInclusionRateTol));
    }
  }
  return 0;
}

int criterion_four(std::vector<Check>& out) {
  for (Integration in : {Integration::Gauss, Integration::Scni}) {
    BandError band[2];
    int nodes = 0;
    for (int m = 0; m < 2; ++m) {
      StudyOptions o;
      o.problem = Benchmark::Inclusion;
      o.method = m ? Method::Imrk : Method::Rkpm;
      o.integration = in;
      const Discretization d = build_benchmark(o, kBandLevel);
      nodes = static_cast<int>(d.nodes->size());
      const LevelResult r = solve_level(d, o);
      band[m] = interface_band_error(r.run.solution, d.exact, d.nodes->spacing);
    }
    const std::string tag = std::string(to_string(in)) + " (" + std::to_string(nodes) + " nodes)";
    out.push_back(below(tag + " IM-RKPM band sup e_rr", band[1].radial, band[0].radial));
    out.push_back(below(tag + " IM-RKPM band sup e_tt", band[1].hoop, band[0].hoop));
  }
  return 0;
}

int criterion_five(std::vector<Check>& out) {
  const SyntheticTruth truth = validation_circles();
  const ImageGrid img = synth_image(truth, validation_image_options());
  const Segmentation seg = segment(img, TrainOptions{});
  std::size_t lo = SIZE_MAX, hi = 0;
  double mse = 0.0, iterations = 0.0, residual = 0.0;
  for (auto k : {RkKernelKind::Tent, RkKernelKind::BSpline2, RkKernelKind::BSpline3}) {
    for (double a : {1.1, 1.5, 2.0, 2.5, 3.0}) {
      DiscretizeOptions d;
      d.score_kernel.kind = k;
      d.score_kernel.support = a;
      const ExtractionMetrics m = extraction_metrics(discretize(img, *seg.model, d), truth);
      lo = std::min(lo, m.interface_nodes);
      hi = std::max(hi, m.interface_nodes);
      if (k == RkKernelKind::BSpline3 && a == 2.0) mse = m.mse;
      iterations = std::max(iterations, m.mean_iterations);
      residual = std::max(residual, m.mean_residual);
    }
  }
  out.push_back(at_most("interface MSE (B3, support 2)", mse, kMse));
  out.push_back(at_most("worst mean Newton iterations", iterations, kIterations));
  out.push_back(at_most("worst mean |S(x*)|", residual, kResidual));
  out.push_back(at_most("interface node count variation", static_cast<double>(hi - lo) / lo, kCountVariation));
  return 0;
}

int criterion_six(std::vector<Check>& out) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> count(4, kMaxPoints);
  const std::vector<SvmKernelSpec> kernels{SvmKernelSpec::linear(), SvmKernelSpec::polynomial(2), SvmKernelSpec::polynomial(3),
                                           SvmKernelSpec::gaussian(0.5), SvmKernelSpec::gaussian(3.0)};
  const std::vector<double> costs{0.5, 5.0, 100.0};
  double worst = 0.0;
  int mismatches = 0;
  for (int t = 0; t < kDatasets; ++t) {
    const int n = count(rng);
    std::vector<Vec2> x;
    std::vector<int> y;
    const Vec2 w(u(rng), u(rng));
    for (int i = 0; i < n; ++i) {
      x.emplace_back(u(rng), u(rng));
      y.push_back(i < 2 ? (i ? 1 : -1) : (w.dot(x.back()) + 0.3 * u(rng) >= 0.0 ? 1 : -1));
    }
    TrainOptions o;
    o.kernel = kernels[t % kernels.size()];
    o.C = costs[(t / kernels.size()) % costs.size()];
    o.tol = 1e-10;
    const DualSolution s = solve_dual(x, y, 2, o);
    Eigen::MatrixXd K(n, n);
    Eigen::VectorXd yv(n);
    for (int i = 0; i < n; ++i) {
      yv(i) = y[i];
      for (int j = 0; j < n; ++j) K(i, j) = kernel_eval(o.kernel, x[i], x[j]);
    }
    const oracle::QpResult q = oracle::solve_qp(K, yv, o.C);
    const double obj = dual_objective(x, y, 2, s.alpha, o.kernel);
    worst = std::max(worst, std::abs(obj - q.objective) / std::max(1.0, std::abs(q.objective)));
    for (int p = 0; p < kProbes; ++p) {
      const Vec2 z(-0.9 + 1.8 * (p % 5) / 4.0, -0.9 + 1.8 * (p / 5) / 3.0);
      double fs = s.bias, fq = q.bias;
      for (int i = 0; i < n; ++i) {
        const double k = kernel_eval(o.kernel, x[i], z);
        fs += s.alpha[i] * y[i] * k;
        fq += q.alpha(i) * y[i] * k;
      }
      mismatches += (fs >= 0.0) != (fq >= 0.0);
    }
  }
  out.push_back(at_most("worst relative dual objective gap", worst, kObjective));
  out.push_back(at_most("probe sign mismatches", mismatches, 0.0));
  return 0;
}

struct ShapeChecks {
  double pu = 0.0, linear = 0.0, fd = 0.0;
};

void probe_shapes(const ShapeProvider& sh, const NodeSet& ns, const ScoreField* score, ShapeChecks& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::normal_distribution<double> near(0.0, 0.05 * ns.spacing);
  const double h = 1e-6 * ns.spacing;
  for (int t = 0; t < kRandomPoints; ++t) {
    Vec2 x(u(rng), u(rng));
    if (score && t % 4 == 0) {
      // Pull the point towards the zero level set.
      for (int k = 0; k < 3; ++k) {
        const ScoreSample s = score->sample(x);
        x -= s.value * s.grad / s.grad.squaredNorm();
      }
      x += near(rng) * score->sample(x).grad.normalized();
    }
    const int side = score && score->value(x) < 0.0 ? -1 : 1;
    const ShapeEval e = sh.evaluate(x, true, side);
    double pu = 0.0, gscale = 0.0;
    Vec2 lin = Vec2::Zero();
    for (std::size_t m = 0; m < e.size(); ++m) {
      pu += e.value[m];
      lin += e.value[m] * ns.x[e.nodes[m]];
      gscale = std::max(gscale, e.grad[m].norm());
    }
    c.pu = std::max(c.pu, std::abs(pu - 1.0));
    c.linear = std::max(c.linear, (lin - x).norm());
    if (score && std::abs(score->value(x)) < 0.05 * ns.spacing) continue;
    auto value = [&](const Vec2& p, int node) {
      const ShapeEval f = sh.evaluate(p, false, side);
      for (std::size_t q = 0; q < f.size(); ++q)
        if (f.nodes[q] == node) return f.value[q];
      return 0.0;
    };
    for (std::size_t m = 0; m < e.size(); ++m) {
      const int I = e.nodes[m];
      const Vec2 fd((value(x + Vec2(h, 0), I) - value(x - Vec2(h, 0), I)) / (2 * h),
                    (value(x + Vec2(0, h), I) - value(x - Vec2(0, h), I)) / (2 * h));
      c.fd = std::max(c.fd, (fd - e.grad[m]).norm() / gscale);
    }
  }
}

NodeSet circle_nodes(int n, const Vec2& c, double R) {
  const NodeSet g = grid_nodes(Domain{}, {n, n}, 2.0);
  const double h = g.spacing;
  NodeSet ns;
  ns.spacing = h;
  const int m = static_cast<int>(std::ceil(2 * M_PI * R / (0.75 * h)));
  for (int k = 0; k < m; ++k) {
    const Vec2 dir(std::cos(2 * M_PI * k / m), std::sin(2 * M_PI * k / m));
    ns.add(c + R * dir, NodeRole::Interface, 0.0, 2.0 * h, -dir);
  }
  for (const Vec2& p : g.x) {
    const double v = R - (p - c).norm();
    if (std::abs(v) > h / 3) ns.add(p, role_from_score(v), v, 2.0 * h);
  }
  return ns;
}

int criterion_seven(std::vector<Check>& out) {
  NodeSet grid = grid_nodes(Domain{}, {12, 12}, 2.0);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> jit(-0.25, 0.25);
  for (auto& x : grid.x)
    for (int k = 0; k < 2; ++k)
      if (x(k) > 0 && x(k) < 1) x(k) += jit(rng) * grid.spacing;
  ShapeChecks rk, im;
  for (auto kind : {RkKernelKind::BSpline3, RkKernelKind::BSpline2, RkKernelKind::Power}) {
    RkKernelSpec k;
    k.kind = kind;
    probe_shapes(RkShapes(grid, BasisSpec{1}, k), grid, nullptr, rk, 1 + static_cast<int>(kind));
  }
  const Vec2 c(0.48, 0.53);
  const double R = 0.31;
  const NodeSet ns = circle_nodes(13, c, R);
  auto score = std::make_shared<AnalyticScore>(AnalyticScore::circles({Circle{c, R}}));
  for (auto kind : {RkKernelKind::BSpline3, RkKernelKind::Power}) {
    ImRkOptions o;
    o.interface_kernel.kind = kind;
    o.gradient_layer = 0.02;
    probe_shapes(ImRkShapes(ns, o, score), ns, score.get(), im, 10 + static_cast<int>(kind));
  }
  out.push_back(at_most("RK |sum psi - 1|", rk.pu, kReproduction));
  out.push_back(at_most("RK |sum psi x - x|", rk.linear, kReproduction));
  out.push_back(at_most("RK gradient vs central difference", rk.fd, kGradientFd));
  out.push_back(at_most("IM-RK |sum psi - 1|", im.pu, kReproduction));
  out.push_back(at_most("IM-RK |sum psi x - x|", im.linear, kReproduction));
  out.push_back(at_most("IM-RK gradient vs central difference", im.fd, kGradientFd));
  return 0;
}

int criterion_eight(std::vector<Check>& out) {
  const Domain d;
  NodeSet ns = grid_nodes(d, {10, 10}, 2.0);
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> jit(-0.25, 0.25);
  for (auto& x : ns.x)
    for (int k = 0; k < 2; ++k)
      if (x(k) > 0 && x(k) < 1) x(k) += jit(rng) * ns.spacing;

  auto shapes = std::make_shared<RkShapes>(ns, BasisSpec{1}, RkKernelSpec{});
  Materials mats;
  mats.inclusion = mats.matrix = Material{100.0, 0.25, 0.0};
  auto exact = [](const Vec2& x) { return Vec2(0.01 * x(0) + 0.02 * x(1) + 0.003, -0.015 * x(0) + 0.005 * x(1)); };
  BvpSpec b;
  b.domain = d;
  b.dirichlet.push_back({{Side::Left, Side::Right, Side::Bottom, Side::Top}, exact, {true, true}});
  const ElasticRun run = solve_elasticity(shapes, scni_quadrature(ns, d), mats, b);
  double patch = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vec2 x = 0.02 * Vec2::Ones() + 0.96 * Vec2((t % 7) / 6.0, (t / 7) / 7.0);
    const FieldSample s = sample_field(run.solution, x, -1, mats);
    patch = std::max({patch, (s.u - exact(x)).norm(), (s.strain - Eigen::Vector3d(0.01, 0.005, 0.005)).norm()});
  }
  out.push_back(at_most("SCNI patch test error", patch, kPatch));

  const NodeSet mirrored = circle_nodes(15, Vec2(0.5, 0.5), 0.3);
  double constraint = 0.0;
  for (const NodeSet* set : std::vector<const NodeSet*>{&ns, &mirrored}) {
    const SmoothingCellComplex cells = scni_cells(*set, d);
    out.push_back(at_most(set == &ns ? "Voronoi area error" : "Voronoi area error with mirror pairs",
                          std::abs(cells.total_area() - 1.0), kArea));
    const RkShapes sh(*set, BasisSpec{1}, RkKernelSpec{});
    const auto grads = smoothed_gradients(sh, cells, Exec::Serial);
    for (std::size_t L = 0; L < grads.size(); ++L) {
      Vec2 s0 = Vec2::Zero();
      Eigen::Matrix2d s1 = Eigen::Matrix2d::Zero();
      for (std::size_t m = 0; m < grads[L].nodes.size(); ++m) {
        s0 += grads[L].b[m];
        s1 += set->x[grads[L].nodes[m]] * grads[L].b[m].transpose();
      }
      constraint = std::max({constraint, s0.norm(), (s1 - Eigen::Matrix2d::Identity()).norm()});
    }
  }
  out.push_back(at_most("per-cell integration constraint", constraint, kConstraint));
  return 0;
}

int criterion_nine(std::vector<Check>& out) {
  const fs::path dir = fs::temp_directory_path() / "svmrk_acceptance_demo";
  fs::remove_all(dir);
  std::ostringstream log, err;
  const int code = cli::run({"demo2d", "-o", dir.string()}, log, err);
  std::fputs(log.str().c_str(), stdout);
  std::fputs(err.str().c_str(), stderr);
  out.push_back(at_most("demo2d exit code", code, 0.0));
  int files = 0;
  for (const char* f : {"fields.csv", "cells.csv", "fields.vtk", "image.pgm", "summary.json", "config.json"}) {
    files += fs::exists(dir / f) && fs::file_size(dir / f) > 0;
  }
  out.push_back({"output files written", static_cast<double>(files), 6.0, 6.0});
  double ratio = 0.0;
  if (fs::exists(dir / "summary.json")) ratio = cli::json::parse(std::ifstream(dir / "summary.json"))["strain_jump_ratio"];
  out.push_back({"matrix/inclusion strain ratio across interfaces", ratio, kJumpRatio, INFINITY});
  return 0;
}

struct Criterion {
  const char* title;
  double budget;
  std::function<int(std::vector<Check>&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int which = 0;
  app.add_option("--criterion", which, "criterion number")->required()->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {"rod case 1 exactness", kRod1Budget, criterion_one},
      {"rod case 2 rates", kRod2Budget, criterion_two},
      {"inclusion rates", kInclusionBudget, criterion_three},
      {"oscillation suppression", 0.0, criterion_four},
      {"interface extraction", kExtractionBudget, criterion_five},
      {"svm oracle equivalence", kOracleBudget, criterion_six},
      {"approximation invariants", kApproxBudget, criterion_seven},
      {"integration invariants", kIntegrationBudget, criterion_eight},
      {"2D microstructure demo", kDemoBudget, criterion_nine},
  };
  const Criterion& c = all[which - 1];
  std::vector<Check> checks;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    c.run(checks);
  } catch (const std::exception& e) {
    std::printf("criterion %d %s: FAIL (error: %s)\n", which, c.title, e.what());
    return 1;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (c.budget > 0.0) checks.push_back(at_most("runtime [s]", seconds, c.budget));
  bool ok = true;
  for (const auto& k : checks) {
    ok = ok && k.pass();
    std::printf("  %-4s %-52s %.6g in [%.6g, %.6g]\n", k.pass() ? "ok" : "FAIL", k.name.c_str(), k.value, k.lower, k.upper);
  }
  std::printf("criterion %d %s: %s (%.2f s)\n", which, c.title, ok ? "PASS" : "FAIL", seconds);
  return ok ? 0 : 1;
}
