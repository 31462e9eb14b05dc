#include "svmrk/pipeline.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace svmrk {

ScoreSample SvmScore::sample(const Vec2& x) const {
  const auto [s, g] = score_gradient(*model_, x);
  return {s, g};
}

Segmentation segment(const ImageGrid& img, const TrainOptions& opts) {
  Segmentation seg;
  seg.otsu = otsu_threshold(img);
  seg.data = make_training_set(img, seg.otsu.labels);
  seg.data.validate(true);
  seg.model = std::make_shared<const SvmModel>(train(seg.data, opts));
  return seg;
}

std::vector<double> pixel_scores(const ImageGrid& img, const SvmModel& model, Exec exec) {
  std::vector<Vec2> xs;
  xs.reserve(img.size());
  for (int j = 0; j < img.extent[1]; ++j) {
    for (int i = 0; i < img.extent[0]; ++i) xs.push_back(img.centroid(i, j));
  }
  return score_batch(model, xs, exec);
}

NodeSet pixel_nodes(const ImageGrid& img, const std::vector<double>& scores, double support_factor) {
  if (scores.size() != img.size()) throw Error("one score per pixel required");
  NodeSet ns;
  ns.dim = img.dim;
  ns.spacing = img.voxel_size;
  std::size_t k = 0;
  for (int j = 0; j < img.extent[1]; ++j) {
    for (int i = 0; i < img.extent[0]; ++i, ++k) {
      ns.add(img.centroid(i, j), role_from_score(scores[k]), scores[k], support_factor * img.voxel_size);
    }
  }
  return ns;
}

Discretized discretize(const ImageGrid& img, const SvmModel& model, const DiscretizeOptions& opts) {
  opts.score_kernel.validate();
  Discretized d;
  d.pixels = pixel_nodes(img, pixel_scores(img, model, opts.exec), opts.score_kernel.support);
  d.score = std::make_shared<const InterpolatedScore>(d.pixels, opts.basis, opts.score_kernel);
  const double voxel = img.voxel_size;
  d.pairs = candidate_pairs(d.pixels, model.support_vectors_physical(), *d.score, opts.iface.xi, voxel);
  d.search = search_interface(d.pairs, *d.score, opts.iface, opts.exec);
  d.nodes = std::make_shared<const NodeSet>(
      assemble_nodeset(d.pixels, d.search.nodes, *d.score, opts.iface, voxel, opts.support_factor, &d.report));
  return d;
}

SyntheticTruth validation_circles() {
  SyntheticTruth t;
  t.extent_x = 10.0;
  t.circles = {{Vec2(3.0, 3.2), 1.0}, {Vec2(6.8, 3.5), 0.8}, {Vec2(5.0, 7.2), 1.2}};
  return t;
}

SynthOptions validation_image_options() {
  SynthOptions o;
  o.resolution = 224;
  o.output_resolution = 100;
  o.noise_sigma = 0.1;
  o.seed = 2024;
  return o;
}

ExtractionMetrics extraction_metrics(const Discretized& d, const SyntheticTruth& truth) {
  ExtractionMetrics m;
  std::vector<Vec2> pts;
  double res = 0.0;
  for (std::size_t i = 0; i < d.nodes->size(); ++i) {
    if (d.nodes->role[i] != NodeRole::Interface) continue;
    pts.push_back(d.nodes->x[i]);
    res += std::abs(d.score->value(d.nodes->x[i]));
  }
  m.interface_nodes = pts.size();
  m.mean_iterations = d.search.mean_iterations;
  m.mean_residual = pts.empty() ? 0.0 : res / pts.size();
  m.mse = interface_mse(pts, truth);
  return m;
}

ModelRun solve_model(std::shared_ptr<const NodeSet> nodes, std::shared_ptr<const ScoreField> score,
                     const Materials& mats, const BvpSpec& bvp, const SolveOptions& opts) {
  if (!nodes || !score) throw Error("solve_model needs nodes and a score field");
  ModelRun m;
  m.score = score;
  m.domain = bvp.domain;
  std::shared_ptr<const ShapeProvider> shapes;
  if (opts.method == Method::Rkpm) {
    shapes = std::make_shared<RkShapes>(*nodes, opts.basis, opts.bulk_kernel);
  } else {
    shapes = std::make_shared<ImRkShapes>(
        *nodes, ImRkOptions{opts.basis, opts.bulk_kernel, opts.interface_kernel, opts.c_multiplier, opts.gradient_layer}, score);
  }
  const Domain& dom = bvp.domain;
  if (opts.integration == Integration::Scni) {
    m.quadrature = scni_quadrature(*nodes, dom);
  } else {
    std::array<int, 2> cells{1, 1};
    for (int k = 0; k < dom.dim; ++k) {
      cells[k] = std::max(1, static_cast<int>(std::lround((dom.hi(k) - dom.lo(k)) / nodes->spacing)));
    }
    m.quadrature = gauss_quadrature(dom, cells, opts.gauss_points, *score);
  }
  AssemblyOptions ao;
  ao.beta0 = opts.beta0;
  ao.exec = opts.exec;
  m.run = solve_elasticity(shapes, m.quadrature, mats, bvp, ao);
  std::vector<int> tags(nodes->size());
  for (std::size_t i = 0; i < nodes->size(); ++i) tags[i] = nodes->role[i] == NodeRole::Matrix ? -1 : 1;
  m.node_fields = recover_fields(m.run.solution, nodes->x, tags, mats);
  if (opts.integration == Integration::Scni) m.cell_fields = cell_fields(m.run.solution, m.quadrature.cells, mats);
  return m;
}

namespace {

double strain_magnitude(const Eigen::Vector3d& e) {
  return std::sqrt(e(0) * e(0) + e(1) * e(1) + 0.5 * e(2) * e(2));
}

}  // namespace

double strain_jump_ratio(const ModelRun& run, const Materials& mats, double offset) {
  const SolutionField& sol = run.run.solution;
  const NodeSet& ns = sol.shapes->nodes();
  const Domain& dom = run.domain;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns.role[i] != NodeRole::Interface || ns.normal[i].norm() == 0.0) continue;
    const Vec2 pin = ns.x[i] + offset * ns.normal[i];
    const Vec2 pout = ns.x[i] - offset * ns.normal[i];
    if (!dom.contains(pin) || !dom.contains(pout)) continue;
    if (run.score->value(pin) < 0.0 || run.score->value(pout) >= 0.0) continue;
    const double ein = strain_magnitude(sample_field(sol, pin, 1, mats).strain);
    const double eout = strain_magnitude(sample_field(sol, pout, -1, mats).strain);
    if (ein > 0.0) ratios.push_back(eout / ein);
  }
  if (ratios.empty()) throw Error("no interface node with both sides inside the domain");
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  return ratios[ratios.size() / 2];
}

Materials alumina_epoxy() {
  Materials m;
  m.inclusion = Material{320000.0, 0.23, 0.0};
  m.matrix = Material{3660.0, 0.358, 0.0};
  return m;
}

SyntheticTruth demo_microstructure(const DemoOptions& opts) {
  if (opts.pixels < 8 || !(opts.pixel_size > 0.0)) throw Error("demo image needs at least 8 pixels of positive size");
  if (opts.inclusions < 1 || !(opts.area_fraction > 0.0 && opts.area_fraction < 0.6)) {
    throw Error("demo needs at least one inclusion and an area fraction in (0, 0.6)");
  }
  const double W = opts.pixels * opts.pixel_size;
  const double rbar = std::sqrt(opts.area_fraction * W * W / (opts.inclusions * std::numbers::pi));
  const double gap = 3.0 * opts.pixel_size * opts.node_downscale;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticTruth t;
  t.extent_x = W;
  for (int attempt = 0; attempt < 100000 && static_cast<int>(t.circles.size()) < opts.inclusions; ++attempt) {
    const double r = rbar * (0.75 + 0.5 * unit(rng));
    const double lo = r + gap, span = W - 2.0 * lo;
    if (span <= 0.0) continue;
    const Vec2 c(lo + span * unit(rng), lo + span * unit(rng));
    bool ok = true;
    for (const auto& o : t.circles) ok = ok && (c - o.center).norm() > r + o.radius + gap;
    if (ok) t.circles.push_back({c, r});
  }
  if (t.circles.empty()) throw Error("could not place any inclusion");
  return t;
}

BvpSpec compression_shear(const Domain& domain, const Vec2& top_displacement) {
  BvpSpec b;
  b.mode = Analysis::PlaneStrain;
  b.domain = domain;
  b.dirichlet.push_back({{Side::Bottom}, [](const Vec2&) { return Vec2::Zero(); }, {true, true}});
  b.dirichlet.push_back({{Side::Top}, [top_displacement](const Vec2&) { return top_displacement; }, {true, true}});
  return b;
}

}  // namespace svmrk
