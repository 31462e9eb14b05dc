#include "cli.hpp"

#include "svmrk/io.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

namespace svmrk::cli {

namespace fs = std::filesystem;

json default_config() {
  return json::parse(R"({
    "input": {
      "source": "validation",
      "path": "",
      "format": "pgm",
      "voxel_size": 1.0,
      "origin": null,
      "resolution": 224,
      "output_resolution": 100,
      "noise_sigma": 0.1,
      "node_downscale": 1
    },
    "svm": {"kernel": "gaussian", "gamma": 16.0, "degree": 2, "C": 500.0, "tol": 1e-6, "max_iter": 1000000},
    "rk": {"kernel": "b3", "exponent": 4.0, "support": 2.0, "basis_order": 1, "score_kernel": "b3", "score_support": 2.0},
    "interface": {
      "xi": 1.5,
      "zeta": 0.3333333333333333,
      "merge_tol": 0.01,
      "newton_tol": 1e-10,
      "max_iter": 25,
      "c_multiplier": 1.0,
      "gradient_layer": 0.02,
      "kernel": "b3",
      "exponent": 4.0
    },
    "method": "imrkpm",
    "integration": {"scheme": "scni", "gauss_points": 5},
    "materials": {
      "inclusion": {"E": 320000.0, "nu": 0.23, "eigenstrain": 0.0},
      "matrix": {"E": 3660.0, "nu": 0.358, "eigenstrain": 0.0}
    },
    "bvp": {
      "beta0": 100.0,
      "dirichlet": [
        {"sides": ["bottom"], "value": [0.0, 0.0], "constrained": [true, true]},
        {"sides": ["top"], "value": [-0.01, -0.01], "constrained": [true, true]}
      ],
      "neumann": [],
      "body_force": [0.0, 0.0]
    },
    "demo": {
      "pixels": 200,
      "pixel_size": 0.008,
      "node_downscale": 2,
      "inclusions": 14,
      "area_fraction": 0.3,
      "seed": 7,
      "top_displacement": [-0.01, -0.01]
    },
    "output": "out",
    "seed": 2024,
    "exec": "parallel"
  })");
}

namespace {

void check_keys(const json& given, const json& defaults, const std::string& where) {
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!defaults.contains(it.key())) throw Error("unknown config key '" + key + "'");
    const json& d = defaults.at(it.key());
    if (d.is_object() && it->is_object()) check_keys(*it, d, key);
  }
}

json::json_pointer pointer(const std::string& dotted) {
  std::string p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const std::size_t end = dotted.find('.', start);
    const std::string part = dotted.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (part.empty()) throw Error("malformed config key '" + dotted + "'");
    p += "/" + part;
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return json::json_pointer(p);
}

template <class T>
T get(const json& cfg, const std::string& key) {
  try {
    return cfg.at(pointer(key)).get<T>();
  } catch (const json::exception&) {
    throw Error("config key '" + key + "' is missing or has the wrong type");
  }
}

Vec2 vec2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() < 1 || j.size() > 2) throw Error(what + " must be an array of 1 or 2 numbers");
  try {
    return Vec2(j[0].get<double>(), j.size() > 1 ? j[1].get<double>() : 0.0);
  } catch (const json::exception&) {
    throw Error(what + " must contain numbers");
  }
}

Side parse_side(const std::string& s) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "bottom") return Side::Bottom;
  if (s == "top") return Side::Top;
  throw Error("unknown side '" + s + "' (expected left|right|bottom|top)");
}

std::vector<Side> sides(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw Error(what + ".sides must be a non-empty array");
  std::vector<Side> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw Error(what + ".sides must contain strings");
    out.push_back(parse_side(s.get<std::string>()));
  }
  return out;
}

Exec exec_of(const json& cfg) {
  const auto e = get<std::string>(cfg, "exec");
  if (e == "serial") return Exec::Serial;
  if (e == "parallel") return Exec::Parallel;
  throw Error("exec must be serial|parallel");
}

RkKernelSpec rk_kernel(const json& cfg, const std::string& kind_key, const std::string& exponent_key,
                       const std::string& support_key) {
  RkKernelSpec k;
  k.kind = parse_rk_kernel(get<std::string>(cfg, kind_key));
  k.exponent = get<double>(cfg, exponent_key);
  k.support = get<double>(cfg, support_key);
  k.validate();
  return k;
}

BasisSpec basis_of(const json& cfg) {
  BasisSpec b;
  b.order = get<int>(cfg, "rk.basis_order");
  b.validate();
  return b;
}

}  // namespace

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  const auto ptr = pointer(key);
  const json defaults = default_config();
  if (!defaults.contains(ptr)) throw Error("unknown config key '" + key + "'");
  cfg[ptr] = std::move(value);
}

json resolve_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides) {
  json cfg = default_config();
  if (file) {
    std::ifstream f(*file);
    if (!f) throw Error("cannot open config file " + file->string());
    json user = json::parse(f, nullptr, false);
    if (user.is_discarded() || !user.is_object()) throw Error("config file " + file->string() + " is not a JSON object");
    check_keys(user, cfg, "");
    cfg.merge_patch(user);
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

TrainOptions train_options(const json& cfg) {
  TrainOptions t;
  t.kernel.kind = parse_svm_kernel(get<std::string>(cfg, "svm.kernel"));
  t.kernel.gamma = get<double>(cfg, "svm.gamma");
  t.kernel.degree = get<int>(cfg, "svm.degree");
  t.kernel.validate();
  t.C = get<double>(cfg, "svm.C");
  t.tol = get<double>(cfg, "svm.tol");
  t.max_iter = get<long>(cfg, "svm.max_iter");
  if (!(t.C > 0.0) || !(t.tol > 0.0) || t.max_iter < 1) throw Error("svm.C, svm.tol and svm.max_iter must be positive");
  t.exec = exec_of(cfg);
  return t;
}

DiscretizeOptions discretize_options(const json& cfg) {
  DiscretizeOptions d;
  d.iface.xi = get<double>(cfg, "interface.xi");
  d.iface.zeta = get<double>(cfg, "interface.zeta");
  d.iface.merge_tol = get<double>(cfg, "interface.merge_tol");
  d.iface.newton_tol = get<double>(cfg, "interface.newton_tol");
  d.iface.max_iter = get<int>(cfg, "interface.max_iter");
  if (!(d.iface.xi > 0.0) || !(d.iface.zeta >= 0.0) || !(d.iface.merge_tol >= 0.0) || !(d.iface.newton_tol > 0.0) ||
      d.iface.max_iter < 1) {
    throw Error("interface options out of range");
  }
  d.basis = basis_of(cfg);
  d.score_kernel = rk_kernel(cfg, "rk.score_kernel", "rk.exponent", "rk.score_support");
  d.support_factor = get<double>(cfg, "rk.support");
  if (!(d.support_factor > 0.0)) throw Error("rk.support must be positive");
  d.exec = exec_of(cfg);
  return d;
}

SolveOptions solve_options(const json& cfg) {
  SolveOptions s;
  s.method = parse_method(get<std::string>(cfg, "method"));
  s.integration = parse_integration(get<std::string>(cfg, "integration.scheme"));
  s.gauss_points = get<int>(cfg, "integration.gauss_points");
  if (s.gauss_points < 1 || s.gauss_points > 20) throw Error("integration.gauss_points must lie in [1, 20]");
  s.basis = basis_of(cfg);
  s.bulk_kernel = rk_kernel(cfg, "rk.kernel", "rk.exponent", "rk.support");
  RkKernelSpec ik = rk_kernel(cfg, "interface.kernel", "interface.exponent", "rk.support");
  s.interface_kernel = ik;
  s.c_multiplier = get<double>(cfg, "interface.c_multiplier");
  s.gradient_layer = get<double>(cfg, "interface.gradient_layer");
  if (!(s.c_multiplier > 0.0) || !(s.gradient_layer >= 0.0)) throw Error("interface.c_multiplier/gradient_layer out of range");
  s.beta0 = get<double>(cfg, "bvp.beta0");
  if (!(s.beta0 > 0.0)) throw Error("bvp.beta0 must be positive");
  s.exec = exec_of(cfg);
  return s;
}

Materials materials(const json& cfg) {
  Materials m;
  for (const char* phase : {"inclusion", "matrix"}) {
    const std::string p = std::string("materials.") + phase;
    Material mat{get<double>(cfg, p + ".E"), get<double>(cfg, p + ".nu"), get<double>(cfg, p + ".eigenstrain")};
    mat.validate();
    (std::string(phase) == "inclusion" ? m.inclusion : m.matrix) = mat;
  }
  return m;
}

BvpSpec bvp(const json& cfg, const Domain& domain) {
  BvpSpec b;
  b.mode = Analysis::PlaneStrain;
  b.domain = domain;
  const json& dj = cfg.at("bvp").at("dirichlet");
  const json& nj = cfg.at("bvp").at("neumann");
  if (!dj.is_array() || !nj.is_array()) throw Error("bvp.dirichlet and bvp.neumann must be arrays");
  for (std::size_t k = 0; k < dj.size(); ++k) {
    const std::string what = "bvp.dirichlet[" + std::to_string(k) + "]";
    const json& d = dj[k];
    if (!d.is_object() || !d.contains("sides") || !d.contains("value")) throw Error(what + " needs sides and value");
    DirichletSpec s;
    s.sides = sides(d.at("sides"), what);
    const Vec2 v = vec2(d.at("value"), what + ".value");
    s.value = [v](const Vec2&) { return v; };
    if (d.contains("constrained")) {
      const json& c = d.at("constrained");
      if (!c.is_array() || c.size() != 2 || !c[0].is_boolean() || !c[1].is_boolean()) {
        throw Error(what + ".constrained must be two booleans");
      }
      s.constrained = {c[0].get<bool>(), c[1].get<bool>()};
    }
    b.dirichlet.push_back(std::move(s));
  }
  for (std::size_t k = 0; k < nj.size(); ++k) {
    const std::string what = "bvp.neumann[" + std::to_string(k) + "]";
    const json& n = nj[k];
    if (!n.is_object() || !n.contains("sides") || !n.contains("traction")) throw Error(what + " needs sides and traction");
    NeumannSpec s;
    s.sides = sides(n.at("sides"), what);
    const Vec2 t = vec2(n.at("traction"), what + ".traction");
    s.traction = [t](const Vec2&) { return t; };
    b.neumann.push_back(std::move(s));
  }
  const Vec2 f = vec2(cfg.at("bvp").at("body_force"), "bvp.body_force");
  if (f.squaredNorm() > 0.0) b.body_force = [f](const Vec2&) { return f; };
  b.validate();
  return b;
}

DemoOptions demo_options(const json& cfg) {
  DemoOptions o;
  o.pixels = get<int>(cfg, "demo.pixels");
  o.pixel_size = get<double>(cfg, "demo.pixel_size");
  o.node_downscale = get<int>(cfg, "demo.node_downscale");
  o.inclusions = get<int>(cfg, "demo.inclusions");
  o.area_fraction = get<double>(cfg, "demo.area_fraction");
  o.seed = get<std::uint64_t>(cfg, "demo.seed");
  o.top_displacement = vec2(cfg.at("demo").at("top_displacement"), "demo.top_displacement");
  o.materials = materials(cfg);
  if (o.node_downscale < 1 || o.pixels % o.node_downscale != 0) {
    throw Error("demo.node_downscale must divide demo.pixels");
  }
  return o;
}

Input load_input(const json& cfg) {
  Input in;
  const auto source = get<std::string>(cfg, "input.source");
  int down = get<int>(cfg, "input.node_downscale");
  if (source == "file") {
    const fs::path path = get<std::string>(cfg, "input.path");
    if (path.empty()) throw Error("input.path is required for input.source = file");
    if (!fs::exists(path)) throw Error("input image not found: " + path.string());
    ImagePlacement place;
    place.voxel_size = get<double>(cfg, "input.voxel_size");
    const json& origin = cfg.at("input").at("origin");
    if (!origin.is_null()) place.origin = vec2(origin, "input.origin");
    in.image = load_image(path, parse_image_format(get<std::string>(cfg, "input.format")), place);
  } else if (source == "validation") {
    SynthOptions o = validation_image_options();
    o.resolution = get<int>(cfg, "input.resolution");
    o.output_resolution = get<int>(cfg, "input.output_resolution");
    o.noise_sigma = get<double>(cfg, "input.noise_sigma");
    o.seed = get<std::uint64_t>(cfg, "seed");
    in.truth = validation_circles();
    in.image = synth_image(*in.truth, o);
  } else if (source == "demo") {
    const DemoOptions d = demo_options(cfg);
    in.truth = demo_microstructure(d);
    SynthOptions o;
    o.resolution = d.pixels;
    o.seed = d.seed;
    in.image = synth_image(*in.truth, o);
    down = d.node_downscale;
  } else {
    throw Error("input.source must be file|validation|demo");
  }
  in.nodes = down == 1 ? in.image : box_downscale(in.image, down);
  return in;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path prepare_output(const json& cfg) {
  const fs::path dir = get<std::string>(cfg, "output");
  fs::create_directories(dir);
  std::ofstream f(dir / "config.json");
  if (!f) throw Error("cannot write " + (dir / "config.json").string());
  f << cfg.dump(2) << "\n";
  return dir;
}

std::shared_ptr<const SvmModel> obtain_model(const Input& in, const json& cfg, const std::string& model_path,
                                             std::ostream& out) {
  if (!model_path.empty()) {
    if (!fs::exists(model_path)) throw Error("model file not found: " + model_path);
    return std::make_shared<const SvmModel>(load_model(model_path));
  }
  const auto t0 = Clock::now();
  const Segmentation seg = segment(in.image, train_options(cfg));
  out << "segment: " << seg.data.size() << " points, " << seg.model->n() << " support vectors, "
      << seg.model->stats.iterations << " iterations, " << seconds_since(t0) << " s\n";
  return seg.model;
}

void report_discretization(const Discretized& d, const Input& in, std::ostream& out) {
  const SyntheticTruth* truth = in.truth ? &*in.truth : nullptr;
  std::size_t iface = 0;
  for (auto r : d.nodes->role) iface += r == NodeRole::Interface;
  out << "discretize: " << d.nodes->size() << " nodes, " << iface << " on the interface, mean Newton iterations "
      << d.search.mean_iterations << ", mean residual " << d.search.mean_residual << "\n";
  if (truth) out << "discretize: interface MSE " << extraction_metrics(d, *truth).mse << "\n";
}

void write_model_outputs(const fs::path& dir, const ModelRun& run, std::ostream& out) {
  write_fields_csv(run.node_fields, dir / "fields.csv");
  if (!run.cell_fields.empty()) {
    write_fields_csv(run.cell_fields, dir / "cells.csv");
    write_cells_vtk(run.quadrature.cells, dir / "fields.vtk", &run.cell_fields);
  } else {
    write_points_vtk(run.node_fields, dir / "fields.vtk");
  }
  std::ofstream log(dir / "solve.log");
  const auto& rep = run.run.solve;
  log << "dof " << run.run.system.F.size() << "\n"
      << "solver " << (rep.dense ? "dense" : "sparse") << "\n"
      << "relative_residual " << rep.relative_residual << "\n"
      << "refinements " << rep.refinements << "\n"
      << "nitsche_beta " << run.run.system.beta << "\n";
  out << "solve: " << run.run.system.F.size() << " dof, relative residual " << rep.relative_residual << "\n";
}

struct Check {
  std::string name;
  double value;
  double lo;
  double hi;
  bool pass() const { return std::isfinite(value) && value >= lo && value <= hi; }
};

bool print_checks(const std::vector<Check>& checks, const fs::path& path, std::ostream& out) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "check,value,lower,upper,pass\n";
  bool ok = true;
  for (const auto& c : checks) {
    f << c.name << "," << format_number(c.value) << "," << format_number(c.lo) << "," << format_number(c.hi) << ","
      << (c.pass() ? "true" : "false") << "\n";
    out << (c.pass() ? "PASS " : "FAIL ") << c.name << " = " << c.value << " in [" << c.lo << ", " << c.hi << "]\n";
    ok = ok && c.pass();
  }
  return ok;
}

StudyOptions study_options(const std::string& problem, const std::string& method, const std::string& integration,
                           const std::string& kernel, const std::vector<int>& levels, const json& cfg) {
  StudyOptions o;
  o.problem = parse_benchmark(problem);
  o.method = parse_method(method);
  o.integration = parse_integration(integration);
  o.interface_kernel.kind = parse_rk_kernel(kernel);
  o.interface_kernel.exponent = get<double>(cfg, "interface.exponent");
  o.c_multiplier = get<double>(cfg, "interface.c_multiplier");
  o.gradient_layer = get<double>(cfg, "interface.gradient_layer");
  o.beta0 = get<double>(cfg, "bvp.beta0");
  o.levels = levels;
  o.exec = exec_of(cfg);
  return o;
}

std::vector<Check> rod_exactness(const StudyOptions& o, const fs::path& dir) {
  const int level = o.levels.empty() ? 11 : o.levels.front();
  const Discretization d = build_benchmark(o, level);
  const LevelResult r = solve_level(d, o);
  double u_err = 0.0, e_err = 0.0;
  for (std::size_t i = 0; i < d.nodes->size(); ++i) {
    const Vec2& x = d.nodes->x[i];
    const int tag = d.nodes->role[i] == NodeRole::Matrix ? -1 : 1;
    u_err = std::max(u_err, std::abs(sample_field(r.run.solution, x, tag, d.exact.materials).u(0) - d.exact.eval(x).u(0)));
  }
  std::vector<FieldSample> strains;
  if (o.integration == Integration::Scni) {
    strains = cell_fields(r.run.solution, d.quadrature.cells, d.exact.materials);
  } else {
    for (const auto& q : norm_quadrature(d.exact, d.cells)) strains.push_back(sample_field(r.run.solution, q.x, q.tag, d.exact.materials));
  }
  for (const auto& s : strains) e_err = std::max(e_err, std::abs(s.strain(0) - d.exact.eval(s.x).strain(0)));
  StudyResult study;
  study.options = o;
  study.options.levels = {level};
  study.levels.push_back(r.error);
  std::ofstream f(dir / "errors.csv");
  write_study_csv(f, {study});
  return {{"max_nodal_displacement_error", u_err, 0.0, 1e-10}, {"max_strain_error", e_err, 0.0, 1e-8}};
}

std::vector<Check> rate_checks(const StudyResult& s) {
  if (s.options.problem == Benchmark::RodCase2) {
    if (s.options.method == Method::Imrk) return {{"l2_rate", s.l2.rate, 1.8, 2.2}, {"energy_rate", s.energy.rate, 0.8, 1.2}};
    return {{"l2_rate", s.l2.rate, -INFINITY, 1.3}, {"energy_rate", s.energy.rate, -INFINITY, 0.8}};
  }
  if (s.options.method == Method::Imrk) return {{"l2_rate", s.l2.rate, 1.7, 2.3}, {"energy_rate", s.energy.rate, 0.7, 1.3}};
  return {{"l2_rate", s.l2.rate, -INFINITY, INFINITY}, {"energy_rate", s.energy.rate, -INFINITY, INFINITY}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image-based meshfree modelling of two-phase microstructures"};
  app.require_subcommand(1);
  std::string config_path, model_path, output;
  std::vector<std::string> sets;
  bool serial = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run configuration");
    sub->add_option("-s,--set", sets, "override, key.path=value (repeatable)");
    sub->add_option("-o,--output", output, "output directory");
    sub->add_flag("--serial", serial, "run the serial reference path");
  };
  auto* seg = app.add_subcommand("segment", "Otsu labels and SVM training; writes model and score grid");
  auto* dis = app.add_subcommand("discretize", "interface search and RK node set; writes nodes and cells");
  auto* sol = app.add_subcommand("solve", "full pipeline plus elasticity solve; writes fields");
  auto* val = app.add_subcommand("validate", "benchmark against thresholds; exit status is the verdict");
  auto* con = app.add_subcommand("convergence", "refinement study; writes the error table");
  auto* demo = app.add_subcommand("demo2d", "two-phase compression-shear demo on a synthetic image");
  for (auto* s : {seg, dis, sol, val, con, demo}) common(s);
  dis->add_option("-m,--model", model_path, "reuse a trained model");
  sol->add_option("-m,--model", model_path, "reuse a trained model");

  std::string problem, method = "imrkpm", integration, kernel = "b3";
  std::vector<int> levels;
  val->add_option("benchmark", problem, "rod-case1 | rod-case2 | inclusion")->required();
  con->add_option("benchmark", problem, "rod-case1 | rod-case2 | inclusion")->required();
  for (auto* s : {val, con}) {
    s->add_option("--method", method, "rkpm | imrkpm");
    s->add_option("--integration", integration, "gi | scni");
    s->add_option("--kernel", kernel, "interface kernel: b3 | power");
    s->add_option("--levels", levels, "nodes per axis of each level")->delimiter(',');
  }

  std::vector<const char*> argv{"svmrk"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    std::optional<fs::path> file;
    if (!config_path.empty()) file = config_path;
    if (!output.empty()) sets.push_back("output=\"" + output + "\"");
    if (serial) sets.push_back("exec=\"serial\"");
    if (demo->parsed()) sets.insert(sets.begin(), "input.source=\"demo\"");
    const json cfg = resolve_config(file, sets);
    const auto t0 = Clock::now();

    if (val->parsed() || con->parsed()) {
      const fs::path dir = prepare_output(cfg);
      const Benchmark b = parse_benchmark(problem);
      if (integration.empty()) integration = b == Benchmark::RodCase1 ? "scni" : "gi";
      const StudyOptions o = study_options(problem, method, integration, kernel, levels, cfg);
      if (val->parsed() && b == Benchmark::RodCase1) {
        const bool ok = print_checks(rod_exactness(o, dir), dir / "checks.csv", out);
        return ok ? 0 : 1;
      }
      const StudyResult s = convergence_study(o);
      std::ofstream f(dir / (con->parsed() ? "study.csv" : "errors.csv"));
      write_study_csv(f, {s});
      for (const auto& l : s.levels) {
        out << "level " << l.nodes << " nodes: l2 " << l.l2 << ", energy " << l.energy << "\n";
      }
      out << "rates: l2 " << s.l2.rate << " +/- " << s.l2.half_width << ", energy " << s.energy.rate << " +/- "
          << s.energy.half_width << " (" << seconds_since(t0) << " s)\n";
      if (con->parsed()) return 0;
      return print_checks(rate_checks(s), dir / "checks.csv", out) ? 0 : 1;
    }

    const Input in = load_input(cfg);
    const fs::path dir = prepare_output(cfg);
    if (seg->parsed()) {
      const auto model = obtain_model(in, cfg, "", out);
      save_model(*model, dir / "model.svm");
      write_score_grid_csv(in.nodes, pixel_scores(in.nodes, *model, exec_of(cfg)), dir / "scores.csv");
      return 0;
    }
    const auto model = obtain_model(in, cfg, model_path, out);
    if (model_path.empty()) save_model(*model, dir / "model.svm");
    const Discretized d = discretize(in.nodes, *model, discretize_options(cfg));
    report_discretization(d, in, out);
    write_nodeset_csv(*d.nodes, dir / "nodes.csv");
    if (dis->parsed()) {
      write_cells_vtk(scni_cells(*d.nodes, in.nodes.bounds()), dir / "cells.vtk");
      return 0;
    }
    const Materials mats = materials(cfg);
    BvpSpec spec = bvp(cfg, in.nodes.bounds());
    if (demo->parsed()) {
      const DemoOptions o = demo_options(cfg);
      spec = compression_shear(in.nodes.bounds(), o.top_displacement);
      write_pgm(in.image, dir / "image.pgm");
    }
    const ModelRun run = solve_model(d.nodes, d.score, mats, spec, solve_options(cfg));
    write_model_outputs(dir, run, out);
    if (demo->parsed()) {
      const double ratio = strain_jump_ratio(run, mats, 0.5 * in.nodes.voxel_size);
      json summary = {{"nodes", d.nodes->size()}, {"dof", run.run.system.F.size()}, {"strain_jump_ratio", ratio},
                      {"stiffness_ratio", mats.inclusion.E / mats.matrix.E}};
      std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
      out << "demo2d: matrix/inclusion strain ratio across interfaces " << ratio << "\n";
    }
    out << "done in " << seconds_since(t0) << " s\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace svmrk::cli
