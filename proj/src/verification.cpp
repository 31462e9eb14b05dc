#include "svmrk/verification.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace svmrk {

namespace {

double poly_b1(double x) { return 12.5 * x * x - 2.5 * x * x * x + 0.125 * x * x * x * x; }
double poly_b2(double x) { return (12.5 / 3.0) * x * x * x - 0.625 * std::pow(x, 4) + 0.025 * std::pow(x, 5); }

}  // namespace

double rod_body_force(int rod_case, double x) {
  if (rod_case == 1) return 0.0;
  if (rod_case == 2) return 25.0 * x - 7.5 * x * x + 0.5 * x * x * x;
  throw Error("rod case must be 1 or 2");
}

RodSample rod_exact(int rod_case, double x, const RodConstants& k) {
  if (rod_case != 1 && rod_case != 2) throw Error("rod case must be 1 or 2");
  const bool two = rod_case == 2;
  // Antiderivatives of the body force: B1' = b, B2' = B1, both zero at x = 0.
  auto B1 = [two](double s) { return two ? poly_b1(s) : 0.0; };
  auto B2 = [two](double s) { return two ? poly_b2(s) : 0.0; };
  const double xi = k.interface, L = k.length;
  const double sigma0 = (1.0 + B2(xi) / k.E1 + (B2(L) - B2(xi)) / k.E2) / (xi / k.E1 + (L - xi) / k.E2);
  RodSample s;
  s.stress = sigma0 - B1(x);
  if (x <= xi) {
    s.u = (sigma0 * x - B2(x)) / k.E1;
    s.strain = s.stress / k.E1;
  } else {
    const double u5 = (sigma0 * xi - B2(xi)) / k.E1;
    s.u = u5 + (sigma0 * (x - xi) - (B2(x) - B2(xi))) / k.E2;
    s.strain = s.stress / k.E2;
  }
  return s;
}

Materials InclusionConstants::materials() const {
  Materials m;
  m.inclusion = Material::from_lame(lambda1, mu1, eigenstrain);
  m.matrix = Material::from_lame(lambda2, mu2, 0.0);
  return m;
}

RadialSample inclusion_exact(double r, const InclusionConstants& k) {
  if (r < 0.0) throw Error("radius must be non-negative");
  const double A = k.interior_slope(), B = k.exterior_coefficient();
  RadialSample s;
  if (r <= k.radius) {
    s.u_r = A * r;
    s.e_rr = s.e_tt = A;
    s.s_rr = 2.0 * (k.lambda1 + k.mu1) * (A - k.eigenstrain);
  } else {
    s.u_r = B / r;
    s.e_rr = -B / (r * r);
    s.e_tt = B / (r * r);
    s.s_rr = -2.0 * k.mu2 * B / (r * r);
  }
  return s;
}

ExactSolution rod_solution(int rod_case, const RodConstants& k) {
  ExactSolution ex;
  ex.id = rod_case == 1 ? "rod-case1" : "rod-case2";
  ex.mode = Analysis::Bar1D;
  ex.domain.dim = 1;
  ex.domain.lo = Vec2(0.0, 0.0);
  ex.domain.hi = Vec2(k.length, 0.0);
  ex.materials.inclusion = Material{k.E1, 0.0, 0.0};
  ex.materials.matrix = Material{k.E2, 0.0, 0.0};
  ex.breaks = {k.interface};
  ex.eval = [rod_case, k](const Vec2& x) {
    const RodSample s = rod_exact(rod_case, x(0), k);
    ExactSample e;
    e.u = Vec2(s.u, 0.0);
    e.strain(0) = s.strain;
    e.tag = x(0) <= k.interface ? 1 : -1;
    return e;
  };
  return ex;
}

ExactSolution inclusion_solution(const InclusionConstants& k) {
  ExactSolution ex;
  ex.id = "inclusion";
  ex.mode = Analysis::PlaneStrain;
  ex.domain.dim = 2;
  ex.domain.lo = Vec2::Zero();
  ex.domain.hi = Vec2(k.side, k.side);
  ex.materials = k.materials();
  ex.breaks = {k.radius};
  ex.eval = [k](const Vec2& x) {
    const double r = x.norm();
    const RadialSample s = inclusion_exact(r, k);
    ExactSample e;
    e.tag = r <= k.radius ? 1 : -1;
    if (r == 0.0) {
      e.strain << s.e_rr, s.e_rr, 0.0;
      return e;
    }
    const double c = x(0) / r, sn = x(1) / r;
    e.u = s.u_r * Vec2(c, sn);
    e.strain << s.e_rr * c * c + s.e_tt * sn * sn, s.e_rr * sn * sn + s.e_tt * c * c, 2.0 * (s.e_rr - s.e_tt) * sn * c;
    return e;
  };
  return ex;
}

std::vector<QuadPoint> norm_quadrature(const ExactSolution& exact, std::array<int, 2> cells, int points) {
  std::vector<QuadPoint> out;
  const Domain& d = exact.domain;
  if (exact.dim() == 1) {
    std::vector<double> cuts;
    for (int i = 0; i <= cells[0]; ++i) cuts.push_back(d.lo(0) + (d.hi(0) - d.lo(0)) * i / cells[0]);
    for (double b : exact.breaks) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    const double tol = 1e-12 * (d.hi(0) - d.lo(0));
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [tol](double a, double b) { return b - a < tol; }), cuts.end());
    const auto [xg, wg] = gauss_legendre(points);
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double a = cuts[s], b = cuts[s + 1], half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (int q = 0; q < points; ++q) {
        QuadPoint p;
        p.x = Vec2(mid + half * xg[q], 0.0);
        p.w = half * wg[q];
        out.push_back(p);
      }
    }
  } else {
    out = gauss_scheme(d, cells, points).points;
  }
  for (auto& p : out) p.tag = exact.eval(p.x).tag;
  return out;
}

ErrorReport error_norms(const SolutionField& sol, const ExactSolution& exact, const std::vector<QuadPoint>& points) {
  if (sol.dim != exact.dim()) throw Error("solution and exact solution dimensions differ");
  struct Terms {
    double du = 0.0, uu = 0.0, de = 0.0, ee = 0.0;
  };
  std::vector<Terms> terms(points.size());
  const Eigen::Matrix3d Cin = material_matrix(exact.materials.inclusion, exact.mode);
  const Eigen::Matrix3d Cmx = material_matrix(exact.materials.matrix, exact.mode);
  detail::for_each_index(static_cast<long>(points.size()), Exec::Parallel, [&](long k) {
    const QuadPoint& p = points[k];
    const ExactSample ex = exact.eval(p.x);
    const FieldSample fh = sample_field(sol, p.x, ex.tag, exact.materials);
    const Eigen::Matrix3d& C = ex.tag > 0 ? Cin : Cmx;
    const Eigen::Vector3d e = ex.strain - fh.strain;
    terms[k] = {p.w * (ex.u - fh.u).squaredNorm(), p.w * ex.u.squaredNorm(), p.w * e.dot(C * e),
                p.w * ex.strain.dot(C * ex.strain)};
  }, 256);
  Terms t;
  for (const auto& s : terms) {
    t.du += s.du;
    t.uu += s.uu;
    t.de += s.de;
    t.ee += s.ee;
  }
  if (!(t.uu > 0.0) || !(t.ee > 0.0)) throw Error("exact solution has zero norm");
  ErrorReport r;
  r.nodes = static_cast<int>(sol.shapes->nodes().size());
  r.dof = static_cast<int>(sol.coeffs.size());
  r.h = sol.shapes->nodes().spacing;
  r.l2 = std::sqrt(t.du / t.uu);
  r.energy = std::sqrt(std::max(0.0, t.de) / t.ee);
  return r;
}

RateFit fit_rate(const std::vector<double>& h, const std::vector<double>& error) {
  if (h.size() != error.size() || h.size() < 2) throw Error("rate fit needs at least two levels");
  const std::size_t n = h.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h[i] > 0.0) || !(error[i] > 0.0)) throw Error("rate fit needs positive h and errors");
    lx[i] = std::log(h[i]);
    ly[i] = std::log(error[i]);
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("rate fit needs distinct h values");
  RateFit fit;
  fit.rate = sxy / sxx;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - (my + fit.rate * (lx[i] - mx));
      ssr += r * r;
    }
    // Two-sided 97.5% Student-t quantiles, df = 1..12.
    static const double t975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                  2.365,  2.306, 2.262, 2.228, 2.201, 2.179};
    const std::size_t df = n - 2;
    const double t = df <= 12 ? t975[df - 1] : 1.96;
    fit.half_width = t * std::sqrt(ssr / df / sxx);
  }
  return fit;
}

Benchmark parse_benchmark(const std::string& id) {
  if (id == "rod-case1") return Benchmark::RodCase1;
  if (id == "rod-case2") return Benchmark::RodCase2;
  if (id == "inclusion") return Benchmark::Inclusion;
  throw Error("unknown benchmark '" + id + "' (expected rod-case1|rod-case2|inclusion)");
}

const char* to_string(Benchmark b) {
  switch (b) {
    case Benchmark::RodCase1: return "rod-case1";
    case Benchmark::RodCase2: return "rod-case2";
    case Benchmark::Inclusion: return "inclusion";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "rkpm" || name == "rk") return Method::Rkpm;
  if (name == "imrkpm" || name == "imrk") return Method::Imrk;
  throw Error("unknown method '" + name + "' (expected rkpm|imrkpm)");
}

const char* to_string(Method m) { return m == Method::Rkpm ? "rkpm" : "imrkpm"; }

std::vector<int> default_levels(Benchmark b) {
  if (b == Benchmark::Inclusion) return {14, 20, 28, 40};
  return {11, 21, 41, 81};
}

Discretization build_benchmark(const StudyOptions& opts, int level) {
  opts.basis.validate();
  opts.bulk_kernel.validate();
  opts.interface_kernel.validate();
  Discretization disc;
  auto nodes = std::make_shared<NodeSet>();
  const double support = opts.bulk_kernel.support;
  if (opts.problem == Benchmark::Inclusion) {
    const InclusionConstants k;
    disc.exact = inclusion_solution(k);
    if (level < 4) throw Error("inclusion level needs at least 4 nodes per axis");
    const NodeSet grid = grid_nodes(disc.exact.domain, {level, level}, support);
    const double h = grid.spacing;
    nodes->dim = 2;
    nodes->spacing = h;
    const int m = std::max(2, static_cast<int>(std::ceil(0.5 * std::numbers::pi * k.radius / (0.75 * h))));
    for (int i = 0; i <= m; ++i) {
      const double t = 0.5 * std::numbers::pi * i / m;
      Vec2 dir(std::cos(t), std::sin(t));
      if (i == 0) dir = Vec2(1.0, 0.0);
      if (i == m) dir = Vec2(0.0, 1.0);
      nodes->add(k.radius * dir, NodeRole::Interface, 0.0, support * h, -dir);
    }
    for (const Vec2& p : grid.x) {
      const double s = k.radius - p.norm();
      if (std::abs(s) < h / 3.0) continue;
      nodes->add(p, role_from_score(s), s, support * h);
    }
    disc.score = std::make_shared<AnalyticScore>(AnalyticScore::circles({Circle{Vec2::Zero(), k.radius}}));
    disc.cells = {level - 1, level - 1};
    disc.bvp.mode = Analysis::PlaneStrain;
    disc.bvp.domain = disc.exact.domain;
    auto ex = disc.exact.eval;
    disc.bvp.dirichlet.push_back(
        {{Side::Left, Side::Right, Side::Bottom, Side::Top}, [ex](const Vec2& x) { return ex(x).u; }, {true, true}});
  } else {
    const int rod_case = opts.problem == Benchmark::RodCase1 ? 1 : 2;
    const RodConstants k;
    disc.exact = rod_solution(rod_case, k);
    if (level < 3 || level % 2 == 0) throw Error("rod level needs an odd node count >= 3");
    *nodes = grid_nodes(disc.exact.domain, {level, 1}, support);
    const double h = nodes->spacing;
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      const double s = k.interface - nodes->x[i](0);
      if (std::abs(s) < 1e-9 * h) {
        nodes->x[i](0) = k.interface;
        nodes->role[i] = NodeRole::Interface;
        nodes->score[i] = 0.0;
        nodes->normal[i] = Vec2(-1.0, 0.0);
      } else {
        nodes->role[i] = role_from_score(s);
        nodes->score[i] = s;
      }
    }
    disc.score = std::make_shared<AnalyticScore>(AnalyticScore::affine(Vec2(-1.0, 0.0), k.interface));
    disc.cells = {level - 1, 1};
    disc.bvp.mode = Analysis::Bar1D;
    disc.bvp.domain = disc.exact.domain;
    disc.bvp.dirichlet.push_back({{Side::Left}, [](const Vec2&) { return Vec2::Zero(); }, {true, false}});
    disc.bvp.dirichlet.push_back({{Side::Right}, [](const Vec2&) { return Vec2(1.0, 0.0); }, {true, false}});
    if (rod_case == 2) {
      disc.bvp.body_force = [](const Vec2& x) { return Vec2(rod_body_force(2, x(0)), 0.0); };
    }
  }
  nodes->validate();
  disc.nodes = nodes;
  if (opts.method == Method::Rkpm) {
    disc.shapes = std::make_shared<RkShapes>(*nodes, opts.basis, opts.bulk_kernel);
  } else {
    ImRkOptions im{opts.basis, opts.bulk_kernel, opts.interface_kernel, opts.c_multiplier, opts.gradient_layer};
    disc.shapes = std::make_shared<ImRkShapes>(*nodes, im, disc.score);
  }
  if (opts.integration == Integration::Gauss) {
    disc.quadrature = gauss_quadrature(disc.exact.domain, disc.cells, opts.gauss_points, *disc.score);
  } else {
    disc.quadrature = scni_quadrature(*nodes, disc.exact.domain);
  }
  return disc;
}

LevelResult solve_level(const Discretization& disc, const StudyOptions& opts) {
  LevelResult res;
  AssemblyOptions ao;
  ao.beta0 = opts.beta0;
  ao.exec = opts.exec;
  res.run = solve_elasticity(disc.shapes, disc.quadrature, disc.exact.materials, disc.bvp, ao);
  res.error = error_norms(res.run.solution, disc.exact, norm_quadrature(disc.exact, disc.cells));
  return res;
}

StudyResult convergence_study(const StudyOptions& opts) {
  StudyResult out;
  out.options = opts;
  if (out.options.levels.empty()) out.options.levels = default_levels(opts.problem);
  if (out.options.levels.size() < 3) throw Error("convergence study needs at least three levels");
  std::vector<double> h, l2, en;
  for (int level : out.options.levels) {
    const Discretization disc = build_benchmark(out.options, level);
    const LevelResult r = solve_level(disc, out.options);
    out.levels.push_back(r.error);
    h.push_back(r.error.h);
    l2.push_back(r.error.l2);
    en.push_back(r.error.energy);
  }
  out.l2 = fit_rate(h, l2);
  out.energy = fit_rate(h, en);
  return out;
}

void write_study_csv(std::ostream& out, const std::vector<StudyResult>& studies) {
  out << "problem,method,integration,kernel,level,nodes,dof,h,norm,error,rate,rate_ci95\n";
  out << std::setprecision(10);
  for (const auto& s : studies) {
    const auto& o = s.options;
    const std::string kernel =
        o.method == Method::Imrk ? to_string(o.interface_kernel.kind) : to_string(o.bulk_kernel.kind);
    const std::string head = std::string(to_string(o.problem)) + "," + to_string(o.method) + "," +
                             to_string(o.integration) + "," + kernel + ",";
    for (std::size_t i = 0; i < s.levels.size(); ++i) {
      const auto& e = s.levels[i];
      const int level = i < o.levels.size() ? o.levels[i] : e.nodes;
      for (int k = 0; k < 2; ++k) {
        out << head << level << "," << e.nodes << "," << e.dof << "," << e.h << "," << (k ? "energy" : "l2")
            << "," << (k ? e.energy : e.l2) << ",,\n";
      }
    }
    out << head << ",,,," << "l2,," << s.l2.rate << "," << s.l2.half_width << "\n";
    out << head << ",,,," << "energy,," << s.energy.rate << "," << s.energy.half_width << "\n";
  }
}

BandError interface_band_error(const SolutionField& sol, const ExactSolution& exact, double width, int samples) {
  if (samples < 2) throw Error("band sampling needs at least two samples");
  BandError b;
  const bool rod = exact.dim() == 1;
  const double center = exact.breaks.at(0);
  for (int i = 0; i < samples; ++i) {
    const double t = center - width + 2.0 * width * i / (samples - 1);
    if (std::abs(t - center) < 1e-9 * width) continue;
    const Vec2 x = rod ? Vec2(t, 0.0) : Vec2(t / std::sqrt(2.0), t / std::sqrt(2.0));
    if (!exact.domain.contains(x)) continue;
    const ExactSample ex = exact.eval(x);
    const FieldSample fh = sample_field(sol, x, ex.tag, exact.materials);
    const Eigen::Vector3d d = fh.strain - ex.strain;
    if (rod) {
      b.radial = std::max(b.radial, std::abs(d(0)));
    } else {
      // Polar components along the 45-degree ray.
      const double mean = 0.5 * (d(0) + d(1)), shear = 0.5 * d(2);
      b.radial = std::max(b.radial, std::abs(mean + shear));
      b.hoop = std::max(b.hoop, std::abs(mean - shear));
    }
  }
  return b;
}

}  // namespace svmrk
