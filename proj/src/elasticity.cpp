#include "svmrk/elasticity.hpp"

#include "parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <omp.h>

namespace svmrk {

Material Material::from_lame(double lambda, double mu, double eigenstrain) {
  if (!(mu > 0.0)) throw Error("shear modulus must be positive");
  Material m;
  m.nu = lambda / (2.0 * (lambda + mu));
  m.E = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
  m.eigenstrain = eigenstrain;
  return m;
}

void Material::validate() const {
  if (!(E > 0.0)) throw Error("Young's modulus must be positive");
  if (!(nu > -1.0 && nu < 0.5)) throw Error("Poisson ratio must lie in (-1, 0.5)");
}

Eigen::Matrix3d material_matrix(const Material& m, Analysis mode) {
  m.validate();
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  if (mode == Analysis::Bar1D) {
    C(0, 0) = m.E;
    return C;
  }
  const double l = m.lambda(), mu = m.mu();
  C << l + 2 * mu, l, 0, l, l + 2 * mu, 0, 0, 0, mu;
  return C;
}

double Materials::max_modulus(Analysis mode) const {
  auto axial = [mode](const Material& m) { return mode == Analysis::Bar1D ? m.E : m.lambda() + 2.0 * m.mu(); };
  return std::max(axial(inclusion), axial(matrix));
}

void BvpSpec::validate() const {
  if (domain.dim != dim()) throw Error("domain dimension does not match the analysis mode");
  for (const auto& d : dirichlet) {
    if (!d.value) throw Error("Dirichlet segment without a value function");
    for (const auto& n : neumann) {
      for (Side a : d.sides) {
        if (std::find(n.sides.begin(), n.sides.end(), a) != n.sides.end()) {
          throw Error(std::string("side '") + to_string(a) + "' is both Dirichlet and Neumann");
        }
      }
    }
  }
  for (const auto& n : neumann) {
    if (!n.traction) throw Error("Neumann segment without a traction function");
  }
}

Integration parse_integration(const std::string& name) {
  if (name == "gi" || name == "gauss") return Integration::Gauss;
  if (name == "scni") return Integration::Scni;
  throw Error("unknown integration '" + name + "' (expected gi|scni)");
}

const char* to_string(Integration i) { return i == Integration::Gauss ? "gi" : "scni"; }

DomainQuadrature gauss_quadrature(const Domain& domain, std::array<int, 2> cells, int ppa, const ScoreField& tags) {
  DomainQuadrature q;
  q.kind = Integration::Gauss;
  q.gauss = gauss_scheme(domain, cells, ppa);
  tag_points(q.gauss, tags);
  q.boundary = gauss_boundary(domain, cells, ppa);
  for (auto& b : q.boundary) b.tag = tags.value(b.x) >= 0.0 ? 1 : -1;
  return q;
}

DomainQuadrature scni_quadrature(const NodeSet& nodes, const Domain& domain, double eps_factor) {
  DomainQuadrature q;
  q.kind = Integration::Scni;
  q.cells = scni_cells(nodes, domain, eps_factor);
  q.boundary = q.cells.boundary_points();
  return q;
}

int BlockPattern::find(int row, int col) const {
  const auto b = cols.begin() + row_start[row], e = cols.begin() + row_start[row + 1];
  const auto it = std::lower_bound(b, e, col);
  return (it != e && *it == col) ? static_cast<int>(it - cols.begin()) : -1;
}

BlockPattern support_pattern(const NodeSet& nodes) {
  std::vector<double> reach(nodes.size());
  double amax = 0.0;
  for (double a : nodes.support) amax = std::max(amax, a);
  for (std::size_t i = 0; i < nodes.size(); ++i) reach[i] = nodes.support[i] + amax;
  const NeighborGrid grid(nodes.x, reach, nodes.dim);
  BlockPattern p;
  p.dim = nodes.dim;
  p.row_start.assign(1, 0);
  std::vector<int> cand;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    grid.query(nodes.x[i], cand);
    for (int j : cand) {
      bool overlap = true;
      for (int k = 0; k < nodes.dim; ++k) {
        overlap = overlap && std::abs(nodes.x[i](k) - nodes.x[j](k)) < nodes.support[i] + nodes.support[j];
      }
      if (overlap) p.cols.push_back(j);
    }
    p.row_start.push_back(static_cast<int>(p.cols.size()));
  }
  return p;
}

namespace {

// One integration site: weight, tag, and the gradient rows entering B.
struct SiteEval {
  double w = 0.0;
  int tag = -1;
  Vec2 x = Vec2::Zero();
  std::vector<int> nodes;
  std::vector<Vec2> grad;
  std::vector<int> vnodes;    // support of the shape values at x (body force)
  std::vector<double> value;
};

// B_a^T C B_b for gradient rows ga, gb.
inline Eigen::Matrix2d block_product(const Vec2& ga, const Vec2& gb, const Eigen::Matrix3d& C, int dim) {
  Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
  if (dim == 1) {
    k(0, 0) = ga(0) * C(0, 0) * gb(0);
    return k;
  }
  Eigen::Matrix<double, 3, 2> Ba, Bb;
  Ba << ga(0), 0, 0, ga(1), ga(1), ga(0);
  Bb << gb(0), 0, 0, gb(1), gb(1), gb(0);
  return Ba.transpose() * C * Bb;
}

inline Eigen::Vector3d eigenstrain_vector(const Material& m, int dim) {
  return dim == 1 ? Eigen::Vector3d(m.eigenstrain, 0, 0) : Eigen::Vector3d(m.eigenstrain, m.eigenstrain, 0);
}

inline Vec2 bt_times(const Vec2& g, const Eigen::Vector3d& s, int dim) {
  if (dim == 1) return Vec2(g(0) * s(0), 0.0);
  return Vec2(g(0) * s(0) + g(1) * s(2), g(1) * s(1) + g(0) * s(2));
}

std::vector<SiteEval> evaluate_sites(const ShapeProvider& shapes, const DomainQuadrature& quad, bool need_values,
                                     Exec exec) {
  std::vector<SiteEval> sites;
  if (quad.kind == Integration::Gauss) {
    const auto& pts = quad.gauss.points;
    sites.resize(pts.size());
    detail::for_each_index(static_cast<long>(pts.size()), exec, [&](long k) {
      thread_local ShapeEval e;
      shapes.evaluate(pts[k].x, true, pts[k].tag, e);
      SiteEval& s = sites[k];
      s.w = pts[k].w;
      s.tag = pts[k].tag;
      s.x = pts[k].x;
      s.nodes = e.nodes;
      s.grad = e.grad;
      if (need_values) {
        s.vnodes = e.nodes;
        s.value = e.value;
      }
    }, 64);
  } else {
    const auto& cells = quad.cells.cells;
    sites.resize(cells.size());
    detail::for_each_index(static_cast<long>(cells.size()), exec, [&](long k) {
      CellGradient g;
      smoothed_gradient(shapes, cells[k], g);
      SiteEval& s = sites[k];
      s.w = cells[k].area;
      s.tag = cells[k].tag;
      s.x = cells[k].site.x;
      s.nodes = std::move(g.nodes);
      s.grad = std::move(g.b);
      if (need_values) {
        thread_local ShapeEval e;
        shapes.evaluate(s.x, false, s.tag, e);
        s.vnodes = e.nodes;
        s.value = e.value;
      }
    }, 32);
  }
  return sites;
}

BlockPattern site_pattern(const std::vector<SiteEval>& sites, std::size_t nnodes, int dim) {
  // Sites containing each node.
  std::vector<int> cnt(nnodes + 1, 0);
  for (const auto& s : sites) {
    for (int n : s.nodes) ++cnt[n + 1];
  }
  for (std::size_t i = 0; i < nnodes; ++i) cnt[i + 1] += cnt[i];
  std::vector<int> members(cnt.back());
  std::vector<int> fill(cnt.begin(), cnt.end() - 1);
  for (std::size_t s = 0; s < sites.size(); ++s) {
    for (int n : sites[s].nodes) members[fill[n]++] = static_cast<int>(s);
  }
  BlockPattern p;
  p.dim = dim;
  std::vector<std::vector<int>> rows(nnodes);
#pragma omp parallel
  {
    std::vector<int> mark(nnodes, -1);
#pragma omp for schedule(dynamic, 64)
    for (long i = 0; i < static_cast<long>(nnodes); ++i) {
      auto& row = rows[i];
      for (int k = cnt[i]; k < cnt[i + 1]; ++k) {
        for (int j : sites[members[k]].nodes) {
          if (mark[j] != i) {
            mark[j] = static_cast<int>(i);
            row.push_back(j);
          }
        }
      }
      if (row.empty()) row.push_back(static_cast<int>(i));
      std::sort(row.begin(), row.end());
    }
  }
  p.row_start.assign(1, 0);
  for (auto& r : rows) {
    p.cols.insert(p.cols.end(), r.begin(), r.end());
    p.row_start.push_back(static_cast<int>(p.cols.size()));
  }
  return p;
}

Eigen::SparseMatrix<double> to_sparse(const BlockPattern& p, const std::vector<double>& vals) {
  const int dim = p.dim, bs = dim * dim;
  const int nn = static_cast<int>(p.row_start.size()) - 1;
  const int n = nn * dim;
  Eigen::SparseMatrix<double> K(n, n);
  K.resizeNonZeros(static_cast<Eigen::Index>(p.cols.size()) * bs);
  int* outer = K.outerIndexPtr();
  int* inner = K.innerIndexPtr();
  double* v = K.valuePtr();
  int pos = 0;
  // The pattern is symmetric, so column J lists the same node blocks as row J.
  for (int J = 0; J < nn; ++J) {
    for (int j = 0; j < dim; ++j) {
      outer[dim * J + j] = pos;
      for (int k = p.row_start[J]; k < p.row_start[J + 1]; ++k) {
        const int I = p.cols[k];
        const int b = p.find(I, J);
        for (int i = 0; i < dim; ++i) {
          inner[pos] = dim * I + i;
          v[pos] = vals[static_cast<std::size_t>(b) * bs + i * dim + j];
          ++pos;
        }
      }
    }
  }
  outer[n] = pos;
  return K;
}

bool on_sides(const std::vector<Side>& sides, Side s) { return std::find(sides.begin(), sides.end(), s) != sides.end(); }

}  // namespace

LinearSystem assemble(const ShapeProvider& shapes, const DomainQuadrature& quad, const Materials& mats,
                      const BvpSpec& bvp, const AssemblyOptions& opts) {
  bvp.validate();
  const int dim = bvp.dim();
  const NodeSet& ns = shapes.nodes();
  if (ns.dim != dim) throw Error("node set dimension does not match the analysis mode");
  const std::size_t nn = ns.size();
  const Eigen::Matrix3d Cin = material_matrix(mats.inclusion, bvp.mode);
  const Eigen::Matrix3d Cmx = material_matrix(mats.matrix, bvp.mode);

  const bool body = static_cast<bool>(bvp.body_force);
  const std::vector<SiteEval> sites = evaluate_sites(shapes, quad, body, opts.exec);
  for (const auto& s : sites) {
    if (s.tag != 1 && s.tag != -1) throw Error("untagged integration site");
  }
  const BlockPattern pat = site_pattern(sites, nn, dim);
  const int bs = dim * dim;

  auto accumulate = [&](long begin, long end, std::vector<double>& vals, Eigen::VectorXd& F) {
    for (long k = begin; k < end; ++k) {
      const SiteEval& s = sites[k];
      const Eigen::Matrix3d& C = s.tag > 0 ? Cin : Cmx;
      const Material& m = mats.of(s.tag);
      const Eigen::Vector3d ceps = C * eigenstrain_vector(m, dim);
      const Vec2 f = body ? bvp.body_force(s.x) : Vec2::Zero();
      if (body) {
        for (std::size_t a = 0; a < s.vnodes.size(); ++a) F.segment(dim * s.vnodes[a], dim) += s.w * s.value[a] * f.head(dim);
      }
      const std::size_t n = s.nodes.size();
      for (std::size_t a = 0; a < n; ++a) {
        const int I = s.nodes[a];
        if (m.eigenstrain != 0.0) F.segment(dim * I, dim) += s.w * bt_times(s.grad[a], ceps, dim).head(dim);
        for (std::size_t b = 0; b < n; ++b) {
          const int J = s.nodes[b];
          const int blk = pat.find(I, J);
          const Eigen::Matrix2d kab = s.w * block_product(s.grad[a], s.grad[b], C, dim);
          double* dst = vals.data() + static_cast<std::size_t>(blk) * bs;
          for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) dst[i * dim + j] += kab(i, j);
          }
        }
      }
    }
  };

  std::vector<double> vals(pat.blocks() * bs, 0.0);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nn) * dim);
  const long nsites = static_cast<long>(sites.size());
  if (opts.exec == Exec::Serial) {
    accumulate(0, nsites, vals, F);
  } else {
    // Contiguous site ranges per thread, merged in thread order.
    const int nt = std::max(1, omp_get_max_threads());
    std::vector<std::vector<double>> tv(nt);
    std::vector<Eigen::VectorXd> tf(nt);
#pragma omp parallel num_threads(nt)
    {
      const int t = omp_get_thread_num();
      const long begin = nsites * t / nt, end = nsites * (t + 1) / nt;
      if (t == 0) {
        accumulate(begin, end, vals, F);
      } else {
        tv[t].assign(vals.size(), 0.0);
        tf[t] = Eigen::VectorXd::Zero(F.size());
        accumulate(begin, end, tv[t], tf[t]);
      }
    }
    for (int t = 1; t < nt; ++t) {
      if (tv[t].empty()) continue;
      for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += tv[t][k];
      F += tf[t];
    }
  }

  // Neumann tractions.
  for (const auto& nm : bvp.neumann) {
    for (const auto& bp : quad.boundary) {
      if (!on_sides(nm.sides, bp.side)) continue;
      const ShapeEval e = shapes.evaluate(bp.x, false, bp.tag);
      const Vec2 t = nm.traction(bp.x);
      for (std::size_t a = 0; a < e.size(); ++a) F.segment(dim * e.nodes[a], dim) += bp.w * e.value[a] * t.head(dim);
    }
  }

  LinearSystem sys;
  sys.dim = dim;
  sys.K = to_sparse(pat, vals);
  sys.F = std::move(F);
  return sys;
}

void apply_dirichlet_nitsche(LinearSystem& sys, const ShapeProvider& shapes, const DomainQuadrature& quad,
                             const Materials& mats, const BvpSpec& bvp, const AssemblyOptions& opts) {
  if (!(opts.beta0 > 0.0)) throw Error("Nitsche penalty beta0 must be positive");
  const int dim = sys.dim;
  const double h = shapes.nodes().spacing;
  sys.beta = opts.beta0 * mats.max_modulus(bvp.mode) / h;
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& dir : bvp.dirichlet) {
    for (const auto& bp : quad.boundary) {
      if (!on_sides(dir.sides, bp.side)) continue;
      const ShapeEval e = shapes.evaluate(bp.x, true, bp.tag);
      const Material& m = mats.of(bp.tag);
      const Eigen::Matrix3d C = material_matrix(m, bvp.mode);
      // Traction operator N(n): Voigt stress -> traction.
      Eigen::Matrix<double, 2, 3> N = Eigen::Matrix<double, 2, 3>::Zero();
      if (dim == 1) {
        N(0, 0) = bp.n(0);
      } else {
        N << bp.n(0), 0, bp.n(1), 0, bp.n(1), bp.n(0);
      }
      Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
      for (int i = 0; i < dim; ++i) P(i, i) = dir.constrained[i] ? 1.0 : 0.0;
      const Vec2 ubar = dir.value(bp.x);
      const Vec2 t_eig = N * (C * eigenstrain_vector(m, dim));
      const std::size_t n = e.size();
      std::vector<Eigen::Matrix<double, 2, 2>> T(n);  // traction of each node's unit displacements
      for (std::size_t a = 0; a < n; ++a) {
        Eigen::Matrix<double, 3, 2> B = Eigen::Matrix<double, 3, 2>::Zero();
        const Vec2& g = e.grad[a];
        if (dim == 1) B(0, 0) = g(0);
        else B << g(0), 0, 0, g(1), g(1), g(0);
        T[a] = N * C * B;
      }
      for (std::size_t a = 0; a < n; ++a) {
        const int I = e.nodes[a];
        const Vec2 fa = bp.w * (-T[a].transpose() * P * ubar + sys.beta * e.value[a] * P * ubar +
                                -e.value[a] * P * t_eig);
        sys.F.segment(dim * I, dim) += fa.head(dim);
        for (std::size_t b = 0; b < n; ++b) {
          const int J = e.nodes[b];
          const Eigen::Matrix2d kab = bp.w * (-e.value[a] * P * T[b] - T[a].transpose() * P * e.value[b] +
                                              sys.beta * e.value[a] * e.value[b] * P);
          for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
              if (kab(i, j) != 0.0) trip.emplace_back(dim * I + i, dim * J + j, kab(i, j));
            }
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> Kn(sys.K.rows(), sys.K.cols());
  Kn.setFromTriplets(trip.begin(), trip.end());
  sys.K += Kn;
}

Eigen::VectorXd solve_system(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& F, SolveReport* report) {
  if (K.rows() != K.cols() || K.rows() != F.size()) throw Error("system dimensions do not match");
  SolveReport rep;
  const Eigen::Index n = K.rows();
  auto check_pivots = [](const Eigen::VectorXd& D) {
    const double dmax = D.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0)) throw Error("singular system: zero stiffness");
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (std::abs(D(i)) <= 1e-13 * dmax) {
        throw Error("singular system: pivot " + std::to_string(i) + " vanishes (missing boundary conditions?)");
      }
    }
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (D(i) < 0.0) {
        throw Error("indefinite system: negative pivot; increase the Nitsche penalty beta0");
      }
    }
  };
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
  Eigen::LDLT<Eigen::MatrixXd> dense;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> sparse;
  if (n < 3000) {
    rep.dense = true;
    dense.compute(Eigen::MatrixXd(K));
    if (dense.info() != Eigen::Success) throw Error("factorization failed");
    check_pivots(dense.vectorD());
    apply = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return dense.solve(r); };
  } else {
    sparse.compute(K);
    if (sparse.info() != Eigen::Success) throw Error("factorization failed");
    check_pivots(sparse.vectorD());
    apply = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return sparse.solve(r); };
  }
  Eigen::VectorXd d = apply(F);
  const double fn = std::max(F.norm(), std::numeric_limits<double>::min());
  double rel = (F - K * d).norm() / fn;
  while (rel > 1e-14 && rep.refinements < 3) {
    d += apply(F - K * d);
    ++rep.refinements;
    const double next = (F - K * d).norm() / fn;
    if (!(next < rel)) {
      rel = next;
      break;
    }
    rel = next;
  }
  rep.relative_residual = F.norm() > 0.0 ? rel : (K * d).norm();
  if (!(rep.relative_residual <= 1e-10)) {
    throw Error("linear solve residual " + std::to_string(rep.relative_residual) + " exceeds 1e-10");
  }
  if (report) *report = rep;
  return d;
}

Vec2 SolutionField::coefficient(int node) const {
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < dim; ++i) c(i) = coeffs(dim * node + i);
  return c;
}

namespace {

void finish_sample(FieldSample& s, const SolutionField& sol, const Materials& mats) {
  const Material& m = mats.of(s.tag);
  const Eigen::Matrix3d C = material_matrix(m, sol.mode);
  s.stress = C * (s.strain - eigenstrain_vector(m, sol.dim));
}

}  // namespace

FieldSample sample_field(const SolutionField& sol, const Vec2& x, int tag, const Materials& mats) {
  thread_local ShapeEval e;
  sol.shapes->evaluate(x, true, tag, e);
  FieldSample s;
  s.x = x;
  s.tag = tag;
  for (std::size_t a = 0; a < e.size(); ++a) {
    const Vec2 d = sol.coefficient(e.nodes[a]);
    s.u += e.value[a] * d;
    const Vec2& g = e.grad[a];
    s.strain(0) += g(0) * d(0);
    if (sol.dim == 2) {
      s.strain(1) += g(1) * d(1);
      s.strain(2) += g(1) * d(0) + g(0) * d(1);
    }
  }
  finish_sample(s, sol, mats);
  return s;
}

std::vector<FieldSample> recover_fields(const SolutionField& sol, const std::vector<Vec2>& points,
                                        const std::vector<int>& tags, const Materials& mats) {
  if (tags.size() != points.size()) throw Error("recover_fields: one tag per point required");
  std::vector<FieldSample> out(points.size());
  detail::for_each_index(static_cast<long>(points.size()), Exec::Parallel,
                         [&](long k) { out[k] = sample_field(sol, points[k], tags[k], mats); }, 64);
  return out;
}

std::vector<FieldSample> cell_fields(const SolutionField& sol, const SmoothingCellComplex& cells, const Materials& mats) {
  std::vector<FieldSample> out(cells.cells.size());
  detail::for_each_index(static_cast<long>(cells.cells.size()), Exec::Parallel, [&](long k) {
    const SmoothingCell& c = cells.cells[k];
    CellGradient g;
    smoothed_gradient(*sol.shapes, c, g);
    FieldSample s;
    s.x = c.site.x;
    s.tag = c.tag;
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
      const Vec2 d = sol.coefficient(g.nodes[a]);
      s.strain(0) += g.b[a](0) * d(0);
      if (sol.dim == 2) {
        s.strain(1) += g.b[a](1) * d(1);
        s.strain(2) += g.b[a](1) * d(0) + g.b[a](0) * d(1);
      }
    }
    thread_local ShapeEval e;
    sol.shapes->evaluate(c.site.x, false, c.tag, e);
    for (std::size_t a = 0; a < e.size(); ++a) s.u += e.value[a] * sol.coefficient(e.nodes[a]);
    finish_sample(s, sol, mats);
    out[k] = s;
  }, 32);
  return out;
}

ElasticRun solve_elasticity(std::shared_ptr<const ShapeProvider> shapes, const DomainQuadrature& quad,
                            const Materials& mats, const BvpSpec& bvp, const AssemblyOptions& opts) {
  if (!shapes) throw Error("solve_elasticity needs a shape provider");
  ElasticRun run;
  run.system = assemble(*shapes, quad, mats, bvp, opts);
  apply_dirichlet_nitsche(run.system, *shapes, quad, mats, bvp, opts);
  run.solution.dim = bvp.dim();
  run.solution.mode = bvp.mode;
  run.solution.shapes = std::move(shapes);
  run.solution.coeffs = solve_system(run.system.K, run.system.F, &run.solve);
  return run;
}

}  // namespace svmrk
