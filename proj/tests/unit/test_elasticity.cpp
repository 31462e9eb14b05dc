#include "svmrk/elasticity.hpp"
#include "svmrk/imrk.hpp"

#include "doctest.h"

#include <random>

using namespace svmrk;

namespace {

BvpSpec clamped_square(VectorFn u) {
  BvpSpec b;
  b.domain = Domain{};
  b.dirichlet.push_back({{Side::Left, Side::Right, Side::Bottom, Side::Top}, std::move(u), {true, true}});
  return b;
}

}  // namespace

TEST_CASE("plane-strain matrix from Lame constants") {
  const Material m{200.0, 0.3, 0.0};
  const Eigen::Matrix3d C = material_matrix(m, Analysis::PlaneStrain);
  const double l = m.lambda(), mu = m.mu();
  CHECK(C(0, 0) == doctest::Approx(l + 2 * mu));
  CHECK(C(0, 1) == doctest::Approx(l));
  CHECK(C(2, 2) == doctest::Approx(mu));
  CHECK(C(0, 2) == 0.0);
  const Material r = Material::from_lame(l, mu);
  CHECK(r.E == doctest::Approx(200.0));
  CHECK(r.nu == doctest::Approx(0.3));
  CHECK(material_matrix(m, Analysis::Bar1D)(0, 0) == 200.0);
  CHECK_THROWS_AS((Material{1.0, 0.5, 0.0}).validate(), Error);
}

TEST_CASE("boundary specification rejects overlapping sides") {
  BvpSpec b = clamped_square([](const Vec2&) { return Vec2::Zero(); });
  b.neumann.push_back({{Side::Top}, [](const Vec2&) { return Vec2::Zero(); }});
  CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("linear patch test with scni on a homogeneous square") {
  Domain d;
  NodeSet ns = grid_nodes(d, {9, 9}, 2.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  for (auto& x : ns.x)
    for (int k = 0; k < 2; ++k)
      if (x(k) > 0 && x(k) < 1) x(k) += u(rng) * ns.spacing;
  auto shapes = std::make_shared<RkShapes>(ns, BasisSpec{1}, RkKernelSpec{});
  Materials mats;
  mats.inclusion = mats.matrix = Material{100.0, 0.25, 0.0};
  auto exact = [](const Vec2& x) { return Vec2(0.01 * x(0) + 0.02 * x(1) + 0.003, -0.015 * x(0) + 0.005 * x(1)); };
  const ElasticRun run = solve_elasticity(shapes, scni_quadrature(ns, d), mats, clamped_square(exact));
  double err = 0.0;
  for (const Vec2& x : {Vec2(0.13, 0.71), Vec2(0.5, 0.5), Vec2(0.93, 0.07)}) {
    const FieldSample s = sample_field(run.solution, x, -1, mats);
    err = std::max(err, (s.u - exact(x)).norm());
    CHECK((s.strain - Eigen::Vector3d(0.01, 0.005, 0.005)).norm() < 1e-9);
  }
  CHECK(err < 1e-9);
  CHECK(run.solve.relative_residual < 1e-10);
  const Eigen::SparseMatrix<double> K = run.system.K;
  CHECK((Eigen::MatrixXd(K) - Eigen::MatrixXd(K).transpose()).norm() < 1e-10 * Eigen::MatrixXd(K).norm());
}

TEST_CASE("im-rk with scni reproduces a bimaterial laminate") {
  // Inclusion x < 0.5, matrix x > 0.5; u = (f(x), 0) with equal normal stress at the interface.
  Domain d;
  NodeSet ns = grid_nodes(d, {11, 11}, 2.0);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double v = 0.5 - ns.x[i](0);
    if (std::abs(v) < 1e-12) {
      ns.role[i] = NodeRole::Interface;
      ns.score[i] = 0.0;
      ns.normal[i] = Vec2(-1.0, 0.0);
    } else {
      ns.role[i] = role_from_score(v);
      ns.score[i] = v;
    }
  }
  auto score = std::make_shared<AnalyticScore>(AnalyticScore::affine(Vec2(-1.0, 0.0), 0.5));
  auto shapes = std::make_shared<ImRkShapes>(ns, ImRkOptions{}, score);
  Materials mats;
  mats.inclusion = Material{1000.0, 0.2, 0.0};
  mats.matrix = Material{100.0, 0.3, 0.0};
  const double k1 = mats.inclusion.lambda() + 2 * mats.inclusion.mu(), k2 = mats.matrix.lambda() + 2 * mats.matrix.mu();
  const double a1 = 0.01, a2 = a1 * k1 / k2;
  auto exact = [=](const Vec2& x) { return Vec2(x(0) <= 0.5 ? a1 * x(0) : a1 * 0.5 + a2 * (x(0) - 0.5), 0.0); };
  const ElasticRun run = solve_elasticity(shapes, scni_quadrature(ns, d), mats, clamped_square(exact));
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CHECK((run.solution.coefficient(static_cast<int>(i)) - exact(ns.x[i])).norm() < 1e-9);
  }
  const FieldSample in = sample_field(run.solution, Vec2(0.3, 0.4), 1, mats);
  const FieldSample out = sample_field(run.solution, Vec2(0.7, 0.4), -1, mats);
  CHECK(in.strain(0) == doctest::Approx(a1).epsilon(1e-7));
  CHECK(out.strain(0) == doctest::Approx(a2).epsilon(1e-7));
  CHECK(in.stress(0) == doctest::Approx(out.stress(0)).epsilon(1e-7));
}

TEST_CASE("eigenstrain in a free homogeneous body produces no stress") {
  Domain d;
  NodeSet ns = grid_nodes(d, {8, 8}, 2.0);
  auto shapes = std::make_shared<RkShapes>(ns, BasisSpec{1}, RkKernelSpec{});
  Materials mats;
  mats.inclusion = mats.matrix = Material{50.0, 0.2, 0.004};
  BvpSpec b;
  b.domain = d;
  // Pin the rigid motions through the exact free expansion u = eps* x on the left edge.
  b.dirichlet.push_back({{Side::Left}, [](const Vec2& x) { return Vec2(0.004 * x(0), 0.004 * x(1)); }, {true, true}});
  const ElasticRun run = solve_elasticity(shapes, scni_quadrature(ns, d), mats, b);
  const FieldSample s = sample_field(run.solution, Vec2(0.6, 0.3), -1, mats);
  CHECK(s.stress.norm() < 1e-8 * 50.0);
  CHECK((s.u - Vec2(0.004 * 0.6, 0.004 * 0.3)).norm() < 1e-10);
}

TEST_CASE("solver rejects singular and indefinite systems") {
  Eigen::SparseMatrix<double> K(2, 2);
  K.insert(0, 0) = 1.0;
  CHECK_THROWS_AS(solve_system(K, Eigen::VectorXd::Ones(2)), Error);
  Eigen::SparseMatrix<double> N(2, 2);
  N.insert(0, 0) = 1.0;
  N.insert(1, 1) = -1.0;
  try {
    solve_system(N, Eigen::VectorXd::Ones(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("beta0") != std::string::npos);
  }
}

TEST_CASE("block pattern lookup") {
  Domain d;
  const NodeSet ns = grid_nodes(d, {5, 5}, 2.0);
  const BlockPattern p = support_pattern(ns);
  CHECK(p.find(0, 0) >= 0);
  CHECK(p.find(0, 1) >= 0);
  CHECK(p.find(0, 24) < 0);
}
