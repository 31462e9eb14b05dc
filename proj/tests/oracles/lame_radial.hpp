#pragma once

// Two-phase axisymmetric plane-strain disk with in-plane dilatational eigenstrain in the
// core, solved by linear finite elements in r on a graded mesh. The disk is large and its
// rim traction-free, approximating the unbounded matrix.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <vector>

namespace oracle {

struct RadialPhase {
  double lambda, mu, eigenstrain;
};

struct RadialSolution {
  std::vector<double> r, u;

  double at(double x) const {
    std::size_t k = 1;
    while (k + 1 < r.size() && r[k] < x) ++k;
    const double t = (x - r[k - 1]) / (r[k] - r[k - 1]);
    return (1.0 - t) * u[k - 1] + t * u[k];
  }
};

inline RadialSolution solve_radial(const RadialPhase& core, const RadialPhase& shell, double R, double outer,
                                   int elements_core, int elements_shell) {
  RadialSolution s;
  for (int i = 0; i <= elements_core; ++i) s.r.push_back(R * i / elements_core);
  for (int i = 1; i <= elements_shell; ++i) s.r.push_back(R * std::pow(outer / R, double(i) / elements_shell));
  const int n = static_cast<int>(s.r.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int e = 0; e + 1 < n; ++e) {
    const double r0 = s.r[e], r1 = s.r[e + 1], L = r1 - r0;
    const RadialPhase& p = r1 <= R * (1.0 + 1e-12) ? core : shell;
    for (double g : gp) {
      const double r = r0 + g * L, w = 0.5 * L * r;
      // Strain rows (e_rr, e_tt) for the two nodal values.
      const double B[2][2] = {{-1.0 / L, 1.0 / L}, {(1.0 - g) / r, g / r}};
      const double D[2][2] = {{p.lambda + 2 * p.mu, p.lambda}, {p.lambda, p.lambda + 2 * p.mu}};
      const double s0 = (2.0 * p.lambda + 2.0 * p.mu) * p.eigenstrain;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          double k = 0.0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) k += B[i][a] * D[i][j] * B[j][b];
          trip.emplace_back(e + a, e + b, w * k);
        }
        f(e + a) += w * (B[0][a] + B[1][a]) * s0;
      }
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  // u(0) = 0
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
      if (it.row() == 0 || it.col() == 0) it.valueRef() = it.row() == it.col() ? 1.0 : 0.0;
  f(0) = 0.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
  const Eigen::VectorXd u = ldlt.solve(f);
  s.u.assign(u.data(), u.data() + n);
  return s;
}

}  // namespace oracle
