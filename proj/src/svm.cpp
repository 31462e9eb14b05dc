#include "svmrk/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <list>
#include <sstream>

namespace svmrk {

SvmKernelSpec SvmKernelSpec::gaussian_scale(double s) {
  if (!(s > 0.0)) throw Error("gaussian kernel scale must be positive");
  return gaussian(1.0 / (s * s));
}

void SvmKernelSpec::validate() const {
  if (kind == SvmKernelKind::Gaussian && !(gamma > 0.0)) throw Error("gaussian kernel requires gamma > 0");
  if (kind == SvmKernelKind::Polynomial && degree < 2) throw Error("polynomial kernel requires degree >= 2");
}

std::string SvmKernelSpec::describe() const {
  char buf[64];
  switch (kind) {
    case SvmKernelKind::Linear: return "linear";
    case SvmKernelKind::Polynomial: std::snprintf(buf, sizeof buf, "polynomial %d", degree); return buf;
    case SvmKernelKind::Gaussian: std::snprintf(buf, sizeof buf, "gaussian %.17g", gamma); return buf;
  }
  return "?";
}

SvmKernelKind parse_svm_kernel(const std::string& name) {
  if (name == "linear") return SvmKernelKind::Linear;
  if (name == "polynomial") return SvmKernelKind::Polynomial;
  if (name == "gaussian") return SvmKernelKind::Gaussian;
  throw Error("unknown svm kernel '" + name + "' (expected linear|polynomial|gaussian)");
}

namespace {

inline double kernel_from(const SvmKernelSpec& spec, double dot, double dist2) {
  switch (spec.kind) {
    case SvmKernelKind::Linear: return dot;
    case SvmKernelKind::Polynomial: return std::pow(1.0 + dot, spec.degree);
    case SvmKernelKind::Gaussian: return std::exp(-spec.gamma * dist2);
  }
  return 0.0;
}

inline double kernel2(const SvmKernelSpec& spec, const Vec2& a, const Vec2& b, int dim) {
  double dot = a(0) * b(0), d = a(0) - b(0), dist2 = d * d;
  if (dim == 2) {
    dot += a(1) * b(1);
    d = a(1) - b(1);
    dist2 += d * d;
  }
  return kernel_from(spec, dot, dist2);
}

// LRU cache of kernel rows K(x_i, .) under a byte budget.
class KernelRows {
 public:
  KernelRows(const std::vector<Vec2>& x, int dim, const SvmKernelSpec& spec, std::size_t budget, Exec exec)
      : x_(x), dim_(dim), spec_(spec), exec_(exec), l_(x.size()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, l_ * sizeof(double));
    const std::size_t cap = std::clamp<std::size_t>(budget / row_bytes, 2, l_);
    storage_.assign(cap, {});
    owner_.assign(cap, -1);
    slot_of_.assign(l_, -1);
    iter_of_.resize(cap);
    for (std::size_t s = 0; s < cap; ++s) iter_of_[s] = lru_.insert(lru_.end(), static_cast<int>(s));
  }

  const double* row(int i) {
    int s = slot_of_[i];
    if (s >= 0) {
      lru_.splice(lru_.begin(), lru_, iter_of_[s]);
      return storage_[s].data();
    }
    s = lru_.back();
    lru_.splice(lru_.begin(), lru_, iter_of_[s]);
    if (owner_[s] >= 0) slot_of_[owner_[s]] = -1;
    owner_[s] = i;
    slot_of_[i] = s;
    auto& r = storage_[s];
    r.resize(l_);
    const Vec2 xi = x_[i];
    const long n = static_cast<long>(l_);
    if (exec_ == Exec::Parallel) {
#pragma omp parallel for schedule(static)
      for (long t = 0; t < n; ++t) r[t] = kernel2(spec_, xi, x_[t], dim_);
    } else {
      for (long t = 0; t < n; ++t) r[t] = kernel2(spec_, xi, x_[t], dim_);
    }
    ++computed_;
    return r.data();
  }

  long computed() const { return computed_; }

 private:
  const std::vector<Vec2>& x_;
  int dim_;
  SvmKernelSpec spec_;
  Exec exec_;
  std::size_t l_;
  std::vector<std::vector<double>> storage_;
  std::vector<int> owner_;
  std::vector<int> slot_of_;
  std::list<int> lru_;
  std::vector<std::list<int>::iterator> iter_of_;
  long computed_ = 0;
};

}  // namespace

double kernel_eval(const SvmKernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error("kernel_eval: dimension mismatch");
  spec.validate();
  return kernel_from(spec, a.dot(b), (a - b).squaredNorm());
}

double kernel_eval(const SvmKernelSpec& spec, const Vec2& a, const Vec2& b) {
  return kernel2(spec, a, b, 2);
}

Vec2 Standardization::apply(const Vec2& x) const {
  Vec2 z = Vec2::Zero();
  for (int k = 0; k < dim; ++k) z(k) = (x(k) - mean(k)) / sd(k);
  return z;
}

Vec2 Standardization::invert(const Vec2& z) const {
  Vec2 x = Vec2::Zero();
  for (int k = 0; k < dim; ++k) x(k) = z(k) * sd(k) + mean(k);
  return x;
}

std::pair<LabeledDataset, Standardization> standardize(const LabeledDataset& data) {
  data.validate(false);
  Standardization s;
  s.dim = data.dim;
  const double l = static_cast<double>(data.size());
  for (int k = 0; k < data.dim; ++k) {
    double m = 0.0;
    for (const auto& p : data.points) m += p(k);
    m /= l;
    double v = 0.0;
    for (const auto& p : data.points) v += (p(k) - m) * (p(k) - m);
    v /= l;
    const double scale = std::max(1.0, std::abs(m));
    if (!(std::sqrt(v) > 1e-14 * scale)) {
      throw Error("zero-variance coordinate " + std::to_string(k) + " in training data");
    }
    s.mean(k) = m;
    s.sd(k) = std::sqrt(v);
  }
  LabeledDataset out = data;
  for (auto& p : out.points) p = s.apply(p);
  return {std::move(out), s};
}

DualSolution solve_dual(const std::vector<Vec2>& x, const std::vector<int>& y, int dim,
                        const TrainOptions& opts) {
  opts.kernel.validate();
  if (!(opts.C > 0.0)) throw Error("penalty C must be positive");
  if (!(opts.tol > 0.0)) throw Error("KKT tolerance must be positive");
  const int l = static_cast<int>(x.size());
  if (l < 2 || y.size() != x.size()) throw Error("dual solve needs at least two labeled points");
  const double C = opts.C;
  constexpr double kTau = 1e-12;

  KernelRows rows(x, dim, opts.kernel, opts.cache_bytes, opts.exec);
  std::vector<double> diag(l);
  for (int t = 0; t < l; ++t) diag[t] = kernel2(opts.kernel, x[t], x[t], dim);

  std::vector<double> alpha(l, 0.0), G(l, -1.0);
  auto upper = [&](int t) { return alpha[t] >= C; };
  auto lower = [&](int t) { return alpha[t] <= 0.0; };

  DualSolution sol;
  long iter = 0;
  double gap = 0.0;
  for (;;) {
    // i: maximal violation in I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    int i = -1;
    for (int t = 0; t < l; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -G[t] >= gmax) gmax = -G[t], i = t;
      } else {
        if (!lower(t) && G[t] >= gmax) gmax = G[t], i = t;
      }
    }
    // j: largest second-order decrease in I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    int j = -1;
    double best = std::numeric_limits<double>::infinity();
    const double* Ki = i >= 0 ? rows.row(i) : nullptr;
    for (int t = 0; t < l; ++t) {
      double grad_diff;
      if (y[t] == 1) {
        if (lower(t)) continue;
        gmax2 = std::max(gmax2, G[t]);
        grad_diff = gmax + G[t];
      } else {
        if (upper(t)) continue;
        gmax2 = std::max(gmax2, -G[t]);
        grad_diff = gmax - G[t];
      }
      if (grad_diff > 0.0 && Ki) {
        double quad = diag[i] + diag[t] - 2.0 * Ki[t];
        if (quad <= 0.0) quad = kTau;
        const double obj = -grad_diff * grad_diff / quad;
        if (obj <= best) best = obj, j = t;
      }
    }
    gap = gmax + gmax2;
    if (i < 0 || j < 0 || gap < opts.tol) break;
    if (iter >= opts.max_iter) {
      throw Error("SVM training did not converge within " + std::to_string(opts.max_iter) +
                  " pair updates (KKT gap " + std::to_string(gap) + ")");
    }
    ++iter;

    // Capacity is at least two rows, so fetching j never evicts the row of i.
    const double* Kj = rows.row(j);
    const double ai = alpha[i], aj = alpha[j];
    double quad = diag[i] + diag[j] - 2.0 * Ki[j];
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = diff;
      } else {
        if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) alpha[i] = C, alpha[j] = C - diff;
      } else {
        if (alpha[j] > C) alpha[j] = C, alpha[i] = C + diff;
      }
    } else {
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) alpha[i] = C, alpha[j] = sum - C;
      } else {
        if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) alpha[j] = C, alpha[i] = sum - C;
      } else {
        if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = sum;
      }
    }
    const double di = (alpha[i] - ai) * y[i], dj = (alpha[j] - aj) * y[j];
    for (int t = 0; t < l; ++t) G[t] += y[t] * (Ki[t] * di + Kj[t] * dj);
  }

  // Bias from free multipliers, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum = 0.0;
  std::size_t nfree = 0, nbound = 0;
  for (int t = 0; t < l; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      ++nbound;
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++nfree;
      sum += yg;
    }
  }
  const double rho = nfree > 0 ? sum / static_cast<double>(nfree) : 0.5 * (ub + lb);

  double obj = 0.0;
  for (int t = 0; t < l; ++t) obj += alpha[t] * (G[t] - 1.0);
  sol.alpha = std::move(alpha);
  sol.bias = -rho;
  sol.stats.iterations = iter;
  sol.stats.kkt_gap = gap;
  sol.stats.dual_objective = -0.5 * obj;  // G - 1 = Q alpha - 2e, so -(alpha'Q alpha/2 - e'alpha)
  sol.stats.free_sv = nfree;
  sol.stats.bounded_sv = nbound;
  return sol;
}

double dual_objective(const std::vector<Vec2>& x, const std::vector<int>& y, int dim,
                      const std::vector<double>& alpha, const SvmKernelSpec& kernel) {
  const std::size_t l = x.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    lin += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < l; ++j) {
      if (alpha[j] != 0.0) quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel2(kernel, x[i], x[j], dim);
    }
  }
  return lin - 0.5 * quad;
}

SvmModel train(const LabeledDataset& data, const TrainOptions& opts) {
  data.validate(true);
  auto [z, stdz] = standardize(data);
  DualSolution sol = solve_dual(z.points, z.labels, data.dim, opts);

  SvmModel m;
  m.dim = data.dim;
  m.kernel = opts.kernel;
  m.C = opts.C;
  m.standardization = stdz;
  m.bias = sol.bias;
  m.stats = sol.stats;
  const double prune = 1e-10 * opts.C;
  for (std::size_t t = 0; t < z.size(); ++t) {
    if (sol.alpha[t] > prune) {
      m.support_vectors.push_back(z.points[t]);
      m.sv_labels.push_back(z.labels[t]);
      m.alpha.push_back(sol.alpha[t]);
    }
  }
  return m;
}

std::vector<Vec2> SvmModel::support_vectors_physical() const {
  std::vector<Vec2> out;
  out.reserve(n());
  for (const auto& z : support_vectors) out.push_back(standardization.invert(z));
  return out;
}

void SvmModel::validate() const {
  kernel.validate();
  if (dim != 1 && dim != 2) throw Error("model dimension must be 1 or 2");
  if (sv_labels.size() != n() || alpha.size() != n()) throw Error("model arrays have inconsistent sizes");
  if (n() == 0) throw Error("model has no support vectors");
  for (int k = 0; k < dim; ++k) {
    if (!(standardization.sd(k) > 0.0)) throw Error("model standardization has non-positive sd");
  }
  for (std::size_t j = 0; j < n(); ++j) {
    if (!(alpha[j] > 0.0 && alpha[j] <= C * (1.0 + 1e-12))) throw Error("support-vector multiplier outside (0, C]");
    if (sv_labels[j] != 1 && sv_labels[j] != -1) throw Error("support-vector label must be +1 or -1");
  }
}

double score(const SvmModel& m, const Vec2& x) {
  const Vec2 z = m.standardization.apply(x);
  double s = m.bias;
  for (std::size_t j = 0; j < m.n(); ++j) s += m.alpha[j] * m.sv_labels[j] * kernel2(m.kernel, m.support_vectors[j], z, m.dim);
  return s;
}

std::pair<double, Vec2> score_gradient(const SvmModel& m, const Vec2& x) {
  const Vec2 z = m.standardization.apply(x);
  double s = m.bias;
  Vec2 gz = Vec2::Zero();
  for (std::size_t j = 0; j < m.n(); ++j) {
    const Vec2& xj = m.support_vectors[j];
    const double c = m.alpha[j] * m.sv_labels[j];
    double dot = xj(0) * z(0), dist2 = (xj(0) - z(0)) * (xj(0) - z(0));
    if (m.dim == 2) {
      dot += xj(1) * z(1);
      dist2 += (xj(1) - z(1)) * (xj(1) - z(1));
    }
    switch (m.kernel.kind) {
      case SvmKernelKind::Linear:
        s += c * dot;
        gz += c * xj;
        break;
      case SvmKernelKind::Polynomial: {
        const double q = m.kernel.degree;
        s += c * std::pow(1.0 + dot, q);
        gz += c * q * std::pow(1.0 + dot, q - 1.0) * xj;
        break;
      }
      case SvmKernelKind::Gaussian: {
        const double k = std::exp(-m.kernel.gamma * dist2);
        s += c * k;
        gz += c * k * (-2.0 * m.kernel.gamma) * (z - xj);
        break;
      }
    }
  }
  Vec2 g = Vec2::Zero();
  for (int k = 0; k < m.dim; ++k) g(k) = gz(k) / m.standardization.sd(k);
  return {s, g};
}

std::vector<double> score_batch(const SvmModel& m, const std::vector<Vec2>& xs, Exec exec) {
  std::vector<double> out(xs.size());
  const long n = static_cast<long>(xs.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) out[k] = score(m, xs[k]);
  } else {
    for (long k = 0; k < n; ++k) out[k] = score(m, xs[k]);
  }
  return out;
}

SlackReport slack_report(const SvmModel& m, const LabeledDataset& data) {
  SlackReport r;
  r.slack.resize(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    r.slack[t] = std::max(0.0, 1.0 - data.labels[t] * score(m, data.points[t]));
    if (r.slack[t] >= 1.0) ++r.misclassified;
  }
  return r;
}

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_model(const SvmModel& m, const std::filesystem::path& path) {
  m.validate();
  std::ofstream f(path);
  if (!f) throw Error("cannot write model file " + path.string());
  f << "svmrk-model 1\n";
  f << "dim " << m.dim << "\n";
  f << "kernel " << m.kernel.describe() << "\n";
  f << "C " << g17(m.C) << "\n";
  f << "mean " << g17(m.standardization.mean(0)) << " " << g17(m.standardization.mean(1)) << "\n";
  f << "sd " << g17(m.standardization.sd(0)) << " " << g17(m.standardization.sd(1)) << "\n";
  f << "bias " << g17(m.bias) << "\n";
  f << "sv " << m.n() << "\n";
  for (std::size_t j = 0; j < m.n(); ++j) {
    f << m.sv_labels[j] << " " << g17(m.alpha[j]) << " " << g17(m.support_vectors[j](0));
    if (m.dim == 2) f << " " << g17(m.support_vectors[j](1));
    f << "\n";
  }
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open model file " + path.string());
  auto expect = [&](const char* key) {
    std::string k;
    if (!(f >> k) || k != key) throw Error(std::string("model file: expected '") + key + "'");
  };
  SvmModel m;
  std::string magic;
  int version = 0;
  if (!(f >> magic >> version) || magic != "svmrk-model" || version != 1) throw Error("model file: bad magic");
  expect("dim");
  f >> m.dim;
  expect("kernel");
  std::string kind;
  f >> kind;
  m.kernel.kind = parse_svm_kernel(kind);
  if (m.kernel.kind == SvmKernelKind::Polynomial) f >> m.kernel.degree;
  if (m.kernel.kind == SvmKernelKind::Gaussian) f >> m.kernel.gamma;
  expect("C");
  f >> m.C;
  m.standardization.dim = m.dim;
  expect("mean");
  f >> m.standardization.mean(0) >> m.standardization.mean(1);
  expect("sd");
  f >> m.standardization.sd(0) >> m.standardization.sd(1);
  expect("bias");
  f >> m.bias;
  expect("sv");
  std::size_t n = 0;
  f >> n;
  if (!f) throw Error("model file: malformed header");
  for (std::size_t j = 0; j < n; ++j) {
    int y = 0;
    double a = 0.0;
    Vec2 z = Vec2::Zero();
    f >> y >> a >> z(0);
    if (m.dim == 2) f >> z(1);
    if (!f) throw Error("model file: truncated support-vector table");
    m.sv_labels.push_back(y);
    m.alpha.push_back(a);
    m.support_vectors.push_back(z);
  }
  m.validate();
  return m;
}

}  // namespace svmrk
