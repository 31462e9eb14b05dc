#include "svmrk/interface.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

namespace svmrk {

namespace {

// Hash grid answering "is any point within r of p".
class RadiusIndex {
 public:
  RadiusIndex(const std::vector<Vec2>& pts, double r) : pts_(pts), r_(r) {
    for (std::size_t i = 0; i < pts.size(); ++i) bins_[key(cell(pts[i](0)), cell(pts[i](1)))].push_back(static_cast<int>(i));
  }
  bool any_within(const Vec2& p) const {
    const long cx = cell(p(0)), cy = cell(p(1));
    for (long j = cy - 1; j <= cy + 1; ++j) {
      for (long i = cx - 1; i <= cx + 1; ++i) {
        auto it = bins_.find(key(i, j));
        if (it == bins_.end()) continue;
        for (int k : it->second) {
          if ((pts_[k] - p).squaredNorm() <= r_ * r_) return true;
        }
      }
    }
    return false;
  }

 private:
  long cell(double v) const { return static_cast<long>(std::floor(v / r_)); }
  static long long key(long i, long j) { return (static_cast<long long>(i) << 32) ^ (j & 0xffffffffLL); }
  const std::vector<Vec2>& pts_;
  double r_;
  std::unordered_map<long long, std::vector<int>> bins_;
};

}  // namespace

std::vector<SearchPair> candidate_pairs(const NodeSet& nodes, const std::vector<Vec2>& svs, const ScoreField& field,
                                        double xi, double voxel) {
  if (!(xi > 0.0) || !(voxel > 0.0)) throw Error("candidate search needs positive xi and voxel size");
  const double r = xi * voxel;
  std::vector<int> masters, slaves;
  if (!svs.empty()) {
    RadiusIndex near(svs, r);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!near.any_within(nodes.x[i])) continue;
      (field.value(nodes.x[i]) >= 0.0 ? masters : slaves).push_back(static_cast<int>(i));
    }
  }
  if (masters.empty() || slaves.empty()) {
    throw Error("empty interface candidate set: no support vector separates the two phases");
  }
  std::vector<SearchPair> pairs;
  std::set<std::pair<int, int>> seen;
  const double tie = 1e-9 * voxel;
  for (int m : masters) {
    const Vec2& xm = nodes.x[m];
    double best = std::numeric_limits<double>::infinity();
    for (int s : slaves) best = std::min(best, (nodes.x[s] - xm).norm());
    for (int s : slaves) {
      const double d = (nodes.x[s] - xm).norm();
      if (d > best + tie || !seen.insert({m, s}).second) continue;
      SearchPair p;
      p.master = xm;
      p.slave = nodes.x[s];
      p.length = d;
      p.dir = (p.slave - p.master) / d;
      p.master_node = m;
      p.slave_node = s;
      pairs.push_back(p);
    }
  }
  return pairs;
}

std::optional<InterfaceNode> newton_search(const SearchPair& pair, const ScoreField& field, double tol,
                                           int max_iter) {
  if (!(pair.length > 0.0)) return std::nullopt;
  const double L = pair.length;
  auto at = [&](double d) { return field.sample(pair.master + d * pair.dir); };
  double lo = 0.0, hi = L;  // S(lo) >= 0 > S(hi) for a valid pair
  double d = 0.0;
  ScoreSample s = at(d);
  InterfaceNode node;
  int it = 0;
  while (std::abs(s.value) > tol) {
    if (it >= max_iter) return std::nullopt;
    ++it;
    const double slope = s.grad.dot(pair.dir);
    double next = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(slope) >= 1e-14) next = std::clamp(d - s.value / slope, -0.5 * L, 1.5 * L);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
      node.bisection = true;
    }
    d = next;
    s = at(d);
    if (s.value >= 0.0) lo = d;
    else hi = d;
  }
  const double g = s.grad.norm();
  if (!(g >= 1e-14)) return std::nullopt;
  node.x = pair.master + d * pair.dir;
  node.residual = std::abs(s.value);
  node.iterations = it;
  node.normal = s.grad / g;
  return node;
}

SearchSummary search_interface(const std::vector<SearchPair>& pairs, const ScoreField& field,
                               const InterfaceOptions& opts, Exec exec) {
  std::vector<std::optional<InterfaceNode>> found(pairs.size());
  detail::for_each_index(static_cast<long>(pairs.size()), exec, [&](long k) {
    found[k] = newton_search(pairs[k], field, opts.newton_tol, opts.max_iter);
  });
  SearchSummary out;
  for (auto& f : found) {
    if (!f) {
      ++out.rejected;
      continue;
    }
    out.mean_iterations += f->iterations;
    out.mean_residual += f->residual;
    out.nodes.push_back(*f);
  }
  if (!out.nodes.empty()) {
    out.mean_iterations /= static_cast<double>(out.nodes.size());
    out.mean_residual /= static_cast<double>(out.nodes.size());
  }
  return out;
}

std::vector<InterfaceNode> merge_interface_nodes(std::vector<InterfaceNode> raw, double merge_tol) {
  if (raw.empty()) return raw;
  std::sort(raw.begin(), raw.end(), [](const InterfaceNode& a, const InterfaceNode& b) {
    if (a.x(0) != b.x(0)) return a.x(0) < b.x(0);
    return a.x(1) < b.x(1);
  });
  Vec2 lo = raw[0].x, hi = raw[0].x;
  for (const auto& r : raw) {
    lo = lo.cwiseMin(r.x);
    hi = hi.cwiseMax(r.x);
  }
  const double tol = merge_tol * (hi - lo).maxCoeff();
  std::vector<InterfaceNode> kept;
  if (!(tol > 0.0)) {
    for (auto& r : raw) {
      if (kept.empty() || (kept.back().x - r.x).cwiseAbs().maxCoeff() > 0.0) kept.push_back(r);
    }
    return kept;
  }
  // Kept nodes sorted by x: only those with x(0) >= current x(0) - tol can clash.
  std::multimap<double, std::size_t> by_x;
  for (auto& r : raw) {
    bool dup = false;
    for (auto it = by_x.lower_bound(r.x(0) - tol); it != by_x.end() && it->first <= r.x(0) + tol; ++it) {
      if ((kept[it->second].x - r.x).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      by_x.emplace(r.x(0), kept.size());
      kept.push_back(r);
    }
  }
  return kept;
}

NodeSet assemble_nodeset(const NodeSet& pixels, std::vector<InterfaceNode> raw, const ScoreField& field,
                         const InterfaceOptions& opts, double voxel, double support_factor,
                         AssemblyReport* report) {
  AssemblyReport rep;
  rep.raw = raw.size();
  std::vector<InterfaceNode> merged = merge_interface_nodes(std::move(raw), opts.merge_tol);
  rep.interface_nodes = merged.size();

  std::vector<Vec2> ix;
  ix.reserve(merged.size());
  for (const auto& m : merged) ix.push_back(m.x);
  const double exclusion = opts.zeta * voxel;

  NodeSet out;
  out.dim = pixels.dim;
  out.spacing = voxel;
  const double a = support_factor * voxel;
  for (const auto& m : merged) out.add(m.x, NodeRole::Interface, field.value(m.x), a, m.normal);
  std::optional<RadiusIndex> near;
  if (!ix.empty()) near.emplace(ix, exclusion);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    bool close = false;
    if (near && near->any_within(pixels.x[i])) {
      // strict: removed when closer than zeta * voxel to some interface node
      close = std::any_of(ix.begin(), ix.end(), [&](const Vec2& p) { return (p - pixels.x[i]).norm() < exclusion; });
    }
    if (close) {
      ++rep.pruned_near_interface;
      continue;
    }
    const double s = field.value(pixels.x[i]);
    if (s == 0.0) {
      ++rep.pruned_zero_score;
      continue;
    }
    out.add(pixels.x[i], role_from_score(s), s, a);
  }
  if (report) *report = rep;
  return out;
}

double interface_mse(const std::vector<Vec2>& nodes, const SyntheticTruth& truth) {
  truth.validate();
  if (nodes.empty()) throw Error("interface MSE needs at least one interface node");
  double sum = 0.0;
  for (const auto& x : nodes) {
    const Circle& c = truth.circles[truth.owner(x)];
    const double e = (x - c.center).norm() - c.radius;
    sum += e * e;
  }
  return std::sqrt(sum) / (static_cast<double>(truth.circles.size()) * truth.extent_x);
}

}  // namespace svmrk
