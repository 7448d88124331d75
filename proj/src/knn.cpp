#include "uent/knn.hpp"

#include "uent/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace uent {

namespace {

// Both backends funnel every point-to-point distance through this one
// non-inlined kernel so their floating-point results are identical. L2 keys
// are squared distances; the sqrt happens once at the end of the search.
[[gnu::noinline]] double dist_key(const double* a, const double* b, long d, Norm p) {
  switch (p) {
    case Norm::L1: {
      double s = 0.0;
      for (long j = 0; j < d; ++j) s += std::fabs(a[j] - b[j]);
      return s;
    }
    case Norm::L2: {
      double s = 0.0;
      for (long j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        s += t * t;
      }
      return s;
    }
    case Norm::Linf: {
      double s = 0.0;
      for (long j = 0; j < d; ++j) s = std::max(s, std::fabs(a[j] - b[j]));
      return s;
    }
  }
  return 0.0;
}

double key_to_dist(double key, Norm p) {
  return p == Norm::L2 ? std::sqrt(key) : key;
}

using Cand = std::pair<double, long>;  // (key, index), lexicographic order

void brute_query(const SampleSet& s, long i, int k, Norm p, std::vector<Cand>& out) {
  const long n = s.n(), d = s.dim();
  out.clear();
  out.reserve(n - 1);
  for (long j = 0; j < n; ++j) {
    if (j == i) continue;
    out.emplace_back(dist_key(s.row(i), s.row(j), d, p), j);
  }
  std::partial_sort(out.begin(), out.begin() + k, out.end());
  out.resize(k);
}

struct KdTree {
  const SampleSet& s;
  Norm p;
  static constexpr long kLeafSize = 16;

  struct Node {
    long begin, end;       // leaf: range into perm
    long left = -1, right = -1;
    long box = 0;          // row offset into lo/hi
  };
  std::vector<long> perm;
  std::vector<Node> nodes;
  Matrix lo, hi;  // per-node bounding boxes

  KdTree(const SampleSet& samples, Norm norm) : s(samples), p(norm) {
    const long n = s.n();
    perm.resize(n);
    for (long i = 0; i < n; ++i) perm[i] = i;
    nodes.reserve(2 * n / kLeafSize + 2);
    const long max_nodes = 4 * (n / kLeafSize + 2);
    lo.resize(max_nodes, s.dim());
    hi.resize(max_nodes, s.dim());
    build(0, n);
  }

  long build(long begin, long end) {
    const long id = static_cast<long>(nodes.size());
    nodes.push_back({begin, end});
    nodes[id].box = id;
    if (static_cast<long>(lo.rows()) <= id) {
      lo.conservativeResize(2 * id + 2, s.dim());
      hi.conservativeResize(2 * id + 2, s.dim());
    }
    const long d = s.dim();
    for (long j = 0; j < d; ++j) {
      double mn = s.data()(perm[begin], j), mx = mn;
      for (long t = begin + 1; t < end; ++t) {
        const double v = s.data()(perm[t], j);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      lo(id, j) = mn;
      hi(id, j) = mx;
    }
    if (end - begin <= kLeafSize) return id;
    long split_dim = 0;
    double widest = -1.0;
    for (long j = 0; j < d; ++j) {
      const double w = hi(id, j) - lo(id, j);
      if (w > widest) {
        widest = w;
        split_dim = j;
      }
    }
    if (widest <= 0.0) return id;  // all points identical in the box
    const long mid = (begin + end) / 2;
    std::nth_element(perm.begin() + begin, perm.begin() + mid, perm.begin() + end,
                     [&](long a, long b) {
                       const double va = s.data()(a, split_dim);
                       const double vb = s.data()(b, split_dim);
                       return va < vb || (va == vb && a < b);
                     });
    const long l = build(begin, mid);
    const long r = build(mid, end);
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }

  double box_mindist_key(long id, const double* q) const {
    const long d = s.dim();
    switch (p) {
      case Norm::L1: {
        double sum = 0.0;
        for (long j = 0; j < d; ++j)
          sum += std::max({0.0, lo(id, j) - q[j], q[j] - hi(id, j)});
        return sum;
      }
      case Norm::L2: {
        double sum = 0.0;
        for (long j = 0; j < d; ++j) {
          const double t = std::max({0.0, lo(id, j) - q[j], q[j] - hi(id, j)});
          sum += t * t;
        }
        return sum;
      }
      case Norm::Linf: {
        double mx = 0.0;
        for (long j = 0; j < d; ++j)
          mx = std::max({mx, lo(id, j) - q[j], q[j] - hi(id, j)});
        return mx;
      }
    }
    return 0.0;
  }

  void query(long qi, int k, std::vector<Cand>& out) const {
    std::priority_queue<Cand> heap;  // top is the current worst (key, idx)
    const double* q = s.row(qi);
    visit(0, qi, q, k, heap);
    out.resize(heap.size());
    for (long t = static_cast<long>(out.size()) - 1; t >= 0; --t) {
      out[t] = heap.top();
      heap.pop();
    }
  }

  void visit(long id, long qi, const double* q, int k,
             std::priority_queue<Cand>& heap) const {
    const Node& nd = nodes[id];
    // Prune only on a strictly larger lower bound so equal-distance candidates
    // are still visited and tie-breaking matches brute force exactly.
    if (static_cast<int>(heap.size()) == k &&
        box_mindist_key(id, q) > heap.top().first)
      return;
    if (nd.left < 0) {
      const long d = s.dim();
      for (long t = nd.begin; t < nd.end; ++t) {
        const long j = perm[t];
        if (j == qi) continue;
        const Cand c(dist_key(q, s.row(j), d, p), j);
        if (static_cast<int>(heap.size()) < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double dl = box_mindist_key(nd.left, q);
    const double dr = box_mindist_key(nd.right, q);
    if (dl <= dr) {
      visit(nd.left, qi, q, k, heap);
      visit(nd.right, qi, q, k, heap);
    } else {
      visit(nd.right, qi, q, k, heap);
      visit(nd.left, qi, q, k, heap);
    }
  }
};

}  // namespace

KnnResult knn_search(const SampleSet& s, int k, Norm p, KnnBackend backend) {
  const long n = s.n();
  if (k < 1) throw InvalidK("knn: k must be >= 1");
  if (k >= n) throw InvalidK("knn: k must be <= N-1");
  const bool use_tree =
      backend == KnnBackend::KdTree || (backend == KnnBackend::Auto && n > 256);

  KnnResult res;
  res.dist.resize(n, k);
  res.idx.assign(n, {});

  if (use_tree) {
    const KdTree tree(s, p);
    parallel_for(0, n, [&](long i) {
      std::vector<Cand> cands;
      tree.query(i, k, cands);
      auto& row = res.idx[i];
      row.resize(k);
      for (int t = 0; t < k; ++t) {
        res.dist(i, t) = key_to_dist(cands[t].first, p);
        row[t] = cands[t].second;
      }
    });
  } else {
    parallel_for(0, n, [&](long i) {
      std::vector<Cand> cands;
      brute_query(s, i, k, p, cands);
      auto& row = res.idx[i];
      row.resize(k);
      for (int t = 0; t < k; ++t) {
        res.dist(i, t) = key_to_dist(cands[t].first, p);
        row[t] = cands[t].second;
      }
    });
  }
  return res;
}

Vector knn_radii(const SampleSet& s, int k, Norm p, KnnBackend backend) {
  const KnnResult res = knn_search(s, k, p, backend);
  Vector eps(s.n());
  for (long i = 0; i < s.n(); ++i) {
    const double dk = res.dist(i, k - 1);
    if (dk == 0.0) throw DuplicatePoints("knn_radii: duplicate sample points");
    eps[i] = 2.0 * dk;
  }
  return eps;
}

Matrix marginal_radii(const SampleSet& s, int k, KnnBackend backend) {
  const KnnResult res = knn_search(s, k, Norm::Linf, backend);
  const long n = s.n(), d = s.dim();
  Matrix em(n, d);
  for (long i = 0; i < n; ++i) {
    if (res.dist(i, k - 1) == 0.0)
      throw DuplicatePoints("marginal_radii: duplicate sample points");
    for (long j = 0; j < d; ++j) {
      double mx = 0.0;
      for (long t = 0; t < k; ++t)
        mx = std::max(mx, std::fabs(s.data()(i, j) - s.data()(res.idx[i][t], j)));
      em(i, j) = 2.0 * mx;
    }
  }
  return em;
}

Matrix truncated_lengths(const SampleSet& s, const Matrix& half_widths, double tol) {
  const long n = s.n(), d = s.dim();
  if (half_widths.rows() != n || half_widths.cols() != d)
    throw ConfigError("truncated_lengths: half_widths shape mismatch");
  if ((half_widths.array() <= 0.0).any())
    throw DomainError("truncated_lengths: half_widths must be positive");
  Matrix out(n, d);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) {
      double x = s.data()(i, j);
      if (x < -tol || x > 1.0 + tol)
        throw OutOfDomain("truncated_lengths: sample outside the unit cube");
      x = std::min(1.0, std::max(0.0, x));
      const double w = half_widths(i, j);
      out(i, j) = std::min(x + w, 1.0) - std::max(x - w, 0.0);
    }
  }
  return out;
}

CellGeometry cell_geometry(const SampleSet& s, int k, KnnBackend backend) {
  const long n = s.n(), d = s.dim();
  const KnnResult res = knn_search(s, k, Norm::Linf, backend);
  CellGeometry g;
  g.k = k;
  g.eps.resize(n);
  g.eps_marginal.resize(n, d);
  for (long i = 0; i < n; ++i) {
    const double dk = res.dist(i, k - 1);
    if (dk == 0.0) throw DuplicatePoints("cell_geometry: duplicate sample points");
    g.eps[i] = 2.0 * dk;
    for (long j = 0; j < d; ++j) {
      double mx = 0.0;
      for (long t = 0; t < k; ++t)
        mx = std::max(mx, std::fabs(s.data()(i, j) - s.data()(res.idx[i][t], j)));
      // A zero marginal gap can occur when upstream CDF clamping maps two
      // points onto the same boundary value in one coordinate; floor at the
      // clamp resolution so the truncated lengths stay strictly positive.
      g.eps_marginal(i, j) = std::max(2.0 * mx, 2e-15);
    }
  }
  Matrix w_cube(n, d);
  for (long j = 0; j < d; ++j) w_cube.col(j) = 0.5 * g.eps;
  g.xi = truncated_lengths(s, w_cube);
  g.zeta = truncated_lengths(s, 0.5 * g.eps_marginal);
  return g;
}

}  // namespace uent
