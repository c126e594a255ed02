#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"

namespace gtvtest {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected, unweighted simple graph. Edges are stored once as (i, j) with
/// i < j, sorted lexicographically; adjacency is kept in CSR form.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n_vertices, std::vector<Edge> edges) : n_(n_vertices) {
    for (auto& [i, j] : edges) {
      if (i == j) throw Error("self-loop at vertex " + std::to_string(i));
      if (i >= n_ || j >= n_) throw Error("edge endpoint out of range");
      if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    offsets_.assign(n_ + 1, 0);
    for (const auto& [i, j] : edges_) {
      ++offsets_[i + 1];
      ++offsets_[j + 1];
    }
    for (std::size_t v = 0; v < n_; ++v) offsets_[v + 1] += offsets_[v];
    neighbours_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [i, j] : edges_) {
      neighbours_[fill[i]++] = j;
      neighbours_[fill[j]++] = i;
    }
  }

  std::size_t n_vertices() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t degree(std::size_t v) const {
    return offsets_[v + 1] - offsets_[v];
  }

  std::span<const std::size_t> neighbours(std::size_t v) const {
    return {neighbours_.data() + offsets_[v], degree(v)};
  }

  bool has_edge(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
  }

  bool operator==(const Graph& o) const {
    return n_ == o.n_ && edges_ == o.edges_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> neighbours_;
};

/// Number of graph edges with exactly one endpoint in `in_set`.
inline std::int64_t cut_size(const Graph& g, std::span<const char> in_set) {
  std::int64_t c = 0;
  for (const auto& [i, j] : g.edges()) c += (in_set[i] != in_set[j]);
  return c;
}

inline bool is_connected(const Graph& g) {
  const std::size_t n = g.n_vertices();
  if (n <= 1) return true;
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t u : g.neighbours(v)) {
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        stack.push_back(u);
      }
    }
  }
  return reached == n;
}

namespace detail {

inline bool within_radius(const Point& p, const Point& q, double eps) {
  return squared_distance(p, q) <= eps * eps;
}

struct CellKeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t k : key) {
      h ^= static_cast<std::uint64_t>(k) + 0x9e3779b97f4a7c15ULL + (h << 6) +
           (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline Graph eps_graph_all_pairs(std::span<const Point> pts, double eps) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (within_radius(pts[i], pts[j], eps)) edges.emplace_back(i, j);
  return Graph(pts.size(), std::move(edges));
}

}  // namespace detail

/// Edge {i, j} iff ||z_i - z_j|| <= eps. Uses a uniform hash grid with cell
/// side eps; falls back to all pairs when the 3^d stencil would be larger
/// than the point set.
inline Graph eps_graph(std::span<const Point> pts, double eps) {
  if (!(eps > 0.0)) throw Error("eps must be positive");
  const std::size_t n = pts.size();
  if (n == 0) return Graph(0, {});
  const std::size_t d = pts.front().dim();

  double stencil = std::pow(3.0, static_cast<double>(d));
  double max_abs = 0.0;
  for (const auto& p : pts)
    for (double c : p.coords) max_abs = std::max(max_abs, std::abs(c));
  if (stencil >= static_cast<double>(n) || max_abs / eps > 1e15)
    return detail::eps_graph_all_pairs(pts, eps);

  using Key = std::vector<std::int64_t>;
  std::unordered_map<Key, std::vector<std::size_t>, detail::CellKeyHash> grid;
  grid.reserve(n);
  std::vector<Key> keys(n, Key(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k)
      keys[i][k] = static_cast<std::int64_t>(std::floor(pts[i][k] / eps));
    grid[keys[i]].push_back(i);
  }

  const std::size_t n_offsets = static_cast<std::size_t>(stencil);
  std::vector<Edge> edges;
  Key probe(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < n_offsets; ++o) {
      std::size_t rem = o;
      for (std::size_t k = 0; k < d; ++k) {
        probe[k] = keys[i][k] + static_cast<std::int64_t>(rem % 3) - 1;
        rem /= 3;
      }
      auto it = grid.find(probe);
      if (it == grid.end()) continue;
      for (std::size_t j : it->second)
        if (j > i && detail::within_radius(pts[i], pts[j], eps))
          edges.emplace_back(i, j);
    }
  }
  return Graph(n, std::move(edges));
}

inline Graph eps_graph(const TwoSample& ts, double eps) {
  return eps_graph(std::span<const Point>(ts.points()), eps);
}

namespace detail {

/// Exact k-nearest-neighbour search. Candidates are ordered by
/// (squared distance, index), so ties go to the smaller index and the result
/// does not depend on the tree layout.
class KdTree {
 public:
  explicit KdTree(std::span<const Point> pts) : pts_(pts) {
    idx_.resize(pts.size());
    for (std::size_t i = 0; i < idx_.size(); ++i) idx_[i] = i;
    if (!idx_.empty()) build(0, idx_.size());
  }

  std::vector<std::size_t> nearest(std::size_t query, std::size_t k) const {
    Heap heap;
    if (!nodes_.empty()) search(0, query, k, heap);
    std::vector<std::size_t> out(heap.size());
    for (std::size_t r = heap.size(); r-- > 0;) {
      out[r] = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  using Cand = std::pair<double, std::size_t>;
  using Heap = std::priority_queue<Cand>;  // max-heap on (d2, index)

  struct Node {
    std::size_t begin, end;
    std::size_t left = 0, right = 0;  // 0 means leaf
    std::vector<double> lo, hi;
  };

  static constexpr std::size_t kLeafSize = 12;

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t d = pts_[idx_[begin]].dim();
    Node node{begin, end, 0, 0, std::vector<double>(d, INFINITY),
              std::vector<double>(d, -INFINITY)};
    for (std::size_t r = begin; r < end; ++r)
      for (std::size_t k = 0; k < d; ++k) {
        node.lo[k] = std::min(node.lo[k], pts_[idx_[r]][k]);
        node.hi[k] = std::max(node.hi[k], pts_[idx_[r]][k]);
      }
    const std::size_t id = nodes_.size();
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    std::size_t axis = 0;
    for (std::size_t k = 1; k < d; ++k)
      if (node.hi[k] - node.lo[k] > node.hi[axis] - node.lo[axis]) axis = k;
    if (node.hi[axis] == node.lo[axis]) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                     idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return pts_[a][axis] < pts_[b][axis];
                     });
    const std::size_t l = build(begin, mid);
    const std::size_t r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  double box_distance2(const Node& node, const Point& q) const {
    double s = 0.0;
    for (std::size_t k = 0; k < q.dim(); ++k) {
      double diff = 0.0;
      if (q[k] < node.lo[k]) diff = node.lo[k] - q[k];
      else if (q[k] > node.hi[k]) diff = q[k] - node.hi[k];
      s += diff * diff;
    }
    return s;
  }

  void search(std::size_t id, std::size_t query, std::size_t k,
              Heap& heap) const {
    const Node& node = nodes_[id];
    const Point& q = pts_[query];
    if (heap.size() == k && box_distance2(node, q) > heap.top().first) return;
    if (node.left == 0) {
      for (std::size_t r = node.begin; r < node.end; ++r) {
        const std::size_t j = idx_[r];
        if (j == query) continue;
        Cand c{squared_distance(q, pts_[j]), j};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    std::size_t first = node.left, second = node.right;
    if (box_distance2(nodes_[second], q) < box_distance2(nodes_[first], q))
      std::swap(first, second);
    search(first, query, k, heap);
    search(second, query, k, heap);
  }

  std::span<const Point> pts_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
};

}  // namespace detail

/// Symmetrised (union) k-nearest-neighbour graph.
inline Graph knn_graph(std::span<const Point> pts, std::size_t k) {
  const std::size_t n = pts.size();
  if (k == 0) throw Error("k must be positive");
  if (k >= n)
    throw KTooLarge("k = " + std::to_string(k) + " must be < n = " +
                    std::to_string(n));
  detail::KdTree tree(pts);
  std::vector<Edge> edges;
  edges.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : tree.nearest(i, k)) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

inline Graph knn_graph(const TwoSample& ts, std::size_t k) {
  return knn_graph(std::span<const Point>(ts.points()), k);
}

/// Default neighbourhood radius (24B)^{1/d} * 2 sqrt(d) * (ln n / n)^{1/d}.
/// B is an upper bound on the sampling densities, B >= 2.
inline double default_radius(std::size_t n, std::size_t d, double B = 2.0) {
  if (n < 2) throw Error("default_radius needs n >= 2");
  if (d < 1) throw Error("default_radius needs d >= 1");
  if (B < 2.0) throw Error("density bound B must be >= 2");
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  return std::pow(24.0 * B, 1.0 / dd) * 2.0 * std::sqrt(dd) *
         std::pow(std::log(nn) / nn, 1.0 / dd);
}

/// Real-valued n is accepted for formula checks such as n = e.
inline double default_radius_real(double n, std::size_t d, double B = 2.0) {
  const double dd = static_cast<double>(d);
  return std::pow(24.0 * B, 1.0 / dd) * 2.0 * std::sqrt(dd) *
         std::pow(std::log(n) / n, 1.0 / dd);
}

/// Cube grid over (0,1)^d with N = floor(1/eps) cells per axis.
/// Cell index is sum_k c_k N^k with c_k the per-axis cell coordinate.
struct Binning {
  std::size_t d = 0;
  std::size_t N = 0;
  double cell_width = 0.0;
  std::size_t n1 = 0, n2 = 0;
  std::vector<std::int64_t> counts_x, counts_y;
  std::vector<std::size_t> cell_index_of;

  std::size_t n_cells() const { return counts_x.size(); }
  std::int64_t count(std::size_t cell) const {
    return counts_x[cell] + counts_y[cell];
  }

  std::vector<std::size_t> cell_coords(std::size_t cell) const {
    std::vector<std::size_t> c(d);
    for (std::size_t k = 0; k < d; ++k) {
      c[k] = cell % N;
      cell /= N;
    }
    return c;
  }

  /// Recount cells for an arbitrary labelling of the same points.
  void recount(std::span<const Label> labels, std::vector<std::int64_t>& cx,
               std::vector<std::int64_t>& cy) const {
    cx.assign(n_cells(), 0);
    cy.assign(n_cells(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      (labels[i] == Label::X ? cx : cy)[cell_index_of[i]]++;
  }
};

inline std::size_t cells_per_axis(double eps) {
  if (!(eps > 0.0) || eps > 1.0) throw Error("bin width must lie in (0, 1]");
  // 1/0.02 evaluates to 49.999..., which must still give 50 cells.
  return static_cast<std::size_t>(std::floor(1.0 / eps + 1e-9));
}

inline std::size_t checked_cell_count(std::size_t N, std::size_t d) {
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (total > std::size_t{100'000'000} / N)
      throw TooLarge("grid has more than 1e8 cells");
    total *= N;
  }
  return total;
}

inline Binning bin_partition(const TwoSample& ts, double eps) {
  Binning b;
  b.d = ts.dim();
  b.N = cells_per_axis(eps);
  b.cell_width = eps;
  b.n1 = ts.n1();
  b.n2 = ts.n2();
  const std::size_t cells = checked_cell_count(b.N, b.d);
  b.counts_x.assign(cells, 0);
  b.counts_y.assign(cells, 0);
  b.cell_index_of.resize(ts.n());
  for (std::size_t i = 0; i < ts.n(); ++i) {
    std::size_t index = 0, stride = 1;
    for (std::size_t k = 0; k < b.d; ++k) {
      const double x = ts.point(i)[k];
      if (x < 0.0 || x > 1.0)
        throw OutOfDomain("coordinate " + std::to_string(x) +
                          " of point " + std::to_string(i) +
                          " lies outside (0,1)");
      std::size_t c = static_cast<std::size_t>(
          std::floor(x * static_cast<double>(b.N)));
      c = std::min(c, b.N - 1);
      index += c * stride;
      stride *= b.N;
    }
    b.cell_index_of[i] = index;
    (i < ts.n1() ? b.counts_x : b.counts_y)[index]++;
  }
  return b;
}

/// d-dimensional torus over an N^d grid: each cell joined to its +/- e_k
/// neighbours modulo N.
inline Graph torus_graph(std::size_t N, std::size_t d) {
  if (N < 2) throw Error("torus needs N >= 2");
  if (d < 1) throw Error("torus needs d >= 1");
  const std::size_t cells = checked_cell_count(N, d);
  std::vector<Edge> edges;
  edges.reserve(cells * d);
  for (std::size_t v = 0; v < cells; ++v) {
    std::size_t stride = 1, rem = v;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t c = rem % N;
      rem /= N;
      const std::size_t up = v - c * stride + ((c + 1) % N) * stride;
      edges.emplace_back(v, up);
      stride *= N;
    }
  }
  return Graph(cells, std::move(edges));
}

/// Per-cell assignment mass m(cell) = cx/n1 - cy/n2 and its cell average
/// m(cell)/n(cell) (0 for empty cells).
struct BinnedAssignment {
  std::vector<Rational> average;
  std::vector<Rational> mass;
};

inline BinnedAssignment binned_assignment(const Binning& b,
                                          const TwoSample& ts) {
  if (b.n1 != ts.n1() || b.n2 != ts.n2() || b.cell_index_of.size() != ts.n() ||
      b.d != ts.dim())
    throw BinningMismatch("binning was not built from this sample");
  const auto n1 = static_cast<std::int64_t>(b.n1);
  const auto n2 = static_cast<std::int64_t>(b.n2);
  BinnedAssignment out;
  out.average.resize(b.n_cells());
  out.mass.resize(b.n_cells());
  for (std::size_t c = 0; c < b.n_cells(); ++c) {
    const Rational m = Rational(b.counts_x[c], n1) - Rational(b.counts_y[c], n2);
    out.mass[c] = m;
    out.average[c] = b.count(c) > 0 ? m / b.count(c) : Rational(0);
  }
  return out;
}

}  // namespace gtvtest
