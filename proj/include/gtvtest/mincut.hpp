#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <type_traits>
#include <vector>

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"
#include "gtvtest/graph.hpp"

namespace gtvtest {

template <class Cap>
struct FlowNetwork {
  struct Arc {
    std::size_t from, to;
    Cap capacity;
  };

  std::size_t n_nodes = 0;
  std::size_t source = 0, sink = 1;
  std::vector<Arc> arcs;

  void add_arc(std::size_t from, std::size_t to, Cap capacity) {
    arcs.push_back({from, to, capacity});
  }
};

template <class Cap>
struct CutResult {
  Cap flow_value{};
  /// Non-terminal nodes reachable from the source in the final residual
  /// network: the minimal source side among all minimum cuts.
  std::vector<std::size_t> source_side;
  /// Every arc leaving the source is saturated.
  bool source_arcs_saturated = false;
};

namespace detail {

/// Dinic's algorithm. With floating capacities, residuals at or below
/// `tolerance` are treated as zero.
template <class Cap>
class Dinic {
 public:
  Dinic(const FlowNetwork<Cap>& net, Cap tolerance)
      : n_(net.n_nodes), s_(net.source), t_(net.sink), tol_(tolerance) {
    head_.assign(n_ + 1, 0);
    for (const auto& a : net.arcs) {
      ++head_[a.from + 1];
      ++head_[a.to + 1];
    }
    for (std::size_t v = 0; v < n_; ++v) head_[v + 1] += head_[v];
    to_.resize(2 * net.arcs.size());
    res_.resize(2 * net.arcs.size());
    rev_.resize(2 * net.arcs.size());
    std::vector<std::size_t> fill(head_.begin(), head_.end() - 1);
    for (const auto& a : net.arcs) {
      const std::size_t f = fill[a.from]++;
      const std::size_t b = fill[a.to]++;
      to_[f] = a.to;
      res_[f] = a.capacity;
      rev_[f] = b;
      to_[b] = a.from;
      res_[b] = Cap{};
      rev_[b] = f;
    }
  }

  Cap run() {
    Cap total{};
    level_.resize(n_);
    it_.resize(n_);
    while (bfs()) {
      std::copy(head_.begin(), head_.end() - 1, it_.begin());
      while (true) {
        const Cap pushed = augment(s_, std::numeric_limits<Cap>::max());
        if (!(pushed > tol_)) break;
        total += pushed;
      }
    }
    return total;
  }

  std::vector<char> reachable_from_source() const {
    std::vector<char> seen(n_, 0);
    std::vector<std::size_t> stack{s_};
    seen[s_] = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t e = head_[v]; e < head_[v + 1]; ++e)
        if (res_[e] > tol_ && !seen[to_[e]]) {
          seen[to_[e]] = 1;
          stack.push_back(to_[e]);
        }
    }
    return seen;
  }

 private:
  bool bfs() {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<std::size_t> queue{s_};
    level_[s_] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t v = queue[qi];
      for (std::size_t e = head_[v]; e < head_[v + 1]; ++e)
        if (res_[e] > tol_ && level_[to_[e]] < 0) {
          level_[to_[e]] = level_[v] + 1;
          queue.push_back(to_[e]);
        }
    }
    return level_[t_] >= 0;
  }

  Cap augment(std::size_t v, Cap limit) {
    if (v == t_) return limit;
    for (std::size_t& e = it_[v]; e < head_[v + 1]; ++e) {
      const std::size_t u = to_[e];
      if (res_[e] > tol_ && level_[u] == level_[v] + 1) {
        const Cap pushed = augment(u, std::min(limit, res_[e]));
        if (pushed > tol_) {
          res_[e] -= pushed;
          res_[rev_[e]] += pushed;
          return pushed;
        }
      }
    }
    return Cap{};
  }

  std::size_t n_, s_, t_;
  Cap tol_;
  std::vector<std::size_t> head_, to_, rev_, it_;
  std::vector<Cap> res_;
  std::vector<int> level_;
};

}  // namespace detail

/// Exact maximum flow (integer Cap) and the canonical minimum cut.
template <class Cap>
CutResult<Cap> max_flow(const FlowNetwork<Cap>& net, Cap tolerance = Cap{}) {
  if (net.source == net.sink) throw Error("source and sink must differ");
  for (const auto& a : net.arcs)
    if (a.capacity < Cap{}) throw Error("negative capacity");
  detail::Dinic<Cap> dinic(net, tolerance);
  CutResult<Cap> out;
  out.flow_value = dinic.run();
  const auto seen = dinic.reachable_from_source();
  for (std::size_t v = 0; v < net.n_nodes; ++v)
    if (seen[v] && v != net.source && v != net.sink) out.source_side.push_back(v);
  Cap source_capacity{};
  for (const auto& a : net.arcs)
    if (a.from == net.source) source_capacity += a.capacity;
  out.source_arcs_saturated = !(source_capacity - out.flow_value > tolerance);
  return out;
}

/// Result of maximising  sum_{i in S} c_i - edge_cap * cut(S)  over S.
template <class Cap>
struct WeightCut {
  Cap objective{};
  std::vector<char> in_set;
};

/// Solves max_S c(S) - edge_cap * cut_G(S) with one s/t min cut:
/// source -> i with capacity c_i for c_i > 0, i -> sink with |c_i| for
/// c_i < 0, and both orientations of every graph edge with edge_cap.
/// The maximiser returned is the minimal source side.
template <class Cap>
WeightCut<Cap> max_weight_minus_cut(std::span<const Cap> c, const Graph& g,
                                    Cap edge_cap, Cap tolerance = Cap{}) {
  const std::size_t n = g.n_vertices();
  FlowNetwork<Cap> net;
  net.n_nodes = n + 2;
  net.source = n;
  net.sink = n + 1;
  net.arcs.reserve(n + 2 * g.n_edges());
  Cap positive{};
  for (std::size_t i = 0; i < n; ++i) {
    if (c[i] > Cap{}) {
      net.add_arc(n, i, c[i]);
      positive += c[i];
    } else if (c[i] < Cap{}) {
      net.add_arc(i, n + 1, -c[i]);
    }
  }
  if (edge_cap > Cap{}) {
    for (const auto& [i, j] : g.edges()) {
      net.add_arc(i, j, edge_cap);
      net.add_arc(j, i, edge_cap);
    }
  }
  detail::Dinic<Cap> dinic(net, tolerance);
  const Cap flow = dinic.run();
  const auto seen = dinic.reachable_from_source();
  WeightCut<Cap> out;
  out.objective = positive - flow;
  out.in_set.assign(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

struct LambdaCutResult {
  Rational M_value;
  std::vector<std::size_t> maximizer;
};

/// M(lambda) = max_S w(S)/scale - lambda * 2 cut(S) for integer weights w
/// (sum zero) representing the real weights w/scale. All capacities live on
/// the integer scale q*scale for lambda = p/q.
inline LambdaCutResult lambda_cut_weighted(std::span<const std::int64_t> w,
                                           std::int64_t scale, const Graph& g,
                                           Rational lambda) {
  if (lambda < 0) throw Error("lambda must be non-negative");
  if (w.size() != g.n_vertices()) throw Error("weight/graph size mismatch");
  const std::int64_t p = lambda.numerator();
  const std::int64_t q = lambda.denominator();
  constexpr auto kMax = static_cast<__int128>(std::numeric_limits<std::int64_t>::max());

  __int128 positive = 0;
  for (std::int64_t wi : w) positive += wi > 0 ? wi : 0;
  const __int128 edge = static_cast<__int128>(2) * p * scale;
  if (positive * q > kMax || edge > kMax)
    throw CapacityOverflow("lambda_cut capacities exceed 64 bits");

  std::vector<std::int64_t> c(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = q * w[i];
  const auto wc = max_weight_minus_cut<std::int64_t>(
      c, g, static_cast<std::int64_t>(edge));

  LambdaCutResult out;
  // objective / (q * scale), reduced without overflowing the product
  out.M_value = Rational(wc.objective, q) / scale;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (wc.in_set[i]) out.maximizer.push_back(i);
  return out;
}

/// M(lambda) = max over binary theta of theta^T a - lambda ||D_G theta||_1.
inline LambdaCutResult lambda_cut(const TwoSample& ts, const Graph& g,
                                  Rational lambda) {
  const auto w = ts.assignment_int();
  return lambda_cut_weighted(w, ts.scale(), g, lambda);
}

}  // namespace gtvtest
