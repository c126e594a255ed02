#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"
#include "gtvtest/graph.hpp"
#include "gtvtest/parallel.hpp"
#include "gtvtest/solver.hpp"

namespace gtvtest {

enum class TestMethod { GraphTv, BinnedGraphTv, ChiSquared };

inline const char* to_string(TestMethod m) {
  switch (m) {
    case TestMethod::GraphTv: return "graph_tv";
    case TestMethod::BinnedGraphTv: return "binned_graph_tv";
    case TestMethod::ChiSquared: return "chi_squared";
  }
  return "unknown";
}

struct GraphMeta {
  std::string type;  // "eps", "knn", "torus", "bins"
  double parameter = 0.0;
  std::size_t edges = 0;
};

struct PermutationPlan {
  std::size_t B = 199;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  std::uint64_t replicate_seed(std::size_t r) const {
    return substream_seed(seed, r);
  }
};

struct TestReport {
  double statistic = 0.0;
  std::optional<Rational> statistic_exact;
  double p_value = 1.0;
  double critical_value = 0.0;
  double alpha = 0.05;
  std::size_t n_permutations = 0;
  bool reject = false;
  std::optional<std::vector<std::size_t>> witness;
  std::uint64_t seed = 0;
  TestMethod method = TestMethod::GraphTv;
  GraphMeta graph_meta;
};

/// Which graph to build over a pooled sample.
struct GraphSpec {
  enum class Kind { Eps, EpsAuto, Knn };
  Kind kind = Kind::Knn;
  double eps = 0.0;
  double density_bound = 2.0;  // B in the default radius
  std::size_t k = 10;

  static GraphSpec with_eps(double e) { return {Kind::Eps, e, 2.0, 0}; }
  static GraphSpec auto_eps(double B = 2.0) { return {Kind::EpsAuto, 0.0, B, 0}; }
  static GraphSpec knn(std::size_t k) { return {Kind::Knn, 0.0, 2.0, k}; }

  double radius_for(std::size_t n, std::size_t d) const {
    return kind == Kind::Eps ? eps : default_radius(n, d, density_bound);
  }

  Graph build(std::span<const Point> pts) const {
    if (kind == Kind::Knn) return knn_graph(pts, k);
    return eps_graph(pts, radius_for(pts.size(), pts.empty() ? 1 : pts.front().dim()));
  }

  GraphMeta meta(const Graph& g, std::size_t n, std::size_t d) const {
    if (kind == Kind::Knn) return {"knn", static_cast<double>(k), g.n_edges()};
    return {"eps", radius_for(n, d), g.n_edges()};
  }
};

// ---------------------------------------------------------------------------
// Permutation calibration
// ---------------------------------------------------------------------------

struct Calibration {
  double p_value = 1.0;
  double critical_value = 0.0;
  std::size_t count_at_least = 0;  // permuted statistics >= observed
  std::vector<double> permuted;
};

namespace detail {

template <class Stat>
bool at_least(const Stat& perm, const Stat& observed) {
  if constexpr (std::is_floating_point_v<Stat>) {
    // floating statistics: values equal up to rounding count as ties
    return perm >= observed - 1e-9 * std::abs(observed);
  } else {
    return !(perm < observed);
  }
}

template <class Stat>
double as_double(const Stat& s) {
  if constexpr (std::is_floating_point_v<Stat>) return static_cast<double>(s);
  else if constexpr (std::is_integral_v<Stat>) return static_cast<double>(s);
  else return boost::rational_cast<double>(s);
}

}  // namespace detail

/// Add-one Monte Carlo permutation p-value:
///   p = (1 + #{r : T_r >= T_obs}) / (B + 1),
/// and the empirical (1 - alpha) quantile of {T_obs} U {T_r} as the critical
/// value. `replicate(r, rng)` computes the statistic for replicate r from its
/// own random substream, so results do not depend on the thread count.
template <class Stat, class Replicate>
Calibration permutation_calibrate(const Stat& observed,
                                  const PermutationPlan& plan, double alpha,
                                  Replicate&& replicate) {
  if (plan.B < 1) throw Error("need at least one permutation");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  std::vector<Stat> stats(plan.B);
  parallel_for(plan.B, plan.threads, [&](std::size_t r) {
    std::mt19937_64 rng(plan.replicate_seed(r));
    stats[r] = replicate(r, rng);
  });

  Calibration cal;
  cal.permuted.reserve(plan.B);
  for (const auto& s : stats) {
    cal.count_at_least += detail::at_least(s, observed);
    cal.permuted.push_back(detail::as_double(s));
  }
  const double total = static_cast<double>(plan.B + 1);
  cal.p_value = static_cast<double>(1 + cal.count_at_least) / total;

  std::vector<double> all = cal.permuted;
  all.push_back(detail::as_double(observed));
  std::sort(all.begin(), all.end());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * total - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, all.size());
  cal.critical_value = all[rank - 1];
  return cal;
}

inline std::vector<Label> labels_of(const TwoSample& ts) {
  std::vector<Label> labels(ts.n());
  for (std::size_t i = 0; i < ts.n(); ++i) labels[i] = ts.label(i);
  return labels;
}

// ---------------------------------------------------------------------------
// Graph TV test
// ---------------------------------------------------------------------------

/// Graph TV statistic under an arbitrary labelling of the pooled points.
inline Rational graph_tv_statistic(std::span<const Label> labels,
                                   const Graph& g) {
  const auto w = assignment_for_labels(labels);
  std::int64_t n1 = 0;
  for (Label l : labels) n1 += l == Label::X;
  const auto n2 = static_cast<std::int64_t>(labels.size()) - n1;
  return solve_weighted_exact(w, n1 * n2, g).value;
}

/// Permutation-calibrated graph TV two-sample test. Labels are permuted over
/// the fixed points and graph.
inline TestReport permutation_test(const TwoSample& ts, const Graph& g,
                                   const PermutationPlan& plan, double alpha,
                                   GraphMeta meta = {}) {
  if (g.n_vertices() != ts.n()) throw Error("graph does not match sample");
  const GtvResult observed = solve_gtv_ipm(ts, g);
  const auto base = labels_of(ts);
  const auto cal = permutation_calibrate(
      observed.value, plan, alpha, [&](std::size_t, std::mt19937_64& rng) {
        auto labels = base;
        std::shuffle(labels.begin(), labels.end(), rng);
        return graph_tv_statistic(labels, g);
      });

  TestReport rep;
  rep.statistic = boost::rational_cast<double>(observed.value);
  rep.statistic_exact = observed.value;
  rep.p_value = cal.p_value;
  rep.critical_value = cal.critical_value;
  rep.alpha = alpha;
  rep.n_permutations = plan.B;
  rep.reject = rep.p_value <= alpha;
  rep.witness = observed.witness;
  rep.seed = plan.seed;
  rep.method = TestMethod::GraphTv;
  if (meta.type.empty()) meta = {"custom", 0.0, g.n_edges()};
  rep.graph_meta = meta;
  return rep;
}

inline TestReport permutation_test(const TwoSample& ts, const GraphSpec& spec,
                                   const PermutationPlan& plan, double alpha) {
  const Graph g = spec.build(ts.points());
  return permutation_test(ts, g, plan, alpha, spec.meta(g, ts.n(), ts.dim()));
}

// ---------------------------------------------------------------------------
// Chi-squared-type binned test
// ---------------------------------------------------------------------------

inline std::int64_t chi_squared_counts(std::span<const std::int64_t> cx,
                                       std::span<const std::int64_t> cy) {
  std::int64_t s = 0;
  for (std::size_t c = 0; c < cx.size(); ++c) {
    const std::int64_t diff = cx[c] - cy[c];
    s += diff * diff;
  }
  return s;
}

/// K = sum over cells of (count_x - count_y)^2.
inline std::int64_t chi_squared_stat(const Binning& b) {
  return chi_squared_counts(b.counts_x, b.counts_y);
}

inline TestReport chi_squared_test(const TwoSample& ts, double eps,
                                   const PermutationPlan& plan, double alpha) {
  const Binning b = bin_partition(ts, eps);
  const std::int64_t observed = chi_squared_stat(b);
  const auto base = labels_of(ts);
  const auto cal = permutation_calibrate(
      observed, plan, alpha, [&](std::size_t, std::mt19937_64& rng) {
        auto labels = base;
        std::shuffle(labels.begin(), labels.end(), rng);
        std::vector<std::int64_t> cx, cy;
        b.recount(labels, cx, cy);
        return chi_squared_counts(cx, cy);
      });
  TestReport rep;
  rep.statistic = static_cast<double>(observed);
  rep.statistic_exact = Rational(observed);
  rep.p_value = cal.p_value;
  rep.critical_value = cal.critical_value;
  rep.alpha = alpha;
  rep.n_permutations = plan.B;
  rep.reject = rep.p_value <= alpha;
  rep.seed = plan.seed;
  rep.method = TestMethod::ChiSquared;
  rep.graph_meta = {"bins", eps, 0};
  return rep;
}

// ---------------------------------------------------------------------------
// Binned graph TV test on the torus graph
// ---------------------------------------------------------------------------

/// Cell-averaged assignment (cx/n1 - cy/n2) / n(cell), 0 for empty cells,
/// then centred to sum to zero over all cells.
inline std::vector<double> binned_weights(std::span<const std::int64_t> cx,
                                          std::span<const std::int64_t> cy,
                                          std::size_t n1, std::size_t n2) {
  std::vector<double> w(cx.size(), 0.0);
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  for (std::size_t c = 0; c < cx.size(); ++c) {
    const std::int64_t count = cx[c] + cy[c];
    if (count > 0)
      w[c] = (static_cast<double>(cx[c]) / dn1 - static_cast<double>(cy[c]) / dn2) /
             static_cast<double>(count);
  }
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= static_cast<double>(w.size());
  for (double& x : w) x -= mean;
  return w;
}

inline std::vector<double> binned_weights(const Binning& b) {
  return binned_weights(b.counts_x, b.counts_y, b.n1, b.n2);
}

/// Binned graph TV statistic: graph TV IPM on the torus over cells with the
/// centred cell-averaged assignment as vertex weights.
inline RealGtvResult binned_graph_tv_statistic(const Binning& b,
                                               const Graph& torus) {
  const auto w = binned_weights(b);
  return solve_weighted_real(w, torus);
}

inline TestReport binned_graph_tv_test(const TwoSample& ts, double eps,
                                       const PermutationPlan& plan,
                                       double alpha) {
  const Binning b = bin_partition(ts, eps);
  if (b.N < 2) throw Error("binned graph TV needs at least 2 cells per axis");
  const Graph torus = torus_graph(b.N, b.d);
  const RealGtvResult observed = binned_graph_tv_statistic(b, torus);
  const auto base = labels_of(ts);
  const auto cal = permutation_calibrate(
      observed.value, plan, alpha, [&](std::size_t, std::mt19937_64& rng) {
        auto labels = base;
        std::shuffle(labels.begin(), labels.end(), rng);
        std::vector<std::int64_t> cx, cy;
        b.recount(labels, cx, cy);
        const auto w = binned_weights(cx, cy, b.n1, b.n2);
        return solve_weighted_real(w, torus).value;
      });
  TestReport rep;
  rep.statistic = observed.value;
  rep.p_value = cal.p_value;
  rep.critical_value = cal.critical_value;
  rep.alpha = alpha;
  rep.n_permutations = plan.B;
  rep.reject = rep.p_value <= alpha;
  rep.witness = observed.witness;  // cell indices
  rep.seed = plan.seed;
  rep.method = TestMethod::BinnedGraphTv;
  rep.graph_meta = {"torus", eps, torus.n_edges()};
  return rep;
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

/// Draws n points from the reference distribution using the given seed.
using ReferenceSampler =
    std::function<std::vector<Point>(std::size_t n, std::uint64_t seed)>;
using Reference = std::variant<std::vector<Point>, ReferenceSampler>;

/// One-sample test of x against a reference distribution known through a
/// sample or a sampler. n0 defaults to |x| for samplers; for a supplied
/// sample the first n0 points are used (all of them when n0 is omitted).
inline TestReport gof_test(std::vector<Point> x, const Reference& reference,
                           std::optional<std::size_t> n0,
                           const GraphSpec& spec, const PermutationPlan& plan,
                           double alpha) {
  std::vector<Point> ref;
  if (const auto* sample = std::get_if<std::vector<Point>>(&reference)) {
    const std::size_t take = n0.value_or(sample->size());
    if (take > sample->size())
      throw Error("n0 exceeds the size of the reference sample");
    ref.assign(sample->begin(), sample->begin() + static_cast<std::ptrdiff_t>(take));
  } else {
    const std::size_t take = n0.value_or(x.size());
    if (take < 1) throw Error("n0 must be >= 1");
    ref = std::get<ReferenceSampler>(reference)(take, substream_seed(plan.seed, ~0ULL));
    if (ref.size() != take) throw Error("sampler returned the wrong count");
  }
  const TwoSample ts(std::move(x), std::move(ref));
  return permutation_test(ts, spec, plan, alpha);
}

// ---------------------------------------------------------------------------
// Regression (specification) testing
// ---------------------------------------------------------------------------

/// Tests mu = mu0 from residuals e_i = U_i - mu0(Z_i) on a graph over the
/// covariates. Residuals are centred (a constant theta has zero graph TV,
/// so uncentred residuals make the supremum infinite); calibration permutes
/// the residuals over the vertices.
inline TestReport regression_test(std::span<const double> residuals,
                                  const Graph& g, const PermutationPlan& plan,
                                  double alpha, GraphMeta meta = {}) {
  if (residuals.size() != g.n_vertices())
    throw Error("residual count does not match the graph");
  std::vector<double> e(residuals.begin(), residuals.end());
  double mean = 0.0, before = 0.0, after = 0.0;
  for (double x : e) mean += x;
  mean /= static_cast<double>(e.size());
  for (double& x : e) {
    before += std::abs(x);
    x -= mean;
    after += std::abs(x);
  }
  // constant residuals leave only rounding noise after centring
  if (after <= 1e-12 * before) std::fill(e.begin(), e.end(), 0.0);

  const RealGtvResult observed = solve_weighted_real(e, g);
  const auto cal = permutation_calibrate(
      observed.value, plan, alpha, [&](std::size_t, std::mt19937_64& rng) {
        auto perm = e;
        std::shuffle(perm.begin(), perm.end(), rng);
        return solve_weighted_real(perm, g).value;
      });
  TestReport rep;
  rep.statistic = observed.value;
  rep.p_value = cal.p_value;
  rep.critical_value = cal.critical_value;
  rep.alpha = alpha;
  rep.n_permutations = plan.B;
  rep.reject = rep.p_value <= alpha;
  rep.witness = observed.witness;
  rep.seed = plan.seed;
  rep.method = TestMethod::GraphTv;
  if (meta.type.empty()) meta = {"custom", 0.0, g.n_edges()};
  rep.graph_meta = meta;
  return rep;
}

inline TestReport regression_test(std::span<const Point> z,
                                  std::span<const double> residuals,
                                  const GraphSpec& spec,
                                  const PermutationPlan& plan, double alpha) {
  if (z.size() != residuals.size())
    throw Error("residual count does not match the covariates");
  const Graph g = spec.build(z);
  return regression_test(residuals, g, plan, alpha,
                         spec.meta(g, z.size(), z.empty() ? 1 : z.front().dim()));
}

}  // namespace gtvtest
