#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"
#include "gtvtest/graph.hpp"
#include "gtvtest/mincut.hpp"

namespace gtvtest {

/// Outcome of a graph TV IPM solve. For the exact path T = Rational; for
/// real-valued vertex weights T = double.
template <class T>
struct BasicGtvResult {
  T value{};
  std::vector<std::size_t> witness;  // empty when value == 0
  std::size_t iterations = 0;        // number of max-flow calls
  std::vector<T> lambda_trace;
};

using GtvResult = BasicGtvResult<Rational>;
using RealGtvResult = BasicGtvResult<double>;

enum class SolveMethod { Dinkelbach, Bisection };

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

/// ||D_G theta||_1: both orientations of every edge are counted.
template <class T>
T graph_tv(std::span<const T> theta, const Graph& g) {
  if (theta.size() != g.n_vertices()) throw Error("theta has wrong length");
  T s{};
  for (const auto& [i, j] : g.edges()) {
    const T diff = theta[i] - theta[j];
    s += diff < T{} ? -diff : diff;
  }
  return s + s;
}

inline double graph_tv(const std::vector<double>& theta, const Graph& g) {
  return graph_tv<double>(std::span<const double>(theta), g);
}

/// R_G(theta) = a^T theta / ||D_G theta||_1, or -infinity when the
/// denominator vanishes.
inline double ratio(std::span<const double> theta, const TwoSample& ts,
                    const Graph& g) {
  if (theta.size() != ts.n()) throw Error("theta has wrong length");
  const double tv = graph_tv<double>(theta, g);
  if (tv == 0.0) return -std::numeric_limits<double>::infinity();
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i < ts.n(); ++i)
    (i < ts.n1() ? x : y) += theta[i];
  const double num = x / static_cast<double>(ts.n1()) -
                     y / static_cast<double>(ts.n2());
  return num / tv;
}

/// Exact ratio for rational theta; std::nullopt stands for -infinity.
inline std::optional<Rational> ratio_exact(std::span<const Rational> theta,
                                           const TwoSample& ts,
                                           const Graph& g) {
  if (theta.size() != ts.n()) throw Error("theta has wrong length");
  const Rational tv = graph_tv<Rational>(theta, g);
  if (tv == Rational(0)) return std::nullopt;
  Rational num = 0;
  for (std::size_t i = 0; i < ts.n(); ++i) num += ts.a(i) * theta[i];
  return num / tv;
}

/// R_G(1_S) for an index set, exact.
inline std::optional<Rational> ratio_of_set(std::span<const std::size_t> set,
                                            const TwoSample& ts,
                                            const Graph& g) {
  std::vector<char> in(ts.n(), 0);
  for (std::size_t i : set) in[i] = 1;
  const std::int64_t cut = cut_size(g, in);
  if (cut == 0) return std::nullopt;
  std::int64_t w = 0;
  for (std::size_t i : set) w += ts.a_int(i);
  return Rational(w, 2 * cut) / ts.scale();
}

// ---------------------------------------------------------------------------
// Exact Dinkelbach solver on integer weights
// ---------------------------------------------------------------------------

namespace detail {

inline void require_solvable(const Graph& g) {
  if (g.n_vertices() < 2) throw Error("need at least two vertices");
  if (!is_connected(g)) throw GraphDisconnected("graph TV IPM is infinite");
}

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b);
}

}  // namespace detail

/// Maximises w(S) / (2 scale cut(S)) over vertex sets S for integer weights
/// w summing to zero. Dinkelbach iteration on the unit ratio
/// rho = w(S)/cut(S): each step solves max_S cut_den*w(S) - rho_num*cut(S)
/// with one min cut and moves rho to the ratio of the maximiser. The
/// sequence strictly increases and stops exactly when the maximum is 0.
inline GtvResult solve_weighted_exact(std::span<const std::int64_t> w,
                                      std::int64_t scale, const Graph& g) {
  if (w.size() != g.n_vertices()) throw Error("weight/graph size mismatch");
  if (scale <= 0) throw Error("scale must be positive");
  detail::require_solvable(g);
  __int128 total = 0, positive = 0;
  for (std::int64_t x : w) {
    total += x;
    positive += x > 0 ? x : 0;
  }
  if (total != 0) throw Error("vertex weights must sum to zero");
  constexpr auto kMax =
      static_cast<__int128>(std::numeric_limits<std::int64_t>::max());

  GtvResult res;
  std::int64_t num = 0, den = 1;  // current unit ratio
  res.lambda_trace.push_back(Rational(0));
  std::vector<std::int64_t> c(w.size());
  std::vector<std::size_t> witness;

  while (true) {
    if (positive * den > kMax)
      throw CapacityOverflow("Dinkelbach capacities exceed 64 bits");
    for (std::size_t i = 0; i < w.size(); ++i) c[i] = den * w[i];
    const auto wc = max_weight_minus_cut<std::int64_t>(c, g, num);
    ++res.iterations;
    if (wc.objective <= 0) break;

    std::int64_t ws = 0, cut = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (wc.in_set[i]) ws += w[i];
    cut = cut_size(g, wc.in_set);
    const std::int64_t gg = detail::gcd64(ws, cut);
    ws /= gg;
    cut /= gg;
    if (static_cast<__int128>(ws) * den <= static_cast<__int128>(num) * cut)
      throw Error("internal: Dinkelbach ratio failed to increase");
    num = ws;
    den = cut;
    witness.clear();
    for (std::size_t i = 0; i < w.size(); ++i)
      if (wc.in_set[i]) witness.push_back(i);
    res.lambda_trace.push_back(Rational(num, den) / (2 * scale));
  }
  res.value = Rational(num, den) / (2 * scale);
  res.witness = std::move(witness);
  return res;
}

// ---------------------------------------------------------------------------
// Floating solver for real-valued weights (regression residuals, binned
// averages)
// ---------------------------------------------------------------------------

/// Maximises w(S) / (2 cut(S)) for real weights summing to zero (up to
/// rounding). Same Dinkelbach scheme as the exact solver; termination uses
/// a relative tolerance on the cut objective.
inline RealGtvResult solve_weighted_real(std::span<const double> w,
                                         const Graph& g) {
  if (w.size() != g.n_vertices()) throw Error("weight/graph size mismatch");
  detail::require_solvable(g);
  double total = 0.0, mass = 0.0;
  for (double x : w) {
    if (!std::isfinite(x)) throw Error("non-finite vertex weight");
    total += x;
    mass += std::abs(x);
  }
  if (std::abs(total) > 1e-9 * std::max(mass, 1e-300))
    throw Error("vertex weights must sum to zero (centre them first)");

  RealGtvResult res;
  res.lambda_trace.push_back(0.0);
  if (mass == 0.0) {
    res.iterations = 0;
    return res;
  }
  const double flow_tol = 1e-13 * mass;
  const double stop_tol = 1e-11 * mass;
  const std::size_t max_iter = 4 * g.n_vertices() + 64;

  double rho = 0.0;
  std::vector<std::size_t> witness;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const auto wc = max_weight_minus_cut<double>(w, g, rho, flow_tol);
    ++res.iterations;
    if (!(wc.objective > stop_tol)) break;
    double ws = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (wc.in_set[i]) ws += w[i];
    const std::int64_t cut = cut_size(g, wc.in_set);
    if (cut == 0) break;
    const double next = ws / static_cast<double>(cut);
    if (!(next > rho)) break;
    rho = next;
    witness.clear();
    for (std::size_t i = 0; i < w.size(); ++i)
      if (wc.in_set[i]) witness.push_back(i);
    res.lambda_trace.push_back(rho / 2.0);
  }
  res.value = rho / 2.0;
  res.witness = std::move(witness);
  return res;
}

/// Bisection on lambda with M(lambda) evaluated in floating point, started
/// from [0, sum of positive weights / 2] and run until the bracket is below
/// `tol`. Kept for cross-checking the Dinkelbach solver.
inline RealGtvResult solve_weighted_bisection(std::span<const double> w,
                                              const Graph& g,
                                              double tol = 1e-12) {
  if (w.size() != g.n_vertices()) throw Error("weight/graph size mismatch");
  detail::require_solvable(g);
  double positive = 0.0, mass = 0.0;
  for (double x : w) {
    positive += x > 0 ? x : 0.0;
    mass += std::abs(x);
  }
  RealGtvResult res;
  double lo = 0.0, hi = positive / 2.0;
  const double flow_tol = 1e-14 * std::max(mass, 1e-300);
  std::vector<double> c(w.begin(), w.end());
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const auto wc = max_weight_minus_cut<double>(c, g, 2.0 * mid, flow_tol);
    ++res.iterations;
    res.lambda_trace.push_back(mid);
    if (wc.objective > flow_tol * 10.0) {
      lo = mid;
      res.witness.clear();
      for (std::size_t i = 0; i < w.size(); ++i)
        if (wc.in_set[i]) res.witness.push_back(i);
    } else {
      hi = mid;
    }
  }
  res.value = 0.5 * (lo + hi);
  return res;
}

// ---------------------------------------------------------------------------
// Two-sample entry points
// ---------------------------------------------------------------------------

/// Exact graph TV IPM d_{TV(G)}(X, Y) with a binary witness set.
inline GtvResult solve_gtv_ipm(const TwoSample& ts, const Graph& g) {
  if (g.n_vertices() != ts.n()) throw Error("graph does not match sample");
  const auto w = ts.assignment_int();
  return solve_weighted_exact(w, ts.scale(), g);
}

inline RealGtvResult solve_gtv_ipm(const TwoSample& ts, const Graph& g,
                                   SolveMethod method) {
  if (method == SolveMethod::Dinkelbach) {
    const GtvResult r = solve_gtv_ipm(ts, g);
    RealGtvResult out;
    out.value = boost::rational_cast<double>(r.value);
    out.witness = r.witness;
    out.iterations = r.iterations;
    for (const auto& l : r.lambda_trace)
      out.lambda_trace.push_back(boost::rational_cast<double>(l));
    return out;
  }
  std::vector<double> w(ts.n());
  for (std::size_t i = 0; i < ts.n(); ++i)
    w[i] = boost::rational_cast<double>(ts.a(i));
  return solve_weighted_bisection(w, g);
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

inline constexpr std::size_t kBruteForceMaxVertices = 20;

/// max over binary theta of w^T theta / (2 cut) by enumerating all subsets,
/// exact for integer weights. Sets with zero cut are skipped (R = -inf).
inline Rational brute_force_weighted(std::span<const std::int64_t> w,
                                     std::int64_t scale, const Graph& g,
                                     std::vector<std::size_t>* argmax = nullptr) {
  const std::size_t n = g.n_vertices();
  if (n > kBruteForceMaxVertices) throw TooLarge("brute force needs n <= 20");
  std::int64_t best_num = 0, best_den = 1;
  bool found = false;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask + 1 < (std::uint32_t{1} << n); ++mask) {
    std::int64_t cut = 0;
    for (const auto& [i, j] : g.edges())
      cut += ((mask >> i) & 1U) != ((mask >> j) & 1U);
    if (cut == 0) continue;
    std::int64_t ws = 0;
    for (std::size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1U) ws += w[i];
    if (!found || static_cast<__int128>(ws) * best_den >
                      static_cast<__int128>(best_num) * cut) {
      best_num = ws;
      best_den = cut;
      best_mask = mask;
      found = true;
    }
  }
  if (!found) throw Error("no set with positive cut (graph has no edges)");
  if (argmax) {
    argmax->clear();
    for (std::size_t i = 0; i < n; ++i)
      if ((best_mask >> i) & 1U) argmax->push_back(i);
  }
  return Rational(best_num, best_den) / (2 * scale);
}

inline double brute_force_weighted_real(std::span<const double> w,
                                        const Graph& g) {
  const std::size_t n = g.n_vertices();
  if (n > kBruteForceMaxVertices) throw TooLarge("brute force needs n <= 20");
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask + 1 < (std::uint32_t{1} << n); ++mask) {
    std::int64_t cut = 0;
    for (const auto& [i, j] : g.edges())
      cut += ((mask >> i) & 1U) != ((mask >> j) & 1U);
    if (cut == 0) continue;
    double ws = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if ((mask >> i) & 1U) ws += w[i];
    best = std::max(best, ws / (2.0 * static_cast<double>(cut)));
  }
  return best;
}

inline Rational brute_force_gtv(const TwoSample& ts, const Graph& g) {
  if (ts.n() > kBruteForceMaxVertices) throw TooLarge("brute force needs n <= 20");
  const auto w = ts.assignment_int();
  return brute_force_weighted(w, ts.scale(), g);
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct Diagnostics {
  Rational acc;              // classification accuracy above 1/2
  std::int64_t plex = 0;     // discordant adjacent unordered pairs
  std::int64_t cut = 0;      // cut_G(S)
  Rational bal;              // (1/2)|a(S)|
  Rational bal_complement;   // (1/2)|a(S^c)|
  std::optional<Rational> acc_over_plex;
  double rescaled_value = std::numeric_limits<double>::quiet_NaN();
};

/// sigma_d = integral over the unit ball of |x_1|, i.e. 2 V_{d-1} / (d+1)
/// with V_k the volume of the unit k-ball.
inline double sigma_constant(std::size_t d) {
  if (d == 0) throw Error("dimension must be >= 1");
  const double k = static_cast<double>(d - 1);
  const double ball = std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0);
  return 2.0 * ball / (static_cast<double>(d) + 1.0);
}

/// sigma_d n^2 eps^{d+1} value; the scaling under which the eps-graph
/// statistic has a continuum limit.
inline double rescaled_statistic(double value, std::size_t n, double eps,
                                 std::size_t d) {
  const double nn = static_cast<double>(n);
  return sigma_constant(d) * nn * nn *
         std::pow(eps, static_cast<double>(d) + 1.0) * value;
}

inline Diagnostics diagnostics(const GtvResult& result, const TwoSample& ts,
                               const Graph& g,
                               std::optional<double> eps = std::nullopt) {
  std::vector<char> in(ts.n(), 0);
  for (std::size_t i : result.witness) in[i] = 1;
  std::int64_t x_in = 0, y_out = 0, w = 0;
  for (std::size_t i = 0; i < ts.n(); ++i) {
    if (i < ts.n1()) x_in += in[i];
    else y_out += !in[i];
    if (in[i]) w += ts.a_int(i);
  }
  const auto n1 = static_cast<std::int64_t>(ts.n1());
  const auto n2 = static_cast<std::int64_t>(ts.n2());
  Diagnostics d;
  d.acc = (Rational(x_in, n1) + Rational(y_out, n2)) / 2 - Rational(1, 2);
  d.cut = cut_size(g, in);
  d.plex = d.cut;
  const Rational a_s = Rational(w, ts.scale());
  d.bal = boost::abs(a_s) / 2;
  d.bal_complement = boost::abs(-a_s) / 2;
  if (d.plex > 0) d.acc_over_plex = d.acc / d.plex;
  if (eps)
    d.rescaled_value = rescaled_statistic(
        boost::rational_cast<double>(result.value), ts.n(), *eps, ts.dim());
  return d;
}

}  // namespace gtvtest
