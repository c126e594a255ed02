#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gtvtest/core_data.hpp"
#include "gtvtest/errors.hpp"
#include "gtvtest/graph.hpp"
#include "gtvtest/hypothesis.hpp"
#include "gtvtest/parallel.hpp"
#include "gtvtest/solver.hpp"

namespace gtvtest {

// ---------------------------------------------------------------------------
// Illustrative mixture: (1 - pi) Laplace(0,1)^2 + pi Unif(B(center, radius))
// ---------------------------------------------------------------------------

struct IllustrativeDesign {
  std::size_t n1 = 1000;
  std::size_t n2 = 1000;
  double pi_mix = 0.02;
  double eta_ball = 0.5;
  Point x_p{1.0, 5.0};
  Point x_q{5.0, 1.0};
};

inline double standard_laplace(std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution sign(0.5);
  const double e = expo(rng);
  return sign(rng) ? e : -e;
}

/// Uniform on the closed ball, by rejection from the bounding cube.
inline Point uniform_in_ball(const Point& center, double radius,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t d = center.dim();
  std::vector<double> v(d);
  while (true) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      v[k] = u(rng);
      r2 += v[k] * v[k];
    }
    if (r2 <= 1.0) break;
  }
  for (std::size_t k = 0; k < d; ++k) v[k] = center[k] + radius * v[k];
  return Point(std::move(v));
}

inline std::vector<Point> sample_laplace_mixture(std::size_t n, double pi_mix,
                                                 double eta_ball,
                                                 const Point& center,
                                                 std::mt19937_64& rng) {
  if (pi_mix < 0.0 || pi_mix > 1.0) throw Error("pi must lie in [0, 1]");
  if (!(eta_ball > 0.0)) throw Error("ball radius must be positive");
  std::bernoulli_distribution from_ball(pi_mix);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (from_ball(rng)) {
      out.push_back(uniform_in_ball(center, eta_ball, rng));
    } else {
      std::vector<double> c(center.dim());
      for (double& x : c) x = standard_laplace(rng);
      out.emplace_back(std::move(c));
    }
  }
  return out;
}

inline TwoSample sample_illustrative(std::size_t n1, std::size_t n2,
                                     double pi_mix, double eta_ball,
                                     const Point& x_p, const Point& x_q,
                                     std::uint64_t seed) {
  std::mt19937_64 rng_x(substream_seed(seed, 0));
  std::mt19937_64 rng_y(substream_seed(seed, 1));
  auto xs = sample_laplace_mixture(n1, pi_mix, eta_ball, x_p, rng_x);
  auto ys = sample_laplace_mixture(n2, pi_mix, eta_ball, x_q, rng_y);
  return TwoSample(std::move(xs), std::move(ys));
}

inline TwoSample sample_illustrative(const IllustrativeDesign& d,
                                     std::uint64_t seed) {
  return sample_illustrative(d.n1, d.n2, d.pi_mix, d.eta_ball, d.x_p, d.x_q,
                             seed);
}

// ---------------------------------------------------------------------------
// Spatially localised alternatives on (0,1)^d
// ---------------------------------------------------------------------------

/// Density 1 + (s/2) phi on (0,1)^d, where phi is +1 on the lower corner
/// sub-cube and -1 on the upper corner sub-cube (each of side eta/2) of the
/// cube j/N + (-eta, 0]^d, N = 1/eta, j in {1..N}^d.
///
/// `offset` shifts the cube by offset*eta along every axis; 0 gives the
/// grid-aligned family.
struct LocalizedAlternative {
  std::size_t d = 2;
  double eta = 0.1;
  double s = 1.0;
  std::vector<std::size_t> cube_index;  // 1-based; empty = central cube
  double offset = 0.0;

  std::size_t cubes_per_axis() const {
    const double inv = 1.0 / eta;
    const double r = std::round(inv);
    if (!(eta > 0.0 && eta <= 1.0) || std::abs(inv - r) > 1e-9 * r)
      throw Error("1/eta must be a positive integer");
    return static_cast<std::size_t>(r);
  }

  void validate() const {
    if (d < 1) throw Error("dimension must be >= 1");
    if (s < 0.0 || s > 2.0) throw Error("signal strength s must lie in [0, 2]");
    const std::size_t N = cubes_per_axis();
    if (!cube_index.empty()) {
      if (cube_index.size() != d) throw DimensionMismatch("cube index has wrong dimension");
      for (std::size_t j : cube_index)
        if (j < 1 || j > N) throw Error("cube index out of range");
    }
    for (std::size_t k = 0; k < d; ++k) {
      const double lo = lower(k);
      if (lo < -1e-12 || lo + eta > 1.0 + 1e-12)
        throw Error("shifted cube leaves the unit cube");
    }
  }

  std::size_t index(std::size_t k) const {
    if (!cube_index.empty()) return cube_index[k];
    return (cubes_per_axis() + 1) / 2;
  }

  /// Lower corner of the cube along axis k.
  double lower(std::size_t k) const {
    const double N = static_cast<double>(cubes_per_axis());
    return (static_cast<double>(index(k)) - 1.0) / N + offset * eta;
  }

  double half_volume() const {
    return std::pow(eta / 2.0, static_cast<double>(d));
  }
};

struct RegionMasses {
  double lower, upper, rest;
};

inline RegionMasses localized_region_masses(const LocalizedAlternative& alt) {
  const double v = alt.half_volume();
  return {v * (1.0 + alt.s / 2.0), v * (1.0 - alt.s / 2.0), 1.0 - 2.0 * v};
}

/// 0 = outside both corner cubes, 1 = lower cube, 2 = upper cube.
inline int localized_region(const LocalizedAlternative& alt, const Point& p) {
  bool in_lower = true, in_upper = true;
  const double h = alt.eta / 2.0;
  for (std::size_t k = 0; k < alt.d; ++k) {
    const double lo = alt.lower(k);
    const double x = p[k];
    in_lower = in_lower && x > lo && x <= lo + h;
    in_upper = in_upper && x > lo + h && x <= lo + 2.0 * h;
  }
  return in_lower ? 1 : (in_upper ? 2 : 0);
}

/// Exact sampling from the three-region mixture.
inline std::vector<Point> sample_localized(std::size_t n,
                                           const LocalizedAlternative& alt,
                                           std::mt19937_64& rng) {
  alt.validate();
  const RegionMasses m = localized_region_masses(alt);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = alt.eta / 2.0;
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = u(rng);
    std::vector<double> c(alt.d);
    if (pick < m.lower + m.upper) {
      const double shift = pick < m.lower ? 0.0 : h;
      // uniform on the half-open box (lo, lo + h]
      for (std::size_t k = 0; k < alt.d; ++k)
        c[k] = alt.lower(k) + shift + h * (1.0 - u(rng));
      out.emplace_back(std::move(c));
      continue;
    }
    while (true) {
      for (double& x : c) x = u(rng);
      Point p(c);
      if (localized_region(alt, p) == 0) {
        out.push_back(std::move(p));
        break;
      }
    }
  }
  return out;
}

inline std::vector<Point> sample_localized(std::size_t n,
                                           const LocalizedAlternative& alt,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_localized(n, alt, rng);
}

inline std::vector<Point> sample_uniform(std::size_t n, std::size_t d,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> c(d);
    for (double& x : c) x = u(rng);
    out.emplace_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ROC / AUC
// ---------------------------------------------------------------------------

/// P(H1 stat > H0 stat) + P(tie)/2 via mid-ranks (Mann-Whitney U).
inline double roc_auc(std::span<const double> h0, std::span<const double> h1) {
  if (h0.empty() || h1.empty()) throw Error("AUC needs non-empty samples");
  struct Item {
    double v;
    bool alt;
  };
  std::vector<Item> all;
  all.reserve(h0.size() + h1.size());
  for (double v : h0) all.push_back({v, false});
  for (double v : h1) all.push_back({v, true});
  std::sort(all.begin(), all.end(),
            [](const Item& a, const Item& b) { return a.v < b.v; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t alts = 0;
    while (j < all.size() && all[j].v == all[i].v) alts += all[j++].alt;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mid_rank * static_cast<double>(alts);
    i = j;
  }
  const double n0 = static_cast<double>(h0.size());
  const double n1 = static_cast<double>(h1.size());
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);
}

/// Hanley-McNeil standard error of an AUC estimate.
inline double auc_standard_error(double auc, std::size_t n0, std::size_t n1) {
  const double q1 = auc / (2.0 - auc);
  const double q2 = 2.0 * auc * auc / (1.0 + auc);
  const double a = static_cast<double>(n1), b = static_cast<double>(n0);
  const double var = (auc * (1.0 - auc) + (a - 1.0) * (q1 - auc * auc) +
                      (b - 1.0) * (q2 - auc * auc)) /
                     (a * b);
  return std::sqrt(std::max(var, 0.0));
}

struct BootstrapInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Percentile bootstrap for AUC(a) - AUC(b) when both tests were evaluated
/// on the same simulated datasets: H0 and H1 trials are resampled
/// independently, with the same indices for both tests.
inline BootstrapInterval bootstrap_auc_difference(
    std::span<const double> h0_a, std::span<const double> h1_a,
    std::span<const double> h0_b, std::span<const double> h1_b,
    std::size_t reps, std::uint64_t seed, double level = 0.95) {
  if (h0_a.size() != h0_b.size() || h1_a.size() != h1_b.size())
    throw Error("paired bootstrap needs matching trial counts");
  BootstrapInterval out;
  out.estimate = roc_auc(h0_a, h1_a) - roc_auc(h0_b, h1_b);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick0(0, h0_a.size() - 1);
  std::uniform_int_distribution<std::size_t> pick1(0, h1_a.size() - 1);
  std::vector<double> diffs(reps);
  std::vector<double> a0(h0_a.size()), b0(h0_a.size()), a1(h1_a.size()),
      b1(h1_a.size());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < a0.size(); ++i) {
      const std::size_t k = pick0(rng);
      a0[i] = h0_a[k];
      b0[i] = h0_b[k];
    }
    for (std::size_t i = 0; i < a1.size(); ++i) {
      const std::size_t k = pick1(rng);
      a1[i] = h1_a[k];
      b1[i] = h1_b[k];
    }
    diffs[r] = roc_auc(a0, a1) - roc_auc(b0, b1);
  }
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - level) / 2.0;
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        std::clamp(q * static_cast<double>(reps - 1), 0.0,
                   static_cast<double>(reps - 1)));
    return diffs[idx];
  };
  out.lower = at(tail);
  out.upper = at(1.0 - tail);
  return out;
}

// ---------------------------------------------------------------------------
// Power study
// ---------------------------------------------------------------------------

struct StudyTest {
  TestMethod method = TestMethod::GraphTv;
  GraphSpec graph = GraphSpec::knn(10);  // for GraphTv
  double bin_eps = 0.02;                 // for the binned tests

  std::string name() const {
    switch (method) {
      case TestMethod::GraphTv:
        return graph.kind == GraphSpec::Kind::Knn
                   ? "graph_tv(knn=" + std::to_string(graph.k) + ")"
                   : "graph_tv(eps)";
      case TestMethod::BinnedGraphTv:
        return "binned_graph_tv(" + std::to_string(bin_eps) + ")";
      case TestMethod::ChiSquared:
        return "chi_squared(" + std::to_string(bin_eps) + ")";
    }
    return "unknown";
  }
};

enum class Design { Illustrative, Localized };

struct StudyConfig {
  Design design = Design::Localized;
  IllustrativeDesign illustrative;
  LocalizedAlternative localized;
  std::vector<StudyTest> tests;
  std::size_t n1 = 100;
  std::size_t n2 = 100;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct StudyRow {
  std::string method;
  double eta = 0.0;
  double s = 0.0;
  double auc = 0.0;
  double auc_se = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<std::vector<double>> h0_stats;  // [test][trial]
  std::vector<std::vector<double>> h1_stats;
};

/// Test statistic without calibration. A disconnected neighbourhood graph
/// yields +infinity (some component then carries unbalanced mass).
inline double study_statistic(const StudyTest& t, const TwoSample& ts) {
  switch (t.method) {
    case TestMethod::GraphTv: {
      const Graph g = t.graph.build(ts.points());
      if (!is_connected(g)) return std::numeric_limits<double>::infinity();
      return boost::rational_cast<double>(solve_gtv_ipm(ts, g).value);
    }
    case TestMethod::BinnedGraphTv: {
      const Binning b = bin_partition(ts, t.bin_eps);
      return binned_graph_tv_statistic(b, torus_graph(b.N, b.d)).value;
    }
    case TestMethod::ChiSquared:
      return static_cast<double>(chi_squared_stat(bin_partition(ts, t.bin_eps)));
  }
  return 0.0;
}

/// Draws one dataset; `alternative` selects H1 over H0.
inline TwoSample study_dataset(const StudyConfig& cfg, bool alternative,
                               std::uint64_t seed) {
  std::mt19937_64 rx(substream_seed(seed, 0)), ry(substream_seed(seed, 1));
  if (cfg.design == Design::Illustrative) {
    const auto& d = cfg.illustrative;
    // H0: both samples from the X mixture; H1: X mixture vs Y mixture
    auto xs = sample_laplace_mixture(cfg.n1, d.pi_mix, d.eta_ball, d.x_p, rx);
    auto ys = sample_laplace_mixture(cfg.n2, d.pi_mix, d.eta_ball,
                                     alternative ? d.x_q : d.x_p, ry);
    return TwoSample(std::move(xs), std::move(ys));
  }
  const auto& alt = cfg.localized;
  auto xs = sample_uniform(cfg.n1, alt.d, rx);
  auto ys = alternative ? sample_localized(cfg.n2, alt, ry)
                        : sample_uniform(cfg.n2, alt.d, ry);
  return TwoSample(std::move(xs), std::move(ys));
}

inline StudyResult run_power_study(const StudyConfig& cfg) {
  if (cfg.trials < 1) throw Error("need at least one trial");
  if (cfg.tests.empty()) throw Error("no tests configured");
  if (cfg.design == Design::Localized) cfg.localized.validate();
  const std::size_t T = cfg.tests.size();
  StudyResult res;
  res.h0_stats.assign(T, std::vector<double>(cfg.trials));
  res.h1_stats.assign(T, std::vector<double>(cfg.trials));
  parallel_for(2 * cfg.trials, cfg.threads, [&](std::size_t job) {
    const std::size_t trial = job / 2;
    const bool alternative = job % 2 == 1;
    const TwoSample ts = study_dataset(cfg, alternative, substream_seed(cfg.seed, job));
    for (std::size_t t = 0; t < T; ++t)
      (alternative ? res.h1_stats : res.h0_stats)[t][trial] =
          study_statistic(cfg.tests[t], ts);
  });
  for (std::size_t t = 0; t < T; ++t) {
    StudyRow row;
    row.method = cfg.tests[t].name();
    row.eta = cfg.design == Design::Localized ? cfg.localized.eta
                                              : cfg.illustrative.eta_ball;
    row.s = cfg.design == Design::Localized ? cfg.localized.s
                                            : cfg.illustrative.pi_mix;
    row.auc = roc_auc(res.h0_stats[t], res.h1_stats[t]);
    row.auc_se = auc_standard_error(row.auc, cfg.trials, cfg.trials);
    row.trials = cfg.trials;
    row.seed = cfg.seed;
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace gtvtest
