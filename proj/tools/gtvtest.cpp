#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gtvtest/gtvtest.hpp"

namespace {

using namespace gtvtest;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDisconnected = 3;

struct InputOptions {
  std::string x_path, y_path, data_path;
  std::string label_column = "label";
};

struct GraphOptions {
  std::string eps;  // number or "auto"
  double density_bound = 2.0;
  std::size_t knn = 0;
};

struct RunOptions {
  std::size_t B = 199;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = -1;
  std::string out;
  std::string witness_out;
};

void add_input_flags(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--x", in.x_path, "CSV with the X sample (columns x1..xd)");
  cmd->add_option("--y", in.y_path, "CSV with the Y sample");
  cmd->add_option("--data", in.data_path, "pooled CSV with a label column");
  cmd->add_option("--label-column", in.label_column, "label column holding x/y")
      ->capture_default_str();
}

void add_graph_flags(CLI::App* cmd, GraphOptions& g) {
  cmd->add_option("--eps", g.eps, "neighbourhood radius, or 'auto'");
  cmd->add_option("--B-density", g.density_bound, "density bound B for --eps auto")
      ->capture_default_str();
  cmd->add_option("--knn", g.knn, "k for the symmetrised kNN graph");
}

void add_run_flags(CLI::App* cmd, RunOptions& r, bool witness) {
  cmd->add_option("--B", r.B, "number of permutations")->capture_default_str();
  cmd->add_option("--alpha", r.alpha, "test level")->capture_default_str();
  cmd->add_option("--seed", r.seed, "master seed")->capture_default_str();
  cmd->add_option("--threads", r.threads, "worker threads (0 = all cores)");
  cmd->add_option("--out", r.out, "output path (default stdout)");
  if (witness)
    cmd->add_option("--witness-out", r.witness_out, "per-point witness CSV");
}

unsigned resolve_thread_flag(int flag) {
  if (flag >= 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("GTVTEST_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw IoError(std::string("GTVTEST_THREADS is not a thread count: ") + env);
  }
  return 0;
}

PermutationPlan make_plan(const RunOptions& r) {
  return PermutationPlan{r.B, r.seed, resolve_thread_flag(r.threads)};
}

TwoSample load_two_sample(const InputOptions& in) {
  const bool pair = !in.x_path.empty() || !in.y_path.empty();
  if (pair && !in.data_path.empty())
    throw IoError("use either --x/--y or --data, not both");
  if (pair) {
    if (in.x_path.empty() || in.y_path.empty())
      throw IoError("--x and --y must be given together");
    return TwoSample(io::read_points(io::read_csv_file(in.x_path)),
                     io::read_points(io::read_csv_file(in.y_path)));
  }
  if (in.data_path.empty()) throw IoError("no input: give --x/--y or --data");
  return io::read_labelled(io::read_csv_file(in.data_path), in.label_column);
}

GraphSpec make_graph_spec(const GraphOptions& g) {
  const bool has_eps = !g.eps.empty();
  if (has_eps == (g.knn > 0))
    throw IoError("give exactly one of --eps or --knn");
  if (g.knn > 0) return GraphSpec::knn(g.knn);
  if (g.eps == "auto") return GraphSpec::auto_eps(g.density_bound);
  double e = 0.0;
  try {
    std::size_t used = 0;
    e = std::stod(g.eps, &used);
    if (used != g.eps.size()) throw std::invalid_argument(g.eps);
  } catch (const std::exception&) {
    throw IoError("--eps must be a number or 'auto', got '" + g.eps + "'");
  }
  return GraphSpec::with_eps(e);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void emit_report(const TestReport& rep, const RunOptions& r,
                 std::chrono::steady_clock::time_point start) {
  write_text(r.out, io::report_to_json(rep, elapsed_ms(start)).dump(2) + "\n");
}

void emit_witness(const std::string& path, std::span<const Point> pts,
                  std::span<const Label> labels, std::span<const char> in_witness) {
  if (path.empty()) return;
  std::ostringstream os;
  io::write_points_csv(os, pts, labels, in_witness);
  write_text(path, os.str());
}

std::vector<char> point_membership(std::size_t n, const std::optional<std::vector<std::size_t>>& w) {
  std::vector<char> in(n, 0);
  if (w)
    for (std::size_t i : *w) in[i] = 1;
  return in;
}

std::vector<std::size_t> parse_index_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph total-variation two-sample tests"};
  app.require_subcommand(1);

  InputOptions in;
  GraphOptions gopt;
  RunOptions run;
  double bin = 0.0;

  auto* test = app.add_subcommand("test", "graph TV two-sample permutation test");
  add_input_flags(test, in);
  add_graph_flags(test, gopt);
  add_run_flags(test, run, true);

  auto* chisq = app.add_subcommand("chisq", "binned chi-squared-type permutation test");
  add_input_flags(chisq, in);
  chisq->add_option("--bin", bin, "bin width in (0, 1]")->required();
  add_run_flags(chisq, run, false);

  auto* binned = app.add_subcommand("binned", "binned graph TV test on the torus graph");
  add_input_flags(binned, in);
  binned->add_option("--bin", bin, "bin width in (0, 1]")->required();
  add_run_flags(binned, run, true);

  std::string reference_path;
  std::size_t reference_uniform_d = 0;
  std::optional<std::size_t> n0;
  auto* gof = app.add_subcommand("gof", "goodness-of-fit test against a reference");
  gof->add_option("--x", in.x_path, "CSV with the observed sample")->required();
  auto* ref_opt = gof->add_option("--reference", reference_path, "CSV with a reference sample");
  auto* uni_opt = gof->add_option("--reference-uniform", reference_uniform_d,
                                  "reference Unif(0,1)^d drawn from the seed; value is d");
  ref_opt->excludes(uni_opt);
  gof->add_option("--n0", n0, "reference sample size");
  add_graph_flags(gof, gopt);
  add_run_flags(gof, run, false);

  std::string residual_column = "residual";
  auto* regtest = app.add_subcommand("regtest", "regression specification test on residuals");
  regtest->add_option("--data", in.data_path, "CSV with covariates x1..xd and residuals")
      ->required();
  regtest->add_option("--residual-column", residual_column, "residual column")
      ->capture_default_str();
  add_graph_flags(regtest, gopt);
  add_run_flags(regtest, run, true);

  std::string design = "localized";
  std::size_t sim_n = 0, sim_n1 = 0, sim_n2 = 0, sim_d = 2;
  double eta = 0.1, signal = 1.0, offset = 0.0, pi_mix = 0.02, ball = 0.5;
  std::string cube;
  bool null_design = false;
  auto* simulate = app.add_subcommand("simulate", "write simulated samples as CSV");
  simulate->add_option("--design", design, "illustrative or localized")
      ->check(CLI::IsMember({"illustrative", "localized"}))
      ->capture_default_str();
  simulate->add_option("--n", sim_n, "single localized sample of this size");
  simulate->add_option("--n1", sim_n1, "X sample size (two-sample output)");
  simulate->add_option("--n2", sim_n2, "Y sample size (two-sample output)");
  simulate->add_option("--d", sim_d, "dimension (localized)")->capture_default_str();
  simulate->add_option("--eta", eta, "cube side (localized)")->capture_default_str();
  simulate->add_option("--s", signal, "signal strength in [0, 2]")->capture_default_str();
  simulate->add_option("--cube", cube, "1-based cube index, comma separated");
  simulate->add_option("--offset", offset, "cube shift in units of eta")->capture_default_str();
  simulate->add_option("--pi", pi_mix, "mixture weight (illustrative)")->capture_default_str();
  simulate->add_option("--ball-eta", ball, "ball radius (illustrative)")->capture_default_str();
  simulate->add_flag("--null", null_design, "draw both samples under the null");
  simulate->add_option("--seed", run.seed, "seed")->capture_default_str();
  simulate->add_option("--out", run.out, "output path (default stdout)");

  std::size_t trials = 100;
  std::vector<std::string> methods{"graph_tv", "chi_squared"};
  double chisq_bin = 0.5;
  std::string format = "csv";
  auto* power = app.add_subcommand("power", "ROC/AUC power study");
  power->add_option("--design", design, "illustrative or localized")
      ->check(CLI::IsMember({"illustrative", "localized"}))
      ->capture_default_str();
  power->add_option("--trials", trials, "trials per hypothesis")->capture_default_str();
  power->add_option("--n1", sim_n1, "X sample size");
  power->add_option("--n2", sim_n2, "Y sample size");
  power->add_option("--d", sim_d, "dimension (localized)")->capture_default_str();
  power->add_option("--eta", eta, "cube side (localized)")->capture_default_str();
  power->add_option("--s", signal, "signal strength")->capture_default_str();
  power->add_option("--cube", cube, "1-based cube index, comma separated");
  power->add_option("--offset", offset, "cube shift in units of eta")->capture_default_str();
  power->add_option("--pi", pi_mix, "mixture weight (illustrative)")->capture_default_str();
  power->add_option("--ball-eta", ball, "ball radius (illustrative)")->capture_default_str();
  power->add_option("--methods", methods, "graph_tv, binned_graph_tv, chi_squared")
      ->delimiter(',')
      ->check(CLI::IsMember({"graph_tv", "binned_graph_tv", "chi_squared"}));
  power->add_option("--knn", gopt.knn, "k for graph_tv (default 10)");
  power->add_option("--bin", bin, "bin width for binned_graph_tv (default 0.02)");
  power->add_option("--chisq-bin", chisq_bin, "bin width for chi_squared")
      ->capture_default_str();
  power->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  power->add_option("--seed", run.seed, "master seed")->capture_default_str();
  power->add_option("--threads", run.threads, "worker threads (0 = all cores)");
  power->add_option("--out", run.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (test->parsed()) {
      const TwoSample ts = load_two_sample(in);
      const GraphSpec spec = make_graph_spec(gopt);
      const TestReport rep = permutation_test(ts, spec, make_plan(run), run.alpha);
      emit_report(rep, run, start);
      emit_witness(run.witness_out, ts.points(), labels_of(ts),
                   point_membership(ts.n(), rep.witness));
    } else if (chisq->parsed()) {
      const TwoSample ts = load_two_sample(in);
      emit_report(chi_squared_test(ts, bin, make_plan(run), run.alpha), run, start);
    } else if (binned->parsed()) {
      const TwoSample ts = load_two_sample(in);
      const TestReport rep = binned_graph_tv_test(ts, bin, make_plan(run), run.alpha);
      emit_report(rep, run, start);
      if (!run.witness_out.empty()) {
        const Binning b = bin_partition(ts, bin);
        const auto cells = point_membership(b.n_cells(), rep.witness);
        std::vector<char> in_witness(ts.n());
        for (std::size_t i = 0; i < ts.n(); ++i) in_witness[i] = cells[b.cell_index_of[i]];
        emit_witness(run.witness_out, ts.points(), labels_of(ts), in_witness);
      }
    } else if (gof->parsed()) {
      auto x = io::read_points(io::read_csv_file(in.x_path));
      Reference reference;
      if (!reference_path.empty()) {
        reference = io::read_points(io::read_csv_file(reference_path));
      } else if (reference_uniform_d > 0) {
        const std::size_t d = reference_uniform_d;
        reference = ReferenceSampler([d](std::size_t n, std::uint64_t seed) {
          std::mt19937_64 rng(seed);
          return sample_uniform(n, d, rng);
        });
      } else {
        throw IoError("give --reference or --reference-uniform");
      }
      const GraphSpec spec = make_graph_spec(gopt);
      emit_report(gof_test(std::move(x), reference, n0, spec, make_plan(run), run.alpha),
                  run, start);
    } else if (regtest->parsed()) {
      const auto table = io::read_csv_file(in.data_path);
      const auto z = io::read_points(table);
      const auto e = io::read_column(table, residual_column);
      const GraphSpec spec = make_graph_spec(gopt);
      const TestReport rep = regression_test(z, e, spec, make_plan(run), run.alpha);
      emit_report(rep, run, start);
      emit_witness(run.witness_out, z, {}, point_membership(z.size(), rep.witness));
    } else if (simulate->parsed()) {
      std::ostringstream os;
      if (design == "illustrative") {
        const IllustrativeDesign base;
        StudyConfig cfg;
        cfg.design = Design::Illustrative;
        cfg.illustrative.pi_mix = pi_mix;
        cfg.illustrative.eta_ball = ball;
        cfg.n1 = sim_n1 ? sim_n1 : base.n1;
        cfg.n2 = sim_n2 ? sim_n2 : base.n2;
        const TwoSample ts =
            null_design ? study_dataset(cfg, false, run.seed)
                        : sample_illustrative(cfg.n1, cfg.n2, pi_mix, ball, base.x_p,
                                              base.x_q, run.seed);
        io::write_two_sample_csv(os, ts);
      } else {
        LocalizedAlternative alt{sim_d, eta, signal, parse_index_list(cube), offset};
        alt.validate();
        if (sim_n > 0) {
          if (sim_n1 || sim_n2) throw IoError("use --n or --n1/--n2, not both");
          const auto pts = null_design ? [&] {
            std::mt19937_64 rng(run.seed);
            return sample_uniform(sim_n, sim_d, rng);
          }() : sample_localized(sim_n, alt, run.seed);
          io::write_points_csv(os, pts);
        } else {
          if (!sim_n1 || !sim_n2) throw IoError("give --n, or both --n1 and --n2");
          StudyConfig cfg;
          cfg.design = Design::Localized;
          cfg.localized = alt;
          cfg.n1 = sim_n1;
          cfg.n2 = sim_n2;
          io::write_two_sample_csv(os, study_dataset(cfg, !null_design, run.seed));
        }
      }
      write_text(run.out, os.str());
    } else if (power->parsed()) {
      StudyConfig cfg;
      cfg.trials = trials;
      cfg.seed = run.seed;
      cfg.threads = resolve_thread_flag(run.threads);
      if (design == "illustrative") {
        cfg.design = Design::Illustrative;
        cfg.illustrative.pi_mix = pi_mix;
        cfg.illustrative.eta_ball = ball;
        cfg.n1 = sim_n1 ? sim_n1 : cfg.illustrative.n1;
        cfg.n2 = sim_n2 ? sim_n2 : cfg.illustrative.n2;
      } else {
        cfg.design = Design::Localized;
        cfg.localized = {sim_d, eta, signal, parse_index_list(cube), offset};
        cfg.n1 = sim_n1 ? sim_n1 : 100;
        cfg.n2 = sim_n2 ? sim_n2 : 100;
      }
      for (const auto& m : methods) {
        StudyTest t;
        if (m == "graph_tv") {
          t.method = TestMethod::GraphTv;
          t.graph = GraphSpec::knn(gopt.knn ? gopt.knn : 10);
        } else if (m == "binned_graph_tv") {
          t.method = TestMethod::BinnedGraphTv;
          t.bin_eps = bin > 0.0 ? bin : 0.02;
        } else {
          t.method = TestMethod::ChiSquared;
          t.bin_eps = chisq_bin;
        }
        cfg.tests.push_back(t);
      }
      const StudyResult res = run_power_study(cfg);
      std::ostringstream os;
      if (format == "json") os << io::study_to_json(res).dump(2) << "\n";
      else io::write_study_csv(os, res);
      write_text(run.out, os.str());
    }
  } catch (const GraphDisconnected& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDisconnected;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
