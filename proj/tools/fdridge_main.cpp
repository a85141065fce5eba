// fdridge: dataset generation, sketched ridge runs, sweeps, timing
// benchmarks and bound verification from the command line.
//
// Exit codes: 0 success, 1 numeric failure, 2 usage or I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdridge/fdridge.hpp"

namespace {

using namespace fdridge;

std::vector<SolverTag> parse_solvers(const std::vector<std::string>& names) {
  std::vector<SolverTag> tags;
  for (const auto& name : names) {
    const auto tag = parse_solver_name(name);
    if (!tag)
      throw CLI::ValidationError("--solvers", "unknown solver '" + name + "'");
    tags.push_back(*tag);
  }
  return tags;
}

std::vector<double> read_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open series file " + path);
  std::vector<double> series;
  std::string token;
  while (is >> token) {
    std::string cleaned;
    for (char ch : token)
      if (ch != ',') cleaned += ch;
      else {
        if (!cleaned.empty()) series.push_back(std::stod(cleaned));
        cleaned.clear();
      }
    if (!cleaned.empty()) series.push_back(std::stod(cleaned));
  }
  if (series.empty())
    throw std::invalid_argument("series file " + path + " has no samples");
  return series;
}

int cmd_generate(const std::string& kind, Index d, Index n, Index n_test,
                 std::uint64_t seed, const std::string& series_path,
                 double gamma_flag, bool skip_gamma,
                 const std::string& out_dir) {
  Dataset ds;
  DatasetManifest manifest;
  manifest.kind = kind;
  manifest.seed = seed;

  if (kind == "lr" || kind == "hr") {
    SyntheticSpec spec;
    spec.n = n;
    spec.d = d;
    spec.rank_fraction = (kind == "lr") ? 0.1 : 0.5;
    spec.noise_var = 4.0;
    spec.seed = seed;
    spec.n_test = n_test;
    spec.validate();
    ds = gen_synthetic(spec);
    manifest.rank_fraction = spec.rank_fraction;
    manifest.noise_var = spec.noise_var;
    std::printf("generated %s dataset: n=%lld d=%lld R=%lld\n", kind.c_str(),
                static_cast<long long>(spec.n), static_cast<long long>(spec.d),
                static_cast<long long>(spec.effective_rank()));
  } else if (kind == "shingle") {
    if (series_path.empty())
      throw CLI::ValidationError("--series", "required for --kind shingle");
    const std::vector<double> series = read_series(series_path);
    ds = shingle_series(series, d, n, seed, n_test);
    std::printf("shingled series (%zu samples): n=%lld d=%lld\n",
                series.size(), static_cast<long long>(ds.n()),
                static_cast<long long>(ds.d()));
  } else {
    throw CLI::ValidationError("--kind", "must be lr, hr or shingle");
  }

  if (gamma_flag > 0.0) {
    manifest.gamma = gamma_flag;
  } else if (!skip_gamma) {
    manifest.gamma = select_gamma(ds, default_gamma_grid());
    std::printf("selected gamma = %g\n", *manifest.gamma);
  }
  save_dataset(out_dir, ds, manifest);
  std::printf("wrote %s\n", out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& data_dir, const std::string& solver_name,
            Index ell, double gamma_flag, std::uint64_t seed,
            const std::string& out_path) {
  const auto tag = parse_solver_name(solver_name);
  if (!tag)
    throw CLI::ValidationError("--solver", "unknown solver " + solver_name);
  auto [ds, manifest] = load_dataset(data_dir);
  double gamma = gamma_flag;
  if (gamma <= 0.0) {
    if (!manifest.gamma)
      throw std::invalid_argument(
          "no --gamma given and dataset stores no selected gamma");
    gamma = *manifest.gamma;
  }

  Vector x_ref;
  const Vector* ref_ptr = nullptr;
  if (*tag != SolverTag::exact) {
    GramAccumulator acc(ds.d());
    acc.push_rows(ds.a_train, ds.b_train);
    x_ref = solve_exact(acc, gamma).x;
    ref_ptr = &x_ref;
  }
  const ExperimentRecord rec =
      run_once(ds, data_dir, *tag, ell, gamma, seed, 0, ref_ptr);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::invalid_argument("cannot open " + out_path);
    os = &file;
  }
  *os << record_csv_header() << "\n" << record_csv_row(rec) << "\n";
  return 0;
}

int cmd_sweep(const std::string& data_dir,
              const std::vector<std::string>& solver_names,
              const std::vector<Index>& ells, double gamma_flag, Index trials,
              std::uint64_t seed, const std::string& out_path) {
  auto [ds, manifest] = load_dataset(data_dir);
  SweepConfig cfg;
  cfg.dataset_id = data_dir;
  cfg.solvers = parse_solvers(solver_names);
  cfg.ells = ells;
  cfg.trials = trials;
  cfg.base_seed = seed;
  cfg.gamma = gamma_flag > 0.0 ? gamma_flag : manifest.gamma.value_or(0.0);
  if (cfg.gamma <= 0.0)
    throw std::invalid_argument(
        "no --gamma given and dataset stores no selected gamma");

  const SweepResult res = run_sweep(ds, cfg);

  std::ofstream os(out_path);
  if (!os) throw std::invalid_argument("cannot open " + out_path);
  write_sweep_csv(os, res);
  std::printf("wrote %zu records (+%zu mean rows) to %s\n",
              res.records.size(), res.means.size(), out_path.c_str());
  long failures = 0;
  for (const auto& r : res.records)
    if (!r.error.empty()) ++failures;
  if (failures > 0)
    std::fprintf(stderr, "%ld cells failed (see error column)\n", failures);
  return 0;
}

int cmd_bench(const std::string& mode, Index d, Index ell,
              const std::vector<Index>& values, double gamma,
              std::uint64_t seed, const std::string& out_path) {
  std::vector<BenchPoint> points;
  if (mode == "train-n") {
    points = bench_train_scaling(SolverTag::fd, d, ell, values, seed);
  } else if (mode == "query-d") {
    points = bench_query_scaling({SolverTag::fd, SolverTag::exact},
                                 /*n=*/1024, ell, values, gamma, seed);
  } else {
    throw CLI::ValidationError("--mode", "must be train-n or query-d");
  }
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::invalid_argument("cannot open " + out_path);
    os = &file;
  }
  write_bench_csv(*os, points);
  return 0;
}

int cmd_verify(std::uint64_t seed, bool quick) {
  const auto suites = verify_all(seed, quick);
  bool ok = true;
  for (const auto& s : suites) {
    std::printf("[%s] %-24s checks=%-6ld violations=%ld worst=%.3g\n",
                s.pass() ? "PASS" : "FAIL", s.name.c_str(), s.checks,
                s.violations, s.worst_margin);
    ok = ok && s.pass();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming Frequent-Directions sketches for ridge regression"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a dataset directory");
  std::string kind = "hr", series_path, out_dir;
  Index d = 256, n = 1024, n_test = 0, ell = 64, trials = 10;
  std::uint64_t seed = 1;
  double gamma = 0.0;
  bool skip_gamma = false;
  gen->add_option("--kind", kind, "lr, hr or shingle");
  gen->add_option("--d", d, "feature dimension");
  gen->add_option("--n", n, "training rows");
  gen->add_option("--ntest", n_test, "test rows (default d)");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--series", series_path, "series file for --kind shingle");
  gen->add_option("--gamma", gamma, "store this gamma instead of selecting");
  gen->add_flag("--no-select-gamma", skip_gamma,
                "skip the gamma grid search");
  gen->add_option("out", out_dir, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "One solver, one record");
  std::string data_dir, solver = "fd", out_path;
  run->add_option("--data", data_dir, "dataset directory")->required();
  run->add_option("--solver", solver, "rr|fd|rfd|isvd|2lfd|rp|cs");
  run->add_option("--ell", ell, "sketch rows");
  run->add_option("--gamma", gamma, "ridge parameter (default: stored)");
  run->add_option("--seed", seed, "solver seed");
  run->add_option("--out", out_path, "write CSV here instead of stdout");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Factorial solver x ell x trial");
  std::vector<std::string> solver_names = {"fd", "rfd"};
  std::vector<Index> ells = {16, 32, 64};
  sweep->add_option("--data", data_dir, "dataset directory")->required();
  sweep->add_option("--solvers", solver_names, "solver list")
      ->delimiter(',');
  sweep->add_option("--ells", ells, "sketch sizes")->delimiter(',');
  sweep->add_option("--gamma", gamma, "ridge parameter (default: stored)");
  sweep->add_option("--trials", trials, "trials per cell");
  sweep->add_option("--seed", seed, "base seed");
  sweep->add_option("--out", out_path, "output CSV")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Timing curves");
  std::string mode = "train-n";
  std::vector<Index> values = {2048, 4096};
  bench->add_option("--mode", mode, "train-n or query-d");
  bench->add_option("--d", d, "feature dimension (train-n mode)");
  bench->add_option("--ell", ell, "sketch rows");
  bench->add_option("--values", values, "swept sizes")->delimiter(',');
  bench->add_option("--gamma", gamma, "ridge parameter for queries");
  bench->add_option("--seed", seed, "data seed");
  bench->add_option("--out", out_path, "output CSV (default stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the bound suites");
  bool quick = false;
  verify->add_option("--seed", seed, "corpus seed");
  verify->add_flag("--quick", quick, "smaller corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(kind, d, n, n_test, seed, series_path, gamma,
                          skip_gamma, out_dir);
    if (run->parsed())
      return cmd_run(data_dir, solver, ell, gamma, seed, out_path);
    if (sweep->parsed())
      return cmd_sweep(data_dir, solver_names, ells, gamma, trials, seed,
                       out_path);
    if (bench->parsed())
      return cmd_bench(mode, d, ell, values, gamma <= 0.0 ? 1.0 : gamma, seed,
                       out_path);
    if (verify->parsed()) return cmd_verify(seed, quick);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 1;
  }
  return 2;
}
