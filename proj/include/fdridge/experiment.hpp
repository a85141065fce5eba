#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "fdridge/rng.hpp"

#include "fdridge/baselines.hpp"
#include "fdridge/datagen.hpp"
#include "fdridge/fd_sketch.hpp"
#include "fdridge/ridge.hpp"
#include "fdridge/types.hpp"

namespace fdridge {

/// The contract every streaming solver offers the harness.
template <class S>
concept StreamingSolver =
    requires(S s, const S cs, const Vector& row, double label,
             const Matrix& rows, const Vector& labels, double gamma) {
      { s.push(row, label) };
      { s.push_rows(rows, labels) };
      { s.flush() };
      { cs.solve(gamma) } -> std::same_as<RidgeSolution>;
    };

/// FD-family sketches adapted to the solver interface.
struct FdSolver {
  FdSketch sketch;

  FdSolver(Index ell, Index d, SketchKind kind) : sketch(ell, d, kind) {}
  void push(const Eigen::Ref<const Vector>& row, double label) {
    sketch.push(row, label);
  }
  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    sketch.push_rows(rows, labels);
  }
  void flush() { sketch.flush(); }
  RidgeSolution solve(double gamma) const {
    return solve_from_sketch(sketch, gamma);
  }
};

/// Naive streaming ridge: exact Gram accumulation, exact solve.
struct ExactSolver {
  GramAccumulator acc;

  explicit ExactSolver(Index d) : acc(d) {}
  void push(const Eigen::Ref<const Vector>& row, double label) {
    acc.push(row, label);
  }
  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    acc.push_rows(rows, labels);
  }
  void flush() {}
  RidgeSolution solve(double gamma) const { return solve_exact(acc, gamma); }
};

static_assert(StreamingSolver<FdSolver>);
static_assert(StreamingSolver<ExactSolver>);
static_assert(StreamingSolver<TwoLevelSketch>);
static_assert(StreamingSolver<RpSketch>);
static_assert(StreamingSolver<CsSketch>);

/// Type-erased streaming solver for runtime selection by tag.
class AnySolver {
 public:
  template <StreamingSolver S>
  explicit AnySolver(S impl, SolverTag tag)
      : p_(std::make_unique<Impl<S>>(std::move(impl))), tag_(tag) {}

  void push(const Eigen::Ref<const Vector>& row, double label) {
    p_->push(row, label);
  }
  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    p_->push_rows(rows, labels);
  }
  void flush() { p_->flush(); }
  RidgeSolution solve(double gamma) const { return p_->solve(gamma); }
  SolverTag tag() const { return tag_; }

 private:
  struct Iface {
    virtual ~Iface() = default;
    virtual void push(const Eigen::Ref<const Vector>&, double) = 0;
    virtual void push_rows(const Eigen::Ref<const Matrix>&,
                           const Eigen::Ref<const Vector>&) = 0;
    virtual void flush() = 0;
    virtual RidgeSolution solve(double) const = 0;
  };
  template <class S>
  struct Impl final : Iface {
    S s;
    explicit Impl(S v) : s(std::move(v)) {}
    void push(const Eigen::Ref<const Vector>& r, double l) override {
      s.push(r, l);
    }
    void push_rows(const Eigen::Ref<const Matrix>& r,
                   const Eigen::Ref<const Vector>& l) override {
      s.push_rows(r, l);
    }
    void flush() override { s.flush(); }
    RidgeSolution solve(double g) const override { return s.solve(g); }
  };
  std::unique_ptr<Iface> p_;
  SolverTag tag_;
};

inline AnySolver make_solver(SolverTag tag, Index ell, Index d,
                             std::uint64_t seed) {
  switch (tag) {
    case SolverTag::exact: return AnySolver(ExactSolver(d), tag);
    case SolverTag::fd:
      return AnySolver(FdSolver(ell, d, SketchKind::fd), tag);
    case SolverTag::rfd:
      return AnySolver(FdSolver(ell, d, SketchKind::rfd), tag);
    case SolverTag::isvd:
      return AnySolver(FdSolver(ell, d, SketchKind::isvd), tag);
    case SolverTag::twolevel:
      return AnySolver(TwoLevelSketch(ell, d, seed), tag);
    case SolverTag::rp: return AnySolver(RpSketch(ell, d, seed), tag);
    case SolverTag::cs: return AnySolver(CsSketch(ell, d, seed), tag);
  }
  throw std::invalid_argument("make_solver: unknown tag");
}

/// Accepts canonical tag names plus the aliases "rr" and "2lfd".
inline std::optional<SolverTag> parse_solver_name(const std::string& name) {
  if (name == "exact" || name == "rr") return SolverTag::exact;
  if (name == "fd") return SolverTag::fd;
  if (name == "rfd") return SolverTag::rfd;
  if (name == "isvd") return SolverTag::isvd;
  if (name == "twolevel" || name == "2lfd") return SolverTag::twolevel;
  if (name == "rp") return SolverTag::rp;
  if (name == "cs") return SolverTag::cs;
  return std::nullopt;
}

/// Worker cap for parallel sections; FDRIDGE_THREADS overrides.
inline unsigned max_workers() {
  if (const char* env = std::getenv("FDRIDGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1 && v < 1024) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Run fn(0..count-1) on up to max_workers() threads. Results must be
/// written to preallocated slots so the outcome is order-independent.
template <class Fn>
void parallel_for(Index count, Fn&& fn, unsigned cap = 0) {
  if (cap == 0) cap = max_workers();
  const unsigned workers =
      std::min<unsigned>(cap, static_cast<unsigned>(std::max<Index>(count, 1)));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        fn(i);
    });
  for (auto& t : pool) t.join();
}

// ---- experiment records and CSV output ----

struct ExperimentRecord {
  std::string dataset_id;
  SolverTag solver = SolverTag::exact;
  Index ell = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  Index trial = 0;
  double coef_error = 0.0;
  double pred_error = 0.0;
  double train_time_s = 0.0;
  double query_time_s = 0.0;
  Index n = 0;
  Index d = 0;
  std::string error;  // empty on success
};

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += "\"";
  return out;
}

inline const char* record_csv_header() {
  return "dataset_id,solver,ell,gamma,seed,trial,coef_error,pred_error,"
         "train_time_s,query_time_s,n,d";
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string record_csv_row(const ExperimentRecord& r) {
  std::string out = csv_quote(r.dataset_id);
  out += ',';
  out += solver_tag_name(r.solver);
  out += ',' + std::to_string(r.ell);
  out += ',' + detail::fmt_double(r.gamma);
  out += ',' + std::to_string(r.seed);
  out += ',' + std::to_string(r.trial);
  out += ',' + detail::fmt_double(r.coef_error);
  out += ',' + detail::fmt_double(r.pred_error);
  out += ',' + detail::fmt_double(r.train_time_s);
  out += ',' + detail::fmt_double(r.query_time_s);
  out += ',' + std::to_string(r.n);
  out += ',' + std::to_string(r.d);
  return out;
}

// ---- single runs ----

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

inline std::uint64_t cell_seed(std::uint64_t base, SolverTag tag,
                               Index trial) {
  // One independent seed per (trial, solver) pair.
  return mix64(base ^ mix64((static_cast<std::uint64_t>(tag) << 32) ^
                            static_cast<std::uint64_t>(trial)));
}

}  // namespace detail

/// Stream the training set through one solver, query once, score against
/// the exact reference coefficients (pass nullptr when solver is exact).
inline ExperimentRecord run_once(const Dataset& ds,
                                 const std::string& dataset_id, SolverTag tag,
                                 Index ell, double gamma, std::uint64_t seed,
                                 Index trial, const Vector* x_ref) {
  ExperimentRecord rec;
  rec.dataset_id = dataset_id;
  rec.solver = tag;
  rec.ell = ell;
  rec.gamma = gamma;
  rec.seed = seed;
  rec.trial = trial;
  rec.n = ds.n();
  rec.d = ds.d();

  AnySolver solver = make_solver(tag, ell, ds.d(), seed);
  auto t0 = std::chrono::steady_clock::now();
  solver.push_rows(ds.a_train, ds.b_train);
  solver.flush();
  rec.train_time_s = detail::seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const RidgeSolution sol = solver.solve(gamma);
  rec.query_time_s = detail::seconds_since(t0);

  rec.coef_error =
      (tag == SolverTag::exact || x_ref == nullptr)
          ? 0.0
          : coef_error(sol.x, *x_ref);
  rec.pred_error = pred_error(ds.a_test, ds.b_test, sol.x);
  return rec;
}

// ---- sweeps ----

struct SweepConfig {
  std::string dataset_id;
  std::vector<SolverTag> solvers;
  std::vector<Index> ells;
  double gamma = 1.0;
  Index trials = 10;
  std::uint64_t base_seed = 0;

  void validate() const {
    require(!solvers.empty() && !ells.empty(), "SweepConfig: empty plan");
    for (Index l : ells) require(l >= 2, "SweepConfig: ell values must be >= 2");
    require(trials >= 1, "SweepConfig: trials must be >= 1");
    require(gamma > 0.0, "SweepConfig: gamma must be > 0");
  }
};

struct SweepResult {
  std::vector<ExperimentRecord> records;           // full factorial
  std::vector<ExperimentRecord> means;             // one per (solver, ell)
};

/// Full factorial (solver x ell x trial) sweep against a fixed dataset.
/// Cells run on a worker pool; error columns are deterministic for a given
/// seed while time columns are not. Per-cell failures are recorded with an
/// error tag and the sweep continues.
inline SweepResult run_sweep(const Dataset& ds, const SweepConfig& cfg) {
  cfg.validate();
  Vector x_ref;
  {
    GramAccumulator acc(ds.d());
    acc.push_rows(ds.a_train, ds.b_train);
    x_ref = solve_exact(acc, cfg.gamma).x;
  }

  struct Cell {
    SolverTag tag;
    Index ell;
    Index trial;
  };
  std::vector<Cell> cells;
  for (SolverTag tag : cfg.solvers)
    for (Index ell : cfg.ells)
      for (Index t = 0; t < cfg.trials; ++t) cells.push_back({tag, ell, t});

  SweepResult out;
  out.records.resize(cells.size());
  parallel_for(static_cast<Index>(cells.size()), [&](Index i) {
    const Cell& cell = cells[static_cast<size_t>(i)];
    const std::uint64_t seed =
        detail::cell_seed(cfg.base_seed, cell.tag, cell.trial);
    ExperimentRecord& rec = out.records[static_cast<size_t>(i)];
    try {
      rec = run_once(ds, cfg.dataset_id, cell.tag, cell.ell, cfg.gamma, seed,
                     cell.trial, &x_ref);
    } catch (const std::exception& e) {
      rec.dataset_id = cfg.dataset_id;
      rec.solver = cell.tag;
      rec.ell = cell.ell;
      rec.gamma = cfg.gamma;
      rec.seed = seed;
      rec.trial = cell.trial;
      rec.n = ds.n();
      rec.d = ds.d();
      rec.coef_error = std::numeric_limits<double>::quiet_NaN();
      rec.pred_error = std::numeric_limits<double>::quiet_NaN();
      rec.error = e.what();
    }
  });

  for (SolverTag tag : cfg.solvers)
    for (Index ell : cfg.ells) {
      ExperimentRecord mean;
      mean.dataset_id = cfg.dataset_id;
      mean.solver = tag;
      mean.ell = ell;
      mean.gamma = cfg.gamma;
      mean.n = ds.n();
      mean.d = ds.d();
      mean.trial = -1;  // marks an aggregate row
      Index count = 0;
      for (const auto& r : out.records) {
        if (r.solver != tag || r.ell != ell || !r.error.empty()) continue;
        mean.coef_error += r.coef_error;
        mean.pred_error += r.pred_error;
        mean.train_time_s += r.train_time_s;
        mean.query_time_s += r.query_time_s;
        ++count;
      }
      if (count > 0) {
        mean.coef_error /= count;
        mean.pred_error /= count;
        mean.train_time_s /= count;
        mean.query_time_s /= count;
      } else {
        mean.coef_error = std::numeric_limits<double>::quiet_NaN();
        mean.pred_error = std::numeric_limits<double>::quiet_NaN();
        mean.error = "no successful trials";
      }
      out.means.push_back(std::move(mean));
    }
  return out;
}

/// Sweep CSV: the ExperimentRecord columns, then the derived
/// total_time_s = train + query * (n / ell) column and an error tag.
/// Mean rows carry "mean" in the trial column and an empty seed.
inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
  os << record_csv_header() << ",total_time_s,error\n";
  auto total = [](const ExperimentRecord& r) {
    const double batches =
        r.ell > 0 ? static_cast<double>(r.n) / static_cast<double>(r.ell) : 1.0;
    return r.train_time_s + r.query_time_s * batches;
  };
  for (const auto& r : res.records)
    os << record_csv_row(r) << ',' << detail::fmt_double(total(r)) << ','
       << csv_quote(r.error) << "\n";
  for (const auto& r : res.means) {
    // Rebuild the row with the aggregate markers in seed/trial.
    std::string row = csv_quote(r.dataset_id);
    row += ',';
    row += solver_tag_name(r.solver);
    row += ',' + std::to_string(r.ell);
    row += ',' + detail::fmt_double(r.gamma);
    row += ",,mean";
    row += ',' + detail::fmt_double(r.coef_error);
    row += ',' + detail::fmt_double(r.pred_error);
    row += ',' + detail::fmt_double(r.train_time_s);
    row += ',' + detail::fmt_double(r.query_time_s);
    row += ',' + std::to_string(r.n);
    row += ',' + std::to_string(r.d);
    os << row << ',' << detail::fmt_double(total(r)) << ','
       << csv_quote(r.error) << "\n";
  }
}

// ---- timing benchmarks ----

struct BenchPoint {
  SolverTag solver = SolverTag::fd;
  std::string phase;  // "train" or "query"
  Index n = 0;
  Index d = 0;
  Index ell = 0;
  double seconds = 0.0;
};

inline void write_bench_csv(std::ostream& os,
                            const std::vector<BenchPoint>& points) {
  os << "solver,phase,n,d,ell,seconds\n";
  for (const auto& p : points)
    os << solver_tag_name(p.solver) << ',' << p.phase << ',' << p.n << ','
       << p.d << ',' << p.ell << ',' << detail::fmt_double(p.seconds) << "\n";
}

namespace detail {

inline Matrix bench_rows(Index n, Index d, std::uint64_t seed) {
  CounterRng rng(seed, 0xbe);
  Matrix a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.next_gaussian();
  return a;
}

}  // namespace detail

/// Training-time scaling of one solver over training sizes; one warm-up
/// pass per point is discarded. Runs serially for timing sanity.
inline std::vector<BenchPoint> bench_train_scaling(
    SolverTag tag, Index d, Index ell, const std::vector<Index>& ns,
    std::uint64_t seed) {
  std::vector<BenchPoint> out;
  for (Index n : ns) {
    const Matrix rows = detail::bench_rows(n, d, seed + static_cast<std::uint64_t>(n));
    const Vector labels = Vector::Ones(n);
    auto run = [&]() {
      AnySolver solver = make_solver(tag, ell, d, seed);
      const auto t0 = std::chrono::steady_clock::now();
      solver.push_rows(rows, labels);
      solver.flush();
      return detail::seconds_since(t0);
    };
    run();  // warm-up
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) best = std::min(best, run());
    out.push_back({tag, "train", n, d, ell, best});
  }
  return out;
}

/// Query-time scaling over feature dimensions. The solver is trained once
/// per point; solve time is the median of enough repetitions to be
/// measurable.
inline std::vector<BenchPoint> bench_query_scaling(
    const std::vector<SolverTag>& tags, Index n, Index ell,
    const std::vector<Index>& ds, double gamma, std::uint64_t seed) {
  std::vector<BenchPoint> out;
  for (Index d : ds) {
    const Matrix rows = detail::bench_rows(n, d, seed + static_cast<std::uint64_t>(d));
    const Vector labels = Vector::Ones(n);
    for (SolverTag tag : tags) {
      AnySolver solver = make_solver(tag, ell, d, seed);
      solver.push_rows(rows, labels);
      solver.flush();
      (void)solver.solve(gamma);  // warm-up
      std::vector<double> times;
      double acc = 0.0;
      while (acc < 0.2 && times.size() < 64) {
        const auto t0 = std::chrono::steady_clock::now();
        (void)solver.solve(gamma);
        times.push_back(detail::seconds_since(t0));
        acc += times.back();
      }
      std::sort(times.begin(), times.end());
      out.push_back({tag, "query", n, d, ell, times[times.size() / 2]});
    }
  }
  return out;
}

}  // namespace fdridge
