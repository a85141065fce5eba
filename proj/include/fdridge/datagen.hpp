#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fdridge/matrix_io.hpp"
#include "fdridge/ridge.hpp"
#include "fdridge/rng.hpp"
#include "fdridge/types.hpp"

namespace fdridge {

/// Synthetic regression generator: rows drawn with per-coordinate standard
/// deviations s_i = exp(-i^2 / R^2), R = floor(rank_fraction * d), a unit
/// sparse coefficient vector supported on the first R coordinates, Gaussian
/// label noise, and a final DCT rotation of the design columns.
struct SyntheticSpec {
  Index n = 0;
  Index d = 0;
  double rank_fraction = 0.5;  // 0.1 for the low-rank flavor
  double noise_var = 4.0;
  std::uint64_t seed = 0;
  Index n_test = 0;  // 0 means "d"

  Index effective_rank() const {
    return static_cast<Index>(std::floor(rank_fraction * d));
  }

  void validate() const {
    require(n >= 1 && d >= 1, "SyntheticSpec: n, d must be >= 1");
    require(rank_fraction > 0.0 && rank_fraction <= 1.0,
            "SyntheticSpec: rank_fraction in (0, 1]");
    require(effective_rank() >= 1, "SyntheticSpec: floor(rank_fraction*d) < 1");
    require(noise_var >= 0.0, "SyntheticSpec: negative noise variance");
    require(n_test >= 0, "SyntheticSpec: negative n_test");
  }
};

struct Dataset {
  Matrix a_train;
  Vector b_train;
  Matrix a_test;
  Vector b_test;
  std::optional<Vector> x_true;

  Index n() const { return a_train.rows(); }
  Index d() const { return a_train.cols(); }
};

/// Orthonormal DCT-II matrix: W W^T = I.
inline Matrix dct_matrix(Index d) {
  require(d >= 1, "dct_matrix: d must be >= 1");
  Matrix w(d, d);
  const double c0 = std::sqrt(1.0 / static_cast<double>(d));
  const double ck = std::sqrt(2.0 / static_cast<double>(d));
  for (Index k = 0; k < d; ++k)
    for (Index j = 0; j < d; ++j)
      w(k, j) = (k == 0 ? c0 : ck) *
                std::cos(std::numbers::pi * (2.0 * j + 1.0) * k /
                         (2.0 * static_cast<double>(d)));
  return w;
}

namespace detail {

inline Matrix gaussian_rows(Index n, Index d, const Vector& stds,
                            CounterRng& rng) {
  Matrix a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = stds(j) * rng.next_gaussian();
  return a;
}

}  // namespace detail

inline Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Index d = spec.d;
  const Index r = spec.effective_rank();
  const Index n_test = spec.n_test > 0 ? spec.n_test : d;

  Vector stds(d);  // s_i = exp(-i^2 / R^2), s_0 = 1
  for (Index i = 0; i < d; ++i) {
    const double ratio = static_cast<double>(i) / static_cast<double>(r);
    stds(i) = std::exp(-ratio * ratio);
  }

  CounterRng rng_x(spec.seed, 4);
  Vector x = Vector::Zero(d);
  for (Index i = 0; i < r; ++i) x(i) = rng_x.next_gaussian();
  x /= x.norm();

  const double noise_std = std::sqrt(spec.noise_var);
  const Matrix w = dct_matrix(d);

  Dataset ds;
  {
    CounterRng rng_a(spec.seed, 0);
    CounterRng rng_z(spec.seed, 1);
    Matrix a_pre = detail::gaussian_rows(spec.n, d, stds, rng_a);
    ds.b_train = a_pre * x;
    for (Index i = 0; i < spec.n; ++i)
      ds.b_train(i) += noise_std * rng_z.next_gaussian();
    ds.a_train.noalias() = a_pre * w;  // labels use the pre-rotation design
  }
  {
    CounterRng rng_a(spec.seed, 2);
    CounterRng rng_z(spec.seed, 3);
    Matrix a_pre = detail::gaussian_rows(n_test, d, stds, rng_a);
    ds.b_test = a_pre * x;
    for (Index i = 0; i < n_test; ++i)
      ds.b_test(i) += noise_std * rng_z.next_gaussian();
    ds.a_test.noalias() = a_pre * w;
  }
  ds.x_true = std::move(x);
  return ds;
}

/// Auto-regressive shingling of a scalar series: difference the series,
/// take windows of d consecutive differences as rows with the next
/// difference as label, and sample n train + n_test disjoint windows
/// without replacement.
inline Dataset shingle_series(const std::vector<double>& series, Index d,
                              Index n, std::uint64_t seed, Index n_test = 0) {
  require(d >= 1 && n >= 1, "shingle_series: d, n must be >= 1");
  if (n_test <= 0) n_test = d;
  require(static_cast<Index>(series.size()) >= d + n + n_test + 1,
          "shingle_series: series too short");
  for (double v : series)
    require(std::isfinite(v), "shingle_series: non-finite sample");

  std::vector<double> diff(series.size() - 1);
  for (size_t i = 0; i + 1 < series.size(); ++i)
    diff[i] = series[i + 1] - series[i];

  // A shingle starting at i needs differences i .. i+d; the last valid
  // start leaves one difference for the label.
  const Index starts = static_cast<Index>(diff.size()) - d;
  require(starts >= n + n_test, "shingle_series: series too short");

  std::vector<Index> order(static_cast<size_t>(starts));
  for (Index i = 0; i < starts; ++i) order[static_cast<size_t>(i)] = i;
  CounterRng rng(seed, 7);
  for (Index i = 0; i < n + n_test; ++i) {
    const Index j = i + static_cast<Index>(rng.next_index(
                            static_cast<std::uint64_t>(starts - i)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }

  auto fill = [&](Matrix& a, Vector& b, Index count, Index offset) {
    a.resize(count, d);
    b.resize(count);
    for (Index r = 0; r < count; ++r) {
      const Index s = order[static_cast<size_t>(offset + r)];
      for (Index j = 0; j < d; ++j) a(r, j) = diff[static_cast<size_t>(s + j)];
      b(r) = diff[static_cast<size_t>(s + d)];
    }
  };

  Dataset ds;
  fill(ds.a_train, ds.b_train, n, 0);
  fill(ds.a_test, ds.b_test, n_test, n);
  return ds;
}

/// Pick gamma from a grid by the held-out residual of the exact solution;
/// ties resolve to the smaller gamma.
inline double select_gamma(const Dataset& ds, const std::vector<double>& grid) {
  require(!grid.empty(), "select_gamma: empty grid");
  for (double g : grid)
    require(g > 0.0 && std::isfinite(g), "select_gamma: grid must be > 0");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());

  GramAccumulator acc(ds.d());
  acc.push_rows(ds.a_train, ds.b_train);
  double best_gamma = sorted.front();
  double best_resid = std::numeric_limits<double>::infinity();
  for (double g : sorted) {
    const RidgeSolution sol = solve_exact(acc, g);
    const double resid = (ds.a_test * sol.x - ds.b_test).norm();
    if (resid < best_resid) {
      best_resid = resid;
      best_gamma = g;
    }
  }
  return best_gamma;
}

inline std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int p = 0; p <= 20; ++p) grid.push_back(std::ldexp(1.0, p));
  return grid;
}

// ---- dataset persistence: FDRM files plus a JSON manifest ----

namespace detail {

inline std::uint64_t fnv1a_file(const std::string& path, std::uint64_t h) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::invalid_argument("hash: cannot open " + path);
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!is) break;
  }
  return h;
}

}  // namespace detail

struct DatasetManifest {
  std::string kind;  // "lr", "hr" or "shingle"
  Index n = 0;
  Index d = 0;
  Index n_test = 0;
  double rank_fraction = 0.0;
  double noise_var = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> gamma;
  std::string creation_hash;
};

inline void save_dataset(const std::string& dir, const Dataset& ds,
                         DatasetManifest manifest) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw std::invalid_argument("save_dataset: cannot create " + dir);

  write_fdrm(dir + "/a_train.fdrm", ds.a_train);
  write_fdrm(dir + "/b_train.fdrm", Matrix(ds.b_train));
  write_fdrm(dir + "/a_test.fdrm", ds.a_test);
  write_fdrm(dir + "/b_test.fdrm", Matrix(ds.b_test));
  std::vector<std::string> files = {"a_train.fdrm", "b_train.fdrm",
                                    "a_test.fdrm", "b_test.fdrm"};
  if (ds.x_true) {
    write_fdrm(dir + "/x_true.fdrm", Matrix(*ds.x_true));
    files.push_back("x_true.fdrm");
  }

  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& f : files) h = detail::fnv1a_file(dir + "/" + f, h);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  manifest.creation_hash = hex;
  manifest.n = ds.n();
  manifest.d = ds.d();
  manifest.n_test = ds.a_test.rows();

  nlohmann::json j;
  j["kind"] = manifest.kind;
  j["n"] = manifest.n;
  j["d"] = manifest.d;
  j["n_test"] = manifest.n_test;
  j["rank_fraction"] = manifest.rank_fraction;
  j["noise_var"] = manifest.noise_var;
  j["seed"] = manifest.seed;
  if (manifest.gamma) j["gamma"] = *manifest.gamma;
  j["files"] = files;
  j["creation_hash"] = manifest.creation_hash;
  std::ofstream os(dir + "/manifest.json");
  if (!os) throw std::invalid_argument("save_dataset: cannot write manifest");
  os << j.dump(2) << "\n";
}

inline std::pair<Dataset, DatasetManifest> load_dataset(
    const std::string& dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is)
    throw std::invalid_argument("load_dataset: no manifest in " + dir);
  nlohmann::json j;
  is >> j;

  DatasetManifest m;
  m.kind = j.value("kind", "");
  m.n = j.value("n", 0);
  m.d = j.value("d", 0);
  m.n_test = j.value("n_test", 0);
  m.rank_fraction = j.value("rank_fraction", 0.0);
  m.noise_var = j.value("noise_var", 0.0);
  m.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("gamma")) m.gamma = j["gamma"].get<double>();
  m.creation_hash = j.value("creation_hash", "");

  Dataset ds;
  ds.a_train = read_fdrm(dir + "/a_train.fdrm");
  ds.b_train = read_fdrm(dir + "/b_train.fdrm");
  ds.a_test = read_fdrm(dir + "/a_test.fdrm");
  ds.b_test = read_fdrm(dir + "/b_test.fdrm");
  if (std::filesystem::exists(dir + "/x_true.fdrm"))
    ds.x_true = Vector(read_fdrm(dir + "/x_true.fdrm"));
  require(ds.a_train.rows() == ds.b_train.size() &&
              ds.a_test.rows() == ds.b_test.size() &&
              ds.a_train.cols() == ds.a_test.cols(),
          "load_dataset: inconsistent shapes");
  return {std::move(ds), std::move(m)};
}

}  // namespace fdridge
