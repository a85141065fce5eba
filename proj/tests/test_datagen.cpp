#include <catch2/catch_amalgamated.hpp>

#include "fdridge/datagen.hpp"
#include "oracles.hpp"

using namespace fdridge;

namespace {

SyntheticSpec spec_of(Index n, Index d, double frac, std::uint64_t seed) {
  SyntheticSpec s;
  s.n = n;
  s.d = d;
  s.rank_fraction = frac;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("dct matrix is orthonormal") {
  for (Index d : {Index{1}, Index{5}, Index{64}}) {
    const Matrix w = dct_matrix(d);
    CHECK((w * w.transpose() - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("x_true is unit and supported on the first R coordinates") {
  const Dataset ds = gen_synthetic(spec_of(50, 20, 0.5, 3));
  REQUIRE(ds.x_true.has_value());
  CHECK(std::abs(ds.x_true->norm() - 1.0) <= 1e-12);
  CHECK(ds.x_true->tail(10).isZero());
  CHECK_FALSE(ds.x_true->head(10).isZero());
}

TEST_CASE("effective rank floor") {
  CHECK(spec_of(10, 256, 0.5, 1).effective_rank() == 128);
  CHECK(spec_of(10, 10, 0.1, 1).effective_rank() == 1);
  CHECK_THROWS_AS(gen_synthetic(spec_of(10, 5, 0.1, 1)),
                  std::invalid_argument);
}

TEST_CASE("pre-rotation column variances follow the decay profile") {
  const Index d = 16;
  const SyntheticSpec spec = spec_of(100000, d, 0.5, 11);
  const Dataset ds = gen_synthetic(spec);
  // undo the rotation: A_pre = A W^T
  const Matrix a_pre = ds.a_train * dct_matrix(d).transpose();
  const Index r = spec.effective_rank();
  for (Index j = 0; j < d; ++j) {
    const double ratio = static_cast<double>(j) / static_cast<double>(r);
    const double expected = std::exp(-2.0 * ratio * ratio);
    const double var =
        (a_pre.col(j).array() - a_pre.col(j).mean()).square().sum() /
        static_cast<double>(a_pre.rows() - 1);
    REQUIRE(var == Catch::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("rotation preserves the spectrum") {
  const Index d = 24;
  const Dataset ds = gen_synthetic(spec_of(200, d, 0.5, 13));
  const Matrix a_pre = ds.a_train * dct_matrix(d).transpose();
  Eigen::BDCSVD<Matrix> s1(ds.a_train), s2(a_pre);
  const double rel = (s1.singularValues() - s2.singularValues()).norm() /
                     s1.singularValues().norm();
  CHECK(rel <= 1e-8);
}

TEST_CASE("labels come from the pre-rotation design") {
  // with noise_var = 0, b = A_pre x exactly
  SyntheticSpec spec = spec_of(60, 12, 0.5, 17);
  spec.noise_var = 0.0;
  const Dataset ds = gen_synthetic(spec);
  const Matrix a_pre = ds.a_train * dct_matrix(12).transpose();
  CHECK((ds.b_train - a_pre * *ds.x_true).norm() <= 1e-10);
}

TEST_CASE("generation is deterministic") {
  const Dataset d1 = gen_synthetic(spec_of(40, 10, 0.1, 99));
  const Dataset d2 = gen_synthetic(spec_of(40, 10, 0.1, 99));
  CHECK((d1.a_train - d2.a_train).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.b_train - d2.b_train).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.a_test - d2.a_test).cwiseAbs().maxCoeff() == 0.0);
  const Dataset d3 = gen_synthetic(spec_of(40, 10, 0.1, 100));
  CHECK((d1.a_train - d3.a_train).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("high-rank spectra decay slower than low-rank ones") {
  const Index d = 64;
  const Dataset hr = gen_synthetic(spec_of(512, d, 0.5, 7));
  const Dataset lr = gen_synthetic(spec_of(512, d, 0.1, 7));
  Eigen::BDCSVD<Matrix> sh(hr.a_train), sl(lr.a_train);
  const Index mid = d / 2;
  const double hr_ratio = sh.singularValues()(mid) / sh.singularValues()(0);
  const double lr_ratio = sl.singularValues()(mid) / sl.singularValues()(0);
  CHECK(hr_ratio > lr_ratio);
}

TEST_CASE("test split has the requested size and the same law") {
  SyntheticSpec spec = spec_of(30, 8, 0.5, 21);
  const Dataset ds = gen_synthetic(spec);
  CHECK(ds.a_test.rows() == 8);  // defaults to d
  spec.n_test = 17;
  CHECK(gen_synthetic(spec).a_test.rows() == 17);
}

TEST_CASE("shingle examples") {
  SECTION("constant series vanishes") {
    const std::vector<double> series(40, 5.0);
    const Dataset ds = shingle_series(series, 4, 8, 1, 4);
    CHECK(ds.a_train.isZero());
    CHECK(ds.b_train.isZero());
  }
  SECTION("linear ramp gives all-ones shingles") {
    std::vector<double> series(50);
    for (size_t i = 0; i < series.size(); ++i)
      series[i] = static_cast<double>(i);
    const Dataset ds = shingle_series(series, 5, 10, 2, 5);
    CHECK((ds.a_train.array() - 1.0).abs().maxCoeff() == 0.0);
    CHECK((ds.b_train.array() - 1.0).abs().maxCoeff() == 0.0);
  }
  SECTION("deterministic per seed") {
    std::vector<double> series(80);
    std::mt19937_64 eng(5);
    std::normal_distribution<double> nd;
    for (auto& v : series) v = nd(eng);
    const Dataset d1 = shingle_series(series, 6, 12, 9, 6);
    const Dataset d2 = shingle_series(series, 6, 12, 9, 6);
    CHECK((d1.a_train - d2.a_train).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d1.b_train - d2.b_train).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("windows are consecutive differences with the next as label") {
    std::vector<double> series = {1, 2, 4, 8, 16, 32, 64, 128, 256,
                                  512, 1024, 2048, 4096};
    const Dataset ds = shingle_series(series, 3, 2, 3, 2);
    for (Index r = 0; r < ds.a_train.rows(); ++r) {
      // consecutive differences double: row (x, 2x, 4x), label 8x
      CHECK(ds.a_train(r, 1) == Catch::Approx(2.0 * ds.a_train(r, 0)));
      CHECK(ds.a_train(r, 2) == Catch::Approx(4.0 * ds.a_train(r, 0)));
      CHECK(ds.b_train(r) == Catch::Approx(8.0 * ds.a_train(r, 0)));
    }
  }
  SECTION("short series rejected") {
    CHECK_THROWS_AS(shingle_series(std::vector<double>(10, 1.0), 4, 8, 1, 4),
                    std::invalid_argument);
  }
  SECTION("train and test windows are disjoint") {
    // strictly convex series: every difference window is unique, so
    // sampling without replacement implies distinct rows
    std::vector<double> series(60);
    for (size_t i = 0; i < series.size(); ++i)
      series[i] = static_cast<double>(i) * static_cast<double>(i);
    const Dataset ds = shingle_series(series, 4, 20, 11, 10);
    for (Index i = 0; i < ds.a_train.rows(); ++i)
      for (Index j = 0; j < ds.a_test.rows(); ++j)
        REQUIRE((ds.a_train.row(i) - ds.a_test.row(j)).norm() > 0);
    for (Index i = 0; i < ds.a_train.rows(); ++i)
      for (Index j = i + 1; j < ds.a_train.rows(); ++j)
        REQUIRE((ds.a_train.row(i) - ds.a_train.row(j)).norm() > 0);
  }
}

TEST_CASE("select_gamma") {
  SECTION("single-element grid") {
    const Dataset ds = gen_synthetic(spec_of(40, 8, 0.5, 31));
    CHECK(select_gamma(ds, {3.5}) == 3.5);
  }
  SECTION("validation") {
    const Dataset ds = gen_synthetic(spec_of(40, 8, 0.5, 31));
    CHECK_THROWS_AS(select_gamma(ds, {}), std::invalid_argument);
    CHECK_THROWS_AS(select_gamma(ds, {1.0, -2.0}), std::invalid_argument);
  }
  SECTION("pure-noise dataset drives gamma to the top of the grid") {
    // true model zero: shrinking toward 0 helps, so within a grid whose
    // top stays below the data Gram scale the largest value wins
    Dataset ds;
    ds.a_train = oracle::randn(200, 10, 71);
    ds.b_train = 3.0 * oracle::randn_vec(200, 72);
    ds.a_test = oracle::randn(100, 10, 73);
    ds.b_test = 3.0 * oracle::randn_vec(100, 74);
    const std::vector<double> grid = {1, 2, 4, 8, 16, 32, 64};
    CHECK(select_gamma(ds, grid) == 64.0);
  }
  SECTION("ties resolve to the smaller gamma") {
    Dataset ds;
    ds.a_train = Matrix::Identity(3, 3);
    ds.b_train = Vector::Zero(3);  // solution is 0 for every gamma
    ds.a_test = Matrix::Identity(3, 3);
    ds.b_test = Vector::Ones(3);
    CHECK(select_gamma(ds, {8.0, 2.0, 4.0}) == 2.0);
  }
}
