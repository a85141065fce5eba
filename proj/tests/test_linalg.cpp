#include <catch2/catch_amalgamated.hpp>

#include "fdridge/linalg.hpp"
#include "oracles.hpp"

using namespace fdridge;

TEST_CASE("thin_svd on identity") {
  const ThinSvd svd = thin_svd(Matrix::Identity(2, 2));
  REQUIRE(svd.singular_values.size() == 2);
  CHECK(svd.singular_values(0) == Catch::Approx(1.0));
  CHECK(svd.singular_values(1) == Catch::Approx(1.0));
  const Matrix vvt = svd.right_vectors * svd.right_vectors.transpose();
  CHECK((vvt - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("thin_svd on zero matrix") {
  const ThinSvd svd = thin_svd(Matrix::Zero(3, 2));
  REQUIRE(svd.singular_values.size() == 2);
  CHECK(svd.singular_values(0) == 0.0);
  CHECK(svd.singular_values(1) == 0.0);
}

TEST_CASE("thin_svd hand-computed case") {
  Matrix m(2, 2);
  m << 3, 0, 4, 0;
  const ThinSvd svd = thin_svd(m);
  CHECK(svd.singular_values(0) == Catch::Approx(5.0).epsilon(1e-12));
  CHECK(svd.singular_values(1) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("thin_svd rejects bad input") {
  CHECK_THROWS_AS(thin_svd(Matrix(0, 0)), std::invalid_argument);
  Matrix m(2, 2);
  m << 1, 2, 3, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(thin_svd(m), std::invalid_argument);
}

TEST_CASE("thin_svd reconstruction over random matrices") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index n = 1 + static_cast<Index>(s % 50);
    const Index d = 1 + static_cast<Index>((7 * s + 3) % 50);
    const Matrix m = oracle::randn(n, d, 1000 + s);
    const ThinSvd svd = thin_svd(m);
    const Matrix rec = svd.left_vectors *
                       svd.singular_values.asDiagonal() * svd.right_vectors;
    const double err = (rec - m).norm();
    REQUIRE(err <= tol::reconstruct_rel * std::max(1.0, m.norm()));
    for (Index i = 0; i + 1 < svd.singular_values.size(); ++i)
      REQUIRE(svd.singular_values(i) >= svd.singular_values(i + 1));
    const Matrix vvt = svd.right_vectors * svd.right_vectors.transpose();
    REQUIRE((vvt - Matrix::Identity(vvt.rows(), vvt.cols()))
                .cwiseAbs()
                .maxCoeff() <= tol::orthonormal);
  }
}

TEST_CASE("spectral_norm examples") {
  CHECK(spectral_norm(Matrix::Identity(4, 4)) == Catch::Approx(1.0));
  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = 2;
  diag(1, 1) = 1;
  CHECK(spectral_norm(diag) == Catch::Approx(2.0));
  Matrix shear(2, 2);
  shear << 1, 1, 0, 1;
  // largest root of s^4 - 3 s^2 + 1 = 0: the golden ratio
  CHECK(spectral_norm(shear) ==
        Catch::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-8));
}

TEST_CASE("spectral norm bounded by Frobenius norm") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    const Matrix m = oracle::randn(3 + s % 20, 2 + s % 17, 50 + s);
    REQUIRE(spectral_norm(m) <= m.norm() + 1e-12);
  }
}

TEST_CASE("squared_frobenius_tail examples") {
  CHECK(squared_frobenius_tail(Matrix::Identity(3, 3), 3) == 0.0);
  Matrix diag = Matrix::Zero(3, 3);
  diag.diagonal() << 3, 2, 1;
  CHECK(squared_frobenius_tail(diag, 1) == Catch::Approx(5.0));
  const Matrix m = oracle::randn(6, 4, 7);
  CHECK(squared_frobenius_tail(m, 0) ==
        Catch::Approx(m.squaredNorm()).epsilon(1e-12));
  CHECK_THROWS_AS(squared_frobenius_tail(m, 5), std::invalid_argument);
  CHECK_THROWS_AS(squared_frobenius_tail(m, -1), std::invalid_argument);
}

TEST_CASE("squared_frobenius_tail is non-increasing in k") {
  const Matrix m = oracle::randn(12, 9, 21);
  double prev = std::numeric_limits<double>::infinity();
  for (Index k = 0; k <= 9; ++k) {
    const double t = squared_frobenius_tail(m, k);
    REQUIRE(t <= prev + 1e-12);
    prev = t;
  }
}

TEST_CASE("sym_eigenvalues descending") {
  const Matrix p = oracle::rand_psd(6, 3);
  const Vector ev = sym_eigenvalues(p);
  for (Index i = 0; i + 1 < ev.size(); ++i) REQUIRE(ev(i) >= ev(i + 1));
  CHECK(spectral_norm_sym(p) == Catch::Approx(ev(0)).epsilon(1e-10));
}
