#include <catch2/catch_amalgamated.hpp>

#include "fdridge/fd_sketch.hpp"
#include "fdridge/ridge.hpp"
#include "oracles.hpp"

using namespace fdridge;

namespace {

GramAccumulator acc_of(const Matrix& a, const Vector& b) {
  GramAccumulator acc(a.cols());
  acc.push_rows(a, b);
  return acc;
}

}  // namespace

TEST_CASE("gram accumulator matches the dense Gram") {
  const Matrix a = oracle::randn(100, 12, 1);
  const Vector b = oracle::randn_vec(100, 2);
  GramAccumulator acc(12);
  for (Index i = 0; i < a.rows(); ++i) acc.push(a.row(i), b(i));
  const Matrix exact = a.transpose() * a;
  CHECK((acc.gram() - exact).norm() <= 1e-12 * exact.norm());
  CHECK((acc.c() - a.transpose() * b).norm() <=
        1e-12 * (a.transpose() * b).norm());
  CHECK((acc.gram() - acc.gram().transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(acc.n_seen() == 100);
  CHECK_THROWS_AS(acc.push(Vector::Ones(5), 1.0), std::invalid_argument);
}

TEST_CASE("one row gives the outer product") {
  GramAccumulator acc(3);
  Vector r(3);
  r << 1, 2, -1;
  acc.push(r, 3.0);
  CHECK((acc.gram() - r * r.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((acc.c() - 3.0 * r).norm() == 0.0);
}

TEST_CASE("solve_exact examples") {
  SECTION("identity gram") {
    GramAccumulator acc(2);
    acc.push(Vector::Unit(2, 0), 2.0);  // gram = e1 e1^T, c = 2 e1
    acc.push(Vector::Unit(2, 1), 0.0);  // gram = I
    const RidgeSolution sol = solve_exact(acc, 1.0);
    CHECK(sol.x(0) == Catch::Approx(1.0));
    CHECK(sol.x(1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(sol.gamma_effective == 1.0);
    CHECK(sol.solver == SolverTag::exact);
  }
  SECTION("zero rhs gives zero solution") {
    const Matrix a = oracle::randn(10, 4, 9);
    GramAccumulator acc = acc_of(a, Vector::Zero(10));
    CHECK(solve_exact(acc, 0.5).x.norm() == 0.0);
  }
  SECTION("diagonal system") {
    GramAccumulator acc(2);
    Vector r1(2), r2(2);
    r1 << std::sqrt(3.0), 0;
    r2 << 0, 1;
    // gram = diag(3, 1); choose labels so c = (4, 4)
    acc.push(r1, 4.0 / std::sqrt(3.0));
    acc.push(r2, 4.0);
    const RidgeSolution sol = solve_exact(acc, 1.0);
    CHECK(sol.x(0) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(sol.x(1) == Catch::Approx(2.0).epsilon(1e-12));
  }
  SECTION("gamma = 0 on a singular system is a numeric error") {
    GramAccumulator acc(3);
    acc.push(Vector::Unit(3, 0), 1.0);  // rank-1 gram
    CHECK_THROWS_AS(solve_exact(acc, 0.0), std::runtime_error);
    CHECK_THROWS_AS(solve_exact(acc, -1.0), std::invalid_argument);
  }
  SECTION("residual contract against the oracle") {
    const Matrix a = oracle::randn(60, 10, 31);
    const Vector b = oracle::randn_vec(60, 32);
    GramAccumulator acc = acc_of(a, b);
    const RidgeSolution sol = solve_exact(acc, 0.25);
    const Vector ref =
        oracle::dense_ridge(a.transpose() * a, 0.25, a.transpose() * b);
    CHECK((sol.x - ref).norm() <= 1e-9 * ref.norm());
  }
}

TEST_CASE("solve_from_sketch examples") {
  SECTION("empty sketch returns c / gamma") {
    FdSketch sk = FdSketch::from_parts(3, 4, SketchKind::fd, 0, 0.0,
                                       Vector::Zero(3), Matrix::Zero(3, 4),
                                       Vector::Ones(4) * 2.0);
    const RidgeSolution sol = solve_from_sketch(sk, 4.0);
    CHECK((sol.x - Vector::Ones(4) * 0.5).norm() <= 1e-14);
  }
  SECTION("c orthogonal to the sketch span") {
    Matrix v = Matrix::Zero(2, 3);
    v(0, 0) = 1.0;
    Vector sigma(2);
    sigma << 2.0, 0.0;
    Vector c = Vector::Unit(3, 2) * 6.0;
    FdSketch sk =
        FdSketch::from_parts(2, 3, SketchKind::fd, 5, 0.0, sigma, v, c);
    const RidgeSolution sol = solve_from_sketch(sk, 3.0);
    CHECK((sol.x - c / 3.0).norm() <= 1e-14);
  }
  SECTION("worked 2-d example") {
    Matrix v = Matrix::Zero(1, 2);
    v(0, 0) = 1.0;
    Vector sigma(1);
    sigma << 1.0;
    Vector c(2);
    c << 2.0, 2.0;
    // direct spectral solve on a 1-row sketch
    const Vector x = ridge_solve_spectral(sigma, v, c, 1.0);
    CHECK(x(0) == Catch::Approx(1.0));
    CHECK(x(1) == Catch::Approx(2.0));
  }
  SECTION("gamma validation") {
    FdSketch sk(2, 2);
    CHECK_THROWS_AS(solve_from_sketch(sk, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_from_sketch(sk, -2.0), std::invalid_argument);
  }
  SECTION("rfd adds alpha at solve time") {
    const Matrix a = oracle::randn(40, 8, 77);
    FdSketch sk(3, 8, SketchKind::rfd);
    sk.push_rows(a, Vector::Ones(40));
    sk.flush();
    REQUIRE(sk.alpha() > 0.0);
    const RidgeSolution sol = solve_from_sketch(sk, 2.0);
    CHECK(sol.gamma_effective == Catch::Approx(2.0 + sk.alpha()));
    CHECK(sol.solver == SolverTag::rfd);
    const Vector ref = oracle::dense_ridge(sk.covariance(),
                                           2.0 + sk.alpha(), sk.c());
    CHECK((sol.x - ref).norm() <= 1e-8 * ref.norm());
  }
}

TEST_CASE("sketch solve equals the dense inverse route") {
  std::mt19937_64 eng(404);
  for (int i = 0; i < 50; ++i) {
    const Index d = 2 + static_cast<Index>(eng() % 59);
    const Index n = d + 1 + static_cast<Index>(eng() % 50);
    const Index ell = 2 + static_cast<Index>(eng() % 8);
    const Matrix a = oracle::randn(n, d, eng());
    const Vector b = oracle::randn_vec(n, eng());
    const double gamma = std::exp(static_cast<double>(eng() % 7) - 2.0);
    FdSketch sk(ell, d);
    sk.push_rows(a, b);
    sk.flush();
    const RidgeSolution fast = solve_from_sketch(sk, gamma);
    const Vector ref = oracle::dense_ridge(sk.covariance(), gamma, sk.c());
    REQUIRE((fast.x - ref).norm() <= 1e-8 * std::max(1e-30, ref.norm()));
  }
}

TEST_CASE("lemma1_bound") {
  SECTION("identical grams give factor zero") {
    const Matrix g = oracle::rand_psd(4, 8);
    const BoundReport rep = lemma1_bound(g, g, 1.0);
    CHECK(rep.covariance_error <= 1e-12 * g.norm());
    CHECK(rep.lemma1_factor <= 1e-12 * g.norm());
  }
  SECTION("tight scalar-matrix instance") {
    const Matrix exact = 2.0 * Matrix::Identity(2, 2);
    const Matrix sketch = Matrix::Identity(2, 2);
    const BoundReport rep = lemma1_bound(exact, sketch, 1.0);
    CHECK(rep.covariance_error == Catch::Approx(1.0));
    CHECK(rep.lambda_min_sketch == Catch::Approx(1.0));
    CHECK(rep.lemma1_factor == Catch::Approx(0.5));
    // the bound is exactly attained: |x_hat - x| = 0.5 |x|
    Vector c(2);
    c << 3.0, -1.0;
    const Vector x = oracle::dense_ridge(exact, 1.0, c);
    const Vector xh = oracle::dense_ridge(sketch, 1.0, c);
    CHECK((xh - x).norm() ==
          Catch::Approx(rep.lemma1_factor * x.norm()).epsilon(1e-12));
  }
  SECTION("factor dominates the measured error on random pairs") {
    std::mt19937_64 eng(99);
    for (int i = 0; i < 100; ++i) {
      const Matrix exact = oracle::rand_psd(5, eng());
      Matrix sketch = oracle::rand_psd(5, eng());
      const double gamma = 0.5 + static_cast<double>(eng() % 5);
      const Vector c = oracle::randn_vec(5, eng());
      const BoundReport rep = lemma1_bound(exact, sketch, gamma);
      const Vector x = oracle::dense_ridge(exact, gamma, c);
      const Vector xh = oracle::dense_ridge(sketch, gamma, c);
      REQUIRE((xh - x).norm() <=
              rep.lemma1_factor * x.norm() + 1e-9 * (1.0 + x.norm()));
    }
  }
  SECTION("asymmetry is rejected") {
    Matrix bad = Matrix::Identity(3, 3);
    bad(0, 1) = 1e-6;
    CHECK_THROWS_AS(lemma1_bound(bad, Matrix::Identity(3, 3), 1.0),
                    std::invalid_argument);
  }
  SECTION("k_best minimizes tail over the sketch budget") {
    Matrix g = Matrix::Zero(4, 4);
    g.diagonal() << 100.0, 1.0, 1.0, 1.0;
    const BoundReport rep = lemma1_bound(g, g, 1.0, Index{3});
    // tails: k=0 -> 103/3, k=1 -> 3/2, k=2 -> 2/1; best is k=1
    CHECK(rep.k_best == 1);
    CHECK(rep.tail_at_k == Catch::Approx(3.0));
  }
}

TEST_CASE("theorem_required_gamma") {
  CHECK(theorem_required_gamma(0.0, 6, 1, 0.5) == 0.0);
  CHECK(theorem_required_gamma(10.0, 6, 1, 0.5) == Catch::Approx(4.0));
  CHECK(theorem_required_gamma(10.0, 6, 1, 0.5, true) == Catch::Approx(2.0));
  CHECK_THROWS_AS(theorem_required_gamma(1.0, 4, 4, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(theorem_required_gamma(1.0, 4, 1, 0.0),
                  std::invalid_argument);
}

TEST_CASE("theorem_required_ell") {
  CHECK(theorem_required_ell(0.0, 1.0, 3, 0.5) == 4);
  CHECK(theorem_required_ell(10.0, 4.0, 1, 0.5) == 6);
  CHECK(theorem_required_ell(10.0, 4.0, 1, 0.5, true) == 4);
  CHECK(theorem_required_ell(0.0, 1.0, 0, 0.1) == 2);
  CHECK_THROWS_AS(theorem_required_ell(1.0, 0.0, 1, 0.5),
                  std::invalid_argument);
}

TEST_CASE("coef_error") {
  Vector x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  CHECK(coef_error(x, x) == 0.0);
  CHECK(coef_error(2 * x, x) == Catch::Approx(1.0));
  CHECK(coef_error(x, y) == Catch::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(coef_error(x, Vector::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(coef_error(x, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("pred_error") {
  const Matrix a = oracle::randn(5, 3, 3);
  Vector x = oracle::randn_vec(3, 4);
  CHECK(pred_error(a, a * x, x) <= 1e-24);
  CHECK(pred_error(a, Vector::Ones(5), Vector::Zero(3)) == Catch::Approx(1.0));
  Matrix one_row = Matrix::Ones(1, 3);
  Vector b(1);
  b << 3.0;  // single row, residual 3 -> squared error 9
  CHECK(pred_error(one_row, b, Vector::Zero(3)) == Catch::Approx(9.0));
  CHECK_THROWS_AS(pred_error(a, Vector::Ones(4), x), std::invalid_argument);
}

TEST_CASE("theorem end-to-end on random streams") {
  std::mt19937_64 eng(2024);
  const double epsilons[] = {0.5, 0.1, 0.05};
  for (int i = 0; i < 10; ++i) {
    const Matrix a = oracle::randn(300, 24, eng());
    const Vector b = oracle::randn_vec(300, eng());
    GramAccumulator acc = acc_of(a, b);
    for (const Index ell : {Index{8}, Index{16}}) {
      for (const bool robust : {false, true}) {
        for (const double eps : epsilons) {
          double gamma = std::numeric_limits<double>::infinity();
          for (Index k = 0; k < ell; ++k)
            gamma = std::min(gamma, theorem_required_gamma(
                                        oracle::tail_sq(a, k), ell, k, eps,
                                        robust));
          REQUIRE(gamma > 0.0);
          FdSketch sk(ell, 24, robust ? SketchKind::rfd : SketchKind::fd);
          sk.push_rows(a, b);
          sk.flush();
          const RidgeSolution exact = solve_exact(acc, gamma);
          const RidgeSolution approx = solve_from_sketch(sk, gamma);
          REQUIRE(coef_error(approx.x, exact.x) <= eps);
        }
      }
    }
  }
}

TEST_CASE("linear functional corollary") {
  std::mt19937_64 eng(31337);
  const Matrix a = oracle::randn(400, 32, 5150);
  const Vector b = oracle::randn_vec(400, 5151);
  const Index ell = 12;
  const double eps = 0.2;
  double gamma = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < ell; ++k)
    gamma = std::min(gamma,
                     theorem_required_gamma(oracle::tail_sq(a, k), ell, k, eps));
  GramAccumulator acc = acc_of(a, b);
  FdSketch sk(ell, 32);
  sk.push_rows(a, b);
  sk.flush();
  const Vector x = solve_exact(acc, gamma).x;
  const Vector xh = solve_from_sketch(sk, gamma).x;
  for (int t = 0; t < 20; ++t) {
    const Vector probe = oracle::randn_vec(32, eng());
    REQUIRE(std::abs((xh - x).dot(probe)) <=
            eps * x.norm() * probe.norm() + 1e-12);
  }
}
