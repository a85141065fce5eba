#pragma once

#include <string>
#include <vector>

#include "fdridge/experiment.hpp"
#include "fdridge/fd_sketch.hpp"
#include "fdridge/linalg.hpp"
#include "fdridge/ridge.hpp"
#include "fdridge/rng.hpp"

namespace fdridge {

struct SuiteResult {
  std::string name;
  long checks = 0;
  long violations = 0;
  double worst_margin = 0.0;  // most positive (bound - slack) excess seen

  bool pass() const { return violations == 0 && checks > 0; }
};

namespace detail {

inline Matrix gaussian_matrix(Index n, Index d, std::uint64_t seed,
                              std::uint64_t stream) {
  CounterRng rng(seed, stream);
  Matrix a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.next_gaussian();
  return a;
}

inline Vector spectrum_tails(const Matrix& a) {
  const ThinSvd svd = thin_svd(a, /*want_left=*/false);
  const Index r = svd.singular_values.size();
  Vector tails = Vector::Zero(r + 1);
  for (Index i = r - 1; i >= 0; --i)
    tails(i) =
        tails(i + 1) + svd.singular_values(i) * svd.singular_values(i);
  return tails;  // tails(k) = sum of sigma_i^2 for i >= k
}

inline void track(SuiteResult& res, double excess) {
  ++res.checks;
  if (excess > 0.0) ++res.violations;
  if (excess > res.worst_margin) res.worst_margin = excess;
}

}  // namespace detail

/// FD covariance bound: for every k < l,
///   lambda_max(A^T A - B^T B) <= tail_k / (l - k) + slack,
/// and the difference is PSD.
inline SuiteResult verify_fd_bound(int matrices, Index n, Index d,
                                   const std::vector<Index>& ells,
                                   std::uint64_t seed, bool robust = false) {
  SuiteResult res{robust ? "rfd-covariance-bound" : "fd-covariance-bound"};
  for (int m = 0; m < matrices; ++m) {
    const Matrix a =
        detail::gaussian_matrix(n, d, seed, static_cast<std::uint64_t>(m));
    const Matrix gram = a.transpose() * a;
    const Vector tails = detail::spectrum_tails(a);
    for (Index ell : ells) {
      FdSketch sk(ell, d, robust ? SketchKind::rfd : SketchKind::fd);
      sk.reduce(a);
      Matrix diff = gram - sk.covariance();
      if (robust) diff.diagonal().array() -= sk.alpha();
      const Vector eigs = sym_eigenvalues(diff);
      if (!robust) {
        // PSD of the difference.
        detail::track(res, -(eigs(eigs.size() - 1)) - tol::bound_slack);
      }
      const double norm2 =
          std::max(std::abs(eigs(0)), std::abs(eigs(eigs.size() - 1)));
      for (Index k = 0; k < ell && k < tails.size(); ++k) {
        const double denom =
            static_cast<double>(ell - k) * (robust ? 2.0 : 1.0);
        const double bound = tails(k) / denom;
        detail::track(res, norm2 - bound - tol::bound_slack);
      }
    }
  }
  return res;
}

/// Sketch-space ridge solve equals the dense (V S^2 V^T + g I)^{-1} c.
inline SuiteResult verify_solve_identity(int cases, std::uint64_t seed) {
  SuiteResult res{"solve-identity"};
  CounterRng pick(seed, 0x51);
  for (int i = 0; i < cases; ++i) {
    const Index d = 2 + static_cast<Index>(pick.next_index(59));
    const Index ell = 2 + static_cast<Index>(pick.next_index(
                              static_cast<std::uint64_t>(d)));
    const Matrix g = detail::gaussian_matrix(
        d, ell, seed, 0x5100 + static_cast<std::uint64_t>(i));
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix v_rows =
        Matrix(qr.householderQ() * Matrix::Identity(d, ell)).transpose();
    Vector sigma(ell);
    for (Index j = 0; j < ell; ++j)
      sigma(j) = std::exp(2.0 * pick.next_double());
    std::sort(sigma.data(), sigma.data() + ell, std::greater<double>());
    Vector c(d);
    for (Index j = 0; j < d; ++j) c(j) = pick.next_gaussian();
    const double gamma = std::exp(3.0 * pick.next_double() - 1.0);

    const Vector fast = ridge_solve_spectral(sigma, v_rows, c, gamma);
    Matrix dense = v_rows.transpose() *
                       sigma.array().square().matrix().asDiagonal() * v_rows;
    dense.diagonal().array() += gamma;
    const Vector ref = dense.ldlt().solve(c);
    const double rel = (fast - ref).norm() / ref.norm();
    detail::track(res, rel - 1e-8);
  }
  return res;
}

/// coef_error never exceeds the certified factor from the covariance
/// error and lambda_min of the sketch.
inline SuiteResult verify_lemma1_soundness(int cases, std::uint64_t seed) {
  SuiteResult res{"lemma1-soundness"};
  CounterRng pick(seed, 0x77);
  for (int i = 0; i < cases; ++i) {
    const Index d = 4 + static_cast<Index>(pick.next_index(28));
    const Index n = d + 8 + static_cast<Index>(pick.next_index(96));
    const Index ell =
        2 + static_cast<Index>(pick.next_index(
                static_cast<std::uint64_t>(std::max<Index>(d - 2, 1))));
    const double gamma = std::exp(4.0 * pick.next_double() - 1.0);

    const Matrix a = detail::gaussian_matrix(
        n, d, seed, 0x7700 + static_cast<std::uint64_t>(i));
    Vector b(n);
    for (Index j = 0; j < n; ++j) b(j) = pick.next_gaussian();

    FdSketch sk(ell, d, SketchKind::fd);
    sk.push_rows(a, b);
    sk.flush();

    GramAccumulator acc(d);
    acc.push_rows(a, b);

    const RidgeSolution exact = solve_exact(acc, gamma);
    const RidgeSolution approx = solve_from_sketch(sk, gamma);
    const BoundReport rep =
        lemma1_bound(acc.gram(), sk.covariance(), gamma, ell);
    const double err = coef_error(approx.x, exact.x);
    detail::track(res, err - rep.lemma1_factor - tol::bound_slack);
  }
  return res;
}

/// Streams of rank <= l-1 are sketched exactly, so the sketch solution
/// matches the exact one for every gamma.
inline SuiteResult verify_exact_recovery(int cases, std::uint64_t seed) {
  SuiteResult res{"exact-recovery"};
  CounterRng pick(seed, 0x99);
  const double gammas[] = {1e-4, 1.0, 1e4};
  for (int i = 0; i < cases; ++i) {
    const Index d = 8 + static_cast<Index>(pick.next_index(32));
    const Index ell = 3 + static_cast<Index>(pick.next_index(6));
    const Index rank = 1 + static_cast<Index>(pick.next_index(
                               static_cast<std::uint64_t>(ell - 1)));
    const Index n = 100 + static_cast<Index>(pick.next_index(100));
    const Matrix left = detail::gaussian_matrix(
        n, rank, seed, 0x9900 + static_cast<std::uint64_t>(i));
    const Matrix right = detail::gaussian_matrix(
        rank, d, seed, 0x9a00 + static_cast<std::uint64_t>(i));
    const Matrix a = left * right;
    Vector b(n);
    for (Index j = 0; j < n; ++j) b(j) = pick.next_gaussian();

    GramAccumulator acc(d);
    acc.push_rows(a, b);

    for (SketchKind kind : {SketchKind::fd, SketchKind::rfd}) {
      FdSketch sk(ell, d, kind);
      sk.push_rows(a, b);
      sk.flush();
      for (double gamma : gammas) {
        const RidgeSolution exact = solve_exact(acc, gamma);
        const RidgeSolution approx = solve_from_sketch(sk, gamma);
        detail::track(res, coef_error(approx.x, exact.x) - 1e-6);
      }
    }
  }
  return res;
}

inline std::vector<SuiteResult> verify_all(std::uint64_t seed,
                                           bool quick = false) {
  const int m = quick ? 20 : 100;
  const std::vector<Index> ells = {5, 10, 15};
  std::vector<SuiteResult> out;
  out.push_back(
      verify_fd_bound(m, quick ? 60 : 200, quick ? 16 : 30, ells, seed));
  out.push_back(verify_fd_bound(m, quick ? 60 : 200, quick ? 16 : 30, ells,
                                seed, /*robust=*/true));
  out.push_back(verify_solve_identity(quick ? 50 : 200, seed));
  out.push_back(verify_lemma1_soundness(quick ? 25 : 100, seed));
  out.push_back(verify_exact_recovery(quick ? 10 : 25, seed));
  return out;
}

}  // namespace fdridge
