#pragma once

// Independent reference implementations used as test oracles. These are
// deliberately written against Eigen directly (textbook formulations, no
// shared code with the library under test) and use std::mt19937_64
// rather than the library generator.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline Matrix randn(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Matrix a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = nd(eng);
  return a;
}

inline Vector randn_vec(Index n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(eng);
  return v;
}

inline Matrix rand_low_rank(Index n, Index d, Index rank, std::uint64_t seed) {
  return randn(n, rank, seed) * randn(rank, d, seed ^ 0x5bd1e995);
}

inline Matrix rand_psd(Index d, std::uint64_t seed) {
  Matrix g = randn(d + 2, d, seed);
  return g.transpose() * g;
}

/// Textbook batched Frequent Directions, keeping the sketch rows B
/// explicitly: stack [B; batch], full thin SVD, shrink the squared
/// spectrum by sigma_{l+1}^2 (or truncate for the iSVD variant).
struct ReferenceFd {
  Index ell;
  Index d;
  bool robust = false;
  bool truncate_only = false;
  Matrix b;  // current sketch rows, at most ell of them
  double alpha = 0.0;

  ReferenceFd(Index l, Index dim) : ell(l), d(dim), b(0, dim) {}

  void reduce(const Matrix& batch) {
    Matrix stacked(b.rows() + batch.rows(), d);
    stacked << b, batch;
    Eigen::BDCSVD<Matrix> svd(stacked, Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    double delta = 0.0;
    if (!truncate_only && s.size() > ell) delta = s(ell) * s(ell);
    if (robust) alpha += delta / 2.0;
    const Index keep = std::min<Index>(ell, s.size());
    Vector shrunk(keep);
    for (Index i = 0; i < keep; ++i)
      shrunk(i) = std::sqrt(std::max(0.0, s(i) * s(i) - delta));
    b = shrunk.asDiagonal() * svd.matrixV().leftCols(keep).transpose();
  }

  /// Stream rows in batches of ell (the final batch may be short).
  void stream(const Matrix& rows) {
    for (Index i = 0; i < rows.rows(); i += ell)
      reduce(rows.middleRows(i, std::min(ell, rows.rows() - i)));
  }

  Matrix covariance() const { return b.transpose() * b; }
};

inline Vector dense_ridge(const Matrix& gram, double gamma, const Vector& c) {
  Matrix m = gram;
  m.diagonal().array() += gamma;
  return m.ldlt().solve(c);
}

inline double sym_lambda_max(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline double sym_lambda_min(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double sym_norm2(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().maxCoeff()),
                  std::abs(es.eigenvalues().minCoeff()));
}

/// Squared tail sum of singular values past the top k.
inline double tail_sq(const Matrix& a, Index k) {
  Eigen::BDCSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  double t = 0.0;
  for (Index i = k; i < s.size(); ++i) t += s(i) * s(i);
  return t;
}

}  // namespace oracle
