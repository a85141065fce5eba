#pragma once

#include <Eigen/Dense>

#include "fdridge/types.hpp"

namespace fdridge {

/// Thin SVD m = U * diag(s) * Vt with r = min(rows, cols) terms.
/// right_vectors holds V^T (r x cols, orthonormal rows); left_vectors
/// holds U (rows x r) and may be empty when not requested.
struct ThinSvd {
  Vector singular_values;  // non-increasing, >= 0
  Matrix right_vectors;    // r x cols
  Matrix left_vectors;     // rows x r, or 0x0

  Index rank() const {
    Index r = 0;
    while (r < singular_values.size() && singular_values(r) > 0.0) ++r;
    return r;
  }
};

namespace detail {

// Values below sigma_clamp_rel * sigma_max are set to exactly 0 so that
// rank decisions downstream are stable.
inline void clamp_small_singular_values(Vector& s) {
  if (s.size() == 0) return;
  const double cut = tol::sigma_clamp_rel * s(0);
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) <= cut) s(i) = 0.0;
}

inline Eigen::BDCSVD<Matrix> svd_compute(const Matrix& m, unsigned opts) {
  Eigen::BDCSVD<Matrix> svd(m, opts);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("thin_svd: SVD iteration failed to converge");
  return svd;
}

}  // namespace detail

inline ThinSvd thin_svd(const Eigen::Ref<const Matrix>& m,
                        bool want_left = true) {
  require(m.rows() > 0 && m.cols() > 0, "thin_svd: empty matrix");
  require(all_finite(m), "thin_svd: non-finite input");

  const unsigned opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
  ThinSvd out;
  // Wide matrices are decomposed through their transpose; the sketch
  // matrices this library works on are l x d with l << d.
  if (m.cols() > m.rows()) {
    Matrix mt = m.transpose();
    auto svd = detail::svd_compute(mt, opts);
    out.singular_values = svd.singularValues();
    out.right_vectors = svd.matrixU().transpose();
    if (want_left) out.left_vectors = svd.matrixV();
  } else {
    auto svd = detail::svd_compute(m, opts);
    out.singular_values = svd.singularValues();
    out.right_vectors = svd.matrixV().transpose();
    if (want_left) out.left_vectors = svd.matrixU();
  }
  detail::clamp_small_singular_values(out.singular_values);
  return out;
}

inline double spectral_norm(const Eigen::Ref<const Matrix>& m) {
  require(m.rows() > 0 && m.cols() > 0, "spectral_norm: empty matrix");
  require(all_finite(m), "spectral_norm: non-finite input");
  Eigen::BDCSVD<Matrix> svd(m.cols() > m.rows() ? Matrix(m.transpose())
                                                : Matrix(m));
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("spectral_norm: SVD failed to converge");
  return svd.singularValues()(0);
}

/// Sum of squared singular values past the top k, i.e. ||m - m_k||_F^2.
inline double squared_frobenius_tail(const Eigen::Ref<const Matrix>& m,
                                     Index k) {
  require(k >= 0 && k <= std::min(m.rows(), m.cols()),
          "squared_frobenius_tail: k out of range");
  if (k == std::min(m.rows(), m.cols())) return 0.0;
  if (k == 0) return m.squaredNorm();
  const ThinSvd svd = thin_svd(m, /*want_left=*/false);
  double tail = 0.0;
  for (Index i = k; i < svd.singular_values.size(); ++i)
    tail += svd.singular_values(i) * svd.singular_values(i);
  return tail;
}

/// Eigenvalues of a symmetric matrix, descending.
inline Vector sym_eigenvalues(const Eigen::Ref<const Matrix>& m) {
  require(m.rows() == m.cols() && m.rows() > 0,
          "sym_eigenvalues: square matrix required");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_eigenvalues: eigensolver failed");
  return es.eigenvalues().reverse();
}

/// Spectral norm of a symmetric matrix: max |eigenvalue|.
inline double spectral_norm_sym(const Eigen::Ref<const Matrix>& m) {
  const Vector ev = sym_eigenvalues(m);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace fdridge
