#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace fdridge {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Row-major storage for matrices whose rows are streamed or scanned.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Library-wide tolerances. All floating point is 64-bit.
namespace tol {
// Orthonormality of singular-vector rows: ||V V^T - I||_max.
inline constexpr double orthonormal = 1e-8;
// SVD reconstruction, relative to max(1, ||M||_F).
inline constexpr double reconstruct_rel = 1e-10;
// Absolute slack added to analytic bound checks.
inline constexpr double bound_slack = 1e-9;
// Singular values below this fraction of sigma_max are clamped to 0.
inline constexpr double sigma_clamp_rel = 1e-12;
}  // namespace tol

template <class Derived>
inline bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

inline void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

// Error conventions, used consistently across the library:
//   std::invalid_argument  -- bad shapes, non-finite input, bad parameters
//   std::runtime_error     -- numeric failure (no convergence, singular solve)
//   std::logic_error       -- operation on a state that forbids it
//   std::domain_error      -- operation unsupported for this input (rank, size guard)

}  // namespace fdridge
