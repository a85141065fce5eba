#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "fdridge/fd_sketch.hpp"
#include "fdridge/linalg.hpp"
#include "fdridge/types.hpp"

namespace fdridge {

enum class SolverTag { exact, fd, rfd, isvd, twolevel, rp, cs };

inline const char* solver_tag_name(SolverTag t) {
  switch (t) {
    case SolverTag::exact: return "exact";
    case SolverTag::fd: return "fd";
    case SolverTag::rfd: return "rfd";
    case SolverTag::isvd: return "isvd";
    case SolverTag::twolevel: return "twolevel";
    case SolverTag::rp: return "rp";
    case SolverTag::cs: return "cs";
  }
  return "?";
}

struct RidgeSolution {
  Vector x;
  double gamma_effective = 0.0;
  SolverTag solver = SolverTag::exact;
};

/// Exact streaming accumulator of A^T A and c = A^T b. Rows are buffered
/// and folded in as blocked rank updates; the Gram stays exactly symmetric.
class GramAccumulator {
 public:
  explicit GramAccumulator(Index d) : d_(d) {
    require(d >= 1, "GramAccumulator: d must be >= 1");
    gram_lower_ = Matrix::Zero(d, d);
    c_ = Vector::Zero(d);
    block_ = Matrix::Zero(kBlockRows, d);
  }

  Index dim() const { return d_; }
  Index n_seen() const { return n_seen_; }
  const Vector& c() const { return c_; }

  void push(const Eigen::Ref<const Vector>& row, double label) {
    require(row.size() == d_, "GramAccumulator::push: dimension mismatch");
    require(all_finite(row) && std::isfinite(label),
            "GramAccumulator::push: non-finite input");
    c_.noalias() += label * row;
    block_.row(block_count_++) = row;
    ++n_seen_;
    if (block_count_ == kBlockRows) fold_block();
  }

  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    require(rows.cols() == d_ && rows.rows() == labels.size(),
            "GramAccumulator::push_rows: shape mismatch");
    require(all_finite(rows) && all_finite(labels),
            "GramAccumulator::push_rows: non-finite input");
    fold_block();
    c_.noalias() += rows.transpose() * labels;
    gram_lower_.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
    n_seen_ += rows.rows();
  }

  /// The accumulated A^T A (symmetric).
  Matrix gram() const {
    const_cast<GramAccumulator*>(this)->fold_block();
    Matrix g = gram_lower_.selfadjointView<Eigen::Lower>();
    return g;
  }

 private:
  void fold_block() {
    if (block_count_ == 0) return;
    gram_lower_.selfadjointView<Eigen::Lower>().rankUpdate(
        block_.topRows(block_count_).transpose());
    block_count_ = 0;
  }

  static constexpr Index kBlockRows = 64;
  Index d_;
  Matrix gram_lower_;
  Vector c_;
  Index n_seen_ = 0;
  Matrix block_;
  Index block_count_ = 0;
};

namespace detail {

// Solve (gram + gamma I) x = rhs with residual verification and one
// refinement pass.
inline Vector spd_ridge_solve(const Matrix& gram, double gamma,
                              const Vector& rhs, const char* who) {
  Matrix m = gram;
  m.diagonal().array() += gamma;
  Eigen::LDLT<Matrix> ldlt(m);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error(std::string(who) + ": factorization failed");
  // An unregularized solve is only defined on a nonsingular Gram.
  if (gamma == 0.0) {
    const Vector dvec = ldlt.vectorD().cwiseAbs();
    if (dvec.minCoeff() <= 1e-12 * std::max(dvec.maxCoeff(), 1e-300))
      throw std::runtime_error(std::string(who) +
                               ": singular system at gamma = 0");
  }
  Vector x = ldlt.solve(rhs);
  Vector resid = rhs - m.selfadjointView<Eigen::Lower>() * x;
  x += ldlt.solve(resid);
  resid = rhs - m.selfadjointView<Eigen::Lower>() * x;
  const double scale = rhs.norm();
  if (!all_finite(x) || resid.norm() > 1e-8 * std::max(1e-300, scale))
    throw std::runtime_error(std::string(who) +
                             ": singular or ill-conditioned system");
  return x;
}

}  // namespace detail

/// x_gamma = (A^T A + gamma I)^{-1} c from an exact Gram accumulator.
/// gamma = 0 is allowed only when the Gram is numerically nonsingular.
inline RidgeSolution solve_exact(const GramAccumulator& acc, double gamma) {
  require(gamma >= 0.0, "solve_exact: gamma must be >= 0");
  RidgeSolution sol;
  sol.x = detail::spd_ridge_solve(acc.gram(), gamma, acc.c(), "solve_exact");
  sol.gamma_effective = gamma;
  sol.solver = SolverTag::exact;
  return sol;
}

/// Ridge solve against a spectral sketch B = diag(sigma) v_rows:
///   x = V (Sigma^2 + g I)^{-1} V^T c + g^{-1} (c - V V^T c)
///     = c / g + sum_i v_i <v_i, c> (1/(sigma_i^2 + g) - 1/g).
/// O(rows * d) time, no d x d matrix formed, one pass over the basis.
/// Shared by every solver that keeps its sketch in factored form.
template <class VMat>
inline Vector ridge_solve_spectral(const Eigen::Ref<const Vector>& sigma,
                                   const Eigen::DenseBase<VMat>& v_rows,
                                   const Eigen::Ref<const Vector>& c,
                                   double gamma_eff) {
  require(gamma_eff > 0.0, "ridge_solve_spectral: gamma must be > 0");
  require(sigma.size() == v_rows.rows() && v_rows.cols() == c.size(),
          "ridge_solve_spectral: shape mismatch");
  Vector x = c / gamma_eff;
  for (Index i = 0; i < v_rows.rows(); ++i) {
    const auto vi = v_rows.derived().row(i);
    const double cp = vi.dot(c);
    if (cp == 0.0) continue;
    const double s2 = sigma(i) * sigma(i);
    const double w = cp / (s2 + gamma_eff) - cp / gamma_eff;
    x += w * vi.transpose();
  }
  return x;
}

/// Approximate ridge coefficients from an FD-family sketch. For RFD the
/// accumulated alpha joins the regularizer at solve time.
inline RidgeSolution solve_from_sketch(const FdSketch& sketch, double gamma) {
  require(gamma > 0.0, "solve_from_sketch: gamma must be > 0");
  const double gamma_eff =
      (sketch.kind() == SketchKind::rfd) ? gamma + sketch.alpha() : gamma;
  RidgeSolution sol;
  sol.x = ridge_solve_spectral(sketch.sigma(), sketch.v_rows(), sketch.c(),
                               gamma_eff);
  sol.gamma_effective = gamma_eff;
  switch (sketch.kind()) {
    case SketchKind::rfd: sol.solver = SolverTag::rfd; break;
    case SketchKind::isvd: sol.solver = SolverTag::isvd; break;
    default: sol.solver = SolverTag::fd; break;
  }
  return sol;
}

/// The certified coefficient error factor
///   ||A^T A - C^T C||_2 / (lambda_min(C^T C) + gamma),
/// an upper bound on ||x_hat - x|| / ||x||.
struct BoundReport {
  double covariance_error = 0.0;
  double lambda_min_sketch = 0.0;
  double lemma1_factor = 0.0;
  Index k_best = 0;
  double tail_at_k = 0.0;
};

inline BoundReport lemma1_bound(const Eigen::Ref<const Matrix>& gram_exact,
                                const Eigen::Ref<const Matrix>& gram_sketch,
                                double gamma,
                                std::optional<Index> ell = std::nullopt) {
  require(gram_exact.rows() == gram_exact.cols() &&
              gram_sketch.rows() == gram_sketch.cols() &&
              gram_exact.rows() == gram_sketch.rows(),
          "lemma1_bound: square matrices of equal size required");
  require(gamma > 0.0, "lemma1_bound: gamma must be > 0");
  const double asym =
      std::max((gram_exact - gram_exact.transpose()).cwiseAbs().maxCoeff(),
               (gram_sketch - gram_sketch.transpose()).cwiseAbs().maxCoeff());
  require(asym <= 1e-10, "lemma1_bound: asymmetric input");

  BoundReport rep;
  rep.covariance_error = spectral_norm_sym(gram_exact - gram_sketch);
  Vector sk_eigs = sym_eigenvalues(gram_sketch);
  rep.lambda_min_sketch = sk_eigs(sk_eigs.size() - 1);
  rep.lemma1_factor =
      rep.covariance_error / (rep.lambda_min_sketch + gamma);

  // Best prospective FD tail bound tail_k / (l - k); the bound holds for
  // every k below the sketch size, so report the minimizing k.
  Vector ex_eigs = sym_eigenvalues(gram_exact);
  const Index d = ex_eigs.size();
  const Index l = ell.value_or(d);
  require(l >= 1, "lemma1_bound: ell out of range");
  double tail = 0.0;
  for (Index i = 0; i < d; ++i) tail += std::max(0.0, ex_eigs(i));
  double best = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < l; ++k) {
    const double value = tail / static_cast<double>(l - k);
    if (value < best) {
      best = value;
      rep.k_best = k;
      rep.tail_at_k = tail;
    }
    if (k < d) tail -= std::max(0.0, ex_eigs(k));
  }
  return rep;
}

/// Smallest gamma for which the sketch guarantees relative coefficient
/// error eps, given the spectral tail mass past rank k.
inline double theorem_required_gamma(double tail, Index ell, Index k,
                                     double eps, bool robust = false) {
  require(tail >= 0.0, "theorem_required_gamma: tail must be >= 0");
  require(k >= 0 && k < ell, "theorem_required_gamma: need 0 <= k < ell");
  require(eps > 0.0, "theorem_required_gamma: eps must be > 0");
  const double denom = eps * static_cast<double>(ell - k) * (robust ? 2.0 : 1.0);
  return tail / denom;
}

/// Smallest sketch size for which gamma guarantees relative error eps.
inline Index theorem_required_ell(double tail, double gamma, Index k,
                                  double eps, bool robust = false) {
  require(tail >= 0.0, "theorem_required_ell: tail must be >= 0");
  require(gamma > 0.0, "theorem_required_ell: gamma must be > 0");
  require(k >= 0, "theorem_required_ell: k must be >= 0");
  require(eps > 0.0, "theorem_required_ell: eps must be > 0");
  const double raw = tail / (gamma * eps * (robust ? 2.0 : 1.0));
  const Index extra =
      static_cast<Index>(std::ceil(raw * (1.0 - 1e-12)));
  return std::max<Index>({k + extra, k + 1, 2});
}

/// Relative L2 coefficient error ||x_hat - x_ref|| / ||x_ref||.
inline double coef_error(const Eigen::Ref<const Vector>& x_hat,
                         const Eigen::Ref<const Vector>& x_ref) {
  require(x_hat.size() == x_ref.size(), "coef_error: dimension mismatch");
  const double ref = x_ref.norm();
  require(ref > 0.0, "coef_error: zero reference");
  return (x_hat - x_ref).norm() / ref;
}

/// Mean squared prediction error ||A x - b||^2 / n.
inline double pred_error(const Eigen::Ref<const Matrix>& a_test,
                         const Eigen::Ref<const Vector>& b_test,
                         const Eigen::Ref<const Vector>& x) {
  require(a_test.rows() == b_test.size() && a_test.cols() == x.size(),
          "pred_error: shape mismatch");
  require(a_test.rows() > 0, "pred_error: empty test set");
  return (a_test * x - b_test).squaredNorm() /
         static_cast<double>(a_test.rows());
}

}  // namespace fdridge
