#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "fdridge/fd_sketch.hpp"
#include "fdridge/ridge.hpp"
#include "fdridge/rng.hpp"
#include "fdridge/types.hpp"

namespace fdridge {

/// Two-level FD: an inner FD sketch of 3k rows plus a weighted reservoir
/// of the directions FD shrinks away, scaled so that E[Q^T Q] equals the
/// cumulative removed mass. The combined estimate is B^T B + Q^T Q.
class TwoLevelSketch {
 public:
  TwoLevelSketch(Index ell, Index d, std::uint64_t seed, Index k = 0)
      : seed_(seed) {
    require(ell >= 4, "TwoLevelSketch: ell must be >= 4");
    require(d >= 1, "TwoLevelSketch: d must be >= 1");
    if (k == 0) k = std::max<Index>(1, ell / 6);
    require(k >= 1 && 3 * k + 1 <= ell,
            "TwoLevelSketch: need 1 <= k and 3k < ell");
    k_ = k;
    b_ = std::make_unique<FdSketch>(3 * k, d, SketchKind::fd);
    res_ = std::make_shared<Reservoir>(ell - 3 * k, d,
                                       CounterRng(seed, /*stream=*/0x2f1d));
    // The observer captures the reservoir by value (shared), so the
    // sketch stays movable.
    auto res = res_;
    b_->set_reduce_observer(
        [res](const Vector& w, const Matrix& dirs) { res->absorb(w, dirs); });
  }

  Index k() const { return k_; }
  Index q_cap() const { return res_->q_cap; }
  Index dim() const { return b_->dim(); }
  Index n_seen() const { return b_->n_seen(); }
  double w_total() const { return res_->w_total; }
  const FdSketch& b_sketch() const { return *b_; }
  const Vector& c() const { return b_->c(); }

  void push(const Eigen::Ref<const Vector>& row, double label) {
    b_->push(row, label);
  }

  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    b_->push_rows(rows, labels);
  }

  void flush() { b_->flush(); }

  /// Sampled residual rows, already scaled by sqrt(w_total / q_cap).
  Matrix q_rows() const {
    if (res_->w_total == 0.0) return Matrix(0, dim());
    return res_->q_dirs *
           std::sqrt(res_->w_total / static_cast<double>(res_->q_cap));
  }

  /// Combined sketch rows [B; Q], at most ell of them.
  Matrix combined_rows() const {
    Index r = 0;
    while (r < b_->ell() && b_->sigma()(r) > 0.0) ++r;
    const Matrix q = q_rows();
    Matrix rows(r + q.rows(), dim());
    rows.topRows(r) =
        b_->sigma().head(r).asDiagonal() * b_->v_rows().topRows(r);
    rows.bottomRows(q.rows()) = q;
    return rows;
  }

  RidgeSolution solve(double gamma) const {
    require(gamma > 0.0, "TwoLevelSketch::solve: gamma must be > 0");
    RidgeSolution sol;
    const Matrix rows = combined_rows();
    if (rows.rows() == 0 || rows.isZero(0.0)) {
      sol.x = b_->c() / gamma;
    } else {
      const ThinSvd svd = thin_svd(rows, /*want_left=*/false);
      sol.x = ridge_solve_spectral(svd.singular_values, svd.right_vectors,
                                   b_->c(), gamma);
    }
    sol.gamma_effective = gamma;
    sol.solver = SolverTag::twolevel;
    return sol;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t rng_counter() const { return res_->rng.counter(); }
  const Matrix& q_dirs() const { return res_->q_dirs; }
  Index pending_rows() const { return b_->pending_rows(); }

  static TwoLevelSketch from_parts(Index ell, Index d, std::uint64_t seed,
                                   Index k, FdSketch b, double w_total,
                                   std::uint64_t rng_counter, Matrix q_dirs) {
    TwoLevelSketch t(ell, d, seed, k);
    require(b.ell() == 3 * k && b.dim() == d && b.kind() == SketchKind::fd,
            "TwoLevelSketch::from_parts: inner sketch mismatch");
    require(q_dirs.rows() == t.q_cap() && q_dirs.cols() == d,
            "TwoLevelSketch::from_parts: reservoir shape mismatch");
    require(w_total >= 0.0, "TwoLevelSketch::from_parts: negative mass");
    *t.b_ = std::move(b);
    auto res = t.res_;
    t.b_->set_reduce_observer(
        [res](const Vector& w, const Matrix& dirs) { res->absorb(w, dirs); });
    t.res_->w_total = w_total;
    t.res_->q_dirs = std::move(q_dirs);
    t.res_->rng.set_counter(rng_counter);
    return t;
  }

 private:
  // Weighted reservoir with replacement: after any prefix of candidates,
  // each slot independently holds direction v with probability w_v / W.
  struct Reservoir {
    Index q_cap;
    Matrix q_dirs;
    double w_total = 0.0;
    CounterRng rng;

    Reservoir(Index cap, Index d, CounterRng r)
        : q_cap(cap), q_dirs(Matrix::Zero(cap, d)), rng(r) {}

    void absorb(const Vector& w, const Matrix& dirs) {
      for (Index i = 0; i < w.size(); ++i) {
        if (w(i) <= 0.0) continue;
        w_total += w(i);
        const double p = w(i) / w_total;
        for (Index j = 0; j < q_cap; ++j)
          if (rng.next_double() < p) q_dirs.row(j) = dirs.row(i);
      }
    }
  };

  Index k_ = 0;
  std::uint64_t seed_;
  std::unique_ptr<FdSketch> b_;
  std::shared_ptr<Reservoir> res_;
};

/// Dense random-projection sketch: per batch of ell rows, C += S A_batch
/// and c += S b_batch with S iid +-1/sqrt(ell). E[S^T S] = I, so C^T C is
/// an unbiased estimate of A^T A.
class RpSketch {
 public:
  RpSketch(Index ell, Index d, std::uint64_t seed)
      : ell_(ell), d_(d), seed_(seed), rng_(seed, /*stream=*/0x9e3) {
    require(ell >= 1, "RpSketch: ell must be >= 1");
    require(d >= 1, "RpSketch: d must be >= 1");
    c_mat_ = Matrix::Zero(ell, d);
    c_proj_ = Vector::Zero(ell);
    pending_ = Matrix::Zero(ell, d);
    pending_labels_ = Vector::Zero(ell);
  }

  Index ell() const { return ell_; }
  Index dim() const { return d_; }
  Index n_seen() const { return n_seen_; }
  Index pending_rows() const { return pending_count_; }
  virtual SketchKind kind() const { return SketchKind::rp; }
  const Matrix& projected() const { return c_mat_; }
  const Vector& projected_labels() const { return c_proj_; }

  void push(const Eigen::Ref<const Vector>& row, double label) {
    require(row.size() == d_, "RpSketch::push: dimension mismatch");
    require(all_finite(row) && std::isfinite(label),
            "RpSketch::push: non-finite input");
    pending_.row(pending_count_) = row;
    pending_labels_(pending_count_) = label;
    ++pending_count_;
    ++n_seen_;
    if (pending_count_ == ell_) project_batch();
  }

  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    require(rows.cols() == d_ && rows.rows() == labels.size(),
            "RpSketch::push_rows: shape mismatch");
    for (Index i = 0; i < rows.rows(); ++i) push(rows.row(i), labels(i));
  }

  /// Zero-pads the final partial batch to exactly ell rows.
  void flush() {
    if (pending_count_ == 0) return;
    pending_.bottomRows(ell_ - pending_count_).setZero();
    pending_labels_.tail(ell_ - pending_count_).setZero();
    project_batch();
  }

  RidgeSolution solve(double gamma) const {
    require(gamma > 0.0, "RpSketch::solve: gamma must be > 0");
    Matrix gram = Matrix::Zero(d_, d_);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(c_mat_.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() =
        gram.transpose().triangularView<Eigen::StrictlyUpper>();
    const Vector rhs = c_mat_.transpose() * c_proj_;
    RidgeSolution sol;
    sol.x = detail::spd_ridge_solve(gram, gamma, rhs, "RpSketch::solve");
    sol.gamma_effective = gamma;
    sol.solver = SolverTag::rp;
    return sol;
  }

  static RpSketch from_parts(Index ell, Index d, std::uint64_t seed,
                             std::uint64_t rng_counter, Index n_seen,
                             Matrix projected, Vector projected_labels) {
    RpSketch s(ell, d, seed);
    require(projected.rows() == ell && projected.cols() == d &&
                projected_labels.size() == ell,
            "RpSketch::from_parts: shape mismatch");
    s.c_mat_ = std::move(projected);
    s.c_proj_ = std::move(projected_labels);
    s.rng_.set_counter(rng_counter);
    s.n_seen_ = n_seen;
    return s;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t rng_counter() const { return rng_.counter(); }

 protected:
  virtual void project_batch() {
    Matrix s(ell_, ell_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(ell_));
    for (Index i = 0; i < ell_; ++i)
      for (Index j = 0; j < ell_; ++j) s(i, j) = rng_.next_sign() * scale;
    c_mat_.noalias() += s * pending_;
    c_proj_.noalias() += s * pending_labels_;
    pending_count_ = 0;
    pending_.setZero();
    pending_labels_.setZero();
  }

  Index ell_;
  Index d_;
  std::uint64_t seed_;
  CounterRng rng_;
  Matrix c_mat_;
  Vector c_proj_;
  Matrix pending_;
  Vector pending_labels_;
  Index pending_count_ = 0;
  Index n_seen_ = 0;

 public:
  virtual ~RpSketch() = default;
};

/// CountSketch variant: S has a single +-1 per column, so each input row
/// lands on one output row. One row-add per input row.
class CsSketch : public RpSketch {
 public:
  CsSketch(Index ell, Index d, std::uint64_t seed) : RpSketch(ell, d, seed) {}

  SketchKind kind() const override { return SketchKind::cs; }

  RidgeSolution solve(double gamma) const {
    RidgeSolution sol = RpSketch::solve(gamma);
    sol.solver = SolverTag::cs;
    return sol;
  }

  static CsSketch from_parts(Index ell, Index d, std::uint64_t seed,
                             std::uint64_t rng_counter, Index n_seen,
                             Matrix projected, Vector projected_labels) {
    CsSketch s(ell, d, seed);
    require(projected.rows() == ell && projected.cols() == d &&
                projected_labels.size() == ell,
            "CsSketch::from_parts: shape mismatch");
    s.c_mat_ = std::move(projected);
    s.c_proj_ = std::move(projected_labels);
    s.rng_.set_counter(rng_counter);
    s.n_seen_ = n_seen;
    return s;
  }

 protected:
  void project_batch() override {
    for (Index j = 0; j < ell_; ++j) {
      const Index target = static_cast<Index>(
          rng_.next_index(static_cast<std::uint64_t>(ell_)));
      const double sign = rng_.next_sign();
      c_mat_.row(target) += sign * pending_.row(j);
      c_proj_(target) += sign * pending_labels_(j);
    }
    pending_count_ = 0;
    pending_.setZero();
    pending_labels_.setZero();
  }
};

}  // namespace fdridge
