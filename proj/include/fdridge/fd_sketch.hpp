#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "fdridge/linalg.hpp"
#include "fdridge/types.hpp"

namespace fdridge {

enum class SketchKind : std::uint8_t {
  fd = 0,
  rfd = 1,
  isvd = 2,
  twolevel = 3,
  rp = 4,
  cs = 5,
};

inline const char* sketch_kind_name(SketchKind k) {
  switch (k) {
    case SketchKind::fd: return "fd";
    case SketchKind::rfd: return "rfd";
    case SketchKind::isvd: return "isvd";
    case SketchKind::twolevel: return "twolevel";
    case SketchKind::rp: return "rp";
    case SketchKind::cs: return "cs";
  }
  return "?";
}

/// Streaming Frequent Directions sketch of a row stream, holding the
/// factored form B = diag(sigma) * v_rows (l x d) plus the running
/// right-hand-side accumulator c = A^T b. Kind selects the reduction rule:
///   fd    -- shrink squared singular values by the (l+1)-th
///   rfd   -- fd plus alpha += (shrinkage)/2
///   isvd  -- keep the top-l singular values unshrunk (no guarantee)
class FdSketch {
 public:
  /// Called after each reduction with the removed spectral mass:
  /// weights(i) paired with unit direction directions.row(i), such that
  /// sum_i w_i dir_i dir_i^T is exactly the PSD mass this step discarded.
  using ReduceObserver =
      std::function<void(const Vector& weights, const Matrix& directions)>;

  FdSketch(Index ell, Index d, SketchKind kind = SketchKind::fd)
      : ell_(ell), d_(d), kind_(kind) {
    require(ell >= 2, "FdSketch: ell must be >= 2");
    require(d >= 1, "FdSketch: d must be >= 1");
    require(kind == SketchKind::fd || kind == SketchKind::rfd ||
                kind == SketchKind::isvd,
            "FdSketch: kind must be fd, rfd or isvd");
    sigma_ = Vector::Zero(ell);
    v_rows_ = Matrix::Zero(ell, d);
    c_ = Vector::Zero(d);
    pending_ = Matrix::Zero(ell, d);
  }

  Index ell() const { return ell_; }
  Index dim() const { return d_; }
  Index n_seen() const { return n_seen_; }
  Index pending_rows() const { return pending_count_; }
  SketchKind kind() const { return kind_; }
  const Vector& sigma() const { return sigma_; }
  const RowMatrix& v_rows() const { return v_rows_; }
  const Vector& c() const { return c_; }
  double alpha() const { return alpha_; }

  void set_reduce_observer(ReduceObserver obs) { observer_ = std::move(obs); }

  void push(const Eigen::Ref<const Vector>& row, double label) {
    require(row.size() == d_, "push: row dimension mismatch");
    require(all_finite(row) && std::isfinite(label),
            "push: non-finite input");
    c_.noalias() += label * row;
    pending_.row(pending_count_++) = row;
    ++n_seen_;
    if (pending_count_ == ell_) {
      reduce_batch(pending_);
      pending_count_ = 0;
    }
  }

  /// Bulk push; equivalent to pushing row by row.
  void push_rows(const Eigen::Ref<const Matrix>& rows,
                 const Eigen::Ref<const Vector>& labels) {
    require(rows.cols() == d_, "push_rows: column mismatch");
    require(rows.rows() == labels.size(), "push_rows: label count mismatch");
    require(all_finite(rows) && all_finite(labels),
            "push_rows: non-finite input");
    c_.noalias() += rows.transpose() * labels;
    Index i = 0;
    while (i < rows.rows()) {
      const Index take = std::min(ell_ - pending_count_, rows.rows() - i);
      pending_.middleRows(pending_count_, take) = rows.middleRows(i, take);
      pending_count_ += take;
      i += take;
      if (pending_count_ == ell_) {
        reduce_batch(pending_);
        pending_count_ = 0;
      }
    }
    n_seen_ += rows.rows();
  }

  /// Fold a label-free batch of rows into the sketch. Pending pushed rows
  /// are reduced first so stream order is preserved; batches larger than
  /// l rows are processed in l-row chunks.
  void reduce(const Eigen::Ref<const Matrix>& batch) {
    require(batch.cols() == d_, "reduce: column mismatch");
    require(all_finite(batch), "reduce: non-finite input");
    flush();
    for (Index i = 0; i < batch.rows(); i += ell_)
      reduce_batch(batch.middleRows(i, std::min(ell_, batch.rows() - i)));
    n_seen_ += batch.rows();
  }

  /// Reduce any pending rows, even if fewer than l. Zero-row padding and
  /// partial batches give identical sketches, so partial reduction is safe.
  void flush() {
    if (pending_count_ == 0) return;
    reduce_batch(pending_.topRows(pending_count_));
    pending_count_ = 0;
  }

  /// Absorb another sketch of a disjoint stream: its B rows are replayed
  /// as a batch, c and alpha add. Both sketches must be flushed.
  void merge(const FdSketch& other) {
    require(other.ell_ == ell_ && other.d_ == d_, "merge: shape mismatch");
    require(other.kind_ == kind_, "merge: kind mismatch");
    if (pending_count_ != 0 || other.pending_count_ != 0)
      throw std::logic_error("merge: both sketches must be flushed");
    Index r = 0;
    while (r < ell_ && other.sigma_(r) > 0.0) ++r;
    if (r > 0) {
      Matrix b2 = other.sigma_.head(r).asDiagonal() * other.v_rows_.topRows(r);
      reduce_batch(b2);
    }
    c_ += other.c_;
    alpha_ += other.alpha_;
    n_seen_ += other.n_seen_;
  }

  /// Materialize B^T B = V diag(sigma^2) V^T. Test/diagnostic use only;
  /// refuses d beyond what is reasonable to hold dense.
  Matrix covariance() const {
    if (d_ > 4096)
      throw std::domain_error("covariance: refused for d > 4096");
    Matrix b = sigma_.asDiagonal() * v_rows_;
    Matrix cov = Matrix::Zero(d_, d_);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose());
    cov.triangularView<Eigen::StrictlyUpper>() =
        cov.transpose().triangularView<Eigen::StrictlyUpper>();
    return cov;
  }

  /// Rebuild a sketch from serialized parts.
  static FdSketch from_parts(Index ell, Index d, SketchKind kind,
                             Index n_seen, double alpha, Vector sigma,
                             Matrix v_rows, Vector c) {
    FdSketch s(ell, d, kind);
    require(sigma.size() == ell && v_rows.rows() == ell &&
                v_rows.cols() == d && c.size() == d,
            "from_parts: shape mismatch");
    require(all_finite(sigma) && all_finite(v_rows) && all_finite(c),
            "from_parts: non-finite input");
    for (Index i = 0; i + 1 < ell; ++i)
      require(sigma(i) >= sigma(i + 1), "from_parts: sigma not sorted");
    require(sigma(ell - 1) >= 0.0, "from_parts: negative sigma");
    require(alpha >= 0.0 && n_seen >= 0, "from_parts: bad bookkeeping");
    s.sigma_ = std::move(sigma);
    s.v_rows_ = std::move(v_rows);
    s.c_ = std::move(c);
    s.alpha_ = alpha;
    s.n_seen_ = n_seen;
    return s;
  }

 private:
  // One reduction: conceptually an SVD of M = [diag(sigma) V^T; batch]
  // followed by the kind-specific rank-l cut. Implemented without forming
  // M: with P = batch V and E = batch - P V^T (the component outside the
  // sketch span), a pivoted QR E = G Q_e^T gives the exact factorization
  //   M = K W,  K = [diag(sigma) 0; P G],  W = [V^T; Q_e^T],
  // where W has orthonormal rows, so the SVD of the small K carries over.
  void reduce_batch(const Eigen::Ref<const Matrix>& batch) {
    const Index m = batch.rows();
    if (m == 0 || batch.isZero(0.0)) return;

    Matrix p(m, ell_);
    p.noalias() = batch * v_rows_.transpose();
    Matrix e = batch;
    e.noalias() -= p * v_rows_;

    const Index q_cols = std::min(m, d_);
    Eigen::ColPivHouseholderQR<Matrix> qr(e.transpose());
    Matrix q_e = qr.householderQ() * Matrix::Identity(d_, q_cols);
    Matrix r_part = qr.matrixR()
                        .topLeftCorner(q_cols, m)
                        .triangularView<Eigen::Upper>();
    Matrix g(m, q_cols);
    g.noalias() = qr.colsPermutation() * r_part.transpose();

    Matrix k = Matrix::Zero(ell_ + m, ell_ + q_cols);
    k.topLeftCorner(ell_, ell_).diagonal() = sigma_;
    k.bottomLeftCorner(m, ell_) = p;
    k.bottomRightCorner(m, q_cols) = g;

    Eigen::BDCSVD<Matrix> svd(k, Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
      throw std::runtime_error("FdSketch: SVD failed to converge");
    Vector s = svd.singularValues();  // min(l+m, l+q_cols) >= l+1 values
    detail::clamp_small_singular_values(s);

    const double delta =
        (kind_ == SketchKind::isvd) ? 0.0 : s(ell_) * s(ell_);
    if (kind_ == SketchKind::rfd) alpha_ += delta / 2.0;

    if (observer_) notify_observer(s, svd.matrixV(), q_e, delta);

    Vector new_sigma = Vector::Zero(ell_);
    for (Index i = 0; i < ell_ && i < s.size(); ++i)
      new_sigma(i) = std::sqrt(std::max(0.0, s(i) * s(i) - delta));
    detail::clamp_small_singular_values(new_sigma);

    // new V^T rows: top-l right singular vectors of K mapped through W.
    Matrix wk = svd.matrixV().leftCols(ell_);  // (l + q_cols) x l
    RowMatrix new_v(ell_, d_);
    new_v.noalias() = wk.topRows(ell_).transpose() * v_rows_;
    new_v.noalias() += wk.bottomRows(q_cols).transpose() * q_e.transpose();
    for (Index i = 0; i < ell_; ++i)
      if (new_sigma(i) == 0.0) new_v.row(i).setZero();

    sigma_ = std::move(new_sigma);
    v_rows_ = std::move(new_v);
  }

  void notify_observer(const Vector& s, const Matrix& wk_full,
                       const Matrix& q_e, double delta) {
    // Removed mass per direction i: s_i^2 - max(0, s_i^2 - delta) for the
    // kept slots, the full s_i^2 beyond them.
    std::vector<Index> idx;
    Vector w(s.size());
    for (Index i = 0; i < s.size(); ++i) {
      const double si2 = s(i) * s(i);
      w(i) = (i < ell_) ? std::min(si2, delta) : si2;
      if (w(i) > 0.0) idx.push_back(i);
    }
    if (idx.empty()) return;
    Vector weights(static_cast<Index>(idx.size()));
    Matrix cols(wk_full.rows(), static_cast<Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) {
      weights(static_cast<Index>(j)) = w(idx[j]);
      cols.col(static_cast<Index>(j)) = wk_full.col(idx[j]);
    }
    const Index q_cols = q_e.cols();
    Matrix dirs(static_cast<Index>(idx.size()), d_);
    dirs.noalias() = cols.topRows(ell_).transpose() * v_rows_;
    dirs.noalias() += cols.bottomRows(q_cols).transpose() * q_e.transpose();
    observer_(weights, dirs);
  }

  Index ell_;
  Index d_;
  SketchKind kind_;
  Vector sigma_;
  RowMatrix v_rows_;
  Vector c_;
  double alpha_ = 0.0;
  Index n_seen_ = 0;
  RowMatrix pending_;
  Index pending_count_ = 0;
  ReduceObserver observer_;
};

}  // namespace fdridge
