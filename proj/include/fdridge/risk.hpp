#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>

#include "fdridge/linalg.hpp"
#include "fdridge/rng.hpp"
#include "fdridge/types.hpp"

namespace fdridge {

/// Fixed-design model b = A x + s Z with Z ~ N(0, I).
struct RiskModel {
  Matrix a;
  Vector x_true;
  double noise_scale = 1.0;
  double gamma = 1.0;

  void validate() const {
    require(a.rows() > 0 && a.cols() > 0, "RiskModel: empty design");
    require(x_true.size() == a.cols(), "RiskModel: x dimension mismatch");
    require(noise_scale > 0.0, "RiskModel: noise scale must be > 0");
    require(gamma >= 0.0, "RiskModel: gamma must be >= 0");
    require(all_finite(a) && all_finite(x_true), "RiskModel: non-finite");
  }
};

struct RiskBounds {
  std::optional<double> bias_bound;
  std::optional<double> var_bound_main;
  std::optional<double> var_bound_l4;
  std::optional<double> var_bound_l5;
  bool full_column_rank = true;
};

struct RiskReport {
  double bias_sq = 0.0;
  double variance = 0.0;
  double risk = 0.0;
  RiskBounds bounds;
  // Monte-Carlo runs report standard errors of the two estimates.
  std::optional<double> bias_sq_se;
  std::optional<double> variance_se;
};

namespace detail {

inline bool full_column_rank(const ThinSvd& svd, Index cols) {
  const Vector& s = svd.singular_values;
  if (s.size() < cols) return false;
  return s(cols - 1) > 1e-10 * s(0);
}

}  // namespace detail

/// Closed-form risk of the exact ridge estimator:
///   bias^2 = gamma^2 ||A (A^T A + g I)^{-1} x||^2
///   var    = s^2 ||A (A^T A + g I)^{-1} A^T||_F^2
inline RiskReport risk_exact(const RiskModel& m) {
  m.validate();
  const ThinSvd svd = thin_svd(m.a, /*want_left=*/false);
  const Vector t = svd.right_vectors * m.x_true;
  RiskReport rep;
  for (Index i = 0; i < svd.singular_values.size(); ++i) {
    const double s2 = svd.singular_values(i) * svd.singular_values(i);
    const double denom = s2 + m.gamma;
    if (denom == 0.0) continue;
    const double bterm = m.gamma * svd.singular_values(i) * t(i) / denom;
    const double vterm = s2 / denom;
    rep.bias_sq += bterm * bterm;
    rep.variance += m.noise_scale * m.noise_scale * vterm * vterm;
  }
  rep.risk = rep.bias_sq + rep.variance;
  return rep;
}

/// Closed-form risk of the sketched estimator
/// x_hat = (C^T C + g I)^{-1} A^T b, plus the certified bias/variance
/// bounds. Variance bounds require A of full column rank; when it is not,
/// they are omitted and the flag is cleared.
inline RiskReport risk_sketch(const RiskModel& m, const Matrix& gram_sketch) {
  m.validate();
  const Index d = m.a.cols();
  require(gram_sketch.rows() == d && gram_sketch.cols() == d,
          "risk_sketch: gram dimension mismatch");
  require((gram_sketch - gram_sketch.transpose()).cwiseAbs().maxCoeff() <=
              1e-10,
          "risk_sketch: gram not symmetric");
  {
    Vector ev = sym_eigenvalues(gram_sketch);
    require(ev(ev.size() - 1) >= -1e-9 * std::max(1.0, ev(0)),
            "risk_sketch: gram not PSD");
  }

  Matrix gram_exact = Matrix::Zero(d, d);
  gram_exact.selfadjointView<Eigen::Lower>().rankUpdate(m.a.transpose());
  gram_exact.triangularView<Eigen::StrictlyUpper>() =
      gram_exact.transpose().triangularView<Eigen::StrictlyUpper>();

  Matrix ms = gram_sketch;
  ms.diagonal().array() += m.gamma;
  Eigen::LDLT<Matrix> ldlt(ms);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("risk_sketch: factorization failed");
  Matrix h = ldlt.solve(gram_exact);  // (C^T C + g I)^{-1} A^T A

  RiskReport rep;
  Vector y = h * m.x_true - m.x_true;
  rep.bias_sq = y.dot(gram_exact.selfadjointView<Eigen::Lower>() * y);
  rep.bias_sq = std::max(0.0, rep.bias_sq);
  // ||A M A^T||_F^2 = tr((K M)^2) computed in d x d space.
  rep.variance = m.noise_scale * m.noise_scale *
                 (h.array() * h.transpose().array()).sum();
  rep.variance = std::max(0.0, rep.variance);
  rep.risk = rep.bias_sq + rep.variance;

  const RiskReport exact = risk_exact(m);
  const ThinSvd asvd = thin_svd(m.a, /*want_left=*/false);
  const double a2 = asvd.singular_values(0);  // ||A||_2
  const double delta2 = spectral_norm_sym(gram_exact - gram_sketch);
  rep.bounds.full_column_rank = detail::full_column_rank(asvd, d);

  if (m.gamma > 0.0) {
    const double g4 = std::pow(m.gamma, 4);
    rep.bounds.bias_bound =
        (1.0 + std::pow(a2, 4) * delta2 * delta2 / g4) * exact.bias_sq;
    if (rep.bounds.full_column_rank) {
      const double r = a2 * a2 / m.gamma;
      rep.bounds.var_bound_main = (1.0 + r) * (1.0 + r) * exact.variance;
      const double smin = asvd.singular_values(d - 1);
      const double pinv2 = 1.0 / (smin * smin);
      rep.bounds.var_bound_l4 =
          (1.0 + a2 * a2 * delta2 * delta2 * pinv2 / m.gamma) *
          exact.variance;
      const double q = pinv2 * delta2;
      if (q < 1.0) rep.bounds.var_bound_l5 = exact.variance / (1.0 - q);
    }
  }
  return rep;
}

/// Variance bound (1 + ||A||_2^2 ||K - C^T C||_2^2 ||A^+||_2^2 / gamma)
/// times the exact variance. A must have full column rank.
inline double variance_bound_l4(const RiskModel& m,
                                const Matrix& gram_sketch) {
  m.validate();
  require(m.gamma > 0.0, "variance_bound_l4: gamma must be > 0");
  const Index d = m.a.cols();
  require(gram_sketch.rows() == d && gram_sketch.cols() == d,
          "variance_bound_l4: gram dimension mismatch");
  const ThinSvd asvd = thin_svd(m.a, /*want_left=*/false);
  if (!detail::full_column_rank(asvd, d))
    throw std::domain_error("variance_bound_l4: A must have full column rank");
  Matrix gram_exact = m.a.transpose() * m.a;
  const double a2 = asvd.singular_values(0);
  const double delta2 =
      spectral_norm_sym(Matrix(gram_exact - gram_sketch));
  const double smin = asvd.singular_values(d - 1);
  const double pinv2 = 1.0 / (smin * smin);
  return (1.0 + a2 * a2 * delta2 * delta2 * pinv2 / m.gamma) *
         risk_exact(m).variance;
}

/// Variance bound V(x_gamma) / (1 - ||A^+||^2 ||C^T C - A^T A||_2);
/// absent when A is rank deficient or the contraction condition fails.
inline std::optional<double> variance_bound_l5(const RiskModel& m,
                                               const Matrix& gram_sketch) {
  m.validate();
  const Index d = m.a.cols();
  require(gram_sketch.rows() == d && gram_sketch.cols() == d,
          "variance_bound_l5: gram dimension mismatch");
  const ThinSvd asvd = thin_svd(m.a, /*want_left=*/false);
  if (!detail::full_column_rank(asvd, d)) return std::nullopt;
  Matrix gram_exact = m.a.transpose() * m.a;
  const double delta2 =
      spectral_norm_sym(Matrix(gram_sketch - gram_exact));
  const double smin = asvd.singular_values(d - 1);
  const double q = delta2 / (smin * smin);
  if (q >= 1.0) return std::nullopt;
  return risk_exact(m).variance / (1.0 - q);
}

/// A map b -> x_hat used by the Monte-Carlo estimator.
using RiskSolver = std::function<Vector(const Vector& b)>;

inline RiskSolver make_exact_risk_solver(const RiskModel& m) {
  m.validate();
  Matrix sys = m.a.transpose() * m.a;
  sys.diagonal().array() += m.gamma;
  auto ldlt = std::make_shared<Eigen::LDLT<Matrix>>(sys);
  if (ldlt->info() != Eigen::Success)
    throw std::runtime_error("make_exact_risk_solver: factorization failed");
  auto at = std::make_shared<Matrix>(m.a.transpose());
  return [ldlt, at](const Vector& b) {
    const Vector rhs = *at * b;
    return Vector(ldlt->solve(rhs));
  };
}

inline RiskSolver make_sketch_risk_solver(const RiskModel& m,
                                          const Matrix& gram_sketch) {
  m.validate();
  require(gram_sketch.rows() == m.a.cols() &&
              gram_sketch.cols() == m.a.cols(),
          "make_sketch_risk_solver: gram dimension mismatch");
  Matrix sys = gram_sketch;
  sys.diagonal().array() += m.gamma;
  auto ldlt = std::make_shared<Eigen::LDLT<Matrix>>(sys);
  if (ldlt->info() != Eigen::Success)
    throw std::runtime_error("make_sketch_risk_solver: factorization failed");
  auto at = std::make_shared<Matrix>(m.a.transpose());
  return [ldlt, at](const Vector& b) {
    const Vector rhs = *at * b;
    return Vector(ldlt->solve(rhs));
  };
}

/// Empirical bias^2 / variance over fresh noise draws. Each trial draws
/// its noise from its own counter stream, so results are reproducible for
/// a given seed regardless of evaluation order.
inline RiskReport risk_monte_carlo(const RiskModel& m, const RiskSolver& solve,
                                   Index trials, std::uint64_t seed) {
  m.validate();
  require(trials >= 100, "risk_monte_carlo: need trials >= 100");
  const Index n = m.a.rows();
  const Vector base = m.a * m.x_true;

  Matrix preds(n, trials);  // column t holds A x_hat_t
  Vector b(n);
  for (Index t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    for (Index i = 0; i < n; ++i)
      b(i) = base(i) + m.noise_scale * rng.next_gaussian();
    preds.col(t) = m.a * solve(b);
  }

  const Vector mean_pred = preds.rowwise().mean();
  const Vector u = mean_pred - base;  // estimated bias direction
  const double bias_raw = u.squaredNorm();

  Vector q(trials);  // ||m_t - mean||^2
  Vector hdot(trials);
  for (Index t = 0; t < trials; ++t) {
    q(t) = (preds.col(t) - mean_pred).squaredNorm();
    hdot(t) = preds.col(t).dot(u);
  }
  const double tn = static_cast<double>(trials);
  const double var_hat = q.sum() / (tn - 1.0);
  auto sample_var = [tn](const Vector& v) {
    const double mu = v.mean();
    return (v.array() - mu).square().sum() / (tn - 1.0);
  };
  const double var_q = sample_var(q);
  const double var_h = sample_var(hdot);

  RiskReport rep;
  // ||mean - true mean||^2 overestimates bias^2 by tr(Cov)/T; remove it.
  rep.bias_sq = std::max(0.0, bias_raw - var_hat / tn);
  rep.variance = var_hat;
  rep.risk = rep.bias_sq + rep.variance;
  rep.variance_se = std::sqrt(var_q / tn);
  rep.bias_sq_se = std::sqrt(4.0 * var_h / tn + var_q / (tn * tn));
  return rep;
}

}  // namespace fdridge
