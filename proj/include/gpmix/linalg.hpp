#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "gpmix/errors.hpp"

namespace gpmix {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/* Cholesky factor of a symmetric positive-definite matrix with jitter
 * escalation: if the factorization fails with the given base jitter already
 * on the diagonal, an extra multiple of the identity is added so the total
 * jitter reaches 10x, 100x, ... up to 1e5x the base (5 escalations) before
 * giving up with NonPositiveDefinite. */
class CholFactor {
 public:
  // base_jitter <= 0 requests the automatic base 1e-8 * mean(|diag|).
  // Attempt m adds base * (10^m - 1) to the diagonal, so a matrix built with
  // base jitter j reaches total jitter 10j, 100j, ... 1e5 j before failing.
  static CholFactor compute(const Eigen::MatrixXd& A, double base_jitter = -1.0) {
    if (A.rows() != A.cols()) throw LengthMismatch("CholFactor: matrix not square");
    double base = base_jitter;
    if (!(base > 0.0)) {
      base = A.rows() > 0 ? 1e-8 * A.diagonal().cwiseAbs().mean() : 0.0;
      if (!(base > 0.0)) base = 1e-12;
    }
    CholFactor f;
    for (int attempt = 0; attempt <= kMaxEscalations; ++attempt) {
      const double extra = attempt == 0 ? 0.0 : base * (std::pow(10.0, attempt) - 1.0);
      if (extra == 0.0) {
        f.llt_.compute(A);
      } else {
        f.llt_.compute(Eigen::MatrixXd(
            A + extra * Eigen::MatrixXd::Identity(A.rows(), A.cols())));
      }
      if (f.llt_.info() == Eigen::Success && f.diagonal_positive()) {
        f.added_jitter_ = extra;
        f.log_det_ = 2.0 * f.llt_.matrixLLT().diagonal().array().log().sum();
        return f;
      }
    }
    std::ostringstream msg;
    msg << "Cholesky failed for " << A.rows() << "x" << A.cols()
        << " matrix after jitter escalation";
    throw NonPositiveDefinite(msg.str());
  }

  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }
  double log_det() const { return log_det_; }
  Eigen::MatrixXd matrix_l() const { return llt_.matrixL(); }
  double added_jitter() const { return added_jitter_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const { return llt_.solve(B); }

  // A^{-1}, symmetrized; used where a precision/covariance sum genuinely
  // requires the dense inverse to be accumulated.
  Eigen::MatrixXd inverse() const {
    Eigen::MatrixXd X = llt_.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    return 0.5 * (X + X.transpose());
  }

  // x^T A^{-1} x via one triangular solve.
  double quad_form(const Eigen::VectorXd& x) const {
    return llt_.matrixL().solve(x).squaredNorm();
  }

  // tr(A^{-1} B)
  double inv_trace_product(const Eigen::MatrixXd& B) const {
    return llt_.solve(B).trace();
  }

 private:
  static constexpr int kMaxEscalations = 5;
  bool diagonal_positive() const {
    return (llt_.matrixLLT().diagonal().array() > 0.0).all();
  }
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  double added_jitter_ = 0.0;
};

// log N(x; mean, S) with S given by its Cholesky factor.
inline double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                              const CholFactor& S) {
  if (x.size() != mean.size() || x.size() != S.dim())
    throw LengthMismatch("gaussian_logpdf: dimension mismatch");
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * kLog2Pi + S.log_det() + S.quad_form(x - mean));
}

// Convenience overload; the covariance is factored with automatic jitter.
inline double gaussian_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov) {
  return gaussian_logpdf(x, mean, CholFactor::compute(cov));
}

/* E[(X - b)^T S^{-1} (X - b)] for X ~ N(mean, cov):
 *   (mean - b)^T S^{-1} (mean - b) + tr(S^{-1} cov).              */
inline double expected_quadratic(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                 const Eigen::VectorXd& b, const CholFactor& S) {
  if (mean.size() != b.size() || cov.rows() != mean.size() || cov.cols() != mean.size())
    throw LengthMismatch("expected_quadratic: dimension mismatch");
  return S.quad_form(mean - b) + S.inv_trace_product(cov);
}

// log(sum_j exp(v_j)), stable against overflow; -inf entries are ignored
// unless all entries are -inf (then the result is -inf).
inline double log_sum_exp(const Eigen::VectorXd& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += std::exp(v[j] - m);
  return m + std::log(s);
}

// v[idx]
inline Eigen::VectorXd gather_vector(const Eigen::VectorXd& v,
                                     const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) out[static_cast<Eigen::Index>(a)] = v[idx[a]];
  return out;
}

// A[idx, idx]
inline Eigen::MatrixXd gather_matrix(const Eigen::MatrixXd& A,
                                     const std::vector<Eigen::Index>& idx) {
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      out(a, b) = A(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return out;
}

// P[idx, idx] += w * W, the masked-block scatter of a small matrix into
// pooled coordinates (rows/cols outside idx untouched).
inline void scatter_add(Eigen::MatrixXd& P, const std::vector<Eigen::Index>& idx,
                        const Eigen::MatrixXd& W, double w) {
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  if (W.rows() != n || W.cols() != n) throw LengthMismatch("scatter_add: block size mismatch");
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      P(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) += w * W(a, b);
}

// v[idx] += w * u
inline void scatter_add_vector(Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx,
                               const Eigen::VectorXd& u, double w) {
  if (u.size() != static_cast<Eigen::Index>(idx.size()))
    throw LengthMismatch("scatter_add_vector: block size mismatch");
  for (std::size_t a = 0; a < idx.size(); ++a) v[idx[a]] += w * u[static_cast<Eigen::Index>(a)];
}

}  // namespace gpmix
