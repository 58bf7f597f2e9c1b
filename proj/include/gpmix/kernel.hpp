#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace gpmix {

// Exponentiated-quadratic kernel parameters, stored in log space so that
// unconstrained optimization keeps v, l positive.
struct KernelParams {
  double log_v = 0.0;  // log of the scale v (variance is v^2)
  double log_l = 0.0;  // log of the lengthscale l
};

// Observation noise, stored as log(sigma^2).
struct NoiseParam {
  double log_sigma2 = std::log(0.05);
};

/* k(x, x') = v^2 exp(-(x - x')^2 / (2 l^2)), with log-space partials:
 *   d k / d log_v = 2 k
 *   d k / d log_l = k (x - x')^2 / l^2            */
struct EqKernel {
  static double evaluate(double x1, double x2, const KernelParams& p) {
    const double d = x1 - x2;
    const double l2 = std::exp(2.0 * p.log_l);
    return std::exp(2.0 * p.log_v - 0.5 * d * d / l2);
  }
  static double d_log_v(double x1, double x2, const KernelParams& p) {
    return 2.0 * evaluate(x1, x2, p);
  }
  static double d_log_l(double x1, double x2, const KernelParams& p) {
    const double d = x1 - x2;
    const double l2 = std::exp(2.0 * p.log_l);
    return evaluate(x1, x2, p) * d * d / l2;
  }
};

inline double eq_cov(double x1, double x2, const KernelParams& p) {
  return EqKernel::evaluate(x1, x2, p);
}

// Default diagonal inflation: 1e-8 times the raw diagonal value v^2 (+ sigma^2).
inline double default_jitter(const KernelParams& p, const NoiseParam* noise) {
  double diag = std::exp(2.0 * p.log_v);
  if (noise) diag += std::exp(noise->log_sigma2);
  return 1e-8 * diag;
}

inline void check_grid_increasing(const Eigen::VectorXd& grid) {
  for (Eigen::Index a = 1; a < grid.size(); ++a)
    if (!(grid[a] > grid[a - 1]))
      throw std::invalid_argument("covariance grid must be strictly increasing");
}

/* Covariance matrix on a strictly increasing grid:
 *   K[a,b] = k(t_a, t_b) + 1[a=b] (sigma^2 + jitter).
 * noise == nullptr builds a noise-free process covariance (jitter still applies). */
template <typename Kernel = EqKernel>
inline Eigen::MatrixXd build_cov(const Eigen::VectorXd& grid, const KernelParams& p,
                                 const NoiseParam* noise, double jitter) {
  check_grid_increasing(grid);
  if (jitter < 0.0) throw std::invalid_argument("jitter must be nonnegative");
  const Eigen::Index n = grid.size();
  const double diag_add = jitter + (noise ? std::exp(noise->log_sigma2) : 0.0);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    K(a, a) = Kernel::evaluate(grid[a], grid[a], p) + diag_add;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double v = Kernel::evaluate(grid[a], grid[b], p);
      K(a, b) = v;
      K(b, a) = v;
    }
  }
  return K;
}

// Partial derivatives of build_cov with respect to each log parameter.
// d_log_sigma2 is empty (0x0) when no noise term is present.
struct CovGradients {
  Eigen::MatrixXd d_log_v;
  Eigen::MatrixXd d_log_l;
  Eigen::MatrixXd d_log_sigma2;
};

template <typename Kernel = EqKernel>
inline CovGradients build_cov_grad(const Eigen::VectorXd& grid, const KernelParams& p,
                                   const NoiseParam* noise) {
  check_grid_increasing(grid);
  const Eigen::Index n = grid.size();
  CovGradients g;
  g.d_log_v.resize(n, n);
  g.d_log_l.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      const double dv = Kernel::d_log_v(grid[a], grid[b], p);
      const double dl = Kernel::d_log_l(grid[a], grid[b], p);
      g.d_log_v(a, b) = dv;
      g.d_log_v(b, a) = dv;
      g.d_log_l(a, b) = dl;
      g.d_log_l(b, a) = dl;
    }
  }
  if (noise) {
    g.d_log_sigma2 = Eigen::MatrixXd::Zero(n, n);
    g.d_log_sigma2.diagonal().setConstant(std::exp(noise->log_sigma2));
  }
  return g;
}

}  // namespace gpmix
