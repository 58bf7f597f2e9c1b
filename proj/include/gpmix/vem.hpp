#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gpmix/data.hpp"
#include "gpmix/errors.hpp"
#include "gpmix/kernel.hpp"
#include "gpmix/linalg.hpp"
#include "gpmix/model.hpp"
#include "gpmix/optimizer.hpp"
#include "gpmix/parallel.hpp"

namespace gpmix {

/* Covariance builders with the default jitter tied to the parameters, so
 * that every context evaluating the same parameters builds bit-identical
 * matrices (objectives, E-steps and the training objective stay mutually
 * consistent). */
inline Eigen::MatrixXd psi_matrix(const Eigen::VectorXd& t, const KernelParams& th,
                                  const NoiseParam& ns) {
  return build_cov(t, th, &ns, default_jitter(th, &ns));
}

inline Eigen::MatrixXd cluster_cov(const Eigen::VectorXd& t, const KernelParams& g) {
  return build_cov(t, g, nullptr, default_jitter(g, nullptr));
}

// Per-individual factorization of psi_i = xi_theta + sigma^2 I, shared by the
// E-steps and the training objective within one pass.
struct IndivGram {
  CholFactor psi;
  Eigen::MatrixXd w;   // psi^{-1}
  Eigen::VectorXd wy;  // psi^{-1} y
};

inline std::vector<IndivGram> compute_indiv_grams(const Dataset& data, const HyperParams& hp,
                                                  int threads = 1) {
  std::vector<IndivGram> grams(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const Individual& ind = data.individuals[i];
    const KernelParams& th = hp.theta_for(i);
    const NoiseParam& ns = hp.noise_for(i);
    const double jit = default_jitter(th, &ns);
    auto f = CholFactor::compute(psi_matrix(ind.t, th, ns), jit);
    grams[i].w = f.inverse();
    grams[i].wy = f.solve(ind.y);
    grams[i].psi = std::move(f);
  });
  return grams;
}

/* Mean-process update: for each cluster the posterior precision is the prior
 * precision plus the responsibility-weighted individual precisions scattered
 * into pooled coordinates (observations only touch their own rows/columns;
 * nothing is padded):
 *   C_hat_k = (C_k^{-1} + sum_i tau_ik S_i)^{-1}
 *   m_hat_k = C_hat_k (C_k^{-1} m_k + sum_i tau_ik S_i y_i)   */
inline MeanProcess e_step_mu(const Dataset& data, const PooledGrid& grid,
                             const std::vector<PriorMean>& prior_means, const HyperParams& hp,
                             const Eigen::MatrixXd& tau, int threads = 1) {
  const Eigen::Index M = static_cast<Eigen::Index>(data.size());
  const Eigen::Index K = static_cast<Eigen::Index>(prior_means.size());
  if (tau.rows() != M || tau.cols() != K)
    throw LengthMismatch("e_step_mu: responsibilities shape mismatch");
  const auto grams = compute_indiv_grams(data, hp, threads);
  const Eigen::Index N = grid.t.size();
  MeanProcess mp;
  mp.m_hat.resize(K);
  mp.c_hat.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const KernelParams& g = hp.gamma_for(k);
    const double jit = default_jitter(g, nullptr);
    const auto fC = CholFactor::compute(cluster_cov(grid.t, g), jit);
    Eigen::MatrixXd P = fC.inverse();
    Eigen::VectorXd rhs = fC.solve(prior_means[k].eval(grid.t));
    for (Eigen::Index i = 0; i < M; ++i) {
      const double t_ik = tau(i, k);
      if (t_ik == 0.0) continue;
      scatter_add(P, grid.index_of[i], grams[i].w, t_ik);
      scatter_add_vector(rhs, grid.index_of[i], grams[i].wy, t_ik);
    }
    P = 0.5 * (P + P.transpose()).eval();
    const auto fP = CholFactor::compute(P);
    mp.c_hat[k] = fP.inverse();
    mp.m_hat[k] = fP.solve(rhs);
    (void)N;
  }
  return mp;
}

/* Responsibility update in log space:
 *   log tau_ik = log pi_k + log N(y_i; m_hat_k(t_i), psi_i)
 *                - 0.5 tr(psi_i^{-1} C_hat_k(t_i, t_i))  - normalizer     */
inline Eigen::MatrixXd e_step_tau(const Dataset& data, const PooledGrid& grid,
                                  const HyperParams& hp, const MeanProcess& mp,
                                  int threads = 1) {
  const Eigen::Index M = static_cast<Eigen::Index>(data.size());
  const Eigen::Index K = static_cast<Eigen::Index>(mp.m_hat.size());
  if (hp.pi.size() != K) throw LengthMismatch("e_step_tau: pi size mismatch");
  const auto grams = compute_indiv_grams(data, hp, threads);
  Eigen::MatrixXd tau(M, K);
  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t i) {
    const Individual& ind = data.individuals[i];
    const auto& idx = grid.index_of[i];
    Eigen::VectorXd ll(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!(hp.pi[k] > 0.0)) {
        ll[k] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const Eigen::VectorXd mh = gather_vector(mp.m_hat[k], idx);
      const Eigen::MatrixXd ch = gather_matrix(mp.c_hat[k], idx);
      ll[k] = std::log(hp.pi[k]) + gaussian_logpdf(ind.y, mh, grams[i].psi) -
              0.5 * grams[i].w.cwiseProduct(ch).sum();
    }
    const double lse = log_sum_exp(ll);
    for (Eigen::Index k = 0; k < K; ++k)
      tau(static_cast<Eigen::Index>(i), k) =
          std::isfinite(ll[k]) ? std::exp(ll[k] - lse) : 0.0;
  });
  return tau;
}

// Closed-form mixing proportions: column means of the responsibilities.
inline Eigen::VectorXd update_pi(const Eigen::MatrixXd& tau) {
  if (tau.rows() == 0) throw LengthMismatch("update_pi: empty responsibilities");
  return tau.colwise().sum().transpose() / static_cast<double>(tau.rows());
}

// ---------------------------------------------------------------------------
// M-step block objectives. Both are ordinary functions of the log parameters
// so their analytic gradients can be checked against finite differences.

// Data for one cluster-kernel block: residuals r_k = m_hat_k - m_k and trace
// matrices A_k = C_hat_k for every cluster sharing the parameters.
struct ClusterBlock {
  Eigen::VectorXd grid_t;
  std::vector<Eigen::VectorXd> r;
  std::vector<Eigen::MatrixXd> A;
};

inline ClusterBlock make_cluster_block(const PooledGrid& grid,
                                       const std::vector<PriorMean>& prior_means,
                                       const MeanProcess& mp, const std::vector<int>& ks) {
  ClusterBlock blk;
  blk.grid_t = grid.t;
  for (int k : ks) {
    blk.r.push_back(mp.m_hat.at(k) - prior_means.at(k).eval(grid.t));
    blk.A.push_back(mp.c_hat.at(k));
  }
  return blk;
}

/* sum_k [ log N(m_hat_k; m_k, C_gamma) - 0.5 tr(C_hat_k C_gamma^{-1}) ]
 * with gradient  0.5 tr[(W S W - n W) dC/dp],  W = C^{-1},
 * S = sum_k (r_k r_k^T + A_k).                                          */
inline double cluster_block_value(const ClusterBlock& blk, const KernelParams& g,
                                  Eigen::VectorXd* grad = nullptr) {
  const Eigen::Index N = blk.grid_t.size();
  const double jit = default_jitter(g, nullptr);
  const auto f = CholFactor::compute(build_cov(blk.grid_t, g, nullptr, jit), jit);
  const double nk = static_cast<double>(blk.r.size());
  double val = -0.5 * nk * (static_cast<double>(N) * kLog2Pi + f.log_det());
  Eigen::MatrixXd S;
  if (grad) S = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t j = 0; j < blk.r.size(); ++j) {
    val -= 0.5 * (f.quad_form(blk.r[j]) + f.inv_trace_product(blk.A[j]));
    if (grad) S += blk.r[j] * blk.r[j].transpose() + blk.A[j];
  }
  if (grad) {
    const Eigen::MatrixXd W = f.inverse();
    const Eigen::MatrixXd G = W * S * W - nk * W;
    auto kg = build_cov_grad(blk.grid_t, g, nullptr);
    kg.d_log_v.diagonal().array() += 2.0 * jit;  // jitter rides on v^2
    grad->resize(2);
    (*grad)[0] = 0.5 * G.cwiseProduct(kg.d_log_v).sum();
    (*grad)[1] = 0.5 * G.cwiseProduct(kg.d_log_l).sum();
  }
  return val;
}

// Data for one individual-kernel block: per individual the weighted moment
// matrix D_i = sum_k tau_ik [(y_i - m_hat_k(t_i))(...)^T + C_hat_k(t_i, t_i)]
// and the total weight w_i = sum_k tau_ik (one on the simplex).
struct IndivBlock {
  std::vector<Eigen::VectorXd> t;
  std::vector<Eigen::MatrixXd> D;
  std::vector<double> w;
};

inline IndivBlock make_indiv_block(const Dataset& data, const PooledGrid& grid,
                                   const Eigen::MatrixXd& tau, const MeanProcess& mp,
                                   const std::vector<int>& is) {
  IndivBlock blk;
  const Eigen::Index K = static_cast<Eigen::Index>(mp.m_hat.size());
  for (int i : is) {
    const Individual& ind = data.individuals.at(static_cast<std::size_t>(i));
    const auto& idx = grid.index_of.at(static_cast<std::size_t>(i));
    const Eigen::Index n = ind.size();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    double w = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double t_ik = tau(i, k);
      if (t_ik == 0.0) continue;
      const Eigen::VectorXd r = ind.y - gather_vector(mp.m_hat[k], idx);
      D += t_ik * (r * r.transpose() + gather_matrix(mp.c_hat[k], idx));
      w += t_ik;
    }
    blk.t.push_back(ind.t);
    blk.D.push_back(0.5 * (D + D.transpose()));
    blk.w.push_back(w);
  }
  return blk;
}

/* sum_i [ -0.5 w_i (N_i log 2pi + log|psi|) - 0.5 tr(psi^{-1} D_i) ]
 * with gradient per parameter 0.5 tr[(W D W - w W) dPsi/dp].            */
inline double indiv_block_value(const IndivBlock& blk, const KernelParams& th,
                                const NoiseParam& ns, Eigen::VectorXd* grad = nullptr) {
  double val = 0.0;
  if (grad) {
    grad->resize(3);
    grad->setZero();
  }
  const double jit_v = 1e-8 * std::exp(2.0 * th.log_v);
  const double jit_s = 1e-8 * std::exp(ns.log_sigma2);
  for (std::size_t j = 0; j < blk.t.size(); ++j) {
    const Eigen::Index n = blk.t[j].size();
    const double jit = default_jitter(th, &ns);
    const auto f = CholFactor::compute(build_cov(blk.t[j], th, &ns, jit), jit);
    val -= 0.5 * (blk.w[j] * (static_cast<double>(n) * kLog2Pi + f.log_det()) +
                  f.inv_trace_product(blk.D[j]));
    if (grad) {
      const Eigen::MatrixXd W = f.inverse();
      const Eigen::MatrixXd G = W * blk.D[j] * W - blk.w[j] * W;
      auto kg = build_cov_grad(blk.t[j], th, &ns);
      kg.d_log_v.diagonal().array() += 2.0 * jit_v;
      kg.d_log_sigma2.diagonal().array() += jit_s;
      (*grad)[0] += 0.5 * G.cwiseProduct(kg.d_log_v).sum();
      (*grad)[1] += 0.5 * G.cwiseProduct(kg.d_log_l).sum();
      (*grad)[2] += 0.5 * G.cwiseProduct(kg.d_log_sigma2).sum();
    }
  }
  return val;
}

inline Box default_gamma_bounds() {
  Box b;
  b.lo.resize(2);
  b.hi.resize(2);
  b.lo << -8.0, -8.0;
  b.hi << 12.0, 6.0;
  return b;
}

inline Box default_theta_bounds() {
  Box b;
  b.lo.resize(3);
  b.hi.resize(3);
  b.lo << -8.0, -8.0, -15.0;
  b.hi << 12.0, 6.0, 8.0;
  return b;
}

/* Hyper-parameter update. pi is closed form; the kernel parameters are
 * maximized per sharing block with the bounded quasi-Newton ascent. Blocks
 * touch disjoint terms of the training objective, so the update never
 * decreases it; a block whose line search cannot improve keeps its previous
 * values (the optimizer already returns the best visited point).          */
inline HyperParams m_step(const Dataset& data, const PooledGrid& grid,
                          const std::vector<PriorMean>& prior_means, const HyperParams& hp,
                          const Eigen::MatrixXd& tau, const MeanProcess& mp, Regime regime,
                          const OptimOptions& opt = {}, int threads = 1,
                          std::vector<std::string>* warnings = nullptr) {
  const int K = static_cast<int>(mp.m_hat.size());
  const int M = static_cast<int>(data.size());
  HyperParams out = hp;
  out.pi = update_pi(tau);

  const Box gb = default_gamma_bounds();
  const Box tb = default_theta_bounds();

  const auto optimize_gamma = [&](const std::vector<int>& ks, KernelParams& target,
                                  std::string* warn) {
    const ClusterBlock blk = make_cluster_block(grid, prior_means, mp, ks);
    const Objective f = [&blk](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      return cluster_block_value(blk, KernelParams{x[0], x[1]}, g);
    };
    Eigen::VectorXd x0(2);
    x0 << target.log_v, target.log_l;
    const auto res = maximize(f, x0, gb, opt);
    if (res.status == OptimStatus::LineSearchFailed && res.grad_norm > opt.grad_tol && warn)
      *warn = "m_step: cluster block stalled (kept best-seen parameters)";
    target = KernelParams{res.x[0], res.x[1]};
  };

  const auto optimize_theta = [&](const std::vector<int>& is, KernelParams& target,
                                  NoiseParam& noise, std::string* warn) {
    const IndivBlock blk = make_indiv_block(data, grid, tau, mp, is);
    const Objective f = [&blk](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      return indiv_block_value(blk, KernelParams{x[0], x[1]}, NoiseParam{x[2]}, g);
    };
    Eigen::VectorXd x0(3);
    x0 << target.log_v, target.log_l, noise.log_sigma2;
    const auto res = maximize(f, x0, tb, opt);
    if (res.status == OptimStatus::LineSearchFailed && res.grad_norm > opt.grad_tol && warn)
      *warn = "m_step: individual block stalled (kept best-seen parameters)";
    target = KernelParams{res.x[0], res.x[1]};
    noise = NoiseParam{res.x[2]};
  };

  std::vector<std::string> block_warnings;
  if (cluster_specific_gamma(regime)) {
    block_warnings.assign(static_cast<std::size_t>(K), {});
    parallel_for(static_cast<std::size_t>(K), threads, [&](std::size_t k) {
      optimize_gamma({static_cast<int>(k)}, out.gamma[k], &block_warnings[k]);
    });
  } else {
    std::vector<int> ks(static_cast<std::size_t>(K));
    std::iota(ks.begin(), ks.end(), 0);
    block_warnings.assign(1, {});
    optimize_gamma(ks, out.gamma[0], &block_warnings[0]);
  }
  for (const auto& w : block_warnings)
    if (!w.empty() && warnings) warnings->push_back(w);

  if (individual_specific_theta(regime)) {
    block_warnings.assign(static_cast<std::size_t>(M), {});
    parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t i) {
      optimize_theta({static_cast<int>(i)}, out.theta[i], out.noise[i], &block_warnings[i]);
    });
  } else {
    std::vector<int> is(static_cast<std::size_t>(M));
    std::iota(is.begin(), is.end(), 0);
    block_warnings.assign(1, {});
    optimize_theta(is, out.theta[0], out.noise[0], &block_warnings[0]);
  }
  for (const auto& w : block_warnings)
    if (!w.empty() && warnings) warnings->push_back(w);
  return out;
}

/* Training objective (evidence lower bound):
 *   sum_i sum_k tau_ik [ log N(y_i; m_hat_k(t_i), psi_i)
 *                        - 0.5 tr(C_hat_k(t_i,t_i) psi_i^{-1})
 *                        + log(pi_k / tau_ik) ]
 * + sum_k [ log N(m_hat_k; m_k, C_k) - 0.5 tr(C_hat_k C_k^{-1})
 *           + 0.5 log|C_hat_k| + (N/2)(log 2pi + 1) ]
 * with the 0 log 0 = 0 convention.                                        */
inline double elbo(const Dataset& data, const PooledGrid& grid,
                   const std::vector<PriorMean>& prior_means, const HyperParams& hp,
                   const Eigen::MatrixXd& tau, const MeanProcess& mp, int threads = 1) {
  const Eigen::Index M = static_cast<Eigen::Index>(data.size());
  const Eigen::Index K = static_cast<Eigen::Index>(mp.m_hat.size());
  const auto grams = compute_indiv_grams(data, hp, threads);
  std::vector<double> contrib(static_cast<std::size_t>(M), 0.0);
  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t i) {
    const Individual& ind = data.individuals[i];
    const auto& idx = grid.index_of[i];
    double c = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double t_ik = tau(static_cast<Eigen::Index>(i), k);
      if (!(t_ik > 0.0)) continue;
      const Eigen::VectorXd mh = gather_vector(mp.m_hat[k], idx);
      const Eigen::MatrixXd ch = gather_matrix(mp.c_hat[k], idx);
      const double ll = gaussian_logpdf(ind.y, mh, grams[i].psi) -
                        0.5 * grams[i].w.cwiseProduct(ch).sum();
      c += t_ik * (ll + std::log(hp.pi[k]) - std::log(t_ik));
    }
    contrib[i] = c;
  });
  double total = 0.0;
  for (double c : contrib) total += c;

  const Eigen::Index N = grid.t.size();
  for (Eigen::Index k = 0; k < K; ++k) {
    const KernelParams& g = hp.gamma_for(static_cast<std::size_t>(k));
    const double jit = default_jitter(g, nullptr);
    const auto fC = CholFactor::compute(cluster_cov(grid.t, g), jit);
    const Eigen::VectorXd m0 = prior_means.at(static_cast<std::size_t>(k)).eval(grid.t);
    total += gaussian_logpdf(mp.m_hat[k], m0, fC) - 0.5 * fC.inv_trace_product(mp.c_hat[k]);
    const auto fCh = CholFactor::compute(mp.c_hat[k]);
    total += 0.5 * fCh.log_det() +
             0.5 * static_cast<double>(N) * (kLog2Pi + 1.0);  // entropy constants
  }
  return total;
}

// ---------------------------------------------------------------------------
// Initialization

// Features for the flat clustering seed: each series linearly interpolated
// onto the pooled grid, columns imputed with their observed means outside an
// individual's time range.
inline Eigen::MatrixXd interpolation_features(const Dataset& data, const PooledGrid& grid) {
  const Eigen::Index M = static_cast<Eigen::Index>(data.size());
  const Eigen::Index N = grid.t.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd F = Eigen::MatrixXd::Constant(M, N, nan);
  for (Eigen::Index i = 0; i < M; ++i) {
    const Individual& ind = data.individuals[static_cast<std::size_t>(i)];
    for (Eigen::Index a = 0; a < N; ++a) {
      const double t = grid.t[a];
      if (t < ind.t[0] - grid.tol || t > ind.t[ind.size() - 1] + grid.tol) continue;
      Eigen::Index lo = 0, hi = ind.size() - 1;
      while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (ind.t[mid] <= t) lo = mid; else hi = mid;
      }
      if (hi == lo) {
        F(i, a) = ind.y[lo];
      } else {
        const double span = ind.t[hi] - ind.t[lo];
        const double w = std::min(1.0, std::max(0.0, (t - ind.t[lo]) / span));
        F(i, a) = (1.0 - w) * ind.y[lo] + w * ind.y[hi];
      }
    }
  }
  for (Eigen::Index a = 0; a < N; ++a) {
    double sum = 0.0;
    int cnt = 0;
    for (Eigen::Index i = 0; i < M; ++i)
      if (std::isfinite(F(i, a))) {
        sum += F(i, a);
        ++cnt;
      }
    const double fill = cnt > 0 ? sum / cnt : 0.0;
    for (Eigen::Index i = 0; i < M; ++i)
      if (!std::isfinite(F(i, a))) F(i, a) = fill;
  }
  return F;
}

// Lloyd iterations with distance-squared seeding; restarts keep the lowest
// within-cluster sum of squares. Deterministic given the generator state.
inline std::vector<int> kmeans_labels(const Eigen::MatrixXd& F, int K, std::mt19937_64& rng,
                                      int restarts = 5, int max_iter = 100) {
  const Eigen::Index M = F.rows();
  if (K < 1) throw std::invalid_argument("kmeans_labels: K must be positive");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> best_labels(static_cast<std::size_t>(M), 0);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int rest = 0; rest < std::max(1, restarts); ++rest) {
    Eigen::MatrixXd centers(K, F.cols());
    centers.row(0) = F.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(M)));
    Eigen::VectorXd d2 = (F.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        double u = unif(rng) * total, acc = 0.0;
        for (Eigen::Index i = 0; i < M; ++i) {
          acc += d2[i];
          if (u <= acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(M));
      }
      centers.row(k) = F.row(pick);
      d2 = d2.cwiseMin((F.rowwise() - centers.row(k)).rowwise().squaredNorm());
    }
    std::vector<int> labels(static_cast<std::size_t>(M), 0);
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      for (Eigen::Index i = 0; i < M; ++i) {
        int arg = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
          const double d = (F.row(i) - centers.row(k)).squaredNorm();
          if (d < bd) {
            bd = d;
            arg = k;
          }
        }
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      for (int k = 0; k < K; ++k) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(F.cols());
        int cnt = 0;
        for (Eigen::Index i = 0; i < M; ++i)
          if (labels[static_cast<std::size_t>(i)] == k) {
            mean += F.row(i);
            ++cnt;
          }
        if (cnt > 0) {
          centers.row(k) = mean / cnt;
        } else {
          // adopt the point farthest from its current center
          Eigen::Index far = 0;
          double fd = -1.0;
          for (Eigen::Index i = 0; i < M; ++i) {
            const double d =
                (F.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
            if (d > fd) {
              fd = d;
              far = i;
            }
          }
          centers.row(k) = F.row(far);
          labels[static_cast<std::size_t>(far)] = k;
          changed = true;
        }
      }
      if (!changed) break;
    }
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < M; ++i)
      inertia += (F.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

// Hard clustering labels softened onto the simplex: the assigned cluster gets
// 1 - (K-1) eps, every other cluster eps.
inline Eigen::MatrixXd soften_labels(const std::vector<int>& labels, int K,
                                     double softening = 1e-2) {
  const double eps = std::min(softening, 0.45 / std::max(K - 1, 1));
  Eigen::MatrixXd tau(static_cast<Eigen::Index>(labels.size()), K);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int k = 0; k < K; ++k)
      tau(static_cast<Eigen::Index>(i), k) =
          labels[i] == k ? 1.0 - (K - 1) * eps : eps;
  return tau;
}

inline Eigen::MatrixXd kmeans_init_tau(const Dataset& data, const PooledGrid& grid, int K,
                                       std::uint64_t seed, double softening = 1e-2,
                                       int restarts = 5, int max_iter = 100) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd F = interpolation_features(data, grid);
  return soften_labels(kmeans_labels(F, K, rng, restarts, max_iter), K, softening);
}

// Data-driven starting hyper-parameters: scale from the sample variance of
// all observations, lengthscale from the time range.
inline HyperParams default_hyperparams(const Dataset& data, int K, Regime regime) {
  double sum = 0.0, sum2 = 0.0;
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
  Eigen::Index n = 0;
  for (const auto& ind : data.individuals) {
    for (Eigen::Index a = 0; a < ind.size(); ++a) {
      sum += ind.y[a];
      sum2 += ind.y[a] * ind.y[a];
      tmin = std::min(tmin, ind.t[a]);
      tmax = std::max(tmax, ind.t[a]);
      ++n;
    }
  }
  const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
  const double var = std::max(n > 0 ? sum2 / static_cast<double>(n) - mean * mean : 1.0, 1e-6);
  const double range = std::max(tmax - tmin, 1e-3);
  const KernelParams kp{0.5 * std::log(var), std::log(range / 5.0)};
  const NoiseParam ns{std::log(0.05 * var + 1e-8)};
  HyperParams hp;
  hp.gamma.assign(cluster_specific_gamma(regime) ? static_cast<std::size_t>(K) : 1, kp);
  const std::size_t m = individual_specific_theta(regime) ? data.size() : 1;
  hp.theta.assign(m, kp);
  hp.noise.assign(m, ns);
  hp.pi = Eigen::VectorXd::Constant(K, 1.0 / K);
  return hp;
}

// ---------------------------------------------------------------------------
// Training loop

struct InitConfig {
  std::uint64_t seed = 0;
  std::optional<Eigen::MatrixXd> tau0;  // overrides the flat-clustering seed
  std::optional<HyperParams> hp0;       // overrides the data-driven defaults
  std::vector<PriorMean> prior_means;   // size K, or empty for zero means
  double softening = 1e-2;
  int kmeans_restarts = 5;
  int kmeans_iters = 100;
  int restarts = 1;  // independent runs, best final objective wins
};

struct StopConfig {
  double rel_tol = 1e-3;  // relative objective change per iteration
  int max_iter = 25;
  OptimOptions mstep{};  // per-block optimizer budget (50 iterations default)
};

inline Eigen::MatrixXd validate_tau(Eigen::MatrixXd tau, Eigen::Index M, Eigen::Index K) {
  if (tau.rows() != M || tau.cols() != K)
    throw LengthMismatch("initial responsibilities have the wrong shape");
  for (Eigen::Index i = 0; i < M; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!(tau(i, k) >= 0.0))
        throw DataFormatError("initial responsibilities must be nonnegative");
      s += tau(i, k);
    }
    if (std::abs(s - 1.0) > 1e-6)
      throw DataFormatError("initial responsibility rows must sum to one");
    tau.row(i) /= s;
  }
  return tau;
}

/* One full variational-EM fit. Per iteration: mean-process update, then the
 * hyper-parameter update, then the responsibility update, recording the
 * training objective after each step. Stops when the objective's relative
 * change falls below rel_tol or the iteration cap is reached.             */
inline TrainingState train(const Dataset& data, int K, Regime regime,
                           const InitConfig& init = {}, const StopConfig& stop = {},
                           int threads = 1) {
  if (K < 1) throw std::invalid_argument("train: K must be at least 1");
  if (data.size() == 0) throw DataFormatError("train: the dataset is empty");
  const auto t0 = std::chrono::steady_clock::now();

  const PooledGrid grid = build_pooled_grid(data.individuals);
  std::vector<PriorMean> prior_means = init.prior_means;
  if (prior_means.empty()) prior_means.assign(static_cast<std::size_t>(K), PriorMean{});
  if (prior_means.size() != static_cast<std::size_t>(K))
    throw LengthMismatch("train: prior means must match K");
  const Eigen::Index M = static_cast<Eigen::Index>(data.size());

  TrainingState best;
  best.elbo = -std::numeric_limits<double>::infinity();
  for (int rest = 0; rest < std::max(1, init.restarts); ++rest) {
    const std::uint64_t seed_r = init.seed + 1000003ull * static_cast<std::uint64_t>(rest);
    Eigen::MatrixXd tau =
        init.tau0 ? validate_tau(*init.tau0, M, K)
                  : kmeans_init_tau(data, grid, K, seed_r, init.softening,
                                    init.kmeans_restarts, init.kmeans_iters);
    HyperParams hp = init.hp0 ? *init.hp0 : default_hyperparams(data, K, regime);
    if (hp.pi.size() != K) throw LengthMismatch("train: pi size must match K");

    std::vector<ElboRecord> trace;
    std::vector<std::string> warnings;
    MeanProcess mp;
    bool converged = false;
    int iterations = 0;
    double prev_end = std::numeric_limits<double>::quiet_NaN();
    double current = -std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= stop.max_iter; ++iter) {
      mp = e_step_mu(data, grid, prior_means, hp, tau, threads);
      trace.push_back({iter, "e_step_mu",
                       elbo(data, grid, prior_means, hp, tau, mp, threads)});
      hp = m_step(data, grid, prior_means, hp, tau, mp, regime, stop.mstep, threads,
                  &warnings);
      trace.push_back({iter, "m_step",
                       elbo(data, grid, prior_means, hp, tau, mp, threads)});
      tau = e_step_tau(data, grid, hp, mp, threads);
      current = elbo(data, grid, prior_means, hp, tau, mp, threads);
      trace.push_back({iter, "e_step_tau", current});
      iterations = iter;
      if (iter > 1 && std::abs(current - prev_end) <=
                          stop.rel_tol * std::max(1.0, std::abs(prev_end))) {
        converged = true;
        break;
      }
      prev_end = current;
    }

    if (current > best.elbo || rest == 0) {
      best.hp = std::move(hp);
      best.tau = std::move(tau);
      best.mp = std::move(mp);
      best.elbo_trace = std::move(trace);
      best.elbo = current;
      best.converged = converged;
      best.iterations = iterations;
      best.warnings = std::move(warnings);
    }
  }

  for (Eigen::Index k = 0; k < K; ++k) {
    if (best.tau.col(k).maxCoeff() < 1e-6)
      best.warnings.push_back("cluster " + std::to_string(k) +
                              " is degenerate (no individual assigned)");
  }
  best.regime = regime;
  best.K = K;
  best.grid = grid;
  best.prior_means = std::move(prior_means);
  best.data = data;
  best.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

}  // namespace gpmix
