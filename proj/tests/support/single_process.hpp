#pragma once

/* Reference implementation for the single-cluster case: one Gaussian-process
 * mean with per-individual noise processes, no mixture machinery (no
 * responsibilities, no mixing proportions, no regime dispatch). Written
 * against the low-level primitives only; the training engine must reduce to
 * this exactly at K = 1. */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "gpmix/data.hpp"
#include "gpmix/kernel.hpp"
#include "gpmix/linalg.hpp"
#include "gpmix/optimizer.hpp"

namespace single_ref {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using gpmix::CholFactor;
using gpmix::KernelParams;
using gpmix::NoiseParam;

struct Hyper {
  KernelParams gamma;
  KernelParams theta;
  NoiseParam noise;
};

struct Fit {
  Hyper hp;
  VectorXd m_hat;
  MatrixXd c_hat;
  std::vector<double> objective_trace;
  double objective = 0.0;
};

inline MatrixXd psi(const VectorXd& t, const KernelParams& th, const NoiseParam& ns) {
  return gpmix::build_cov(t, th, &ns, gpmix::default_jitter(th, &ns));
}

inline MatrixXd mean_cov(const VectorXd& t, const KernelParams& g) {
  return gpmix::build_cov(t, g, nullptr, gpmix::default_jitter(g, nullptr));
}

struct Posterior {
  VectorXd m_hat;
  MatrixXd c_hat;
};

inline Posterior posterior_update(const gpmix::Dataset& data, const gpmix::PooledGrid& grid,
                                  double prior_const, const Hyper& hp) {
  const auto fC = CholFactor::compute(mean_cov(grid.t, hp.gamma),
                                      gpmix::default_jitter(hp.gamma, nullptr));
  MatrixXd P = fC.inverse();
  const VectorXd m0 = VectorXd::Constant(grid.t.size(), prior_const);
  VectorXd rhs = fC.solve(m0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ind = data.individuals[i];
    const auto f = CholFactor::compute(psi(ind.t, hp.theta, hp.noise),
                                       gpmix::default_jitter(hp.theta, &hp.noise));
    const MatrixXd W = f.inverse();
    const VectorXd Wy = f.solve(ind.y);
    const auto& idx = grid.index_of[i];
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b)
        P(idx[a], idx[b]) += W(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      rhs[idx[a]] += Wy[static_cast<Eigen::Index>(a)];
    }
  }
  P = 0.5 * (P + P.transpose()).eval();
  const auto fP = CholFactor::compute(P);
  Posterior post;
  post.c_hat = fP.inverse();
  post.m_hat = fP.solve(rhs);
  return post;
}

inline double mean_kernel_objective(const VectorXd& grid_t, const VectorXd& r, const MatrixXd& A,
                                    const KernelParams& g, VectorXd* grad) {
  const Eigen::Index N = grid_t.size();
  const double jit = gpmix::default_jitter(g, nullptr);
  const auto f = CholFactor::compute(gpmix::build_cov(grid_t, g, nullptr, jit), jit);
  double val = -0.5 * 1.0 * (static_cast<double>(N) * gpmix::kLog2Pi + f.log_det());
  val -= 0.5 * (f.quad_form(r) + f.inv_trace_product(A));
  if (grad) {
    const MatrixXd W = f.inverse();
    const MatrixXd S = r * r.transpose() + A;
    const MatrixXd G = W * S * W - 1.0 * W;
    auto kg = gpmix::build_cov_grad(grid_t, g, nullptr);
    kg.d_log_v.diagonal().array() += 2.0 * jit;
    grad->resize(2);
    (*grad)[0] = 0.5 * G.cwiseProduct(kg.d_log_v).sum();
    (*grad)[1] = 0.5 * G.cwiseProduct(kg.d_log_l).sum();
  }
  return val;
}

inline double indiv_kernel_objective(const std::vector<VectorXd>& ts,
                                     const std::vector<MatrixXd>& Ds, const KernelParams& th,
                                     const NoiseParam& ns, VectorXd* grad) {
  double val = 0.0;
  if (grad) {
    grad->resize(3);
    grad->setZero();
  }
  const double jit_v = 1e-8 * std::exp(2.0 * th.log_v);
  const double jit_s = 1e-8 * std::exp(ns.log_sigma2);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const Eigen::Index n = ts[j].size();
    const double jit = gpmix::default_jitter(th, &ns);
    const auto f = CholFactor::compute(gpmix::build_cov(ts[j], th, &ns, jit), jit);
    val -= 0.5 * (1.0 * (static_cast<double>(n) * gpmix::kLog2Pi + f.log_det()) +
                  f.inv_trace_product(Ds[j]));
    if (grad) {
      const MatrixXd W = f.inverse();
      const MatrixXd G = W * Ds[j] * W - 1.0 * W;
      auto kg = gpmix::build_cov_grad(ts[j], th, &ns);
      kg.d_log_v.diagonal().array() += 2.0 * jit_v;
      kg.d_log_sigma2.diagonal().array() += jit_s;
      (*grad)[0] += 0.5 * G.cwiseProduct(kg.d_log_v).sum();
      (*grad)[1] += 0.5 * G.cwiseProduct(kg.d_log_l).sum();
      (*grad)[2] += 0.5 * G.cwiseProduct(kg.d_log_sigma2).sum();
    }
  }
  return val;
}

inline gpmix::Box gamma_box() {
  gpmix::Box b;
  b.lo.resize(2);
  b.hi.resize(2);
  b.lo << -8.0, -8.0;
  b.hi << 12.0, 6.0;
  return b;
}

inline gpmix::Box theta_box() {
  gpmix::Box b;
  b.lo.resize(3);
  b.hi.resize(3);
  b.lo << -8.0, -8.0, -15.0;
  b.hi << 12.0, 6.0, 8.0;
  return b;
}

inline Hyper hyper_update(const gpmix::Dataset& data, const gpmix::PooledGrid& grid,
                          double prior_const, const Hyper& hp, const Posterior& post,
                          const gpmix::OptimOptions& opt) {
  Hyper out = hp;
  {
    const VectorXd r = post.m_hat - VectorXd::Constant(grid.t.size(), prior_const);
    const MatrixXd& A = post.c_hat;
    const gpmix::Objective f = [&](const VectorXd& x, VectorXd* g) {
      return mean_kernel_objective(grid.t, r, A, KernelParams{x[0], x[1]}, g);
    };
    VectorXd x0(2);
    x0 << hp.gamma.log_v, hp.gamma.log_l;
    const auto res = gpmix::maximize(f, x0, gamma_box(), opt);
    out.gamma = KernelParams{res.x[0], res.x[1]};
  }
  {
    std::vector<VectorXd> ts;
    std::vector<MatrixXd> Ds;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& ind = data.individuals[i];
      const auto& idx = grid.index_of[i];
      const Eigen::Index n = ind.size();
      VectorXd mh(n);
      MatrixXd ch(n, n);
      for (Eigen::Index a = 0; a < n; ++a) {
        mh[a] = post.m_hat[idx[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < n; ++b)
          ch(a, b) = post.c_hat(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
      const VectorXd r = ind.y - mh;
      MatrixXd D = 1.0 * (r * r.transpose() + ch);
      ts.push_back(ind.t);
      Ds.push_back(0.5 * (D + D.transpose()));
    }
    const gpmix::Objective f = [&](const VectorXd& x, VectorXd* g) {
      return indiv_kernel_objective(ts, Ds, KernelParams{x[0], x[1]}, NoiseParam{x[2]}, g);
    };
    VectorXd x0(3);
    x0 << hp.theta.log_v, hp.theta.log_l, hp.noise.log_sigma2;
    const auto res = gpmix::maximize(f, x0, theta_box(), opt);
    out.theta = KernelParams{res.x[0], res.x[1]};
    out.noise = NoiseParam{res.x[2]};
  }
  return out;
}

inline double bound_objective(const gpmix::Dataset& data, const gpmix::PooledGrid& grid,
                              double prior_const, const Hyper& hp, const Posterior& post) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ind = data.individuals[i];
    const auto f = CholFactor::compute(psi(ind.t, hp.theta, hp.noise),
                                       gpmix::default_jitter(hp.theta, &hp.noise));
    const MatrixXd W = f.inverse();
    const auto& idx = grid.index_of[i];
    const Eigen::Index n = ind.size();
    VectorXd mh(n);
    MatrixXd ch(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      mh[a] = post.m_hat[idx[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < n; ++b)
        ch(a, b) = post.c_hat(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    const double ll = gpmix::gaussian_logpdf(ind.y, mh, f) - 0.5 * W.cwiseProduct(ch).sum();
    total += 1.0 * (ll + std::log(1.0) - std::log(1.0));
  }
  const Eigen::Index N = grid.t.size();
  const auto fC = CholFactor::compute(mean_cov(grid.t, hp.gamma),
                                      gpmix::default_jitter(hp.gamma, nullptr));
  const VectorXd m0 = VectorXd::Constant(N, prior_const);
  total += gpmix::gaussian_logpdf(post.m_hat, m0, fC) - 0.5 * fC.inv_trace_product(post.c_hat);
  const auto fCh = CholFactor::compute(post.c_hat);
  total += 0.5 * fCh.log_det() + 0.5 * static_cast<double>(N) * (gpmix::kLog2Pi + 1.0);
  return total;
}

inline Fit train(const gpmix::Dataset& data, const gpmix::PooledGrid& grid, double prior_const,
                 const Hyper& hp0, int max_iter, double rel_tol,
                 const gpmix::OptimOptions& opt = {}) {
  Fit fit;
  fit.hp = hp0;
  Posterior post;
  double prev_end = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 1; iter <= max_iter; ++iter) {
    post = posterior_update(data, grid, prior_const, fit.hp);
    fit.objective_trace.push_back(bound_objective(data, grid, prior_const, fit.hp, post));
    fit.hp = hyper_update(data, grid, prior_const, fit.hp, post, opt);
    fit.objective_trace.push_back(bound_objective(data, grid, prior_const, fit.hp, post));
    const double current = bound_objective(data, grid, prior_const, fit.hp, post);
    fit.objective_trace.push_back(current);
    if (iter > 1 &&
        std::abs(current - prev_end) <= rel_tol * std::max(1.0, std::abs(prev_end))) {
      break;
    }
    prev_end = current;
  }
  fit.m_hat = post.m_hat;
  fit.c_hat = post.c_hat;
  fit.objective = fit.objective_trace.back();
  return fit;
}

/* Posterior prediction for a new individual: combined grid from prediction
 * targets, observations, and the training grid; the mean-process posterior is
 * rebuilt there, the noisy individual covariance is added, and the Gaussian
 * is conditioned on the observed block. */
struct Prediction {
  VectorXd t_pred;
  VectorXd mean;
  MatrixXd cov;
};

inline VectorXd merge_grids(const std::vector<VectorXd>& parts, double tol) {
  std::vector<double> all;
  for (const auto& p : parts)
    for (Eigen::Index a = 0; a < p.size(); ++a) all.push_back(p[a]);
  std::sort(all.begin(), all.end());
  std::vector<double> merged;
  for (double v : all)
    if (merged.empty() || v - merged.back() > tol) merged.push_back(v);
  return Eigen::Map<VectorXd>(merged.data(), static_cast<Eigen::Index>(merged.size()));
}

inline Prediction predict(const gpmix::Dataset& train_data, const gpmix::PooledGrid& train_grid,
                          double prior_const, const Hyper& hp, const VectorXd& t_obs,
                          const VectorXd& y_obs, const VectorXd& t_pred) {
  const double tol = train_grid.tol;
  const VectorXd combined = merge_grids({t_pred, t_obs, train_grid.t}, tol);

  // hyper-posterior on the combined grid
  gpmix::PooledGrid big;
  big.t = combined;
  big.tol = tol;
  for (std::size_t i = 0; i < train_data.size(); ++i)
    big.index_of.push_back(
        gpmix::resolve_timestamps(combined, train_data.individuals[i].t, tol));
  const Posterior post = posterior_update(train_data, big, prior_const, hp);

  // noisy prior for the new individual, then Gaussian conditioning
  const MatrixXd gamma_full =
      post.c_hat + psi(combined, hp.theta, hp.noise);
  const auto obs_idx = gpmix::resolve_timestamps(combined, t_obs, tol);
  const auto pred_idx = gpmix::resolve_timestamps(combined, t_pred, tol);

  Prediction out;
  out.t_pred = t_pred;
  if (obs_idx.empty()) {
    out.mean = gpmix::gather_vector(post.m_hat, pred_idx);
    out.cov = gpmix::gather_matrix(gamma_full, pred_idx);
    return out;
  }
  const Eigen::Index no = static_cast<Eigen::Index>(obs_idx.size());
  const Eigen::Index np = static_cast<Eigen::Index>(pred_idx.size());
  MatrixXd Soo(no, no), Spo(np, no), Spp(np, np);
  for (Eigen::Index a = 0; a < no; ++a)
    for (Eigen::Index b = 0; b < no; ++b)
      Soo(a, b) = gamma_full(obs_idx[static_cast<std::size_t>(a)],
                             obs_idx[static_cast<std::size_t>(b)]);
  for (Eigen::Index a = 0; a < np; ++a) {
    for (Eigen::Index b = 0; b < no; ++b)
      Spo(a, b) = gamma_full(pred_idx[static_cast<std::size_t>(a)],
                             obs_idx[static_cast<std::size_t>(b)]);
    for (Eigen::Index b = 0; b < np; ++b)
      Spp(a, b) = gamma_full(pred_idx[static_cast<std::size_t>(a)],
                             pred_idx[static_cast<std::size_t>(b)]);
  }
  const auto fS = CholFactor::compute(Soo);
  const VectorXd resid = y_obs - gpmix::gather_vector(post.m_hat, obs_idx);
  out.mean = gpmix::gather_vector(post.m_hat, pred_idx) + Spo * fS.solve(resid);
  const MatrixXd Sop = Spo.transpose();
  const MatrixXd cov = Spp - Spo * fS.solve(Sop);
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

}  // namespace single_ref
