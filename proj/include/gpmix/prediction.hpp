#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gpmix/data.hpp"
#include "gpmix/errors.hpp"
#include "gpmix/kernel.hpp"
#include "gpmix/linalg.hpp"
#include "gpmix/model.hpp"
#include "gpmix/optimizer.hpp"
#include "gpmix/vem.hpp"

namespace gpmix {

// Combined grid for one prediction: target points, the new series' observed
// points, and (by default) the training grid, merged sorted-unique by tol.
struct WorkingGrid {
  Eigen::VectorXd t_pred;
  Eigen::VectorXd t_obs;
  Eigen::VectorXd combined;
  std::vector<Eigen::Index> pred_idx;  // position of each t_pred entry in combined
  std::vector<Eigen::Index> obs_idx;   // position of each t_obs entry in combined
  bool equals_training = false;
  double tol = 1e-9;
};

inline Eigen::VectorXd merge_sorted_unique(const std::vector<Eigen::VectorXd>& parts,
                                           double tol) {
  std::vector<double> all;
  for (const auto& p : parts)
    for (Eigen::Index a = 0; a < p.size(); ++a) {
      if (!std::isfinite(p[a])) throw DataFormatError("non-finite timestamp in grid merge");
      all.push_back(p[a]);
    }
  std::sort(all.begin(), all.end());
  std::vector<double> merged;
  for (double v : all)
    if (merged.empty() || v - merged.back() > tol) merged.push_back(v);
  return Eigen::Map<Eigen::VectorXd>(merged.data(), static_cast<Eigen::Index>(merged.size()));
}

inline WorkingGrid make_working_grid(const Eigen::VectorXd& t_pred, const Eigen::VectorXd& t_obs,
                                     const Eigen::VectorXd& training_t,
                                     bool include_training = true, double tol = 1e-9) {
  if (t_pred.size() == 0) throw DataFormatError("prediction requires at least one target point");
  WorkingGrid wg;
  wg.tol = tol;
  wg.t_pred = t_pred;
  wg.t_obs = t_obs;
  std::vector<Eigen::VectorXd> parts{t_pred, t_obs};
  if (include_training) parts.push_back(training_t);
  wg.combined = merge_sorted_unique(parts, tol);
  wg.pred_idx = resolve_timestamps(wg.combined, t_pred, tol);
  wg.obs_idx = resolve_timestamps(wg.combined, t_obs, tol);
  wg.equals_training =
      wg.combined.size() == training_t.size() &&
      (wg.combined - training_t).lpNorm<Eigen::Infinity>() <= tol;
  return wg;
}

namespace detail {

inline std::optional<Eigen::Index> try_resolve(const Eigen::VectorXd& sorted, double x,
                                               double tol) {
  const double* begin = sorted.data();
  const double* end = begin + sorted.size();
  const double* it = std::lower_bound(begin, end, x);
  if (it != end && std::abs(*it - x) <= tol) return static_cast<Eigen::Index>(it - begin);
  if (it != begin && std::abs(*(it - 1) - x) <= tol)
    return static_cast<Eigen::Index>(it - begin - 1);
  return std::nullopt;
}

}  // namespace detail

// Mean-process hyper-posterior on the working grid. When the combined grid is
// the training grid the stored posterior is returned unchanged; otherwise the
// update recomputes it with the converged responsibilities and parameters.
// Training observations that fall outside the working grid are dropped from
// the recomputation.
inline MeanProcess hyperposterior_on_grid(const TrainingState& state, const WorkingGrid& wg,
                                          int threads = 1) {
  if (wg.equals_training) return state.mp;

  const bool per_i = individual_specific_theta(state.regime);
  Dataset sub;
  PooledGrid pg;
  pg.t = wg.combined;
  pg.tol = wg.tol;
  HyperParams hp = state.hp;
  std::vector<KernelParams> theta_sub;
  std::vector<NoiseParam> noise_sub;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < state.data.size(); ++i) {
    const auto& ind = state.data.individuals[i];
    std::vector<Eigen::Index> idx;
    std::vector<double> t_keep, y_keep;
    for (Eigen::Index a = 0; a < ind.size(); ++a) {
      const auto hit = detail::try_resolve(wg.combined, ind.t[a], wg.tol);
      if (!hit) continue;
      idx.push_back(*hit);
      t_keep.push_back(ind.t[a]);
      y_keep.push_back(ind.y[a]);
    }
    if (idx.empty()) continue;
    Individual kept;
    kept.id = ind.id;
    kept.t = Eigen::Map<Eigen::VectorXd>(t_keep.data(), static_cast<Eigen::Index>(t_keep.size()));
    kept.y = Eigen::Map<Eigen::VectorXd>(y_keep.data(), static_cast<Eigen::Index>(y_keep.size()));
    sub.individuals.push_back(std::move(kept));
    pg.index_of.push_back(std::move(idx));
    rows.push_back(static_cast<Eigen::Index>(i));
    if (per_i) {
      theta_sub.push_back(state.hp.theta_for(i));
      noise_sub.push_back(state.hp.noise_for(i));
    }
  }
  if (per_i) {
    hp.theta = std::move(theta_sub);
    hp.noise = std::move(noise_sub);
  }
  Eigen::MatrixXd tau(static_cast<Eigen::Index>(rows.size()), state.K);
  for (std::size_t r = 0; r < rows.size(); ++r) tau.row(static_cast<Eigen::Index>(r)) =
      state.tau.row(rows[r]);
  return e_step_mu(sub, pg, state.prior_means, hp, tau, threads);
}

// Per-cluster marginal law of the new series on the combined grid:
// mean m_hat_k, covariance c_hat_k + Psi(theta_star, sigma_star).
struct PriorComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline std::vector<PriorComponent> multitask_prior(const MeanProcess& mp,
                                                   const Eigen::VectorXd& combined,
                                                   const KernelParams& theta_star,
                                                   const NoiseParam& sigma_star) {
  const Eigen::MatrixXd Psi = psi_matrix(combined, theta_star, sigma_star);
  std::vector<PriorComponent> out;
  for (std::size_t k = 0; k < mp.m_hat.size(); ++k)
    out.push_back(PriorComponent{mp.m_hat[k], mp.c_hat[k] + Psi});
  return out;
}

// Cluster weights of the new series: softmax over
// log pi_k + log N(y_obs; m_hat_k(t_obs), c_hat_k(t_obs) + Psi(t_obs)).
inline Eigen::VectorXd new_cluster_weights(const MeanProcess& mp,
                                           const std::vector<Eigen::Index>& obs_idx,
                                           const Eigen::VectorXd& t_obs,
                                           const Eigen::VectorXd& y_obs,
                                           const Eigen::VectorXd& pi,
                                           const KernelParams& theta_star,
                                           const NoiseParam& sigma_star) {
  const Eigen::Index K = pi.size();
  if (y_obs.size() == 0) {
    Eigen::VectorXd w = pi;
    return w / w.sum();
  }
  const Eigen::MatrixXd Psi = psi_matrix(t_obs, theta_star, sigma_star);
  Eigen::VectorXd ll(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(pi[k] > 0.0)) {
      ll[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Eigen::MatrixXd S = gather_matrix(mp.c_hat[static_cast<std::size_t>(k)], obs_idx) + Psi;
    const auto f = CholFactor::compute(S);
    const Eigen::VectorXd m = gather_vector(mp.m_hat[static_cast<std::size_t>(k)], obs_idx);
    ll[k] = std::log(pi[k]) + gaussian_logpdf(y_obs, m, f);
  }
  const double lse = log_sum_exp(ll);
  Eigen::VectorXd tau(K);
  for (Eigen::Index k = 0; k < K; ++k)
    tau[k] = std::isfinite(ll[k]) ? std::exp(ll[k] - lse) : 0.0;
  return tau;
}

// Weighted objective for the new series' kernel parameters:
// sum_k tau_k log N(y_obs; m_hat_k(t_obs), c_hat_k(t_obs) + Psi(theta, sigma)).
struct StarBlock {
  Eigen::VectorXd t;
  std::vector<Eigen::VectorXd> r;      // y_obs - m_hat_k(t_obs)
  std::vector<Eigen::MatrixXd> c_sub;  // c_hat_k on t_obs
  Eigen::VectorXd tau;
};

inline StarBlock make_star_block(const MeanProcess& mp, const std::vector<Eigen::Index>& obs_idx,
                                 const Eigen::VectorXd& t_obs, const Eigen::VectorXd& y_obs,
                                 const Eigen::VectorXd& tau) {
  StarBlock blk;
  blk.t = t_obs;
  blk.tau = tau;
  for (std::size_t k = 0; k < mp.m_hat.size(); ++k) {
    blk.r.push_back(y_obs - gather_vector(mp.m_hat[k], obs_idx));
    blk.c_sub.push_back(gather_matrix(mp.c_hat[k], obs_idx));
  }
  return blk;
}

inline double star_block_value(const StarBlock& blk, const KernelParams& th,
                               const NoiseParam& ns, Eigen::VectorXd* grad = nullptr) {
  const Eigen::Index n = blk.t.size();
  const double jit = default_jitter(th, &ns);
  const double jit_v = 1e-8 * std::exp(2.0 * th.log_v);
  const double jit_s = 1e-8 * std::exp(ns.log_sigma2);
  const Eigen::MatrixXd Psi = build_cov(blk.t, th, &ns, jit);
  double val = 0.0;
  Eigen::MatrixXd G;
  if (grad) G = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < blk.tau.size(); ++k) {
    const double w = blk.tau[k];
    if (!(w > 0.0)) continue;
    const Eigen::MatrixXd S = blk.c_sub[static_cast<std::size_t>(k)] + Psi;
    const auto f = CholFactor::compute(S, jit);
    const auto& r = blk.r[static_cast<std::size_t>(k)];
    val -= 0.5 * w * (static_cast<double>(n) * kLog2Pi + f.log_det() + f.quad_form(r));
    if (grad) {
      const Eigen::MatrixXd W = f.inverse();
      const Eigen::VectorXd alpha = f.solve(r);
      G += w * (alpha * alpha.transpose() - W);
    }
  }
  if (grad) {
    grad->resize(3);
    auto kg = build_cov_grad(blk.t, th, &ns);
    kg.d_log_v.diagonal().array() += 2.0 * jit_v;
    kg.d_log_sigma2.diagonal().array() += jit_s;
    (*grad)[0] = 0.5 * G.cwiseProduct(kg.d_log_v).sum();
    (*grad)[1] = 0.5 * G.cwiseProduct(kg.d_log_l).sum();
    (*grad)[2] = 0.5 * G.cwiseProduct(kg.d_log_sigma2).sum();
  }
  return val;
}

// New partially observed series with its fitted kernel and cluster weights.
struct NewIndividual {
  Eigen::VectorXd t_obs;
  Eigen::VectorXd y_obs;
  KernelParams theta_star;
  NoiseParam sigma_star;
  Eigen::VectorXd tau_star;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline void init_star_params(const HyperParams& hp, KernelParams* th, NoiseParam* ns) {
  double lv = 0.0, ll = 0.0, ls = 0.0;
  for (const auto& t : hp.theta) {
    lv += t.log_v;
    ll += t.log_l;
  }
  for (const auto& s : hp.noise) ls += s.log_sigma2;
  const double mt = static_cast<double>(hp.theta.size());
  const double ms = static_cast<double>(hp.noise.size());
  th->log_v = lv / mt;
  th->log_l = ll / mt;
  ns->log_sigma2 = ls / ms;
}

inline MaximizeResult maximize_star(const StarBlock& blk, const KernelParams& th0,
                                    const NoiseParam& ns0, const OptimOptions& opt) {
  const Objective f = [&blk](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const KernelParams th{x[0], x[1]};
    const NoiseParam ns{x[2]};
    return star_block_value(blk, th, ns, g);
  };
  Eigen::VectorXd x0(3);
  x0 << th0.log_v, th0.log_l, ns0.log_sigma2;
  return maximize(f, x0, default_theta_bounds(), opt);
}

}  // namespace detail

// Alternates the weight formula with the weighted-likelihood maximization of
// (theta_star, sigma_star); weights are re-evaluated at the returned optimum.
inline NewIndividual predict_em(const TrainingState& state, const MeanProcess& mp,
                                const WorkingGrid& wg, const Eigen::VectorXd& y_obs,
                                int max_iter = 20, double rel_tol = 1e-3,
                                const OptimOptions& opt = {}) {
  NewIndividual star;
  star.t_obs = wg.t_obs;
  star.y_obs = y_obs;
  detail::init_star_params(state.hp, &star.theta_star, &star.sigma_star);
  if (y_obs.size() == 0) {
    star.tau_star = state.hp.pi / state.hp.pi.sum();
    return star;
  }
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    star.iterations = it;
    star.tau_star = new_cluster_weights(mp, wg.obs_idx, wg.t_obs, y_obs, state.hp.pi,
                                        star.theta_star, star.sigma_star);
    const StarBlock blk = make_star_block(mp, wg.obs_idx, wg.t_obs, y_obs, star.tau_star);
    const MaximizeResult res =
        detail::maximize_star(blk, star.theta_star, star.sigma_star, opt);
    star.theta_star = KernelParams{res.x[0], res.x[1]};
    star.sigma_star = NoiseParam{res.x[2]};
    if (res.status == OptimStatus::LineSearchFailed && res.grad_norm > opt.grad_tol)
      star.warnings.push_back(
          "new-series kernel optimization stalled (kept best-seen parameters)");
    if (it > 1 && std::abs(res.value - prev) <= rel_tol * std::max(1.0, std::abs(prev))) {
      star.converged = true;
      prev = res.value;
      break;
    }
    prev = res.value;
  }
  star.tau_star = new_cluster_weights(mp, wg.obs_idx, wg.t_obs, y_obs, state.hp.pi,
                                      star.theta_star, star.sigma_star);
  return star;
}

// Shared-kernel regimes: the new series inherits the shared (theta, sigma)
// and its weights come from a single evaluation of the weight formula.
inline NewIndividual predict_with_shared_hypers(const TrainingState& state,
                                                const MeanProcess& mp, const WorkingGrid& wg,
                                                const Eigen::VectorXd& y_obs) {
  NewIndividual star;
  star.t_obs = wg.t_obs;
  star.y_obs = y_obs;
  star.theta_star = state.hp.theta[0];
  star.sigma_star = state.hp.noise[0];
  star.tau_star = new_cluster_weights(mp, wg.obs_idx, wg.t_obs, y_obs, state.hp.pi,
                                      star.theta_star, star.sigma_star);
  star.converged = true;
  return star;
}

// Cheapest fallback: weights fixed at the fitted mixing proportions; kernel
// parameters shared, or fitted once under those fixed weights.
inline NewIndividual predict_with_prior_weights(const TrainingState& state,
                                                const MeanProcess& mp, const WorkingGrid& wg,
                                                const Eigen::VectorXd& y_obs,
                                                const OptimOptions& opt = {}) {
  NewIndividual star;
  star.t_obs = wg.t_obs;
  star.y_obs = y_obs;
  star.tau_star = state.hp.pi / state.hp.pi.sum();
  star.converged = true;
  if (!individual_specific_theta(state.regime)) {
    star.theta_star = state.hp.theta[0];
    star.sigma_star = state.hp.noise[0];
    return star;
  }
  detail::init_star_params(state.hp, &star.theta_star, &star.sigma_star);
  if (y_obs.size() == 0) return star;
  const StarBlock blk = make_star_block(mp, wg.obs_idx, wg.t_obs, y_obs, star.tau_star);
  const MaximizeResult res = detail::maximize_star(blk, star.theta_star, star.sigma_star, opt);
  star.theta_star = KernelParams{res.x[0], res.x[1]};
  star.sigma_star = NoiseParam{res.x[2]};
  star.iterations = 1;
  return star;
}

// Gaussian conditioning of each cluster's prior on the observed block.
struct ClusterPosterior {
  Eigen::VectorXd mean;  // over t_pred
  Eigen::MatrixXd cov;   // over t_pred, symmetric
};

inline std::vector<ClusterPosterior> cluster_posteriors(const std::vector<PriorComponent>& prior,
                                                        const WorkingGrid& wg,
                                                        const Eigen::VectorXd& y_obs) {
  const Eigen::Index np = static_cast<Eigen::Index>(wg.pred_idx.size());
  const Eigen::Index no = static_cast<Eigen::Index>(wg.obs_idx.size());
  std::vector<ClusterPosterior> out;
  for (const auto& pc : prior) {
    ClusterPosterior post;
    if (no == 0) {
      post.mean = gather_vector(pc.mean, wg.pred_idx);
      post.cov = gather_matrix(pc.cov, wg.pred_idx);
      out.push_back(std::move(post));
      continue;
    }
    Eigen::MatrixXd Soo(no, no), Spo(np, no), Spp(np, np);
    for (Eigen::Index a = 0; a < no; ++a)
      for (Eigen::Index b = 0; b < no; ++b)
        Soo(a, b) = pc.cov(wg.obs_idx[static_cast<std::size_t>(a)],
                           wg.obs_idx[static_cast<std::size_t>(b)]);
    for (Eigen::Index a = 0; a < np; ++a) {
      for (Eigen::Index b = 0; b < no; ++b)
        Spo(a, b) = pc.cov(wg.pred_idx[static_cast<std::size_t>(a)],
                           wg.obs_idx[static_cast<std::size_t>(b)]);
      for (Eigen::Index b = 0; b < np; ++b)
        Spp(a, b) = pc.cov(wg.pred_idx[static_cast<std::size_t>(a)],
                           wg.pred_idx[static_cast<std::size_t>(b)]);
    }
    const auto fS = CholFactor::compute(Soo);
    const Eigen::VectorXd resid = y_obs - gather_vector(pc.mean, wg.obs_idx);
    post.mean = gather_vector(pc.mean, wg.pred_idx) + Spo * fS.solve(resid);
    const Eigen::MatrixXd Sop = Spo.transpose();
    const Eigen::MatrixXd cov = Spp - Spo * fS.solve(Sop);
    post.cov = 0.5 * (cov + cov.transpose());
    out.push_back(std::move(post));
  }
  return out;
}

// Weighted sum of the per-cluster Gaussians over the target points.
struct MixturePrediction {
  Eigen::VectorXd t;        // target points, caller order
  Eigen::VectorXd weights;  // cluster weights of the new series
  std::vector<ClusterPosterior> components;

  Eigen::VectorXd mixture_mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(t.size());
    for (Eigen::Index k = 0; k < weights.size(); ++k)
      m += weights[k] * components[static_cast<std::size_t>(k)].mean;
    return m;
  }

  // marginal mixture density at target point j
  double point_density(Eigen::Index j, double y) const {
    double d = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
      const auto& c = components[static_cast<std::size_t>(k)];
      const double var = std::max(c.cov(j, j), 1e-300);
      const double z = y - c.mean[j];
      d += weights[k] * std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
    }
    return d;
  }

  // pointwise central 95% band of cluster k: columns are lower, upper
  Eigen::MatrixXd interval95(int k) const {
    const auto& c = components[static_cast<std::size_t>(k)];
    Eigen::MatrixXd band(t.size(), 2);
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      const double half = 1.96 * std::sqrt(std::max(c.cov(j, j), 0.0));
      band(j, 0) = c.mean[j] - half;
      band(j, 1) = c.mean[j] + half;
    }
    return band;
  }

  int argmax_weight() const {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < weights.size(); ++k)
      if (weights[k] > weights[best]) best = k;
    return static_cast<int>(best);
  }

  // single-Gaussian view through the most probable cluster
  const ClusterPosterior& collapsed() const {
    return components[static_cast<std::size_t>(argmax_weight())];
  }
};

inline MixturePrediction mixture_prediction(std::vector<ClusterPosterior> components,
                                            const Eigen::VectorXd& weights,
                                            const Eigen::VectorXd& t_pred) {
  if (static_cast<Eigen::Index>(components.size()) != weights.size())
    throw LengthMismatch("mixture_prediction: component/weight count mismatch");
  MixturePrediction mix;
  mix.t = t_pred;
  mix.weights = weights;
  mix.components = std::move(components);
  return mix;
}

// rows follow y_grid, columns follow t_grid (resolved against the target points)
inline Eigen::MatrixXd density_heatmap(const MixturePrediction& pred,
                                       const Eigen::VectorXd& t_grid,
                                       const Eigen::VectorXd& y_grid, double tol = 1e-9) {
  if (t_grid.size() == 0 || y_grid.size() == 0)
    throw DataFormatError("density_heatmap: empty grid");
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(t_grid.size()));
  for (Eigen::Index c = 0; c < t_grid.size(); ++c) {
    bool found = false;
    for (Eigen::Index j = 0; j < pred.t.size(); ++j)
      if (std::abs(pred.t[j] - t_grid[c]) <= tol) {
        cols[static_cast<std::size_t>(c)] = j;
        found = true;
        break;
      }
    if (!found)
      throw UnresolvedTimestamp("density_heatmap: timestamp not among the target points");
  }
  Eigen::MatrixXd D(y_grid.size(), t_grid.size());
  for (Eigen::Index c = 0; c < t_grid.size(); ++c)
    for (Eigen::Index r = 0; r < y_grid.size(); ++r)
      D(r, c) = pred.point_density(cols[static_cast<std::size_t>(c)], y_grid[r]);
  return D;
}

enum class PredictMode { Auto, Em, SharedHypers, PriorWeights };

struct PredictConfig {
  Eigen::VectorXd t_pred;
  bool include_training_grid = true;
  PredictMode mode = PredictMode::Auto;
  int max_em_iter = 20;
  double em_rel_tol = 1e-3;
  OptimOptions opt;
  int threads = 1;
};

struct PredictResult {
  WorkingGrid grid;
  NewIndividual star;
  MixturePrediction mixture;
  std::string path;  // which hyper-posterior and weight routes were taken
  std::vector<std::string> warnings;
};

inline PredictResult predict(const TrainingState& state, const Eigen::VectorXd& t_obs,
                             const Eigen::VectorXd& y_obs, const PredictConfig& cfg) {
  if (t_obs.size() != y_obs.size())
    throw LengthMismatch("predict: observation vectors differ in length");

  Eigen::VectorXd ts = t_obs, ys = y_obs;
  if (t_obs.size() > 0) {
    const Individual sorted = make_individual("new", t_obs, y_obs);
    ts = sorted.t;
    ys = sorted.y;
  }

  PredictResult out;
  out.grid = make_working_grid(cfg.t_pred, ts, state.grid.t, cfg.include_training_grid,
                               state.grid.tol);
  const MeanProcess mp = hyperposterior_on_grid(state, out.grid, cfg.threads);
  out.path = out.grid.equals_training ? "hyperposterior=stored" : "hyperposterior=recomputed";

  PredictMode mode = cfg.mode;
  if (mode == PredictMode::Auto)
    mode = individual_specific_theta(state.regime) ? PredictMode::Em
                                                   : PredictMode::SharedHypers;
  if (mode == PredictMode::Em && ys.size() == 0) {
    mode = PredictMode::PriorWeights;
    out.warnings.push_back("no observations for the new series; using prior cluster weights");
  }

  switch (mode) {
    case PredictMode::Em:
      out.star = predict_em(state, mp, out.grid, ys, cfg.max_em_iter, cfg.em_rel_tol, cfg.opt);
      out.path += ",weights=em";
      break;
    case PredictMode::SharedHypers:
      out.star = predict_with_shared_hypers(state, mp, out.grid, ys);
      out.path += ",weights=shared-hypers";
      break;
    default:
      out.star = predict_with_prior_weights(state, mp, out.grid, ys, cfg.opt);
      out.path += ",weights=prior";
      break;
  }
  for (const auto& w : out.star.warnings) out.warnings.push_back(w);

  const auto prior = multitask_prior(mp, out.grid.combined, out.star.theta_star,
                                     out.star.sigma_star);
  auto comps = cluster_posteriors(prior, out.grid, ys);
  out.mixture = mixture_prediction(std::move(comps), out.star.tau_star, out.grid.t_pred);
  return out;
}

}  // namespace gpmix
