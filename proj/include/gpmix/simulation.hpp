#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmix/data.hpp"
#include "gpmix/kernel.hpp"
#include "gpmix/linalg.hpp"
#include "gpmix/model.hpp"
#include "gpmix/vem.hpp"

namespace gpmix {

// splitmix-style hash so each individual owns an independent stream and
// generation parallelizes without changing the draws
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

struct SimConfig {
  std::uint64_t seed = 0;
  int M = 50;
  int K_true = 3;
  int N_pool = 200;
  int N_i = 30;
  Regime regime = Regime::H00;
  double t_lo = 0.0, t_hi = 10.0;
  double a_lo = -2.0, a_hi = 2.0;      // prior mean slope
  double b_lo = 20.0, b_hi = 30.0;     // prior mean intercept
  double v_lo = 1.0, v_hi = std::exp(3.0);  // kernel variance, linear scale
  double l_lo = 1.0, l_hi = std::exp(1.0);  // kernel length-scale, linear scale
  double s2_lo = 0.0, s2_hi = 0.1;
};

struct SimTruth {
  std::vector<int> z;                // generating cluster per individual
  Eigen::VectorXd grid;              // candidate timestamps, sorted
  std::vector<Eigen::VectorXd> m;    // prior mean curves on the grid
  std::vector<Eigen::VectorXd> mu;   // drawn mean-process curves on the grid
  HyperParams hp;                    // drawn kernel parameters and mixing weights
  SimConfig config;
};

struct SimResult {
  Dataset data;
  SimTruth truth;
};

namespace detail {

inline Eigen::VectorXd draw_sorted_grid(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<double> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = unif(rng);
  std::sort(pts.begin(), pts.end());
  for (std::size_t a = 1; a < pts.size(); ++a)
    if (pts[a] - pts[a - 1] < 1e-6) pts[a] = pts[a - 1] + 1e-6;
  return Eigen::Map<Eigen::VectorXd>(pts.data(), n);
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index a = 0; a < n; ++a) z[a] = gauss(rng);
  return z;
}

// partial Fisher-Yates, then sorted: a uniform random N_i-subset of 0..N-1
inline std::vector<Eigen::Index> draw_subset(std::mt19937_64& rng, int n_total, int n_take) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_total));
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < n_take; ++j) {
    const std::size_t pick =
        static_cast<std::size_t>(j) +
        static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n_total - j));
    std::swap(idx[static_cast<std::size_t>(j)], idx[pick]);
  }
  idx.resize(static_cast<std::size_t>(n_take));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

inline SimResult simulate_main(const SimConfig& cfg) {
  if (cfg.M < 1 || cfg.K_true < 1) throw std::invalid_argument("simulate_main: M, K must be >= 1");
  if (cfg.N_i < 1 || cfg.N_i > cfg.N_pool)
    throw std::invalid_argument("simulate_main: need 1 <= N_i <= N_pool");

  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto in_range = [&](double lo, double hi) { return lo + (hi - lo) * unif(rng); };

  SimResult out;
  out.truth.config = cfg;
  out.truth.grid = detail::draw_sorted_grid(rng, cfg.N_pool, cfg.t_lo, cfg.t_hi);
  const Eigen::VectorXd& grid = out.truth.grid;

  for (int k = 0; k < cfg.K_true; ++k) {
    const double a = in_range(cfg.a_lo, cfg.a_hi);
    const double b = in_range(cfg.b_lo, cfg.b_hi);
    out.truth.m.push_back(a * grid.array() + b);
  }

  // variances and length-scales are drawn on the linear scale, then stored in
  // the kernel's log parameterization (variance = e^{2 log_v}, scale = e^{log_l})
  const auto draw_kp = [](auto&& range, double v_lo, double v_hi, double l_lo, double l_hi) {
    return KernelParams{0.5 * std::log(range(v_lo, v_hi)), std::log(range(l_lo, l_hi))};
  };

  const int n_gamma = cluster_specific_gamma(cfg.regime) ? cfg.K_true : 1;
  for (int g = 0; g < n_gamma; ++g)
    out.truth.hp.gamma.push_back(draw_kp(in_range, cfg.v_lo, cfg.v_hi, cfg.l_lo, cfg.l_hi));

  for (int k = 0; k < cfg.K_true; ++k) {
    const auto fC = CholFactor::compute(cluster_cov(grid, out.truth.hp.gamma_for(k)));
    out.truth.mu.push_back(out.truth.m[static_cast<std::size_t>(k)] +
                           fC.matrix_l() * detail::gaussian_vector(rng, grid.size()));
  }

  const bool per_i = individual_specific_theta(cfg.regime);
  if (!per_i) {
    out.truth.hp.theta.push_back(draw_kp(in_range, cfg.v_lo, cfg.v_hi, cfg.l_lo, cfg.l_hi));
    out.truth.hp.noise.push_back(
        NoiseParam{std::log(std::max(in_range(cfg.s2_lo, cfg.s2_hi), 1e-10))});
  }
  out.truth.hp.pi = Eigen::VectorXd::Constant(cfg.K_true, 1.0 / cfg.K_true);

  for (int i = 0; i < cfg.M; ++i) {
    std::mt19937_64 rng_i(derive_seed(cfg.seed, 1 + static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif_i(0.0, 1.0);
    const auto in_range_i = [&](double lo, double hi) { return lo + (hi - lo) * unif_i(rng_i); };

    const int z = static_cast<int>(rng_i() % static_cast<std::uint64_t>(cfg.K_true));
    out.truth.z.push_back(z);
    if (per_i) {
      out.truth.hp.theta.push_back(draw_kp(in_range_i, cfg.v_lo, cfg.v_hi, cfg.l_lo, cfg.l_hi));
      out.truth.hp.noise.push_back(
          NoiseParam{std::log(std::max(in_range_i(cfg.s2_lo, cfg.s2_hi), 1e-10))});
    }
    const KernelParams th = out.truth.hp.theta_for(static_cast<std::size_t>(i));
    const NoiseParam ns = out.truth.hp.noise_for(static_cast<std::size_t>(i));

    const auto idx = detail::draw_subset(rng_i, cfg.N_pool, cfg.N_i);
    const Eigen::VectorXd t = gather_vector(grid, idx);
    const Eigen::VectorXd mean = gather_vector(out.truth.mu[static_cast<std::size_t>(z)], idx);
    const auto fP = CholFactor::compute(psi_matrix(t, th, ns));
    const Eigen::VectorXd y = mean + fP.matrix_l() * detail::gaussian_vector(rng_i, t.size());

    Individual ind;
    ind.id = "sim_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    ind.t = t;
    ind.y = y;
    out.data.individuals.push_back(std::move(ind));
  }
  return out;
}

// positive-part tent curve of the four-group scheme
inline double scheme_a_curve(double U, double c, double d, double t) {
  const double bump = std::max(2.5 - std::abs(t - d), 0.0);
  return U + c * (1.0 - U) * bump;
}

struct SchemeATruth {
  std::vector<int> z;                   // group index into the (c, d) table
  Eigen::VectorXd u;                    // per-curve level: the U of its group
  Eigen::VectorXd grid;                 // common grid
  std::vector<Eigen::VectorXd> curves;  // noise-free curves on the grid
};

struct SchemeAResult {
  Dataset data;
  SchemeATruth truth;
};

inline constexpr std::array<std::pair<double, double>, 4> kSchemeAGroups{
    {{0.5, 2.5}, {0.5, 7.5}, {1.0, 2.5}, {1.0, 7.5}}};

inline SchemeAResult simulate_scheme_a(std::uint64_t seed, int M = 50, int N = 30) {
  if (M < 1 || N < 1) throw std::invalid_argument("simulate_scheme_a: M, N must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, 0));
  SchemeAResult out;
  out.truth.grid = detail::draw_sorted_grid(rng, N, 0.0, 10.0);
  out.truth.u.resize(M);
  const double sd = std::sqrt(0.05);

  // one level draw per group: every curve of a group shares its U
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::array<double, 4> level{};
  for (auto& u : level) u = unif(rng);

  for (int i = 0; i < M; ++i) {
    std::mt19937_64 rng_i(derive_seed(seed, 1 + static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int z = static_cast<int>(rng_i() % 4);
    const double U = level[static_cast<std::size_t>(z)];
    out.truth.z.push_back(z);
    out.truth.u[i] = U;
    const auto [c, d] = kSchemeAGroups[static_cast<std::size_t>(z)];
    Eigen::VectorXd curve(N), y(N);
    for (int a = 0; a < N; ++a) {
      curve[a] = scheme_a_curve(U, c, d, out.truth.grid[a]);
      y[a] = curve[a] + sd * gauss(rng_i);
    }
    out.truth.curves.push_back(curve);
    Individual ind;
    ind.id = "a_" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    ind.t = out.truth.grid;
    ind.y = y;
    out.data.individuals.push_back(std::move(ind));
  }
  return out;
}

// chronological prefix/suffix split of one series into observed and testing parts
inline std::pair<Individual, Individual> split_new_individual(const Individual& ind, int n_obs) {
  if (n_obs < 1 || n_obs >= ind.size())
    throw std::invalid_argument("split_new_individual: need 1 <= n_obs < series length");
  Individual obs, test;
  obs.id = ind.id + "_obs";
  obs.t = ind.t.head(n_obs);
  obs.y = ind.y.head(n_obs);
  test.id = ind.id + "_test";
  test.t = ind.t.tail(ind.size() - n_obs);
  test.y = ind.y.tail(ind.size() - n_obs);
  return {std::move(obs), std::move(test)};
}

}  // namespace gpmix
