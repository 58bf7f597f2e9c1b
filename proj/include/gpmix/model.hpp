#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gpmix/data.hpp"
#include "gpmix/errors.hpp"
#include "gpmix/kernel.hpp"

namespace gpmix {

/* Hyper-parameter sharing regimes: the first letter position says whether the
 * cluster kernels gamma are common (0) or cluster-specific (k), the second
 * whether the individual kernels theta/sigma are common (0) or
 * individual-specific (i). */
enum class Regime { H00, Hk0, H0i, Hki };

inline bool cluster_specific_gamma(Regime r) { return r == Regime::Hk0 || r == Regime::Hki; }
inline bool individual_specific_theta(Regime r) { return r == Regime::H0i || r == Regime::Hki; }

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::H00: return "H00";
    case Regime::Hk0: return "Hk0";
    case Regime::H0i: return "H0i";
    case Regime::Hki: return "Hki";
  }
  return "H00";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "H00" || s == "h00") return Regime::H00;
  if (s == "Hk0" || s == "hk0") return Regime::Hk0;
  if (s == "H0i" || s == "h0i") return Regime::H0i;
  if (s == "Hki" || s == "hki") return Regime::Hki;
  throw DataFormatError("unknown regime '" + s + "' (expected H00, Hk0, H0i, or Hki)");
}

/* Full hyper-parameter set. gamma holds 1 entry when shared across clusters,
 * K entries otherwise; theta/noise hold 1 entry when shared across
 * individuals, M entries otherwise. pi lives on the K-simplex. */
struct HyperParams {
  std::vector<KernelParams> gamma;
  std::vector<KernelParams> theta;
  std::vector<NoiseParam> noise;
  Eigen::VectorXd pi;

  const KernelParams& gamma_for(std::size_t k) const {
    return gamma.size() == 1 ? gamma[0] : gamma.at(k);
  }
  const KernelParams& theta_for(std::size_t i) const {
    return theta.size() == 1 ? theta[0] : theta.at(i);
  }
  const NoiseParam& noise_for(std::size_t i) const {
    return noise.size() == 1 ? noise[0] : noise.at(i);
  }
};

// Cluster prior mean: a constant, or a tabulated curve evaluated with linear
// interpolation inside the table and flat extrapolation outside.
struct PriorMean {
  double constant = 0.0;
  Eigen::VectorXd table_t;
  Eigen::VectorXd table_v;

  bool tabulated() const { return table_t.size() > 0; }

  double operator()(double t) const {
    if (!tabulated()) return constant;
    if (table_t.size() == 1 || t <= table_t[0]) return table_v[0];
    const Eigen::Index n = table_t.size();
    if (t >= table_t[n - 1]) return table_v[n - 1];
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (table_t[mid] <= t) lo = mid; else hi = mid;
    }
    const double w = (t - table_t[lo]) / (table_t[hi] - table_t[lo]);
    return (1.0 - w) * table_v[lo] + w * table_v[hi];
  }

  Eigen::VectorXd eval(const Eigen::VectorXd& grid) const {
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index a = 0; a < grid.size(); ++a) out[a] = (*this)(grid[a]);
    return out;
  }
};

// Variational posterior of the cluster mean processes on the pooled grid.
struct MeanProcess {
  std::vector<Eigen::VectorXd> m_hat;  // K vectors of length N
  std::vector<Eigen::MatrixXd> c_hat;  // K matrices N x N
};

// One recorded point of the training objective.
struct ElboRecord {
  int iteration = 0;
  std::string step;
  double elbo = 0.0;
};

struct TrainingState {
  Regime regime = Regime::H00;
  int K = 1;
  PooledGrid grid;
  std::vector<PriorMean> prior_means;  // size K
  HyperParams hp;
  Eigen::MatrixXd tau;  // M x K, rows on the simplex
  MeanProcess mp;
  Dataset data;  // training series, retained so prediction can rebuild
                 // the hyper-posterior on extended grids
  std::vector<ElboRecord> elbo_trace;
  double elbo = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  double train_seconds = 0.0;
  std::vector<std::string> warnings;
};

// Scalar hyper-parameter counts entering the model-selection penalty.
inline int count_cluster_hp(Regime r, int K) { return 2 * (cluster_specific_gamma(r) ? K : 1); }
inline int count_indiv_hp(Regime r, int M) { return 3 * (individual_specific_theta(r) ? M : 1); }

}  // namespace gpmix
