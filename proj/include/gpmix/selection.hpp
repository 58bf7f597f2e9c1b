#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gpmix/model.hpp"
#include "gpmix/vem.hpp"

namespace gpmix {

// (alpha_i + alpha_k + (K - 1)) / 2 * log M; alpha counts follow the regime's
// hyper-parameter multiplicities (3 per theta set including noise, 2 per gamma set)
inline double vbic_penalty(Regime regime, int K, std::size_t M) {
  if (K < 1) throw std::invalid_argument("vbic_penalty: K must be positive");
  if (M < 1) throw std::invalid_argument("vbic_penalty: M must be positive");
  const int alpha_k = count_cluster_hp(regime, K);
  const int alpha_i = count_indiv_hp(regime, M);
  return 0.5 * static_cast<double>(alpha_i + alpha_k + (K - 1)) *
         std::log(static_cast<double>(M));
}

inline double vbic(const TrainingState& state) {
  return state.elbo - vbic_penalty(state.regime, state.K, state.data.size());
}

struct VbicEntry {
  int K = 0;
  double elbo = 0.0;
  double penalty = 0.0;
  double vbic = 0.0;
  TrainingState state;
};

struct SelectionResult {
  std::vector<VbicEntry> entries;  // ascending K
  int best_k = 0;
};

// strict improvement scan over ascending K; ties keep the smaller K
inline const VbicEntry& pick_best(const std::vector<VbicEntry>& entries) {
  if (entries.empty()) throw std::invalid_argument("pick_best: no entries");
  std::size_t best = 0;
  for (std::size_t q = 1; q < entries.size(); ++q)
    if (entries[q].vbic > entries[best].vbic) best = q;
  return entries[best];
}

inline SelectionResult select_k(const Dataset& data, std::vector<int> k_range, Regime regime,
                                const InitConfig& init = {}, const StopConfig& stop = {},
                                int threads = 1) {
  std::sort(k_range.begin(), k_range.end());
  k_range.erase(std::unique(k_range.begin(), k_range.end()), k_range.end());
  if (k_range.empty()) throw std::invalid_argument("select_k: empty K range");
  if (k_range.front() < 1) throw std::invalid_argument("select_k: K must be positive");

  SelectionResult out;
  for (int K : k_range) {
    InitConfig cfg = init;
    cfg.seed = init.seed + 7919ull * static_cast<unsigned long long>(K);
    cfg.tau0.reset();
    cfg.hp0.reset();
    VbicEntry e;
    e.K = K;
    e.state = train(data, K, regime, cfg, stop, threads);
    e.elbo = e.state.elbo;
    e.penalty = vbic_penalty(regime, K, data.size());
    e.vbic = e.elbo - e.penalty;
    out.entries.push_back(std::move(e));
  }
  out.best_k = pick_best(out.entries).K;
  return out;
}

}  // namespace gpmix
