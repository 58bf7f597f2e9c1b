#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gpmix/errors.hpp"

namespace gpmix {

/* One irregularly sampled series. Timestamps are kept sorted ascending with
 * y reordered alongside; two observations of the same individual closer than
 * the pooling tolerance are rejected. */
struct Individual {
  std::string id;
  Eigen::VectorXd t;
  Eigen::VectorXd y;

  Eigen::Index size() const { return t.size(); }
};

inline void validate_individual(const Individual& ind, double tol = 1e-9) {
  if (ind.t.size() != ind.y.size()) {
    std::ostringstream msg;
    msg << "individual '" << ind.id << "': t has " << ind.t.size() << " entries but y has "
        << ind.y.size();
    throw LengthMismatch(msg.str());
  }
  for (Eigen::Index a = 0; a < ind.t.size(); ++a) {
    if (!std::isfinite(ind.t[a]) || !std::isfinite(ind.y[a])) {
      std::ostringstream msg;
      msg << "individual '" << ind.id << "': non-finite value at position " << a;
      throw DataFormatError(msg.str());
    }
  }
  for (Eigen::Index a = 1; a < ind.t.size(); ++a) {
    if (std::abs(ind.t[a] - ind.t[a - 1]) <= tol) {
      std::ostringstream msg;
      msg << "individual '" << ind.id << "': duplicate timestamp " << ind.t[a];
      throw DuplicateWithinIndividual(msg.str());
    }
  }
}

// Sorts (t, y) jointly by t, then validates.
inline Individual make_individual(std::string id, Eigen::VectorXd t, Eigen::VectorXd y,
                                  double tol = 1e-9) {
  if (t.size() != y.size()) {
    std::ostringstream msg;
    msg << "individual '" << id << "': t has " << t.size() << " entries but y has " << y.size();
    throw LengthMismatch(msg.str());
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(t.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return t[a] < t[b]; });
  Individual ind;
  ind.id = std::move(id);
  ind.t.resize(t.size());
  ind.y.resize(y.size());
  for (std::size_t a = 0; a < order.size(); ++a) {
    ind.t[static_cast<Eigen::Index>(a)] = t[order[a]];
    ind.y[static_cast<Eigen::Index>(a)] = y[order[a]];
  }
  validate_individual(ind, tol);
  return ind;
}

/* Sorted union of all individuals' timestamps; values closer than tol are
 * merged onto one representative (the first encountered in sorted order).
 * index_of[i][a] is the pooled position of individual i's a-th timestamp. */
struct PooledGrid {
  Eigen::VectorXd t;
  std::vector<std::vector<Eigen::Index>> index_of;
  double tol = 1e-9;
};

// Maps each timestamp in `ts` to its position in the sorted grid, within tol.
inline std::vector<Eigen::Index> resolve_timestamps(const Eigen::VectorXd& grid,
                                                    const Eigen::VectorXd& ts, double tol) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(ts.size()));
  for (Eigen::Index a = 0; a < ts.size(); ++a) {
    // lower_bound on grid, then check the two neighbours
    Eigen::Index lo = 0, hi = grid.size();
    while (lo < hi) {
      const Eigen::Index mid = (lo + hi) / 2;
      if (grid[mid] < ts[a]) lo = mid + 1; else hi = mid;
    }
    Eigen::Index best = -1;
    double best_d = tol;
    for (Eigen::Index c : {lo - 1, lo}) {
      if (c < 0 || c >= grid.size()) continue;
      const double d = std::abs(grid[c] - ts[a]);
      if (d <= best_d) { best_d = d; best = c; }
    }
    if (best < 0) {
      std::ostringstream msg;
      msg << "timestamp " << ts[a] << " not found on grid within tolerance " << tol;
      throw UnresolvedTimestamp(msg.str());
    }
    idx[static_cast<std::size_t>(a)] = best;
  }
  return idx;
}

inline PooledGrid build_pooled_grid(const std::vector<Individual>& individuals,
                                    double tol = 1e-9) {
  std::vector<double> all;
  for (const auto& ind : individuals) {
    validate_individual(ind, tol);
    for (Eigen::Index a = 0; a < ind.t.size(); ++a) all.push_back(ind.t[a]);
  }
  std::sort(all.begin(), all.end());
  std::vector<double> merged;
  for (double v : all) {
    if (merged.empty() || v - merged.back() > tol) merged.push_back(v);
  }
  PooledGrid grid;
  grid.tol = tol;
  grid.t.resize(static_cast<Eigen::Index>(merged.size()));
  for (std::size_t a = 0; a < merged.size(); ++a)
    grid.t[static_cast<Eigen::Index>(a)] = merged[a];
  grid.index_of.reserve(individuals.size());
  for (const auto& ind : individuals)
    grid.index_of.push_back(resolve_timestamps(grid.t, ind.t, tol));
  return grid;
}

struct Dataset {
  std::vector<Individual> individuals;

  std::size_t size() const { return individuals.size(); }
};

// Individual i's observations in pooled coordinates. No padded vector or
// matrix is ever materialized; downstream code gathers/scatters blocks
// through `idx` instead.
struct ExpandedObs {
  std::vector<Eigen::Index> idx;  // pooled position of each observation
  Eigen::VectorXd y;              // observed values, same order as idx
};

inline ExpandedObs expand(const Individual& ind, const PooledGrid& grid) {
  ExpandedObs e;
  e.idx = resolve_timestamps(grid.t, ind.t, grid.tol);
  e.y = ind.y;
  return e;
}

}  // namespace gpmix
