#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

#include "gpmix/errors.hpp"

namespace gpmix {

// f(x) with gradient written to *grad when grad != nullptr.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box unbounded(Eigen::Index n) {
    Box b;
    b.lo = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    b.hi = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    return b;
  }

  Eigen::VectorXd clip(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }
};

enum class OptimStatus { Converged, MaxIter, LineSearchFailed };

struct OptimOptions {
  int max_iter = 50;
  double grad_tol = 1e-5;   // infinity norm of the projected gradient
  int memory = 10;          // stored curvature pairs
  double armijo_c = 1e-4;
  int max_backtracks = 50;
};

struct MaximizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  OptimStatus status = OptimStatus::MaxIter;
  int iterations = 0;
  double grad_norm = 0.0;
};

/* Bounded quasi-Newton ascent: limited-memory BFGS directions with active
 * bound components dropped, backtracking Armijo line search on the projected
 * path. A NaN/Inf objective along the search is treated as -inf (the step is
 * rejected); at the starting point it throws NonFiniteObjective. The result
 * is never worse than the starting point.                                   */
inline MaximizeResult maximize(const Objective& f, const Eigen::VectorXd& x0, const Box& bounds,
                               const OptimOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  if (bounds.lo.size() != n || bounds.hi.size() != n)
    throw LengthMismatch("maximize: bounds dimension mismatch");
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(bounds.lo[j] <= bounds.hi[j]))
      throw std::invalid_argument("maximize: lower bound above upper bound");

  const auto finite_or_neg_inf = [](double v) {
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  Eigen::VectorXd x = bounds.clip(x0);
  Eigen::VectorXd g(n);
  double fx = f(x, &g);
  if (!std::isfinite(fx)) throw NonFiniteObjective("objective non-finite at starting point");

  MaximizeResult best;
  best.x = x;
  best.value = fx;

  // Zeroes gradient components that push outside an active bound.
  const auto projected_grad = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& gg) {
    Eigen::VectorXd pg = gg;
    const double eps = 1e-12;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (xx[j] <= bounds.lo[j] + eps && gg[j] < 0.0) pg[j] = 0.0;
      if (xx[j] >= bounds.hi[j] - eps && gg[j] > 0.0) pg[j] = 0.0;
    }
    return pg;
  };

  // Curvature pairs in minimization space: s = x+ - x, q = -(g+ - g).
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;

  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    best.iterations = iter;
    Eigen::VectorXd pg = projected_grad(x, g);
    best.grad_norm = pg.lpNorm<Eigen::Infinity>();
    if (best.grad_norm <= opt.grad_tol) {
      best.status = OptimStatus::Converged;
      return best;
    }

    // Two-loop recursion on the minimization gradient -g.
    Eigen::VectorXd q = -pg;
    std::vector<double> alpha(mem.size());
    for (std::size_t j = mem.size(); j-- > 0;) {
      const auto& [s, yq] = mem[j];
      const double rho = 1.0 / yq.dot(s);
      alpha[j] = rho * s.dot(q);
      q -= alpha[j] * yq;
    }
    if (!mem.empty()) {
      const auto& [s, yq] = mem.back();
      q *= s.dot(yq) / yq.dot(yq);
    }
    for (std::size_t j = 0; j < mem.size(); ++j) {
      const auto& [s, yq] = mem[j];
      const double rho = 1.0 / yq.dot(s);
      const double beta = rho * yq.dot(q);
      q += s * (alpha[j] - beta);
    }
    Eigen::VectorXd u = -q;  // ascent direction
    for (Eigen::Index j = 0; j < n; ++j)
      if (pg[j] == 0.0) u[j] = 0.0;
    if (u.dot(pg) <= 0.0) u = pg;  // fall back to steepest ascent

    // Backtracking Armijo search along the projected path.
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new, g_new(n);
    double f_new = 0.0;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, step *= 0.5) {
      x_new = bounds.clip(x + step * u);
      const Eigen::VectorXd dx = x_new - x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = finite_or_neg_inf(f(x_new, &g_new));
      if (f_new >= fx + opt.armijo_c * g.dot(dx) && f_new > -std::numeric_limits<double>::infinity()) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      best.status = OptimStatus::LineSearchFailed;
      return best;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yq = -(g_new - g);
    const double sy = s.dot(yq);
    if (sy > 1e-10 * s.norm() * yq.norm()) {
      mem.emplace_back(s, yq);
      while (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }

    x = x_new;
    g = g_new;
    fx = f_new;
    if (fx > best.value) {
      best.value = fx;
      best.x = x;
    }
  }
  best.status = OptimStatus::MaxIter;
  best.grad_norm = projected_grad(x, g).lpNorm<Eigen::Infinity>();
  return best;
}

}  // namespace gpmix
