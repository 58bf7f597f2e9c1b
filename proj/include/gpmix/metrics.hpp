#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "gpmix/errors.hpp"
#include "gpmix/prediction.hpp"

namespace gpmix {

// Adjusted Rand index from the pair-counting contingency form; labels may
// come from any ordered alphabet. Degenerate denominator (both partitions
// trivial) falls back to 1 for identical partitions and 0 otherwise.
template <typename Label>
double ari(const std::vector<Label>& a, const std::vector<Label>& b) {
  if (a.size() != b.size()) throw LengthMismatch("ari: partitions differ in length");
  const std::size_t M = a.size();
  if (M < 2) return 1.0;

  std::map<Label, int> ca, cb;
  for (const auto& l : a) ca.emplace(l, static_cast<int>(ca.size()));
  for (const auto& l : b) cb.emplace(l, static_cast<int>(cb.size()));
  const std::size_t R = ca.size(), C = cb.size();
  std::vector<long long> table(R * C, 0), rows(R, 0), cols(C, 0);
  for (std::size_t u = 0; u < M; ++u) {
    const int i = ca[a[u]], j = cb[b[u]];
    ++table[static_cast<std::size_t>(i) * C + static_cast<std::size_t>(j)];
    ++rows[static_cast<std::size_t>(i)];
    ++cols[static_cast<std::size_t>(j)];
  }
  const auto choose2 = [](long long n) { return n * (n - 1) / 2; };
  double index = 0.0, row_sum = 0.0, col_sum = 0.0;
  for (long long n : table) index += static_cast<double>(choose2(n));
  for (long long n : rows) row_sum += static_cast<double>(choose2(n));
  for (long long n : cols) col_sum += static_cast<double>(choose2(n));
  const double total = static_cast<double>(choose2(static_cast<long long>(M)));
  const double expected = row_sum * col_sum / total;
  const double maximum = 0.5 * (row_sum + col_sum);
  if (maximum == expected) {
    bool identical = R == C;
    if (identical)
      for (std::size_t i = 0; i < R && identical; ++i)
        for (std::size_t j = 0; j < C; ++j) {
          const long long n = table[i * C + j];
          if (n != 0 && (n != rows[i] || n != cols[j])) {
            identical = false;
            break;
          }
        }
    return identical ? 1.0 : 0.0;
  }
  return (index - expected) / (maximum - expected);
}

inline double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw LengthMismatch("mse: vectors differ in length");
  if (pred.size() == 0) throw LengthMismatch("mse: empty vectors");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

// Weight-averaged share of truth points inside each cluster's pointwise 95%
// band: 100 * mean_u sum_k w_k 1{y_u in [mean_k +- 1.96 sd_k](t_u)}.
inline double wcic95(const MixturePrediction& pred, const Eigen::VectorXd& t_truth,
                     const Eigen::VectorXd& y_truth, double tol = 1e-9) {
  if (t_truth.size() != y_truth.size())
    throw LengthMismatch("wcic95: truth vectors differ in length");
  if (t_truth.size() == 0) throw LengthMismatch("wcic95: empty truth");

  const int K = static_cast<int>(pred.weights.size());
  std::vector<Eigen::MatrixXd> bands;
  for (int k = 0; k < K; ++k) bands.push_back(pred.interval95(k));

  double score = 0.0;
  for (Eigen::Index u = 0; u < t_truth.size(); ++u) {
    Eigen::Index j = -1;
    for (Eigen::Index q = 0; q < pred.t.size(); ++q)
      if (std::abs(pred.t[q] - t_truth[u]) <= tol) {
        j = q;
        break;
      }
    if (j < 0) throw UnresolvedTimestamp("wcic95: truth timestamp not among target points");
    for (int k = 0; k < K; ++k) {
      const auto& band = bands[static_cast<std::size_t>(k)];
      if (y_truth[u] >= band(j, 0) && y_truth[u] <= band(j, 1)) score += pred.weights[k];
    }
  }
  return 100.0 * score / static_cast<double>(t_truth.size());
}

}  // namespace gpmix
