#pragma once

#include "pdlab/common/error.hpp"
#include "pdlab/neural/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace pdlab::nn {

/// Relative weights of the three pre-training objectives in the joint loss.
struct LossWeights {
  double cdp = 5.0;
  double ddp = 20.0;
  double mlm = 1.0;

  void validate() const {
    if (cdp < 0 || ddp < 0 || mlm < 0) throw ConfigError("loss weights must be nonnegative");
    if (cdp == 0 && ddp == 0 && mlm == 0) throw ConfigError("at least one loss weight must be positive");
  }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

template <typename T>
T clamp_probability(T p) {
  const T eps = T(kProbClamp);
  return std::clamp(p, eps, T(1) - eps);
}

template <typename T>
T binary_cross_entropy(T p, bool positive) {
  const T pc = clamp_probability(p);
  return positive ? -std::log(pc) : -std::log(T(1) - pc);
}

/// Mean binary cross-entropy over all node_count^2 ordered node pairs of
/// `probs`, positives taken from `pairs`.
template <typename T>
T cdp_loss(const Matrix<T>& probs, const std::vector<std::pair<int, int>>& pairs, std::size_t node_count) {
  const auto n = static_cast<Eigen::Index>(node_count);
  if (n == 0 || probs.rows() < n || probs.cols() < n) throw ShapeError("cdp_loss: probability matrix too small");
  Matrix<T> truth = Matrix<T>::Zero(n, n);
  for (auto [i, j] : pairs) truth(i, j) = T(1);
  T total = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) total += binary_cross_entropy(probs(i, j), truth(i, j) > T(0.5));
  return total / static_cast<T>(n * n);
}

/// Binary cross-entropy over pairs whose endpoints are both identifiers,
/// divided by the squared identifier count. Empty when the mask selects
/// nothing, in which case the term is skipped.
template <typename T>
std::optional<T> ddp_loss(const Matrix<T>& probs, const std::vector<std::pair<int, int>>& pairs,
                          const std::vector<std::uint8_t>& ident_mask) {
  const auto n = static_cast<Eigen::Index>(ident_mask.size());
  if (probs.rows() < n || probs.cols() < n) throw ShapeError("ddp_loss: probability matrix too small");
  std::size_t m = 0;
  for (auto b : ident_mask) m += b ? 1 : 0;
  if (m == 0) return std::nullopt;
  Matrix<T> truth = Matrix<T>::Zero(n, n);
  for (auto [i, j] : pairs) truth(i, j) = T(1);
  T total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!ident_mask[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < n; ++j)
      if (ident_mask[static_cast<std::size_t>(j)]) total += binary_cross_entropy(probs(i, j), truth(i, j) > T(0.5));
  }
  return total / static_cast<T>(m * m);
}

/// Mean negative log-likelihood of the true token, one row of vocabulary
/// probabilities per masked position. Empty when nothing was masked.
template <typename T>
std::optional<T> mlm_loss(const Matrix<T>& probs, const std::vector<int>& targets) {
  if (targets.empty()) return std::nullopt;
  if (probs.rows() != static_cast<Eigen::Index>(targets.size())) throw ShapeError("mlm_loss: row count");
  T total = 0;
  for (std::size_t r = 0; r < targets.size(); ++r)
    total -= std::log(clamp_probability(probs(static_cast<Eigen::Index>(r), targets[r])));
  return total / static_cast<T>(targets.size());
}

/// Weighted sum of the component losses; skipped terms contribute nothing.
template <typename T>
T joint_loss(std::optional<T> cdp, std::optional<T> ddp, std::optional<T> mlm, const LossWeights& w) {
  T total = 0;
  if (cdp) total += static_cast<T>(w.cdp) * *cdp;
  if (ddp) total += static_cast<T>(w.ddp) * *ddp;
  if (mlm) total += static_cast<T>(w.mlm) * *mlm;
  return total;
}

}  // namespace pdlab::nn
