#pragma once

#include "pdlab/common/error.hpp"
#include "pdlab/neural/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pdlab::nn {

/// Learning rate lr0 * (1 - step / horizon)^2, floored at zero. A zero
/// horizon keeps the rate constant.
struct PolyDecay {
  double lr0 = 1e-4;
  std::uint64_t horizon = 0;

  double at(std::uint64_t step) const {
    if (horizon == 0) return lr0;
    const double frac = std::max(0.0, 1.0 - static_cast<double>(step) / static_cast<double>(horizon));
    return lr0 * frac * frac;
  }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  using Mat = Matrix<T>;

  Adam() = default;
  Adam(const ParameterSet<T>& params, AdamConfig config = {}) : config_(config) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }

  /// One update with learning rate `lr`. Gradients are used as given, so
  /// averaging over a batch is the caller's job.
  void step(ParameterSet<T>& params, const std::vector<Mat>& grads, double lr) {
    if (grads.size() != params.size() || m_.size() != params.size())
      throw ShapeError("adam: gradient count does not match parameters");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(config_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Mat& g = grads[i];
      m_[i] = b1 * m_[i] + (T(1) - b1) * g;
      v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
      auto denom = ((v_[i] * inv_bc2).array().sqrt() + eps);
      params[i].value.array() -= step_size * m_[i].array() / denom;
    }
  }

  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  const AdamConfig& config() const { return config_; }
  std::vector<Mat>& first_moments() { return m_; }
  std::vector<Mat>& second_moments() { return v_; }
  const std::vector<Mat>& first_moments() const { return m_; }
  const std::vector<Mat>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Mat> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace pdlab::nn
