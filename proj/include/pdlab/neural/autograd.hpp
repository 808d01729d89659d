#pragma once

#include "pdlab/common/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace pdlab::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Every op appends a node holding its value and a closure
/// that pushes the node's gradient to its inputs. Parameter leaves reference
/// external storage and flush their gradient into a caller-owned sink.
template <typename T>
class Tape {
 public:
  using Mat = Matrix<T>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value) { return push(std::move(value), false); }

  Var parameter(Mat&&, Mat*) = delete;
  Var parameter(const Mat& value, Mat* grad_sink) {
    Node n;
    n.ref = &value;
    n.sink = grad_sink;
    n.needs_grad = grad_sink != nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  const Mat& value(Var v) const {
    const Node& n = nodes_[idx(v)];
    return n.ref ? *n.ref : n.value;
  }

  T scalar(Var v) const { return value(v)(0, 0); }

  /// Gradient accumulated at `v` by the last backward pass (zero if none).
  Mat grad(Var v) const {
    const Node& n = nodes_[idx(v)];
    if (n.grad.size()) return n.grad;
    return Mat::Zero(value(v).rows(), value(v).cols());
  }

  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  /// Parameter sinks receive their accumulated gradient.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw ShapeError("backward expects a scalar loss");
    accumulate(loss, Mat::Constant(1, 1, T(1)));
    for (int i = idx(loss); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.grad.size()) continue;
      if (n.back) n.back();
      if (n.sink) *n.sink += n.grad;
    }
  }

  // --- linear algebra -------------------------------------------------------

  Var matmul(Var a, Var b) {
    check(value(a).cols() == value(b).rows(), "matmul");
    Var out = push(value(a) * value(b), any_grad(a, b));
    record(out, [this, a, b, out] {
      const Mat& g = gref(out);
      if (needs(a)) accumulate(a, g * value(b).transpose());
      if (needs(b)) accumulate(b, value(a).transpose() * g);
    });
    return out;
  }

  /// a * b^T
  Var matmul_nt(Var a, Var b) {
    check(value(a).cols() == value(b).cols(), "matmul_nt");
    Var out = push(value(a) * value(b).transpose(), any_grad(a, b));
    record(out, [this, a, b, out] {
      const Mat& g = gref(out);
      if (needs(a)) accumulate(a, g * value(b));
      if (needs(b)) accumulate(b, g.transpose() * value(a));
    });
    return out;
  }

  Var add(Var a, Var b) {
    check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
    Var out = push(value(a) + value(b), any_grad(a, b));
    record(out, [this, a, b, out] {
      if (needs(a)) accumulate(a, gref(out));
      if (needs(b)) accumulate(b, gref(out));
    });
    return out;
  }

  /// Adds the 1 x k row `bias` to every row of `a`.
  Var add_row(Var a, Var bias) {
    check(value(bias).rows() == 1 && value(bias).cols() == value(a).cols(), "add_row");
    Mat v = value(a);
    v.rowwise() += value(bias).row(0);
    Var out = push(std::move(v), any_grad(a, bias));
    record(out, [this, a, bias, out] {
      if (needs(a)) accumulate(a, gref(out));
      if (needs(bias)) accumulate(bias, gref(out).colwise().sum());
    });
    return out;
  }

  /// Adds the 1 x 1 value `s` to every entry of `a`.
  Var add_scalar(Var a, Var s) {
    check(value(s).size() == 1, "add_scalar");
    Var out = push(value(a).array() + value(s)(0, 0), any_grad(a, s));
    record(out, [this, a, s, out] {
      if (needs(a)) accumulate(a, gref(out));
      if (needs(s)) accumulate(s, Mat::Constant(1, 1, gref(out).sum()));
    });
    return out;
  }

  /// x W + b
  Var affine(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

  Var scale(Var a, T s) {
    Var out = push(value(a) * s, needs(a));
    record(out, [this, a, s, out] { accumulate(a, gref(out) * s); });
    return out;
  }

  // --- pointwise ------------------------------------------------------------

  Var relu(Var a) {
    Var out = push(value(a).cwiseMax(T(0)), needs(a));
    record(out, [this, a, out] {
      accumulate(a, (value(a).array() > T(0)).select(gref(out).array(), T(0)).matrix());
    });
    return out;
  }

  /// Exact GELU, x * Phi(x).
  Var gelu(Var a) {
    const T inv_sqrt2 = T(1) / std::sqrt(T(2));
    Var out = push(value(a).unaryExpr([&](T x) { return T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2)); }),
                   needs(a));
    record(out, [this, a, out, inv_sqrt2] {
      const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
      Mat d = value(a).unaryExpr([&](T x) {
        return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
      });
      accumulate(a, gref(out).cwiseProduct(d));
    });
    return out;
  }

  // --- normalization and attention helpers ----------------------------------

  /// Row-wise layer normalization with gain and bias rows.
  Var layer_norm(Var x, Var gain, Var bias, T eps = T(1e-5)) {
    const Mat& xv = value(x);
    const auto d = xv.cols();
    check(value(gain).cols() == d && value(bias).cols() == d, "layer_norm");
    Mat xhat(xv.rows(), d);
    std::vector<T> inv_std(static_cast<std::size_t>(xv.rows()));
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      const T mu = xv.row(r).mean();
      const T var = (xv.row(r).array() - mu).square().mean();
      inv_std[static_cast<std::size_t>(r)] = T(1) / std::sqrt(var + eps);
      xhat.row(r) = (xv.row(r).array() - mu) * inv_std[static_cast<std::size_t>(r)];
    }
    Mat y = xhat.array().rowwise() * value(gain).row(0).array();
    y.rowwise() += value(bias).row(0);
    Var out = push(std::move(y), needs(x) || needs(gain) || needs(bias));
    record(out, [this, x, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
      const Mat& g = gref(out);
      if (needs(gain)) accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
      if (needs(bias)) accumulate(bias, g.colwise().sum());
      if (!needs(x)) return;
      Mat dxhat = g.array().rowwise() * value(gain).row(0).array();
      Mat dx(g.rows(), g.cols());
      const T n = static_cast<T>(g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const T mean_d = dxhat.row(r).sum() / n;
        const T mean_dx = dxhat.row(r).dot(xhat.row(r)) / n;
        dx.row(r) = (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx) *
                    inv_std[static_cast<std::size_t>(r)];
      }
      accumulate(x, dx);
    });
    return out;
  }

  Var softmax_rows(Var a) {
    Mat y = value(a);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      y.row(r).array() -= y.row(r).maxCoeff();
      y.row(r) = y.row(r).array().exp();
      y.row(r) /= y.row(r).sum();
    }
    Var out = push(std::move(y), needs(a));
    record(out, [this, a, out] {
      const Mat& y = value(out);
      const Mat& g = gref(out);
      Mat d = y.cwiseProduct(g);
      Eigen::Matrix<T, Eigen::Dynamic, 1> s = d.rowwise().sum();
      d -= (y.array().colwise() * s.array()).matrix();
      accumulate(a, d);
    });
    return out;
  }

  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    check(start >= 0 && start + count <= value(a).cols(), "slice_cols");
    Var out = push(value(a).middleCols(start, count), needs(a));
    record(out, [this, a, start, count, out] {
      Mat d = Mat::Zero(value(a).rows(), value(a).cols());
      d.middleCols(start, count) = gref(out);
      accumulate(a, d);
    });
    return out;
  }

  Var concat_cols(const std::vector<Var>& parts) {
    check(!parts.empty(), "concat_cols");
    const Eigen::Index rows = value(parts[0]).rows();
    Eigen::Index cols = 0;
    bool grad = false;
    for (Var p : parts) {
      check(value(p).rows() == rows, "concat_cols");
      cols += value(p).cols();
      grad = grad || needs(p);
    }
    Mat v(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      v.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    Var out = push(std::move(v), grad);
    record(out, [this, parts, out] {
      Eigen::Index at = 0;
      for (Var p : parts) {
        const Eigen::Index c = value(p).cols();
        if (needs(p)) accumulate(p, gref(out).middleCols(at, c));
        at += c;
      }
    });
    return out;
  }

  /// Row gather; repeated indices accumulate on the way back.
  Var gather_rows(Var table, const std::vector<int>& rows) {
    const Mat& t = value(table);
    Mat v(static_cast<Eigen::Index>(rows.size()), t.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      check(rows[i] >= 0 && rows[i] < t.rows(), "gather_rows index");
      v.row(static_cast<Eigen::Index>(i)) = t.row(rows[i]);
    }
    Var out = push(std::move(v), needs(table));
    record(out, [this, table, rows, out] {
      Mat d = Mat::Zero(value(table).rows(), value(table).cols());
      for (std::size_t i = 0; i < rows.size(); ++i) d.row(rows[i]) += gref(out).row(static_cast<Eigen::Index>(i));
      accumulate(table, d);
    });
    return out;
  }

  /// Row k of the result is the mean of the rows of `a` listed in groups[k].
  Var group_mean(Var a, const std::vector<std::vector<int>>& groups) {
    const Mat& av = value(a);
    Mat v = Mat::Zero(static_cast<Eigen::Index>(groups.size()), av.cols());
    for (std::size_t k = 0; k < groups.size(); ++k) {
      if (groups[k].empty()) throw EmptyNode(k);
      for (int r : groups[k]) {
        check(r >= 0 && r < av.rows(), "group_mean index");
        v.row(static_cast<Eigen::Index>(k)) += av.row(r);
      }
      v.row(static_cast<Eigen::Index>(k)) /= static_cast<T>(groups[k].size());
    }
    Var out = push(std::move(v), needs(a));
    record(out, [this, a, groups, out] {
      Mat d = Mat::Zero(value(a).rows(), value(a).cols());
      for (std::size_t k = 0; k < groups.size(); ++k)
        for (int r : groups[k])
          d.row(r) += gref(out).row(static_cast<Eigen::Index>(k)) / static_cast<T>(groups[k].size());
      accumulate(a, d);
    });
    return out;
  }

  // --- losses ---------------------------------------------------------------

  /// Binary cross-entropy of sigmoid(logits) against the 0/1 matrix
  /// `targets`, summed over every entry and divided by `normalizer`.
  Var bce_with_logits(Var logits, const Mat& targets, T normalizer) {
    const Mat& s = value(logits);
    check(s.rows() == targets.rows() && s.cols() == targets.cols(), "bce_with_logits");
    const T eps = T(kProbClamp);
    Mat p = s.unaryExpr([](T x) { return sigmoid(x); });
    T total = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const T pc = std::clamp(p.data()[i], eps, T(1) - eps);
      total -= targets.data()[i] > T(0.5) ? std::log(pc) : std::log(T(1) - pc);
    }
    Var out = push(Mat::Constant(1, 1, total / normalizer), needs(logits));
    record(out, [this, logits, targets, normalizer, eps, p = std::move(p), out] {
      const T g = gref(out)(0, 0) / normalizer;
      Mat d(p.rows(), p.cols());
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const T pi = p.data()[i];
        const bool clamped = pi < eps || pi > T(1) - eps;
        d.data()[i] = clamped ? T(0) : (pi - targets.data()[i]) * g;
      }
      accumulate(logits, d);
    });
    return out;
  }

  /// Mean over rows of -log softmax(logits)[row, target].
  Var softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
    const Mat& z = value(logits);
    check(z.rows() == static_cast<Eigen::Index>(targets.size()) && z.rows() > 0, "softmax_cross_entropy");
    const T eps = T(kProbClamp);
    Mat p(z.rows(), z.cols());
    T total = 0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      p.row(r) = (z.row(r).array() - z.row(r).maxCoeff()).exp();
      p.row(r) /= p.row(r).sum();
      total -= std::log(std::clamp(p(r, targets[static_cast<std::size_t>(r)]), eps, T(1) - eps));
    }
    const T m = static_cast<T>(z.rows());
    Var out = push(Mat::Constant(1, 1, total / m), needs(logits));
    record(out, [this, logits, targets, eps, m, p = std::move(p), out] {
      const T g = gref(out)(0, 0) / m;
      Mat d = Mat::Zero(p.rows(), p.cols());
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const int t = targets[static_cast<std::size_t>(r)];
        const T pt = p(r, t);
        if (pt < eps || pt > T(1) - eps) continue;
        d.row(r) = p.row(r) * g;
        d(r, t) -= g;
      }
      accumulate(logits, d);
    });
    return out;
  }

  /// sum_k weights[k] * terms[k] over 1x1 inputs.
  Var weighted_sum(const std::vector<Var>& terms, const std::vector<T>& weights) {
    check(terms.size() == weights.size(), "weighted_sum");
    T total = 0;
    bool grad = false;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      total += weights[k] * scalar(terms[k]);
      grad = grad || needs(terms[k]);
    }
    Var out = push(Mat::Constant(1, 1, total), grad);
    record(out, [this, terms, weights, out] {
      for (std::size_t k = 0; k < terms.size(); ++k)
        if (needs(terms[k]) && weights[k] != T(0))
          accumulate(terms[k], Mat::Constant(1, 1, gref(out)(0, 0) * weights[k]));
    });
    return out;
  }

  static T sigmoid(T x) {
    return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
  }

 private:
  struct Node {
    Mat value;
    const Mat* ref = nullptr;
    Mat grad;
    Mat* sink = nullptr;
    std::function<void()> back;
    bool needs_grad = false;
  };

  static std::size_t idx(Var v) { return static_cast<std::size_t>(v.id); }
  static void check(bool ok, const char* op) {
    if (!ok) throw ShapeError(std::string("shape mismatch in ") + op);
  }

  Var push(Mat value, bool needs_grad) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
  }

  template <typename F>
  void record(Var out, F&& f) {
    if (nodes_[idx(out)].needs_grad) nodes_[idx(out)].back = std::forward<F>(f);
  }

  bool needs(Var v) const { return nodes_[idx(v)].needs_grad; }
  bool any_grad(Var a, Var b) const { return needs(a) || needs(b); }
  const Mat& gref(Var v) const { return nodes_[idx(v)].grad; }

  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[idx(v)];
    if (!n.needs_grad) return;
    if (!n.grad.size())
      n.grad = g;
    else
      n.grad += g;
  }

  std::vector<Node> nodes_;
};

}  // namespace pdlab::nn
