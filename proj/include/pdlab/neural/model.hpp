#pragma once

#include "pdlab/common/error.hpp"
#include "pdlab/common/rng.hpp"
#include "pdlab/neural/autograd.hpp"
#include "pdlab/neural/losses.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pdlab::nn {

struct ModelConfig {
  std::size_t vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 256;
  std::size_t max_seq_len = 512;
  std::size_t m_c = 50;
  int head_hidden = 0;  // 0 selects d_model
  double dropout = 0.0;

  int hidden() const { return head_hidden > 0 ? head_hidden : d_model; }

  /// Small encoder that trains on one CPU core in minutes.
  static ModelConfig desk(std::size_t vocab) {
    ModelConfig c;
    c.vocab_size = vocab;
    c.max_seq_len = 256;
    return c;
  }

  /// 12 layers, 768-wide, 512 positions. Valid, but far too large to train
  /// here.
  static ModelConfig paper(std::size_t vocab) {
    ModelConfig c;
    c.vocab_size = vocab;
    c.d_model = 768;
    c.n_layers = 12;
    c.n_heads = 12;
    c.ffn_dim = 3072;
    c.max_seq_len = 512;
    return c;
  }

  void validate() const {
    if (vocab_size < 5) throw ConfigError("vocab_size must cover the special tokens and at least one more");
    if (d_model <= 0 || n_layers < 0 || n_heads <= 0 || ffn_dim <= 0 || m_c == 0)
      throw ConfigError("model dimensions must be positive");
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    if (max_seq_len < 2) throw ConfigError("max_seq_len must be at least 2");
    if (dropout != 0.0) throw ConfigError("dropout is not supported; training is deterministic");
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},     {"n_layers", c.n_layers},
                     {"n_heads", c.n_heads},       {"ffn_dim", c.ffn_dim},     {"max_seq_len", c.max_seq_len},
                     {"m_c", c.m_c},               {"head_hidden", c.head_hidden}, {"dropout", c.dropout}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.d_model = j.value("d_model", d.d_model);
  c.n_layers = j.value("n_layers", d.n_layers);
  c.n_heads = j.value("n_heads", d.n_heads);
  c.ffn_dim = j.value("ffn_dim", d.ffn_dim);
  c.max_seq_len = j.value("max_seq_len", d.max_seq_len);
  c.m_c = j.value("m_c", d.m_c);
  c.head_hidden = j.value("head_hidden", d.head_hidden);
  c.dropout = j.value("dropout", d.dropout);
}

inline void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"cdp", w.cdp}, {"ddp", w.ddp}, {"mlm", w.mlm}};
}

inline void from_json(const nlohmann::json& j, LossWeights& w) {
  w.cdp = j.at("cdp").get<double>();
  w.ddp = j.at("ddp").get<double>();
  w.mlm = j.at("mlm").get<double>();
}

template <typename T>
struct NamedTensor {
  std::string name;
  Matrix<T> value;
};

/// Ordered parameter list. Names are stable and double as checkpoint keys;
/// head parameters carry the prefixes "mlm.", "cdp." and "ddp.".
template <typename T>
class ParameterSet {
 public:
  using Mat = Matrix<T>;

  int add(std::string name, Mat value) {
    index_[name] = static_cast<int>(items_.size());
    items_.push_back({std::move(name), std::move(value)});
    return static_cast<int>(items_.size() - 1);
  }
  std::size_t size() const { return items_.size(); }
  NamedTensor<T>& operator[](std::size_t i) { return items_[i]; }
  const NamedTensor<T>& operator[](std::size_t i) const { return items_[i]; }
  std::vector<NamedTensor<T>>& items() { return items_; }
  const std::vector<NamedTensor<T>>& items() const { return items_; }
  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }
  /// Zero matrices shaped like every parameter.
  std::vector<Mat> zeros_like() const {
    std::vector<Mat> out;
    for (const auto& p : items_) out.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    return out;
  }

 private:
  std::vector<NamedTensor<T>> items_;
  std::unordered_map<std::string, int> index_;
};

/// Inputs of the joint loss for one function. `ids` is the (possibly
/// corrupted) model input; `mlm_targets[k]` is the original id at
/// `mlm_positions[k]`.
struct LossInputs {
  std::vector<int> ids;
  std::vector<int> mlm_positions;
  std::vector<int> mlm_targets;
  std::vector<std::vector<int>> node_members;
  std::vector<std::pair<int, int>> gc;
  std::vector<std::pair<int, int>> gd;
  std::vector<std::uint8_t> ident_mask;
};

template <typename T>
struct LossBreakdown {
  Var joint;
  std::optional<T> cdp;  // empty when the term was skipped
  std::optional<T> ddp;
  std::optional<T> mlm;
  T total = 0;
};

/// Pre-norm transformer encoder with learned positions and the three
/// pre-training heads.
template <typename T>
class Model {
 public:
  using Mat = Matrix<T>;

  struct Layer {
    int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };

  /// Parameters registered on one tape.
  struct Bound {
    std::vector<Var> v;
    Var operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  };

  Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    const int d = config_.d_model, h = config_.hidden(), f = config_.ffn_dim;
    const auto v = static_cast<int>(config_.vocab_size);
    auto normal = [&](int r, int c, double sd) {
      Mat m(r, c);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal() * sd);
      return m;
    };
    auto zeros = [](int r, int c) { return Mat(Mat::Zero(r, c)); };
    auto ones = [](int r, int c) { return Mat(Mat::Ones(r, c)); };
    const double sd = 0.02;
    tok_emb_ = p_.add("embed.tokens", normal(v, d, sd));
    pos_emb_ = p_.add("embed.positions", normal(static_cast<int>(config_.max_seq_len), d, sd));
    for (int l = 0; l < config_.n_layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      Layer L{};
      L.ln1_g = p_.add(pre + "ln1.gain", ones(1, d));
      L.ln1_b = p_.add(pre + "ln1.bias", zeros(1, d));
      L.wq = p_.add(pre + "attn.q.weight", normal(d, d, sd));
      L.bq = p_.add(pre + "attn.q.bias", zeros(1, d));
      L.wk = p_.add(pre + "attn.k.weight", normal(d, d, sd));
      L.bk = p_.add(pre + "attn.k.bias", zeros(1, d));
      L.wv = p_.add(pre + "attn.v.weight", normal(d, d, sd));
      L.bv = p_.add(pre + "attn.v.bias", zeros(1, d));
      L.wo = p_.add(pre + "attn.out.weight", normal(d, d, sd));
      L.bo = p_.add(pre + "attn.out.bias", zeros(1, d));
      L.ln2_g = p_.add(pre + "ln2.gain", ones(1, d));
      L.ln2_b = p_.add(pre + "ln2.bias", zeros(1, d));
      L.w1 = p_.add(pre + "ffn.in.weight", normal(d, f, sd));
      L.b1 = p_.add(pre + "ffn.in.bias", zeros(1, f));
      L.w2 = p_.add(pre + "ffn.out.weight", normal(f, d, sd));
      L.b2 = p_.add(pre + "ffn.out.bias", zeros(1, d));
      layers_.push_back(L);
    }
    lnf_g_ = p_.add("final_norm.gain", ones(1, d));
    lnf_b_ = p_.add("final_norm.bias", zeros(1, d));
    mlm_w1_ = p_.add("mlm.hidden.weight", normal(d, d, sd));
    mlm_b1_ = p_.add("mlm.hidden.bias", zeros(1, d));
    mlm_w2_ = p_.add("mlm.out.weight", normal(d, v, sd));
    mlm_b2_ = p_.add("mlm.out.bias", zeros(1, v));
    const double bil = 1.0 / std::sqrt(static_cast<double>(h));
    cdp_w_ = p_.add("cdp.reduce.weight", normal(d, h, 1.0 / std::sqrt(static_cast<double>(d))));
    cdp_b_ = p_.add("cdp.reduce.bias", zeros(1, h));
    cdp_bil_ = p_.add("cdp.bilinear.weight", normal(h, h, bil));
    cdp_bias_ = p_.add("cdp.bilinear.bias", zeros(1, 1));
    ddp_w_ = p_.add("ddp.reduce.weight", normal(d, h, 1.0 / std::sqrt(static_cast<double>(d))));
    ddp_b_ = p_.add("ddp.reduce.bias", zeros(1, h));
    ddp_bil_ = p_.add("ddp.bilinear.weight", normal(h, h, bil));
    ddp_bias_ = p_.add("ddp.bilinear.bias", zeros(1, 1));
  }

  const ModelConfig& config() const { return config_; }
  ParameterSet<T>& params() { return p_; }
  const ParameterSet<T>& params() const { return p_; }

  /// Registers every parameter as a tape leaf. With `grads` (shaped like the
  /// parameters) gradients flow into it on backward.
  Bound bind(Tape<T>& tape, std::vector<Mat>* grads) const {
    Bound b;
    for (std::size_t i = 0; i < p_.size(); ++i)
      b.v.push_back(tape.parameter(p_[i].value, grads ? &(*grads)[i] : nullptr));
    return b;
  }

  /// Contextual embeddings, one row per input position.
  Var encode(Tape<T>& t, const Bound& b, const std::vector<int>& ids) const {
    if (ids.empty() || ids.size() > config_.max_seq_len)
      throw ShapeError("input length " + std::to_string(ids.size()) + " outside [1, " +
                       std::to_string(config_.max_seq_len) + "]");
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    Var x = t.add(t.gather_rows(b[tok_emb_], ids), t.gather_rows(b[pos_emb_], positions));
    const int heads = config_.n_heads;
    const int dh = config_.d_model / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    for (const Layer& L : layers_) {
      Var a = t.layer_norm(x, b[L.ln1_g], b[L.ln1_b]);
      Var q = t.affine(a, b[L.wq], b[L.bq]);
      Var k = t.affine(a, b[L.wk], b[L.bk]);
      Var v = t.affine(a, b[L.wv], b[L.bv]);
      std::vector<Var> outs;
      for (int h = 0; h < heads; ++h) {
        Var qh = t.slice_cols(q, h * dh, dh);
        Var kh = t.slice_cols(k, h * dh, dh);
        Var vh = t.slice_cols(v, h * dh, dh);
        Var att = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), scale));
        outs.push_back(t.matmul(att, vh));
      }
      Var merged = heads == 1 ? outs[0] : t.concat_cols(outs);
      x = t.add(x, t.affine(merged, b[L.wo], b[L.bo]));
      Var m = t.layer_norm(x, b[L.ln2_g], b[L.ln2_b]);
      Var ff = t.affine(t.gelu(t.affine(m, b[L.w1], b[L.b1])), b[L.w2], b[L.b2]);
      x = t.add(x, ff);
    }
    return t.layer_norm(x, b[lnf_g_], b[lnf_b_]);
  }

  /// Vocabulary logits at the given rows of `hidden`.
  Var mlm_logits(Tape<T>& t, const Bound& b, Var hidden, const std::vector<int>& rows) const {
    Var h = t.gather_rows(hidden, rows);
    Var z = t.gelu(t.affine(h, b[mlm_w1_], b[mlm_b1_]));
    return t.affine(z, b[mlm_w2_], b[mlm_b2_]);
  }

  /// Pre-sigmoid control scores between statement embeddings, each the mean
  /// of its member token rows.
  Var cdp_logits(Tape<T>& t, const Bound& b, Var hidden, const std::vector<std::vector<int>>& members) const {
    Var nodes = t.group_mean(hidden, members);
    Var r = t.relu(t.affine(nodes, b[cdp_w_], b[cdp_b_]));
    return bilinear(t, r, b[cdp_bil_], b[cdp_bias_]);
  }

  /// Pre-sigmoid data scores between the given token rows.
  Var ddp_logits(Tape<T>& t, const Bound& b, Var hidden, const std::vector<int>& rows) const {
    Var h = t.gather_rows(hidden, rows);
    Var r = t.relu(t.affine(h, b[ddp_w_], b[ddp_b_]));
    return bilinear(t, r, b[ddp_bil_], b[ddp_bias_]);
  }

  /// score(i, j) = r_i^T W r_j + c for every ordered pair of rows.
  static Var bilinear(Tape<T>& t, Var r, Var w, Var bias) {
    return t.add_scalar(t.matmul_nt(t.matmul(r, w), r), bias);
  }

  /// Joint objective for one function. Terms whose weight is zero or whose
  /// inputs are empty are left off the tape entirely.
  LossBreakdown<T> loss(Tape<T>& t, const Bound& b, const LossInputs& in, const LossWeights& w) const {
    Var hidden = encode(t, b, in.ids);
    std::vector<Var> terms;
    std::vector<T> weights;
    LossBreakdown<T> out;
    if (w.mlm > 0 && !in.mlm_positions.empty()) {
      Var l = t.softmax_cross_entropy(mlm_logits(t, b, hidden, in.mlm_positions), in.mlm_targets);
      out.mlm = t.scalar(l);
      terms.push_back(l);
      weights.push_back(static_cast<T>(w.mlm));
    }
    if (w.cdp > 0 && !in.node_members.empty()) {
      const auto n = static_cast<Eigen::Index>(in.node_members.size());
      Mat truth = Mat::Zero(n, n);
      for (auto [i, j] : in.gc) truth(i, j) = T(1);
      Var l = t.bce_with_logits(cdp_logits(t, b, hidden, in.node_members), truth, static_cast<T>(n * n));
      out.cdp = t.scalar(l);
      terms.push_back(l);
      weights.push_back(static_cast<T>(w.cdp));
    }
    std::vector<int> ident_rows;
    for (std::size_t i = 0; i < in.ident_mask.size() && i < in.ids.size(); ++i)
      if (in.ident_mask[i]) ident_rows.push_back(static_cast<int>(i));
    if (w.ddp > 0 && !ident_rows.empty()) {
      const auto m = static_cast<Eigen::Index>(ident_rows.size());
      std::vector<int> slot(in.ids.size(), -1);
      for (std::size_t k = 0; k < ident_rows.size(); ++k) slot[static_cast<std::size_t>(ident_rows[k])] = static_cast<int>(k);
      Mat truth = Mat::Zero(m, m);
      for (auto [x, y] : in.gd) {
        const int sx = slot[static_cast<std::size_t>(x)], sy = slot[static_cast<std::size_t>(y)];
        if (sx >= 0 && sy >= 0) truth(sx, sy) = T(1);
      }
      Var l = t.bce_with_logits(ddp_logits(t, b, hidden, ident_rows), truth, static_cast<T>(m * m));
      out.ddp = t.scalar(l);
      terms.push_back(l);
      weights.push_back(static_cast<T>(w.ddp));
    }
    if (terms.empty()) {
      out.joint = t.constant(Mat::Zero(1, 1));
    } else {
      out.joint = t.weighted_sum(terms, weights);
    }
    out.total = t.scalar(out.joint);
    return out;
  }

  // --- inference ------------------------------------------------------------

  Mat hidden_states(const std::vector<int>& ids) const {
    Tape<T> t;
    Bound b = bind(t, nullptr);
    return t.value(encode(t, b, ids));
  }

  struct Prediction {
    Mat control;  // node_count x node_count probabilities
    Mat data;     // token probabilities over rows 1..n-1 (row/col k is token k+1)
  };

  /// Probabilities from both dependency heads in one encoder pass. Data
  /// scores cover every non-[CLS] token pair.
  Prediction predict(const std::vector<int>& ids, const std::vector<std::vector<int>>& members) const {
    Tape<T> t;
    Bound b = bind(t, nullptr);
    Var hidden = encode(t, b, ids);
    Prediction p;
    auto sig = [](T x) { return Tape<T>::sigmoid(x); };
    if (!members.empty()) p.control = t.value(cdp_logits(t, b, hidden, members)).unaryExpr(sig);
    std::vector<int> rows;
    for (std::size_t i = 1; i < ids.size(); ++i) rows.push_back(static_cast<int>(i));
    if (!rows.empty()) p.data = t.value(ddp_logits(t, b, hidden, rows)).unaryExpr(sig);
    return p;
  }

  /// Indices of the head parameter groups, for ablation checks.
  std::vector<int> parameters_with_prefix(const std::string& prefix) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < p_.size(); ++i)
      if (p_[i].name.rfind(prefix, 0) == 0) out.push_back(static_cast<int>(i));
    return out;
  }

  int cdp_bilinear_index() const { return cdp_bil_; }
  int cdp_bias_index() const { return cdp_bias_; }
  int ddp_bilinear_index() const { return ddp_bil_; }
  int ddp_bias_index() const { return ddp_bias_; }

 private:
  ModelConfig config_;
  ParameterSet<T> p_;
  int tok_emb_ = 0, pos_emb_ = 0, lnf_g_ = 0, lnf_b_ = 0;
  std::vector<Layer> layers_;
  int mlm_w1_ = 0, mlm_b1_ = 0, mlm_w2_ = 0, mlm_b2_ = 0;
  int cdp_w_ = 0, cdp_b_ = 0, cdp_bil_ = 0, cdp_bias_ = 0;
  int ddp_w_ = 0, ddp_b_ = 0, ddp_bil_ = 0, ddp_bias_ = 0;
};

}  // namespace pdlab::nn
