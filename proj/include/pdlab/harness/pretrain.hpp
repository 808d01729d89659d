#pragma once

#include "pdlab/common/error.hpp"
#include "pdlab/common/rng.hpp"
#include "pdlab/dataset/example.hpp"
#include "pdlab/neural/checkpoint.hpp"
#include "pdlab/neural/mlm.hpp"
#include "pdlab/neural/model.hpp"
#include "pdlab/neural/optim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace pdlab::harness {

struct TrainRunConfig {
  nn::ModelConfig model;
  nn::LossWeights weights;
  std::size_t batch_size = 8;
  int epochs = 8;
  double lr = 1e-3;
  std::uint64_t horizon = 0;  // optimizer steps; 0 means epochs * batches per epoch
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // optimizer steps between checkpoints; 0 disables
  double mask_rate = 0.15;
  double clip_norm = 0;        // global gradient norm cap; 0 disables
  std::uint64_t warmup = 0;    // steps of linear ramp before the decay

  /// Two layers, 64 wide, one example per step: trains on one core in minutes.
  static TrainRunConfig desk(std::size_t vocab);
  /// 12x768 encoder, batch 128, 10 epochs, lr 1e-4.
  static TrainRunConfig paper(std::size_t vocab);

  void validate() const;
  friend bool operator==(const TrainRunConfig&, const TrainRunConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainRunConfig& c);
void from_json(const nlohmann::json& j, TrainRunConfig& c);

/// Parses "mlm,cdp,ddp"-style lists; objectives not listed get weight 0 and
/// listed ones keep their weight from `base`.
nn::LossWeights weights_for_objectives(const std::string& list, const nn::LossWeights& base = {});

/// Model input for one example after MLM corruption.
nn::LossInputs make_loss_inputs(const TrainingExample& ex, const nn::MlmCorruption& corruption);

/// Seed of the shuffle for one epoch, independent of every other draw.
std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::uint64_t epoch);

/// Training order of `n` examples in `epoch`.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

struct StepStats {
  std::uint64_t step = 0;  // optimizer steps taken so far
  std::uint64_t epoch = 0;
  double lr = 0;
  double joint = 0;  // batch means over the examples that had each term
  double cdp = 0;
  double ddp = 0;
  double mlm = 0;
  std::size_t examples = 0;
};

template <typename T>
class Trainer {
 public:
  using Mat = nn::Matrix<T>;

  explicit Trainer(TrainRunConfig config)
      : config_(validated(std::move(config))),
        model_(config_.model, config_.seed),
        adam_(model_.params()),
        mask_rng_(config_.seed ^ 0x6d6c6d5f6d61736bULL) {}

  const TrainRunConfig& config() const { return config_; }
  nn::Model<T>& model() { return model_; }
  const nn::Model<T>& model() const { return model_; }
  const nn::Adam<T>& optimizer() const { return adam_; }
  std::uint64_t steps() const { return adam_.steps(); }
  std::uint64_t epoch() const { return epoch_; }
  bool finished() const { return epoch_ >= static_cast<std::uint64_t>(config_.epochs); }

  /// Schedule horizon for a training set of `n` examples.
  std::uint64_t horizon_for(std::size_t n) const {
    if (config_.horizon) return config_.horizon;
    const std::uint64_t per_epoch = (n + config_.batch_size - 1) / config_.batch_size;
    return per_epoch * static_cast<std::uint64_t>(config_.epochs);
  }

  /// Gradient of the batch mean of the joint loss, then one Adam update.
  StepStats step(const std::vector<const TrainingExample*>& batch, std::uint64_t horizon) {
    if (batch.empty()) throw ConfigError("empty batch");
    std::vector<Mat> grads = model_.params().zeros_like();
    StepStats s;
    std::size_t n_cdp = 0, n_ddp = 0, n_mlm = 0;
    for (const TrainingExample* ex : batch) {
      nn::MlmCorruption c = nn::mlm_corrupt(ex->tokens.ids, config_.model.vocab_size, mask_rng_, config_.mask_rate);
      nn::LossInputs in = make_loss_inputs(*ex, c);
      nn::Tape<T> tape;
      auto bound = model_.bind(tape, &grads);
      auto out = model_.loss(tape, bound, in, config_.weights);
      tape.backward(out.joint);
      s.joint += static_cast<double>(out.total);
      if (out.cdp) s.cdp += static_cast<double>(*out.cdp), ++n_cdp;
      if (out.ddp) s.ddp += static_cast<double>(*out.ddp), ++n_ddp;
      if (out.mlm) s.mlm += static_cast<double>(*out.mlm), ++n_mlm;
    }
    const T inv = T(1) / static_cast<T>(batch.size());
    for (Mat& g : grads) g *= inv;
    if (config_.clip_norm > 0) {
      double sq = 0;
      for (const Mat& g : grads) sq += static_cast<double>(g.squaredNorm());
      const double norm = std::sqrt(sq);
      if (norm > config_.clip_norm)
        for (Mat& g : grads) g *= static_cast<T>(config_.clip_norm / norm);
    }
    nn::PolyDecay schedule{config_.lr, horizon};
    const std::uint64_t t = adam_.steps() + 1;
    s.lr = schedule.at(t);
    if (t <= config_.warmup) s.lr *= static_cast<double>(t) / static_cast<double>(config_.warmup);
    adam_.step(model_.params(), grads, s.lr);
    s.step = adam_.steps();
    s.epoch = epoch_;
    s.examples = batch.size();
    s.joint /= static_cast<double>(batch.size());
    if (n_cdp) s.cdp /= static_cast<double>(n_cdp);
    if (n_ddp) s.ddp /= static_cast<double>(n_ddp);
    if (n_mlm) s.mlm /= static_cast<double>(n_mlm);
    return s;
  }

  /// Runs the remaining epochs. `on_step` sees every update; `on_checkpoint`
  /// is called at the configured cadence and after the last step.
  void train(const std::vector<TrainingExample>& data, const std::function<void(const StepStats&)>& on_step = {},
             const std::function<void(const Trainer&)>& on_checkpoint = {}) {
    if (data.empty()) throw DataError("training set is empty");
    if (data_size_ && data_size_ != data.size())
      throw CheckpointError("resumed run expects " + std::to_string(data_size_) + " training examples");
    data_size_ = data.size();
    const std::uint64_t horizon = horizon_for(data.size());
    while (!finished()) {
      const auto order = epoch_order(data.size(), config_.seed, epoch_);
      for (std::size_t start = batch_in_epoch_ * config_.batch_size; start < order.size();
           start += config_.batch_size) {
        std::vector<const TrainingExample*> batch;
        for (std::size_t k = start; k < std::min(order.size(), start + config_.batch_size); ++k)
          batch.push_back(&data[order[k]]);
        StepStats s = step(batch, horizon);
        ++batch_in_epoch_;
        if (batch_in_epoch_ * config_.batch_size >= order.size()) {
          ++epoch_;
          batch_in_epoch_ = 0;
        }
        if (on_step) on_step(s);
        if (on_checkpoint && config_.checkpoint_every && s.step % config_.checkpoint_every == 0 && !finished())
          on_checkpoint(*this);
        if (batch_in_epoch_ == 0) break;
      }
    }
    if (on_checkpoint) on_checkpoint(*this);
  }

  /// Parameters, optimizer moments and loop position; enough to resume
  /// bit-identically.
  nn::CheckpointData checkpoint() const {
    nn::CheckpointData d;
    d.meta = {{"format", "pdlab-checkpoint"},
              {"scalar", sizeof(T) == 4 ? "float32" : "float64"},
              {"model", config_.model},
              {"run", config_},
              {"state",
               {{"step", adam_.steps()},
                {"epoch", epoch_},
                {"batch_in_epoch", batch_in_epoch_},
                {"train_examples", data_size_},
                {"mask_rng", mask_rng_.state()}}},
              {"adam", {{"beta1", adam_.config().beta1}, {"beta2", adam_.config().beta2}, {"eps", adam_.config().eps}}}};
    const auto& p = model_.params();
    for (std::size_t i = 0; i < p.size(); ++i) d.arrays.push_back(nn::store_matrix("param/" + p[i].name, p[i].value));
    for (std::size_t i = 0; i < p.size(); ++i)
      d.arrays.push_back(nn::store_matrix("adam.m/" + p[i].name, adam_.first_moments()[i]));
    for (std::size_t i = 0; i < p.size(); ++i)
      d.arrays.push_back(nn::store_matrix("adam.v/" + p[i].name, adam_.second_moments()[i]));
    return d;
  }

  static Trainer resume(const nn::CheckpointData& d) {
    Trainer t(d.meta.at("run").get<TrainRunConfig>());
    load_parameters(d, t.model_);
    const auto& p = t.model_.params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      t.adam_.first_moments()[i] = array_for(d, "adam.m/" + p[i].name, p[i].value);
      t.adam_.second_moments()[i] = array_for(d, "adam.v/" + p[i].name, p[i].value);
    }
    const auto& st = d.meta.at("state");
    t.adam_.set_steps(st.at("step").get<std::uint64_t>());
    t.epoch_ = st.at("epoch").get<std::uint64_t>();
    t.batch_in_epoch_ = st.at("batch_in_epoch").get<std::size_t>();
    t.data_size_ = st.at("train_examples").get<std::size_t>();
    t.mask_rng_.set_state(st.at("mask_rng").get<std::string>());
    return t;
  }

  /// Overwrites every parameter of `model` from "param/<name>" arrays.
  static void load_parameters(const nn::CheckpointData& d, nn::Model<T>& model) {
    for (auto& p : model.params().items()) p.value = array_for(d, "param/" + p.name, p.value);
  }

 private:
  static TrainRunConfig validated(TrainRunConfig c) {
    c.validate();
    return c;
  }

  static Mat array_for(const nn::CheckpointData& d, const std::string& name, const Mat& like) {
    const nn::StoredArray* a = d.find(name);
    if (!a) throw CheckpointError("checkpoint lacks array '" + name + "'");
    Mat m = nn::load_matrix<T>(*a);
    if (m.rows() != like.rows() || m.cols() != like.cols())
      throw CheckpointError("array '" + name + "' has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
    return m;
  }

  TrainRunConfig config_;
  nn::Model<T> model_;
  nn::Adam<T> adam_;
  Rng mask_rng_;
  std::uint64_t epoch_ = 0;
  std::size_t batch_in_epoch_ = 0;
  std::size_t data_size_ = 0;
};

/// Model with the configuration and parameters stored in a checkpoint.
template <typename T>
nn::Model<T> load_model(const nn::CheckpointData& d) {
  nn::Model<T> model(d.meta.at("model").get<nn::ModelConfig>(), 0);
  Trainer<T>::load_parameters(d, model);
  return model;
}

}  // namespace pdlab::harness
