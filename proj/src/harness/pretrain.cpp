#include "pdlab/harness/pretrain.hpp"

#include <sstream>

namespace pdlab::harness {

TrainRunConfig TrainRunConfig::desk(std::size_t vocab) {
  TrainRunConfig c;
  c.model = nn::ModelConfig::desk(vocab);
  c.batch_size = 1;
  return c;
}

TrainRunConfig TrainRunConfig::paper(std::size_t vocab) {
  TrainRunConfig c;
  c.model = nn::ModelConfig::paper(vocab);
  c.batch_size = 128;
  c.epochs = 10;
  c.lr = 1e-4;
  return c;
}

void TrainRunConfig::validate() const {
  model.validate();
  weights.validate();
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  if (mask_rate < 0 || mask_rate > 1) throw ConfigError("mask rate must lie in [0, 1]");
  if (clip_norm < 0) throw ConfigError("clip norm must be nonnegative");
}

void to_json(nlohmann::json& j, const TrainRunConfig& c) {
  j = nlohmann::json{{"model", c.model},
                     {"weights", c.weights},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"lr", c.lr},
                     {"horizon", c.horizon},
                     {"seed", c.seed},
                     {"checkpoint_every", c.checkpoint_every},
                     {"mask_rate", c.mask_rate},
                     {"clip_norm", c.clip_norm},
                     {"warmup", c.warmup}};
}

void from_json(const nlohmann::json& j, TrainRunConfig& c) {
  TrainRunConfig d;
  c.model = j.contains("model") ? j.at("model").get<nn::ModelConfig>() : d.model;
  c.weights = j.contains("weights") ? j.at("weights").get<nn::LossWeights>() : d.weights;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.lr = j.value("lr", d.lr);
  c.horizon = j.value("horizon", d.horizon);
  c.seed = j.value("seed", d.seed);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.mask_rate = j.value("mask_rate", d.mask_rate);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.warmup = j.value("warmup", d.warmup);
}

nn::LossWeights weights_for_objectives(const std::string& list, const nn::LossWeights& base) {
  nn::LossWeights w{0, 0, 0};
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    for (char& ch : item) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (item == "mlm") w.mlm = base.mlm;
    else if (item == "cdp") w.cdp = base.cdp;
    else if (item == "ddp") w.ddp = base.ddp;
    else if (!item.empty()) throw ConfigError("unknown objective '" + item + "'");
  }
  w.validate();
  return w;
}

nn::LossInputs make_loss_inputs(const TrainingExample& ex, const nn::MlmCorruption& corruption) {
  nn::LossInputs in;
  in.ids = corruption.ids;
  in.mlm_positions = corruption.positions;
  in.mlm_targets = corruption.targets;
  in.node_members = ex.node_members;
  in.gc = ex.gc;
  in.gd = ex.gd;
  in.ident_mask = ex.ident_mask;
  return in;
}

std::uint64_t epoch_shuffle_seed(std::uint64_t seed, std::uint64_t epoch) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (epoch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(epoch_shuffle_seed(seed, epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

}  // namespace pdlab::harness
