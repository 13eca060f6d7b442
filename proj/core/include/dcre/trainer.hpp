#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dcre/cluster.hpp"
#include "dcre/config.hpp"
#include "dcre/corpus.hpp"
#include "dcre/model.hpp"

namespace dcre {

/// One term of the scaled loss.
struct LabeledSentence {
  const TokenizedSentence* sentence = nullptr;
  int label = -1;
  /// Clustering confidence q_ij for noisy terms; ignored for valid ones.
  double q = 1.0;
  /// Dropout mask applied to h; empty means inference mode.
  std::vector<double> mask;
};

struct LossResult {
  double loss = 0.0;
  ModelGradients grads;
};

/// J = −Σ_valid log p(y_i|x_i) − λ Σ_noisy q_ij log p(y_j|x_i), with gradients
/// for every parameter. Noisy terms need q in (0, 1].
LossResult scaled_loss(std::span<const LabeledSentence> valid, std::span<const LabeledSentence> noisy,
                       const ModelParams& params, double lambda);

struct TrainLog {
  /// Mean loss per bag of each minibatch, measured before its update.
  std::vector<double> batch_losses;
  std::vector<double> epoch_losses;
  /// selections[e][b] = index of the sentence trained as valid for bag b in epoch e.
  std::vector<std::vector<int>> selections;
};

using EpochCallback = std::function<void(int epoch, const ModelParams& params)>;

/// Best-scored (φ = 0) training at lr_pretrain for epochs_pretrain epochs.
ModelParams pretrain(const std::vector<Bag>& bags, const ModelParams& init, const TrainConfig& config,
                     TrainLog* log = nullptr);

/// Final phase at lr_model for epochs_final epochs. Per bag the best-scored
/// sentence among those not relabeled/removed trains on the bag label;
/// relabeled sentences train on their new label weighted by λ·q; removed and
/// ignored sentences contribute nothing. `on_epoch` runs after every epoch.
ModelParams train_final(const std::vector<Bag>& bags, const std::vector<RelabelRecord>& records,
                        const ModelParams& init, const TrainConfig& config, TrainLog* log = nullptr,
                        const EpochCallback& on_epoch = {});

/// Dropout stream shared by every trainer so equal configurations draw equal masks.
Rng dropout_stream(std::uint64_t seed, int epoch, std::size_t bag, std::size_t sentence);
/// Bag visiting order for one epoch.
std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t num_bags);

}  // namespace dcre
