#pragma once

#include <vector>

#include "dcre/config.hpp"
#include "dcre/corpus.hpp"
#include "dcre/model.hpp"
#include "dcre/trainer.hpp"

namespace dcre {

/// Standalone best-scored-sentence trainer: per bag, pick the sentence with
/// the largest h·l_label and train cross-entropy on it. Written independently
/// of the detector and scaled-loss code so the two can be compared.
ModelParams train_best_scored(const std::vector<Bag>& bags, const ModelParams& init, double lr,
                              int epochs, const TrainConfig& config, TrainLog* log = nullptr);

}  // namespace dcre
