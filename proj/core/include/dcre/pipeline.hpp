#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcre/cluster.hpp"
#include "dcre/config.hpp"
#include "dcre/corpus.hpp"
#include "dcre/detector.hpp"
#include "dcre/eval.hpp"
#include "dcre/model.hpp"
#include "dcre/trainer.hpp"

namespace dcre {

struct Dataset {
  Vocabulary vocab;
  std::vector<Bag> train_bags;
  std::vector<Bag> test_bags;
  std::vector<std::string> skipped_ids;
  /// Sentence id -> true relation index, for records that carry one.
  std::unordered_map<std::string, int> truth;
};

/// Builds the vocabulary from the training records (ground truth stripped),
/// encodes both splits and groups them into bags.
Dataset prepare_dataset(const std::vector<SentenceRecord>& train, const std::vector<SentenceRecord>& test,
                        const ModelConfig& config);

EncoderShape encoder_shape(const ModelConfig& config, const Vocabulary& vocab);
ModelParams initial_params(const Dataset& data, const ExperimentConfig& config);

/// One partition per train bag. NA bags are not inspected: their sentences
/// come back as ignored with no valid entry.
std::vector<BagPartition> detect_noise(const std::vector<Bag>& bags, const ModelParams& params, double phi,
                                       int na_index);

struct ClusteringResult {
  std::vector<int> retained;  // cluster j <-> relation retained[j]
  std::vector<ClusterState> runs;
  std::vector<std::string> noisy_ids;
  std::vector<int> noisy_original;
  std::vector<Matrix> noisy_q;  // per run, one row per noisy sentence
  std::vector<RelabelRecord> votes;
  /// First run's pool, for visualisation.
  Matrix pool_projected;
  std::vector<int> pool_labels;
  std::vector<int> pool_cluster;
};

/// Clusters the training pool (every retained relation, NA included, with
/// frozen encoder representations) R times and votes a label for every
/// sentence the detector flagged.
ClusteringResult cluster_noisy(const std::vector<Bag>& bags, const std::vector<BagPartition>& partitions,
                               const ModelParams& params, const ExperimentConfig& config, int na_index);

/// One record per training sentence: the valid sentence is kept, noisy ones
/// carry their vote, everything else is ignored.
std::vector<RelabelRecord> build_relabel_records(const std::vector<Bag>& bags,
                                                 const std::vector<BagPartition>& partitions,
                                                 const std::vector<RelabelRecord>& votes);

struct PipelineResult {
  ModelParams final_params;
  std::vector<BagPartition> partitions;
  ClusteringResult clustering;
  std::vector<RelabelRecord> records;
  TrainLog final_log;
  PRCurve curve;
  std::optional<RelabelReport> report;  // when ground truth exists
};

/// Detection, clustering, relabeling, final training and evaluation, all
/// starting from the same pretrained parameters.
PipelineResult run_after_pretrain(const Dataset& data, const ModelParams& pretrained,
                                  const ExperimentConfig& config);

struct SweepRow {
  double phi = 0.0;
  double auc = 0.0;
  std::optional<RelabelReport> report;
};

/// Shares one pretraining run across every phi.
std::vector<SweepRow> phi_sweep(const Dataset& data, const std::vector<double>& phis,
                                const ExperimentConfig& config);

}  // namespace dcre
