#include "dcre/pipeline.hpp"

#include <algorithm>

#include "dcre/error.hpp"
#include "dcre/parallel.hpp"

namespace dcre {

Dataset prepare_dataset(const std::vector<SentenceRecord>& train, const std::vector<SentenceRecord>& test,
                        const ModelConfig& config) {
  Dataset data;
  const auto train_view = training_view(train);
  data.vocab = build_vocab(train_view, config.min_count);
  auto enc_train = encode_corpus(train_view, data.vocab, config.max_len, config.max_dist);
  auto enc_test = encode_corpus(test, data.vocab, config.max_len, config.max_dist);
  data.skipped_ids = enc_train.skipped_ids;
  data.skipped_ids.insert(data.skipped_ids.end(), enc_test.skipped_ids.begin(), enc_test.skipped_ids.end());
  data.train_bags = group_bags(enc_train.sentences, BagMode::Train);
  data.test_bags = group_bags(enc_test.sentences, BagMode::Test);
  for (const auto& r : train) {
    if (r.true_relation) data.truth.emplace(r.id, data.vocab.relations.index_or_na(*r.true_relation));
  }
  return data;
}

EncoderShape encoder_shape(const ModelConfig& config, const Vocabulary& vocab) {
  EncoderShape s;
  s.vocab_size = static_cast<int>(vocab.words.size());
  s.word_dim = config.word_dim;
  s.position_dim = config.position_dim;
  s.window = config.window;
  s.filters = config.filters;
  s.max_dist = config.max_dist;
  return s;
}

ModelParams initial_params(const Dataset& data, const ExperimentConfig& config) {
  Rng rng = Rng(config.train.seed).split("init");
  ModelParams p = init_model(encoder_shape(config.model, data.vocab), data.vocab.relations.k(), rng);
  if (!config.model.pretrained_embeddings.empty()) {
    load_pretrained_embeddings(config.model.pretrained_embeddings, data.vocab.words, p.encoder);
  }
  return p;
}

namespace {

Matrix encode_rows(const std::vector<const TokenizedSentence*>& sentences, const ModelParams& params) {
  Matrix out(sentences.size(), static_cast<std::size_t>(params.encoder.rep_dim()));
  parallel_for(sentences.size(), [&](std::size_t i) {
    const SentenceRep rep = encode(*sentences[i], params.encoder);
    std::copy(rep.h.begin(), rep.h.end(), out.row(i).begin());
  });
  return out;
}

}  // namespace

std::vector<BagPartition> detect_noise(const std::vector<Bag>& bags, const ModelParams& params, double phi,
                                       int na_index) {
  if (!(phi >= 0.0 && phi < 1.0)) throw ConfigError("phi must lie in [0, 1)");
  std::vector<BagPartition> out(bags.size());
  parallel_for(bags.size(), [&](std::size_t b) {
    const Bag& bag = bags[b];
    if (bag.label == na_index) {
      for (std::size_t s = 0; s < bag.size(); ++s) out[b].ignored.push_back(static_cast<int>(s));
      return;
    }
    std::vector<const TokenizedSentence*> ptrs;
    for (const auto& s : bag.sentences) ptrs.push_back(&s);
    const Matrix reps = encode_rows(ptrs, params);
    const auto scores = coupling_scores(reps, params.relation.row(static_cast<std::size_t>(bag.label)));
    out[b] = partition_bag(scores, phi);
  });
  return out;
}

ClusteringResult cluster_noisy(const std::vector<Bag>& bags, const std::vector<BagPartition>& partitions,
                               const ModelParams& params, const ExperimentConfig& config, int na_index) {
  if (partitions.size() != bags.size()) throw ContractViolation("cluster_noisy: one partition per bag expected");
  ClusteringResult res;
  std::vector<const TokenizedSentence*> all;
  std::vector<int> labels;
  std::vector<const TokenizedSentence*> noisy;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    for (const auto& s : bags[b].sentences) {
      all.push_back(&s);
      labels.push_back(bags[b].label);
    }
    for (int i : partitions[b].noisy) {
      noisy.push_back(&bags[b].sentences[static_cast<std::size_t>(i)]);
      res.noisy_ids.push_back(bags[b].sentences[static_cast<std::size_t>(i)].id);
      res.noisy_original.push_back(bags[b].label);
    }
  }
  if (noisy.empty()) return res;

  const std::size_t k = params.num_relations();
  res.retained = retained_relations(labels, k, config.cluster.min_relation_count);
  if (res.retained.size() < 2) {
    throw ConfigError("clustering needs at least two relations with " +
                      std::to_string(config.cluster.min_relation_count) + " or more training sentences");
  }
  std::vector<int> cluster_of(k, -1);
  for (std::size_t j = 0; j < res.retained.size(); ++j) cluster_of[static_cast<std::size_t>(res.retained[j])] = static_cast<int>(j);
  std::vector<int> group(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) group[i] = cluster_of[static_cast<std::size_t>(labels[i])];
  const Matrix all_reps = encode_rows(all, params);
  const Matrix noisy_reps = encode_rows(noisy, params);
  const int nc = static_cast<int>(res.retained.size());
  const int runs = config.cluster.runs;
  res.runs.resize(static_cast<std::size_t>(runs));
  res.noisy_q.resize(static_cast<std::size_t>(runs));
  const Rng base = Rng(config.train.seed).split("cluster");
  for (int r = 0; r < runs; ++r) {
    Rng run_rng = base.split(static_cast<std::uint64_t>(r));
    Rng sample_rng = run_rng.split("resample");
    const auto pool = resample(group, nc, config.cluster.c_min, config.cluster.c_max, sample_rng);
    Matrix reps(pool.size(), all_reps.cols());
    std::vector<int> seeds(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      std::copy(all_reps.row(pool[i]).begin(), all_reps.row(pool[i]).end(), reps.row(i).begin());
      seeds[i] = group[pool[i]];
    }
    Rng train_rng = run_rng.split("train");
    ClusterState state = run_clustering(reps, seeds, params.relation, params.relation_bias, nc, config.cluster,
                                        config.train.lr_cluster, train_rng);
    res.noisy_q[static_cast<std::size_t>(r)] =
        soft_assign(project_relation_space(noisy_reps, state.relation, state.bias), state.centers);
    if (r == 0) {
      res.pool_projected = project_relation_space(reps, state.relation, state.bias);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        res.pool_labels.push_back(labels[pool[i]]);
        const auto row = state.q.row(i);
        res.pool_cluster.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
      }
    }
    res.runs[static_cast<std::size_t>(r)] = std::move(state);
  }
  res.votes = vote_labels(res.noisy_q, res.retained, res.noisy_ids, res.noisy_original, na_index);
  return res;
}

std::vector<RelabelRecord> build_relabel_records(const std::vector<Bag>& bags,
                                                 const std::vector<BagPartition>& partitions,
                                                 const std::vector<RelabelRecord>& votes) {
  std::unordered_map<std::string, const RelabelRecord*> by_id;
  for (const auto& v : votes) by_id.emplace(v.id, &v);
  std::vector<RelabelRecord> out;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto& part = partitions.at(b);
    std::vector<bool> noisy(bags[b].size(), false);
    for (int i : part.noisy) noisy[static_cast<std::size_t>(i)] = true;
    for (std::size_t s = 0; s < bags[b].size(); ++s) {
      const auto& sent = bags[b].sentences[s];
      if (noisy[s]) {
        auto it = by_id.find(sent.id);
        if (it == by_id.end()) throw ContractViolation("no vote for noisy sentence " + sent.id);
        out.push_back(*it->second);
        continue;
      }
      RelabelRecord rec;
      rec.id = sent.id;
      rec.original = bags[b].label;
      rec.outcome = static_cast<int>(s) == part.valid ? RelabelOutcome::Kept : RelabelOutcome::Ignored;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

PipelineResult run_after_pretrain(const Dataset& data, const ModelParams& pretrained,
                                  const ExperimentConfig& config) {
  const int na = data.vocab.relations.na_index();
  PipelineResult res;
  res.partitions = detect_noise(data.train_bags, pretrained, config.train.phi, na);
  res.clustering = cluster_noisy(data.train_bags, res.partitions, pretrained, config, na);
  res.records = build_relabel_records(data.train_bags, res.partitions, res.clustering.votes);
  res.final_params = train_final(data.train_bags, res.records, pretrained, config.train, &res.final_log);
  res.curve = evaluate(data.test_bags, res.final_params, na);
  if (!data.truth.empty()) {
    res.report = relabel_metrics(res.records, data.truth, res.clustering.retained, data.vocab.relations);
  }
  return res;
}

std::vector<SweepRow> phi_sweep(const Dataset& data, const std::vector<double>& phis,
                                const ExperimentConfig& config) {
  if (phis.size() < 2) throw ConfigError("phi sweep needs at least two values");
  const ModelParams pretrained = pretrain(data.train_bags, initial_params(data, config), config.train);
  std::vector<SweepRow> rows;
  for (double phi : phis) {
    ExperimentConfig c = config;
    c.train.phi = phi;
    const auto res = run_after_pretrain(data, pretrained, c);
    rows.push_back({phi, res.curve.auc, res.report});
  }
  return rows;
}

}  // namespace dcre
