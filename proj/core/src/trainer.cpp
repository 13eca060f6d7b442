#include "dcre/trainer.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include "dcre/detector.hpp"
#include "dcre/error.hpp"
#include "dcre/parallel.hpp"

namespace dcre {

Rng dropout_stream(std::uint64_t seed, int epoch, std::size_t bag, std::size_t sentence) {
  return Rng(seed).split("dropout").split(static_cast<std::uint64_t>(epoch)).split(bag).split(sentence);
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t num_bags) {
  std::vector<std::size_t> order(num_bags);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).split("shuffle").split(static_cast<std::uint64_t>(epoch));
  rng.shuffle(order);
  return order;
}

LossResult scaled_loss(std::span<const LabeledSentence> valid, std::span<const LabeledSentence> noisy,
                       const ModelParams& params, double lambda) {
  if (lambda < 0.0) throw ContractViolation("scaled_loss: lambda must be >= 0");
  for (const auto& t : noisy) {
    if (!(t.q > 0.0 && t.q <= 1.0)) {
      throw ContractViolation("scaled_loss: noisy weight q=" + std::to_string(t.q) + " outside (0, 1]");
    }
  }
  const std::size_t total = valid.size() + noisy.size();
  std::vector<double> losses(total, 0.0);
  std::vector<ModelGradients> grads(total);
  parallel_for(total, [&](std::size_t t) {
    const bool is_valid = t < valid.size();
    const LabeledSentence& term = is_valid ? valid[t] : noisy[t - valid.size()];
    if (term.sentence == nullptr) throw ContractViolation("scaled_loss: missing sentence");
    const double weight = is_valid ? 1.0 : lambda * term.q;
    grads[t] = ModelGradients::zeros_like(params);
    if (weight == 0.0) return;
    const SentenceRep rep = encode(*term.sentence, params.encoder, term.mask);
    std::vector<double> grad_h;
    losses[t] = softmax_cross_entropy(params, rep.h, term.label, weight, grads[t], grad_h);
    encode_backward(grad_h, rep, *term.sentence, params.encoder, grads[t].encoder);
  });
  LossResult out;
  out.grads = ModelGradients::zeros_like(params);
  for (std::size_t t = 0; t < total; ++t) {
    out.loss += losses[t];
    out.grads.merge(grads[t]);
  }
  return out;
}

namespace {

struct NoisyTerm {
  std::size_t sentence;
  int label;
  double q;
};

struct BagPlan {
  std::vector<std::size_t> candidates;  // may serve as the valid sentence
  std::vector<NoisyTerm> relabeled;
};

std::vector<BagPlan> plan_bags(const std::vector<Bag>& bags, const std::vector<RelabelRecord>& records) {
  std::unordered_map<std::string, const RelabelRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  std::size_t matched = 0;
  std::vector<BagPlan> plans(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    for (std::size_t s = 0; s < bags[b].size(); ++s) {
      auto it = by_id.find(bags[b].sentences[s].id);
      const RelabelRecord* rec = it == by_id.end() ? nullptr : it->second;
      if (rec != nullptr) ++matched;
      if (rec != nullptr && rec->outcome == RelabelOutcome::Relabeled) {
        plans[b].relabeled.push_back({s, rec->new_label, rec->confidence});
      } else if (rec == nullptr || rec->outcome != RelabelOutcome::Removed) {
        plans[b].candidates.push_back(s);
      }
    }
    if (plans[b].candidates.empty()) {
      throw DataError("bag " + bags[b].key.head_id + "/" + bags[b].key.tail_id +
                      " has no sentence left to train as valid");
    }
  }
  if (matched != records.size()) {
    for (const auto& r : records) {
      bool found = false;
      for (const auto& bag : bags) {
        for (const auto& s : bag.sentences) found = found || s.id == r.id;
      }
      if (!found) throw DataError("relabel record references unknown sentence id '" + r.id + "'");
    }
  }
  return plans;
}

std::size_t select_valid(const Bag& bag, const BagPlan& plan, const ModelParams& params) {
  if (plan.candidates.size() == 1) return plan.candidates.front();
  Matrix reps(plan.candidates.size(), static_cast<std::size_t>(params.encoder.rep_dim()));
  for (std::size_t c = 0; c < plan.candidates.size(); ++c) {
    const SentenceRep rep = encode(bag.sentences[plan.candidates[c]], params.encoder);
    std::copy(rep.h.begin(), rep.h.end(), reps.row(c).begin());
  }
  const auto scores = coupling_scores(reps, params.relation.row(static_cast<std::size_t>(bag.label)));
  return plan.candidates[static_cast<std::size_t>(partition_bag(scores, 0.0).valid)];
}

ModelParams run_training(const std::vector<Bag>& bags, const std::vector<BagPlan>& plans,
                         const ModelParams& init, double lr, int epochs, const TrainConfig& cfg,
                         TrainLog* log, const EpochCallback& on_epoch) {
  if (bags.empty()) throw ConfigError("training corpus has no bags");
  ModelParams params = init;
  const auto rep_dim = static_cast<std::size_t>(params.encoder.rep_dim());
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto order = epoch_order(cfg.seed, epoch, bags.size());
    std::vector<int> selected(bags.size(), -1);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::size_t nb = end - start;
      std::vector<std::size_t> chosen(nb);
      parallel_for(nb, [&](std::size_t i) {
        const std::size_t b = order[start + i];
        chosen[i] = select_valid(bags[b], plans[b], params);
      });
      std::vector<LabeledSentence> valid;
      std::vector<LabeledSentence> noisy;
      valid.reserve(nb);
      for (std::size_t i = 0; i < nb; ++i) {
        const std::size_t b = order[start + i];
        const Bag& bag = bags[b];
        selected[b] = static_cast<int>(chosen[i]);
        Rng vr = dropout_stream(cfg.seed, epoch, b, chosen[i]);
        valid.push_back({&bag.sentences[chosen[i]], bag.label, 1.0, dropout_mask(rep_dim, cfg.dropout, vr)});
        for (const auto& term : plans[b].relabeled) {
          Rng nr = dropout_stream(cfg.seed, epoch, b, term.sentence);
          noisy.push_back({&bag.sentences[term.sentence], term.label, term.q,
                           dropout_mask(rep_dim, cfg.dropout, nr)});
        }
      }
      const LossResult res = scaled_loss(valid, noisy, params, cfg.lambda);
      const double batch_loss = res.loss / static_cast<double>(nb);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      if (log != nullptr) log->batch_losses.push_back(batch_loss);
      epoch_total += res.loss;
      apply_sgd(params, res.grads, lr / static_cast<double>(nb));
    }
    if (log != nullptr) {
      log->epoch_losses.push_back(epoch_total / static_cast<double>(bags.size()));
      log->selections.push_back(std::move(selected));
    }
    if (on_epoch) on_epoch(epoch + 1, params);
  }
  return params;
}

}  // namespace

ModelParams pretrain(const std::vector<Bag>& bags, const ModelParams& init, const TrainConfig& config,
                     TrainLog* log) {
  const auto plans = plan_bags(bags, {});
  return run_training(bags, plans, init, config.lr_pretrain, config.epochs_pretrain, config, log, {});
}

ModelParams train_final(const std::vector<Bag>& bags, const std::vector<RelabelRecord>& records,
                        const ModelParams& init, const TrainConfig& config, TrainLog* log,
                        const EpochCallback& on_epoch) {
  const auto plans = plan_bags(bags, records);
  return run_training(bags, plans, init, config.lr_model, config.epochs_final, config, log, on_epoch);
}

}  // namespace dcre
