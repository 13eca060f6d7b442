#include "dcre/baseline.hpp"

#include <cmath>

#include "dcre/error.hpp"

namespace dcre {

namespace {

std::size_t best_scored(const Bag& bag, const ModelParams& params) {
  if (bag.size() == 1) return 0;
  const auto l = params.relation.row(static_cast<std::size_t>(bag.label));
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t s = 0; s < bag.size(); ++s) {
    const SentenceRep rep = encode(bag.sentences[s], params.encoder);
    double score = 0.0;
    for (std::size_t i = 0; i < rep.h.size(); ++i) score += rep.h[i] * l[i];
    if (s == 0 || score > best_score) {
      best = s;
      best_score = score;
    }
  }
  return best;
}

}  // namespace

ModelParams train_best_scored(const std::vector<Bag>& bags, const ModelParams& init, double lr,
                              int epochs, const TrainConfig& config, TrainLog* log) {
  if (bags.empty()) throw ConfigError("training corpus has no bags");
  ModelParams params = init;
  const auto rep_dim = static_cast<std::size_t>(params.encoder.rep_dim());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto order = epoch_order(config.seed, epoch, bags.size());
    std::vector<int> selected(bags.size(), -1);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      ModelGradients total = ModelGradients::zeros_like(params);
      double loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t b = order[i];
        const Bag& bag = bags[b];
        const std::size_t s = best_scored(bag, params);
        selected[b] = static_cast<int>(s);
        Rng rng = dropout_stream(config.seed, epoch, b, s);
        const auto mask = dropout_mask(rep_dim, config.dropout, rng);
        const SentenceRep rep = encode(bag.sentences[s], params.encoder, mask);
        ModelGradients g = ModelGradients::zeros_like(params);
        std::vector<double> grad_h;
        loss += softmax_cross_entropy(params, rep.h, bag.label, 1.0, g, grad_h);
        encode_backward(grad_h, rep, bag.sentences[s], params.encoder, g.encoder);
        total.merge(g);
      }
      const double nb = static_cast<double>(end - start);
      if (!std::isfinite(loss)) throw NumericError("baseline training diverged");
      if (log != nullptr) log->batch_losses.push_back(loss / nb);
      epoch_total += loss;
      apply_sgd(params, total, lr / nb);
    }
    if (log != nullptr) {
      log->epoch_losses.push_back(epoch_total / static_cast<double>(bags.size()));
      log->selections.push_back(std::move(selected));
    }
  }
  return params;
}

}  // namespace dcre
