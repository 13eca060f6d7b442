#include "dcre/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcre/error.hpp"
#include "dcre/io.hpp"
#include "dcre/parallel.hpp"
#include "json.hpp"

namespace dcre {

std::vector<double> predict_bag(std::span<const TokenizedSentence> sentences, const ModelParams& params) {
  if (sentences.empty()) throw ContractViolation("predict_bag: empty bag");
  std::vector<double> best(params.num_relations(), 0.0);
  for (const auto& s : sentences) {
    const SentenceRep rep = encode(s, params.encoder);
    const auto p = softmax(logits(params, rep.h));
    for (std::size_t r = 0; r < p.size(); ++r) best[r] = std::max(best[r], p[r]);
  }
  return best;
}

double PRCurve::precision_at(std::size_t n) const {
  if (points.empty() || n == 0) return 0.0;
  return points[std::min(n, points.size()) - 1].precision;
}

PRCurve pr_curve(const std::vector<BagPrediction>& predictions, const std::set<Fact>& gold, int na_index) {
  std::size_t total_gold = 0;
  for (const auto& f : gold) total_gold += std::get<2>(f) != na_index ? 1 : 0;
  if (total_gold == 0) throw DataError("pr_curve: no positive gold facts, recall is undefined");

  struct Item {
    double score;
    std::size_t bag;
    int relation;
  };
  std::vector<Item> items;
  for (std::size_t b = 0; b < predictions.size(); ++b) {
    for (std::size_t r = 0; r < predictions[b].scores.size(); ++r) {
      if (static_cast<int>(r) == na_index) continue;
      items.push_back({predictions[b].scores[r], b, static_cast<int>(r)});
    }
  }
  std::sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& pa = predictions[a.bag];
    const auto& pb = predictions[b.bag];
    return std::tie(pa.head_id, pa.tail_id, a.relation) < std::tie(pb.head_id, pb.tail_id, b.relation);
  });

  PRCurve curve;
  curve.total_gold = total_gold;
  curve.points.reserve(items.size());
  std::size_t correct = 0;
  double prev_recall = 0.0;
  double prev_precision = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& pred = predictions[items[i].bag];
    if (gold.count(Fact{pred.head_id, pred.tail_id, items[i].relation}) != 0) ++correct;
    PRPoint pt;
    pt.precision = static_cast<double>(correct) / static_cast<double>(i + 1);
    pt.recall = static_cast<double>(correct) / static_cast<double>(total_gold);
    pt.score = items[i].score;
    if (i == 0) prev_precision = pt.precision;
    curve.auc += (pt.recall - prev_recall) * (pt.precision + prev_precision) / 2.0;
    prev_recall = pt.recall;
    prev_precision = pt.precision;
    curve.points.push_back(pt);
  }
  return curve;
}

PRCurve evaluate(const std::vector<Bag>& test_bags, const ModelParams& params, int na_index) {
  std::vector<BagPrediction> preds(test_bags.size());
  parallel_for(test_bags.size(), [&](std::size_t b) {
    preds[b].head_id = test_bags[b].key.head_id;
    preds[b].tail_id = test_bags[b].key.tail_id;
    preds[b].scores = predict_bag(test_bags[b].sentences, params);
  });
  std::set<Fact> gold;
  for (const auto& bag : test_bags) {
    for (int g : bag.gold) {
      if (g != na_index) gold.emplace(bag.key.head_id, bag.key.tail_id, g);
    }
  }
  return pr_curve(preds, gold, na_index);
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

RelabelReport relabel_metrics(const std::vector<RelabelRecord>& records,
                              const std::unordered_map<std::string, int>& truth,
                              const std::vector<int>& retained, const RelationVocab& relations) {
  const std::size_t k = relations.k();
  const int na = relations.na_index();
  std::vector<bool> is_retained(k, false);
  for (int r : retained) is_retained.at(static_cast<std::size_t>(r)) = true;

  RelabelReport rep;
  rep.relation_names = relations.names();
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t relabel_targets = 0;
  for (const auto& rec : records) {
    auto it = truth.find(rec.id);
    if (it == truth.end()) throw DataError("relabel_metrics: no ground truth for sentence '" + rec.id + "'");
    const int t = it->second;
    const bool noisy_truth = t != rec.original;
    ++rep.sentences;
    if (noisy_truth) {
      ++rep.truly_noisy;
      if (t != na && is_retained[static_cast<std::size_t>(t)]) ++relabel_targets;
    }
    if (!rec.noisy) continue;
    ++rep.detected_noisy;
    if (noisy_truth) ++rep.detected_truly_noisy;
    int assigned = rec.original;
    switch (rec.outcome) {
      case RelabelOutcome::Relabeled:
        assigned = rec.new_label;
        ++rep.relabeled;
        if (rec.new_label == t) ++rep.relabeled_correct;
        break;
      case RelabelOutcome::Removed:
        assigned = na;
        ++rep.removed;
        if (t == na || !is_retained[static_cast<std::size_t>(t)]) ++rep.removed_correct;
        break;
      case RelabelOutcome::Kept:
        ++rep.kept;
        break;
      case RelabelOutcome::Ignored:
        break;
    }
    ++rep.confusion.at(static_cast<std::size_t>(t)).at(static_cast<std::size_t>(assigned));
  }
  rep.detection_precision = ratio(rep.detected_truly_noisy, rep.detected_noisy);
  if (rep.truly_noisy == 0) {
    rep.recall_vacuous = true;
    rep.detection_recall = 1.0;
  } else {
    rep.detection_recall = ratio(rep.detected_truly_noisy, rep.truly_noisy);
  }
  rep.relabel_precision = ratio(rep.relabeled_correct, rep.relabeled);
  rep.relabel_recall = ratio(rep.relabeled_correct, relabel_targets);
  rep.removal_precision = ratio(rep.removed_correct, rep.removed);
  return rep;
}

PcaResult pca_project(const Matrix& points, int dims, Rng& rng) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n < 2) throw ContractViolation("pca_project: need at least 2 points");
  if (dims < 1 || static_cast<std::size_t>(dims) > d) {
    throw ContractViolation("pca_project: dims must be in [1, " + std::to_string(d) + "]");
  }
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) axpy(1.0 / static_cast<double>(n), points.row(i), mean);
  Matrix centred = points;
  for (std::size_t i = 0; i < n; ++i) axpy(-1.0, mean, centred.row(i));
  Matrix cov = matmul(transpose(centred), centred);
  for (double& v : cov.values()) v /= static_cast<double>(n - 1);
  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) trace += cov(j, j);
  if (!(trace > 0.0)) throw DataError("pca_project: data has zero variance");

  PcaResult out;
  out.components = Matrix(static_cast<std::size_t>(dims), d);
  auto orthogonalize = [&](std::vector<double>& v, int upto) {
    for (int c = 0; c < upto; ++c) {
      const auto comp = out.components.row(static_cast<std::size_t>(c));
      axpy(-dot(v, comp), comp, v);
    }
  };
  for (int c = 0; c < dims; ++c) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    orthogonalize(v, c);
    double norm = std::sqrt(dot(v, v));
    for (double& x : v) x /= norm;
    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
      std::vector<double> w(d, 0.0);
      for (std::size_t r = 0; r < d; ++r) w[r] = dot(cov.row(r), v);
      orthogonalize(w, c);
      norm = std::sqrt(dot(w, w));
      if (norm <= 1e-14 * trace) {
        lambda = 0.0;
        break;
      }
      for (double& x : w) x /= norm;
      double diff = 0.0;
      for (std::size_t r = 0; r < d; ++r) diff = std::max(diff, std::abs(w[r] - v[r]));
      v = std::move(w);
      lambda = norm;
      if (diff < 1e-13) break;
    }
    // fixed sign: largest-magnitude coordinate positive
    const auto big = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*big < 0.0) {
      for (double& x : v) x = -x;
    }
    std::copy(v.begin(), v.end(), out.components.row(static_cast<std::size_t>(c)).begin());
    std::vector<double> sv(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) sv[r] = dot(cov.row(r), v);
    out.explained.push_back(lambda == 0.0 ? 0.0 : dot(v, sv));
    const double ev = out.explained.back();
    for (std::size_t r = 0; r < d; ++r) axpy(-ev * v[r], v, cov.row(r));
  }
  out.coords = matmul_transposed(centred, out.components);
  return out;
}

std::string pr_curve_csv(const PRCurve& curve) {
  std::string out = "precision,recall,score\n";
  for (const auto& p : curve.points) {
    out += format_double(p.precision) + "," + format_double(p.recall) + "," + format_double(p.score) + "\n";
  }
  return out;
}

std::string relabel_report_json(const RelabelReport& r) {
  nlohmann::ordered_json j;
  j["sentences"] = r.sentences;
  j["truly_noisy"] = r.truly_noisy;
  j["detected_noisy"] = r.detected_noisy;
  j["detected_truly_noisy"] = r.detected_truly_noisy;
  j["detection_precision"] = r.detection_precision;
  j["detection_recall"] = r.detection_recall;
  j["recall_vacuous"] = r.recall_vacuous;
  j["kept"] = r.kept;
  j["relabeled"] = r.relabeled;
  j["relabeled_correct"] = r.relabeled_correct;
  j["removed"] = r.removed;
  j["removed_correct"] = r.removed_correct;
  j["relabel_precision"] = r.relabel_precision;
  j["relabel_recall"] = r.relabel_recall;
  j["removal_precision"] = r.removal_precision;
  j["relations"] = r.relation_names;
  j["confusion"] = r.confusion;
  return j.dump(2) + "\n";
}

std::string phi_sweep_csv(const std::vector<std::pair<double, double>>& rows) {
  std::string out = "phi,auc\n";
  for (const auto& [phi, auc] : rows) out += format_double(phi) + "," + format_double(auc) + "\n";
  return out;
}

std::string pca_csv(const Matrix& coords, std::span<const int> cluster, std::span<const int> original) {
  if (coords.cols() != 2 || cluster.size() != coords.rows() || original.size() != coords.rows()) {
    throw ContractViolation("pca_csv: expected n x 2 coordinates with n cluster and label entries");
  }
  std::string out = "x,y,cluster,original_label\n";
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    out += format_double(coords(i, 0)) + "," + format_double(coords(i, 1)) + "," + std::to_string(cluster[i]) +
           "," + std::to_string(original[i]) + "\n";
  }
  return out;
}

}  // namespace dcre
