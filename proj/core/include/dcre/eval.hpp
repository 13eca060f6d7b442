#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "dcre/cluster.hpp"
#include "dcre/corpus.hpp"
#include "dcre/model.hpp"
#include "dcre/numerics.hpp"
#include "dcre/rng.hpp"

namespace dcre {

/// Per relation, the maximum over sentences of p(r | s).
std::vector<double> predict_bag(std::span<const TokenizedSentence> sentences, const ModelParams& params);

struct BagPrediction {
  std::string head_id;
  std::string tail_id;
  std::vector<double> scores;
};

/// (head id, tail id, relation index)
using Fact = std::tuple<std::string, std::string, int>;

struct PRPoint {
  double precision = 0.0;
  double recall = 0.0;
  double score = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  double auc = 0.0;
  std::size_t total_gold = 0;

  /// Precision over the first n ranked predictions.
  double precision_at(std::size_t n) const;
};

/// Ranks every (bag, relation != na) pair by score, descending, ties by
/// (head, tail, relation). AUC is the trapezoid area over recall, starting at
/// recall 0 with the first point's precision.
PRCurve pr_curve(const std::vector<BagPrediction>& predictions, const std::set<Fact>& gold,
                 int na_index);

/// Scores every test bag and builds the curve against the bags' gold labels.
PRCurve evaluate(const std::vector<Bag>& test_bags, const ModelParams& params, int na_index);

struct RelabelReport {
  std::size_t sentences = 0;
  std::size_t truly_noisy = 0;
  std::size_t detected_noisy = 0;
  std::size_t detected_truly_noisy = 0;
  double detection_precision = 0.0;
  double detection_recall = 0.0;
  /// Set when nothing is truly noisy; recall is then reported as 1.
  bool recall_vacuous = false;
  std::size_t kept = 0;
  std::size_t relabeled = 0;
  std::size_t relabeled_correct = 0;
  std::size_t removed = 0;
  std::size_t removed_correct = 0;
  double relabel_precision = 0.0;
  double relabel_recall = 0.0;
  double removal_precision = 0.0;
  /// confusion[true][assigned] over detected sentences.
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::string> relation_names;
};

/// `truth` maps sentence id to its true relation index. A removal is correct
/// when the true relation is NA or not among `retained`.
RelabelReport relabel_metrics(const std::vector<RelabelRecord>& records,
                              const std::unordered_map<std::string, int>& truth,
                              const std::vector<int>& retained, const RelationVocab& relations);

struct PcaResult {
  Matrix coords;                    // n × dims
  Matrix components;                // dims × d
  std::vector<double> explained;    // variance along each component
};

/// Mean-centred projection onto the leading principal directions, found by
/// power iteration with deflation on the covariance matrix.
PcaResult pca_project(const Matrix& points, int dims, Rng& rng);

std::string pr_curve_csv(const PRCurve& curve);
std::string relabel_report_json(const RelabelReport& report);
std::string phi_sweep_csv(const std::vector<std::pair<double, double>>& rows);
std::string pca_csv(const Matrix& coords, std::span<const int> cluster, std::span<const int> original);

}  // namespace dcre
