#include "dcre/detector.hpp"

#include <cmath>

#include "dcre/error.hpp"

namespace dcre {

std::vector<double> coupling_scores(const Matrix& bag_reps, std::span<const double> relation_row) {
  if (bag_reps.rows() == 0) throw ContractViolation("coupling_scores: empty bag");
  if (bag_reps.cols() != relation_row.size()) {
    throw ContractViolation("coupling_scores: representation width " + std::to_string(bag_reps.cols()) +
                            " does not match relation vector length " +
                            std::to_string(relation_row.size()));
  }
  std::vector<double> raw(bag_reps.rows());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = dot(bag_reps.row(i), relation_row);
  return softmax(raw);
}

BagPartition partition_bag(std::span<const double> scores, double phi) {
  if (scores.empty()) throw ContractViolation("partition_bag: empty score vector");
  if (!(phi >= 0.0 && phi < 1.0)) throw ContractViolation("partition_bag: phi must lie in [0, 1)");
  BagPartition part;
  part.scores.assign(scores.begin(), scores.end());
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  part.valid = best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<int>(i) == best) continue;
    (scores[i] < phi ? part.noisy : part.ignored).push_back(static_cast<int>(i));
  }
  return part;
}

}  // namespace dcre
