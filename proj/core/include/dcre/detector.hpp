#pragma once

#include <span>
#include <vector>

#include "dcre/numerics.hpp"

namespace dcre {

/// Three-way split of a bag's sentence indices.
struct BagPartition {
  int valid = -1;            // best-scored sentence
  std::vector<int> noisy;    // score strictly below phi, never the valid one
  std::vector<int> ignored;  // everything else
  std::vector<double> scores;
};

/// Bag-level softmax of the dot products h_i · l_j.
std::vector<double> coupling_scores(const Matrix& bag_reps, std::span<const double> relation_row);

/// Valid = argmax (lowest index on ties); noisy = { i != valid : a_i < phi }.
BagPartition partition_bag(std::span<const double> scores, double phi);

}  // namespace dcre
