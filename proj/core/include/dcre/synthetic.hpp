#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcre/config.hpp"
#include "dcre/corpus.hpp"

namespace dcre {

/// A generated distant-supervision corpus with per-sentence ground truth.
///
/// Every positive relation owns `templates_per_relation` templates built from
/// disjoint trigger words plus filler slots. A bag is generated for a triple
/// (e1, r, e2); each of its sentences is, with probability `noise_rate`,
/// instantiated from another relation's template (or an NA template) while
/// the record keeps the bag label r. `true_relation` records the source.
struct SyntheticCorpus {
  std::vector<SentenceRecord> train;
  std::vector<SentenceRecord> test;
  /// NA first, then the positive relations in frequency-rank order.
  std::vector<std::string> relations;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Name of the i-th synthetic positive relation.
std::string synthetic_relation_name(int i);

}  // namespace dcre
