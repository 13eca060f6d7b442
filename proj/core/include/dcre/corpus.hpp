#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcre/error.hpp"

namespace dcre {

inline constexpr const char* kNaRelation = "NA";

struct EntityRef {
  std::string word;
  std::string id;
  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

/// One line of a corpus file.
struct SentenceRecord {
  std::string id;
  EntityRef head;
  EntityRef tail;
  std::string relation;
  std::string text;
  /// Ground truth; only synthetic corpora carry it.
  std::optional<std::string> true_relation;

  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

/// Reads a JSON Lines corpus. Unknown fields are ignored. A malformed line or
/// a missing required field raises DataError naming the line (and field).
std::vector<SentenceRecord> load_jsonl(const std::filesystem::path& path);
std::vector<SentenceRecord> parse_jsonl(std::istream& in, const std::string& source);

std::string to_jsonl_line(const SentenceRecord& record);
void write_jsonl(const std::filesystem::path& path, const std::vector<SentenceRecord>& records);

/// The view every training phase sees: ground truth removed.
SentenceRecord training_view(SentenceRecord record);
std::vector<SentenceRecord> training_view(std::vector<SentenceRecord> records);

/// Whitespace split + ASCII lowercase.
std::vector<std::string> tokenize(const std::string& text);

class RelationVocab {
 public:
  RelationVocab() = default;
  /// NA is inserted at index 0 if absent; other names keep their given order.
  explicit RelationVocab(std::vector<std::string> names);

  std::size_t k() const { return names_.size(); }
  int na_index() const { return na_index_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
  std::optional<int> find(const std::string& name) const;
  /// Index of `name`, or NA when the relation is unknown.
  int index_or_na(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
  int na_index_ = 0;
};

class WordVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  WordVocab();
  explicit WordVocab(std::vector<std::string> words);  // words[0..1] must be PAD/UNK

  std::size_t size() const { return words_.size(); }
  int id(const std::string& word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct Vocabulary {
  WordVocab words;
  RelationVocab relations;
};

/// Words with frequency >= min_count receive ids (most frequent first, ties
/// alphabetical); relations are NA followed by the remaining names sorted.
Vocabulary build_vocab(const std::vector<SentenceRecord>& records, int min_count);

struct TokenizedSentence {
  std::string id;
  std::string head_id;
  std::string tail_id;
  int relation = -1;  // distant label index
  std::vector<int> word_ids;
  std::vector<int> pf1;
  std::vector<int> pf2;
  int e1_pos = -1;
  int e2_pos = -1;

  int length() const { return static_cast<int>(word_ids.size()); }
};

/// Raised when an entity cannot be located inside the first max_len tokens.
class EntityNotFound : public DataError {
 public:
  using DataError::DataError;
};

/// Clipped, shifted relative distance of token `i` to an entity at `pos`.
int position_feature(int i, int pos, int max_dist);

TokenizedSentence encode_sentence(const SentenceRecord& record, const Vocabulary& vocab,
                                  int max_len, int max_dist);

struct EncodedCorpus {
  std::vector<TokenizedSentence> sentences;
  std::vector<std::string> skipped_ids;
};

/// Encodes every record, skipping (and listing) those whose entities cannot be placed.
EncodedCorpus encode_corpus(const std::vector<SentenceRecord>& records, const Vocabulary& vocab,
                            int max_len, int max_dist);

enum class BagMode { Train, Test };

struct BagKey {
  std::string head_id;
  std::string tail_id;
  int relation = -1;  // -1 in test mode
  friend auto operator<=>(const BagKey&, const BagKey&) = default;
};

struct Bag {
  BagKey key;
  std::vector<TokenizedSentence> sentences;
  int label = -1;         // train mode
  std::vector<int> gold;  // test mode: every distant label seen for the pair, sorted

  std::size_t size() const { return sentences.size(); }
};

std::vector<Bag> group_bags(const std::vector<TokenizedSentence>& sentences, BagMode mode);

}  // namespace dcre
