#include "dcre/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "dcre/io.hpp"
#include "json.hpp"

namespace dcre {

using nlohmann::json;

namespace {

std::string field_error(const std::string& source, std::size_t line, const std::string& field) {
  return source + ":" + std::to_string(line) + ": missing required field '" + field + "'";
}

std::string as_id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

const json& require_field(const json& obj, const char* name, const std::string& path,
                          const std::string& source, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) throw DataError(field_error(source, line, path));
  return *it;
}

EntityRef parse_entity(const json& obj, const char* name, const std::string& source,
                       std::size_t line) {
  const json& e = require_field(obj, name, name, source, line);
  if (!e.is_object()) {
    throw DataError(source + ":" + std::to_string(line) + ": field '" + name + "' must be an object");
  }
  const std::string prefix = std::string(name) + ".";
  EntityRef ref;
  ref.word = require_field(e, "word", prefix + "word", source, line).get<std::string>();
  ref.id = as_id_string(require_field(e, "id", prefix + "id", source, line));
  return ref;
}

}  // namespace

std::vector<SentenceRecord> parse_jsonl(std::istream& in, const std::string& source) {
  std::vector<SentenceRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected a JSON object");
    }
    try {
      SentenceRecord r;
      r.id = as_id_string(require_field(obj, "id", "id", source, lineno));
      r.head = parse_entity(obj, "head", source, lineno);
      r.tail = parse_entity(obj, "tail", source, lineno);
      r.relation = require_field(obj, "relation", "relation", source, lineno).get<std::string>();
      r.text = require_field(obj, "text", "text", source, lineno).get<std::string>();
      if (auto it = obj.find("true_relation"); it != obj.end() && !it->is_null()) {
        r.true_relation = it->get<std::string>();
      }
      records.push_back(std::move(r));
    } catch (const json::type_error& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": wrong field type (" + e.what() + ")");
    }
  }
  return records;
}

std::vector<SentenceRecord> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  return parse_jsonl(in, path.string());
}

std::string to_jsonl_line(const SentenceRecord& r) {
  // ordered_json keeps a stable field order so corpora are byte-reproducible
  nlohmann::ordered_json obj;
  obj["id"] = r.id;
  obj["head"] = {{"word", r.head.word}, {"id", r.head.id}};
  obj["tail"] = {{"word", r.tail.word}, {"id", r.tail.id}};
  obj["relation"] = r.relation;
  obj["text"] = r.text;
  if (r.true_relation) obj["true_relation"] = *r.true_relation;
  return obj.dump();
}

void write_jsonl(const std::filesystem::path& path, const std::vector<SentenceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(r);
    out += '\n';
  }
  write_file(path, out);
}

SentenceRecord training_view(SentenceRecord record) {
  record.true_relation.reset();
  return record;
}

std::vector<SentenceRecord> training_view(std::vector<SentenceRecord> records) {
  for (auto& r : records) r.true_relation.reset();
  return records;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

RelationVocab::RelationVocab(std::vector<std::string> names) : names_(std::move(names)) {
  if (std::find(names_.begin(), names_.end(), kNaRelation) == names_.end()) {
    names_.insert(names_.begin(), kNaRelation);
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<int>(i)).second) {
      throw ContractViolation("duplicate relation name '" + names_[i] + "'");
    }
  }
  na_index_ = index_.at(kNaRelation);
}

std::optional<int> RelationVocab::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int RelationVocab::index_or_na(const std::string& name) const {
  return find(name).value_or(na_index_);
}

WordVocab::WordVocab() : WordVocab(std::vector<std::string>{"<pad>", "<unk>"}) {}

WordVocab::WordVocab(std::vector<std::string> words) : words_(std::move(words)) {
  if (words_.size() < 2) throw ContractViolation("word vocabulary needs PAD and UNK entries");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second) {
      throw ContractViolation("duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

int WordVocab::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

Vocabulary build_vocab(const std::vector<SentenceRecord>& records, int min_count) {
  if (min_count < 1) throw ContractViolation("build_vocab: min_count must be >= 1");
  std::map<std::string, long> freq;
  std::vector<std::string> relations;
  for (const auto& r : records) {
    for (auto& tok : tokenize(r.text)) ++freq[tok];
    if (r.relation != kNaRelation) relations.push_back(r.relation);
  }
  std::vector<std::pair<std::string, long>> kept;
  for (auto& [w, c] : freq) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words{"<pad>", "<unk>"};
  for (auto& [w, c] : kept) {
    if (w != words[0] && w != words[1]) words.push_back(w);
  }
  std::sort(relations.begin(), relations.end());
  relations.erase(std::unique(relations.begin(), relations.end()), relations.end());
  relations.insert(relations.begin(), kNaRelation);
  return {WordVocab(std::move(words)), RelationVocab(std::move(relations))};
}

int position_feature(int i, int pos, int max_dist) {
  return std::clamp(i - pos, -max_dist, max_dist) + max_dist;
}

namespace {

int find_entity(const std::vector<std::string>& tokens, const std::string& entity) {
  const auto needle = tokenize(entity);
  if (needle.empty() || needle.size() > tokens.size()) return -1;
  auto it = std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end());
  return it == tokens.end() ? -1 : static_cast<int>(it - tokens.begin());
}

}  // namespace

TokenizedSentence encode_sentence(const SentenceRecord& record, const Vocabulary& vocab,
                                  int max_len, int max_dist) {
  if (max_len < 3 || max_dist < 1) {
    throw ContractViolation("encode_sentence: need max_len >= 3 and max_dist >= 1");
  }
  const auto tokens = tokenize(record.text);
  const int e1 = find_entity(tokens, record.head.word);
  const int e2 = find_entity(tokens, record.tail.word);
  if (e1 < 0 || e2 < 0) {
    throw EntityNotFound("record " + record.id + ": entity '" +
                         (e1 < 0 ? record.head.word : record.tail.word) + "' not found in text");
  }
  if (e1 >= max_len || e2 >= max_len) {
    throw EntityNotFound("record " + record.id + ": entity beyond max_len " + std::to_string(max_len));
  }
  TokenizedSentence ts;
  ts.id = record.id;
  ts.head_id = record.head.id;
  ts.tail_id = record.tail.id;
  ts.relation = vocab.relations.index_or_na(record.relation);
  ts.e1_pos = e1;
  ts.e2_pos = e2;
  ts.word_ids.resize(static_cast<std::size_t>(max_len), WordVocab::kPad);
  ts.pf1.resize(static_cast<std::size_t>(max_len));
  ts.pf2.resize(static_cast<std::size_t>(max_len));
  for (int i = 0; i < max_len; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (u < tokens.size()) ts.word_ids[u] = vocab.words.id(tokens[u]);
    ts.pf1[u] = position_feature(i, e1, max_dist);
    ts.pf2[u] = position_feature(i, e2, max_dist);
  }
  return ts;
}

EncodedCorpus encode_corpus(const std::vector<SentenceRecord>& records, const Vocabulary& vocab,
                            int max_len, int max_dist) {
  EncodedCorpus out;
  out.sentences.reserve(records.size());
  for (const auto& r : records) {
    try {
      out.sentences.push_back(encode_sentence(r, vocab, max_len, max_dist));
    } catch (const EntityNotFound&) {
      out.skipped_ids.push_back(r.id);
    }
  }
  return out;
}

std::vector<Bag> group_bags(const std::vector<TokenizedSentence>& sentences, BagMode mode) {
  std::map<BagKey, Bag> bags;
  for (const auto& s : sentences) {
    BagKey key{s.head_id, s.tail_id, mode == BagMode::Train ? s.relation : -1};
    auto [it, inserted] = bags.try_emplace(key);
    Bag& bag = it->second;
    if (inserted) {
      bag.key = key;
      bag.label = mode == BagMode::Train ? s.relation : -1;
    }
    bag.sentences.push_back(s);
    if (mode == BagMode::Test &&
        std::find(bag.gold.begin(), bag.gold.end(), s.relation) == bag.gold.end()) {
      bag.gold.push_back(s.relation);
    }
  }
  std::vector<Bag> out;
  out.reserve(bags.size());
  for (auto& [key, bag] : bags) {
    std::sort(bag.gold.begin(), bag.gold.end());
    out.push_back(std::move(bag));
  }
  return out;
}

}  // namespace dcre
