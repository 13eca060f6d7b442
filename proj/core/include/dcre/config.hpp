#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace dcre {

/// Flat view of a sectioned key-value config file. Keys are "section.key".
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  /// Applies one "section.key=value" assignment.
  void apply_override(std::string_view assignment);
  /// Applies every DCRE_<SECTION>_<KEY>=value environment variable; the
  /// first underscore after the prefix separates section from key.
  void apply_environment();

  std::optional<std::string> get(const std::string& key) const;
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

 private:
  std::map<std::string, std::string> entries_;
};

struct ModelConfig {
  int word_dim = 50;      // d_w
  int position_dim = 5;   // d_p
  int window = 3;         // w
  int filters = 230;      // n_f
  int max_len = 70;
  int max_dist = 30;
  int min_count = 1;
  std::string pretrained_embeddings;
};

struct TrainConfig {
  double phi = 0.1;
  double lambda = 0.6;
  double lr_pretrain = 0.4;
  double lr_cluster = 0.004;
  double lr_model = 0.1;
  int batch_size = 160;
  int epochs_pretrain = 15;
  int epochs_final = 10;
  double dropout = 0.5;
  std::uint64_t seed = 1;
};

struct ClusterConfig {
  int epochs = 10;
  int runs = 5;
  int c_min = 10;
  int c_max = 500;
  int batch_size = 256;
  int kmeans_max_iter = 100;
  /// Relations with fewer training sentences than this are excluded from clustering.
  int min_relation_count = 2;
};

struct SyntheticConfig {
  int vocab_size = 500;
  int positive_relations = 8;
  int entity_count = 400;
  int bags = 2000;
  int test_bags = 1000;
  double na_fraction = 0.3;
  int min_bag_size = 1;
  int max_bag_size = 8;
  /// Success probability of the geometric bag-size tail above min_bag_size.
  double bag_size_p = 0.35;
  double noise_rate = 0.3;
  double test_noise_rate = 0.0;
  /// Share of noisy sentences drawn from NA templates instead of another relation.
  double noise_na_share = 0.2;
  /// Draw a noisy sentence's source relation by relation frequency instead of uniformly.
  bool noise_by_frequency = true;
  int templates_per_relation = 4;
  int na_templates = 6;
  int template_min_len = 8;
  int template_max_len = 16;
  int triggers_per_template = 2;
  /// Probability that a trigger word is replaced by filler at instantiation.
  double trigger_dropout = 0.0;
  bool long_tail = true;
  double tail_ratio = 0.75;
};

struct DataConfig {
  std::string train;
  std::string test;
};

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  ClusterConfig cluster;
  SyntheticConfig synthetic;
  DataConfig data;
};

/// Typed config with validation. Unknown keys raise ConfigError.
ExperimentConfig load_experiment_config(const Config& raw);

void validate(const ModelConfig& c);
void validate(const TrainConfig& c);
void validate(const ClusterConfig& c);
void validate(const SyntheticConfig& c);

/// Writes every effective value back into a flat Config (for manifests).
Config to_config(const ExperimentConfig& cfg);

}  // namespace dcre
