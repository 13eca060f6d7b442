#include "dcre/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>
#include <sstream>

#include "dcre/error.hpp"
#include "dcre/io.hpp"

extern char** environ;

namespace dcre {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

Config from_ptree(const boost::property_tree::ptree& tree) {
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) cfg.set(section + "." + key, trim(value.data()));
  }
  return cfg;
}

template <typename F>
void visit_fields(ExperimentConfig& c, F&& f) {
  f("model.word_dim", c.model.word_dim);
  f("model.position_dim", c.model.position_dim);
  f("model.window", c.model.window);
  f("model.filters", c.model.filters);
  f("model.max_len", c.model.max_len);
  f("model.max_dist", c.model.max_dist);
  f("model.min_count", c.model.min_count);
  f("model.pretrained_embeddings", c.model.pretrained_embeddings);

  f("train.phi", c.train.phi);
  f("train.lambda", c.train.lambda);
  f("train.lr_pretrain", c.train.lr_pretrain);
  f("train.lr_cluster", c.train.lr_cluster);
  f("train.lr_model", c.train.lr_model);
  f("train.batch_size", c.train.batch_size);
  f("train.epochs_pretrain", c.train.epochs_pretrain);
  f("train.epochs_final", c.train.epochs_final);
  f("train.dropout", c.train.dropout);
  f("train.seed", c.train.seed);

  f("cluster.epochs", c.cluster.epochs);
  f("cluster.runs", c.cluster.runs);
  f("cluster.c_min", c.cluster.c_min);
  f("cluster.c_max", c.cluster.c_max);
  f("cluster.batch_size", c.cluster.batch_size);
  f("cluster.kmeans_max_iter", c.cluster.kmeans_max_iter);
  f("cluster.min_relation_count", c.cluster.min_relation_count);

  f("synthetic.vocab_size", c.synthetic.vocab_size);
  f("synthetic.positive_relations", c.synthetic.positive_relations);
  f("synthetic.entity_count", c.synthetic.entity_count);
  f("synthetic.bags", c.synthetic.bags);
  f("synthetic.test_bags", c.synthetic.test_bags);
  f("synthetic.na_fraction", c.synthetic.na_fraction);
  f("synthetic.min_bag_size", c.synthetic.min_bag_size);
  f("synthetic.max_bag_size", c.synthetic.max_bag_size);
  f("synthetic.bag_size_p", c.synthetic.bag_size_p);
  f("synthetic.noise_rate", c.synthetic.noise_rate);
  f("synthetic.test_noise_rate", c.synthetic.test_noise_rate);
  f("synthetic.noise_na_share", c.synthetic.noise_na_share);
  f("synthetic.templates_per_relation", c.synthetic.templates_per_relation);
  f("synthetic.na_templates", c.synthetic.na_templates);
  f("synthetic.template_min_len", c.synthetic.template_min_len);
  f("synthetic.template_max_len", c.synthetic.template_max_len);
  f("synthetic.triggers_per_template", c.synthetic.triggers_per_template);
  f("synthetic.trigger_dropout", c.synthetic.trigger_dropout);
  f("synthetic.long_tail", c.synthetic.long_tail);
  f("synthetic.tail_ratio", c.synthetic.tail_ratio);
  f("synthetic.noise_by_frequency", c.synthetic.noise_by_frequency);

  f("data.train", c.data.train);
  f("data.test", c.data.test);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

bool parse_bool(const std::string& key, std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a boolean");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.message() +
                      " (line " + std::to_string(e.line()) + ")");
  }
  return from_ptree(tree);
}

Config Config::parse_string(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config: " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  return from_ptree(tree);
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos) {
    throw ConfigError("config key '" + key + "' is not of the form section.key");
  }
  entries_[key] = value;
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::apply_environment() {
  constexpr std::string_view prefix = "DCRE_";
  std::vector<std::pair<std::string, std::string>> found;
  for (char** env = environ; env != nullptr && *env != nullptr; ++env) {
    std::string_view entry(*env);
    if (!entry.starts_with(prefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    std::string name(entry.substr(prefix.size(), eq - prefix.size()));
    const auto sep = name.find('_');
    if (sep == std::string::npos || sep == 0 || sep + 1 == name.size()) continue;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    name[sep] = '.';
    found.emplace_back(name, std::string(entry.substr(eq + 1)));
  }
  std::sort(found.begin(), found.end());
  for (const auto& [k, v] : found) set(k, v);
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = get(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  return v ? parse_bool(key, *v) : fallback;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

ExperimentConfig load_experiment_config(const Config& raw) {
  ExperimentConfig cfg;
  std::set<std::string> known;
  visit_fields(cfg, [&](const char* key, auto& field) {
    known.insert(key);
    auto value = raw.get(key);
    if (!value) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::string>) {
      field = *value;
    } else if constexpr (std::is_same_v<T, bool>) {
      field = parse_bool(key, *value);
    } else {
      field = parse_number<T>(key, *value);
    }
  });
  for (const auto& [key, value] : raw.entries()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  validate(cfg.model);
  validate(cfg.train);
  validate(cfg.cluster);
  validate(cfg.synthetic);
  return cfg;
}

void validate(const ModelConfig& c) {
  require(c.word_dim >= 1 && c.position_dim >= 1, "model: embedding dimensions must be >= 1");
  require(c.window >= 1, "model.window must be >= 1");
  require(c.filters >= 1, "model.filters must be >= 1");
  require(c.max_len >= 3, "model.max_len must be >= 3");
  require(c.max_dist >= 1, "model.max_dist must be >= 1");
  require(c.min_count >= 1, "model.min_count must be >= 1");
}

void validate(const TrainConfig& c) {
  require(c.phi >= 0.0 && c.phi < 1.0, "train.phi must lie in [0, 1)");
  require(c.lambda >= 0.0, "train.lambda must be >= 0");
  require(c.lr_pretrain > 0 && c.lr_cluster > 0 && c.lr_model > 0,
          "train: learning rates must be positive");
  require(c.batch_size >= 1, "train.batch_size must be >= 1");
  require(c.epochs_pretrain >= 0 && c.epochs_final >= 0, "train: epochs must be >= 0");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "train.dropout must lie in [0, 1)");
}

void validate(const ClusterConfig& c) {
  require(c.epochs >= 0, "cluster.epochs must be >= 0");
  require(c.runs >= 1, "cluster.runs must be >= 1");
  require(c.c_min >= 1 && c.c_min <= c.c_max, "cluster: need 1 <= c_min <= c_max");
  require(c.batch_size >= 1, "cluster.batch_size must be >= 1");
  require(c.kmeans_max_iter >= 1, "cluster.kmeans_max_iter must be >= 1");
  require(c.min_relation_count >= 1, "cluster.min_relation_count must be >= 1");
}

void validate(const SyntheticConfig& c) {
  require(c.vocab_size >= 1, "synthetic.vocab_size must be >= 1");
  require(c.positive_relations >= 1, "synthetic.positive_relations must be >= 1");
  require(c.noise_rate >= 0.0 && c.noise_rate < 1.0, "synthetic.noise_rate must lie in [0, 1)");
  require(c.test_noise_rate >= 0.0 && c.test_noise_rate < 1.0,
          "synthetic.test_noise_rate must lie in [0, 1)");
  require(!(c.positive_relations < 2 && (c.noise_rate > 0.0 || c.test_noise_rate > 0.0)),
          "synthetic: noise needs at least 2 positive relations");
  require(c.entity_count >= 2, "synthetic.entity_count must be >= 2");
  require(c.bags >= 1 && c.test_bags >= 0, "synthetic: bag counts must be positive");
  require(c.na_fraction >= 0.0 && c.na_fraction < 1.0, "synthetic.na_fraction must lie in [0, 1)");
  require(c.min_bag_size >= 1 && c.min_bag_size <= c.max_bag_size,
          "synthetic: need 1 <= min_bag_size <= max_bag_size");
  require(c.bag_size_p > 0.0 && c.bag_size_p <= 1.0, "synthetic.bag_size_p must lie in (0, 1]");
  require(c.noise_na_share >= 0.0 && c.noise_na_share <= 1.0,
          "synthetic.noise_na_share must lie in [0, 1]");
  require(c.templates_per_relation >= 3, "synthetic.templates_per_relation must be >= 3");
  require(c.na_templates >= 1, "synthetic.na_templates must be >= 1");
  require(c.triggers_per_template >= 1, "synthetic.triggers_per_template must be >= 1");
  require(c.template_min_len >= c.triggers_per_template + 2 &&
              c.template_min_len <= c.template_max_len,
          "synthetic: template length range must fit two entity slots and the trigger words");
  require(c.trigger_dropout >= 0.0 && c.trigger_dropout < 1.0,
          "synthetic.trigger_dropout must lie in [0, 1)");
  require(c.tail_ratio > 0.0 && c.tail_ratio <= 1.0, "synthetic.tail_ratio must lie in (0, 1]");
  const long trigger_words = static_cast<long>(c.positive_relations) * c.templates_per_relation *
                                 c.triggers_per_template +
                             static_cast<long>(c.na_templates) * c.triggers_per_template;
  require(trigger_words + 20 <= c.vocab_size,
          "synthetic.vocab_size too small for the requested templates (need " +
              std::to_string(trigger_words + 20) + ")");
}

Config to_config(const ExperimentConfig& cfg) {
  Config out;
  ExperimentConfig copy = cfg;
  visit_fields(copy, [&](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::string>) {
      out.set(key, field);
    } else if constexpr (std::is_same_v<T, bool>) {
      out.set(key, field ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<T>) {
      out.set(key, format_double(field));
    } else {
      out.set(key, std::to_string(field));
    }
  });
  return out;
}

}  // namespace dcre
