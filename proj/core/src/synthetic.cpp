#include "dcre/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <utility>

#include "dcre/rng.hpp"

namespace dcre {

namespace {

// A template is a token pattern; -1/-2 mark the head/tail slots, -3 a filler
// slot, any other value a fixed trigger word index.
constexpr int kHeadSlot = -1;
constexpr int kTailSlot = -2;
constexpr int kFillerSlot = -3;

using Template = std::vector<int>;

std::string word_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03d", i);
  return buf;
}

std::string entity_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ent%04d", i);
  return buf;
}

Template make_template(const SyntheticConfig& c, std::vector<int> triggers, Rng& rng) {
  const int len = c.template_min_len +
                  static_cast<int>(rng.below(static_cast<std::size_t>(c.template_max_len - c.template_min_len + 1)));
  Template t(static_cast<std::size_t>(len), kFillerSlot);
  std::vector<int> positions(static_cast<std::size_t>(len));
  std::iota(positions.begin(), positions.end(), 0);
  rng.shuffle(positions);
  std::size_t next = 0;
  t[static_cast<std::size_t>(positions[next++])] = kHeadSlot;
  t[static_cast<std::size_t>(positions[next++])] = kTailSlot;
  for (int w : triggers) t[static_cast<std::size_t>(positions[next++])] = w;
  return t;
}

struct Generator {
  const SyntheticConfig& cfg;
  std::vector<std::vector<Template>> positive;  // per positive relation
  std::vector<Template> na;
  std::vector<int> filler;
  std::vector<double> relation_cdf;
  std::set<std::pair<int, int>> used_pairs;

  Generator(const SyntheticConfig& c, Rng rng) : cfg(c) {
    std::vector<int> words(static_cast<std::size_t>(c.vocab_size));
    std::iota(words.begin(), words.end(), 0);
    Rng vocab_rng = rng.split("vocab");
    vocab_rng.shuffle(words);
    std::size_t next = 0;
    auto take = [&](int n) {
      std::vector<int> out(words.begin() + static_cast<long>(next), words.begin() + static_cast<long>(next + static_cast<std::size_t>(n)));
      next += static_cast<std::size_t>(n);
      return out;
    };
    Rng tmpl_rng = rng.split("templates");
    positive.resize(static_cast<std::size_t>(c.positive_relations));
    for (auto& templates : positive) {
      for (int t = 0; t < c.templates_per_relation; ++t) {
        templates.push_back(make_template(c, take(c.triggers_per_template), tmpl_rng));
      }
    }
    for (int t = 0; t < c.na_templates; ++t) {
      na.push_back(make_template(c, take(c.triggers_per_template), tmpl_rng));
    }
    filler.assign(words.begin() + static_cast<long>(next), words.end());

    double total = 0.0;
    for (int r = 0; r < c.positive_relations; ++r) {
      total += c.long_tail ? std::pow(c.tail_ratio, r) : 1.0;
      relation_cdf.push_back(total);
    }
    for (double& x : relation_cdf) x /= total;
  }

  int sample_relation(Rng& rng) const {
    const double u = rng.uniform();
    for (std::size_t r = 0; r < relation_cdf.size(); ++r) {
      if (u < relation_cdf[r]) return static_cast<int>(r);
    }
    return static_cast<int>(relation_cdf.size()) - 1;
  }

  int sample_bag_size(Rng& rng) const {
    int size = cfg.min_bag_size;
    while (size < cfg.max_bag_size && !rng.bernoulli(cfg.bag_size_p)) ++size;
    return size;
  }

  std::pair<int, int> sample_pair(Rng& rng) {
    for (;;) {
      const int a = static_cast<int>(rng.below(static_cast<std::size_t>(cfg.entity_count)));
      const int b = static_cast<int>(rng.below(static_cast<std::size_t>(cfg.entity_count)));
      if (a != b && used_pairs.emplace(a, b).second) return {a, b};
    }
  }

  // source: -1 for NA, otherwise a positive relation index
  std::string instantiate(int source, int head, int tail, Rng& rng) const {
    const auto& pool = source < 0 ? na : positive[static_cast<std::size_t>(source)];
    const Template& t = pool[rng.below(pool.size())];
    std::string text;
    for (int slot : t) {
      if (!text.empty()) text += ' ';
      if (slot == kHeadSlot) {
        text += entity_name(head);
      } else if (slot == kTailSlot) {
        text += entity_name(tail);
      } else if (slot == kFillerSlot || (cfg.trigger_dropout > 0.0 && rng.bernoulli(cfg.trigger_dropout))) {
        text += word_name(filler[rng.below(filler.size())]);
      } else {
        text += word_name(slot);
      }
    }
    return text;
  }

  int noise_source(int label, Rng& rng) const {
    if (rng.bernoulli(cfg.noise_na_share)) return -1;
    if (cfg.noise_by_frequency) {
      for (;;) {
        const int r = sample_relation(rng);
        if (r != label) return r;
      }
    }
    const int other = static_cast<int>(rng.below(static_cast<std::size_t>(cfg.positive_relations - 1)));
    return other >= label ? other + 1 : other;
  }

  void make_split(int bags, double noise_rate, const std::string& prefix, Rng rng,
                  std::vector<SentenceRecord>& out) {
    long sentence_no = 0;
    for (int b = 0; b < bags; ++b) {
      Rng bag_rng = rng.split(static_cast<std::uint64_t>(b));
      const bool is_na = bag_rng.bernoulli(cfg.na_fraction);
      const int label = is_na ? -1 : sample_relation(bag_rng);
      const auto [head, tail] = sample_pair(bag_rng);
      const int size = sample_bag_size(bag_rng);
      for (int s = 0; s < size; ++s) {
        int source = label;
        if (!is_na && noise_rate > 0.0 && bag_rng.bernoulli(noise_rate)) {
          source = noise_source(label, bag_rng);
        }
        SentenceRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "%s%06ld", prefix.c_str(), sentence_no++);
        r.id = id;
        r.head = {entity_name(head), "E" + std::to_string(head)};
        r.tail = {entity_name(tail), "E" + std::to_string(tail)};
        r.relation = label < 0 ? kNaRelation : synthetic_relation_name(label);
        r.true_relation = source < 0 ? kNaRelation : synthetic_relation_name(source);
        r.text = instantiate(source, head, tail, bag_rng);
        out.push_back(std::move(r));
      }
    }
  }
};

}  // namespace

std::string synthetic_relation_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "/synthetic/rel_%02d", i);
  return buf;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  validate(config);
  Rng root(seed);
  Generator gen(config, root.split("synthetic"));
  SyntheticCorpus corpus;
  gen.make_split(config.bags, config.noise_rate, "tr", root.split("train"), corpus.train);
  gen.make_split(config.test_bags, config.test_noise_rate, "te", root.split("test"), corpus.test);
  corpus.relations.push_back(kNaRelation);
  for (int r = 0; r < config.positive_relations; ++r) {
    corpus.relations.push_back(synthetic_relation_name(r));
  }
  return corpus;
}

}  // namespace dcre
