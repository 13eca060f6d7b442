#include <gtest/gtest.h>

#include <cstdlib>

#include "dcre/config.hpp"
#include "dcre/error.hpp"

namespace dcre {
namespace {

TEST(Config, ParsesSectionsIntoDottedKeys) {
  const Config c = Config::parse_string("[train]\nphi = 0.05\n; comment\n[model]\nfilters=64\n");
  EXPECT_EQ(c.get("train.phi"), "0.05");
  EXPECT_EQ(c.get_int("model.filters", 0), 64);
  EXPECT_FALSE(c.get("model.window").has_value());
}

TEST(Config, KeysOutsideSectionsAreRejected) {
  EXPECT_THROW(Config::parse_string("phi = 0.1\n"), ConfigError);
}

TEST(Config, MalformedOverrideIsRejected) {
  Config c;
  EXPECT_THROW(c.apply_override("train.phi"), ConfigError);
  EXPECT_THROW(c.apply_override("phi=0.1"), ConfigError);
  c.apply_override(" train.phi = 0 ");
  EXPECT_EQ(c.get("train.phi"), "0");
}

TEST(Config, EnvironmentMapsToSectionKey) {
  ::setenv("DCRE_TRAIN_LR_MODEL", "0.25", 1);
  Config c;
  c.apply_environment();
  ::unsetenv("DCRE_TRAIN_LR_MODEL");
  EXPECT_EQ(c.get("train.lr_model"), "0.25");
}

TEST(ExperimentConfig, DefaultHyperparameters) {
  const auto cfg = load_experiment_config(Config{});
  EXPECT_DOUBLE_EQ(cfg.train.phi, 0.1);
  EXPECT_DOUBLE_EQ(cfg.train.lambda, 0.6);
  EXPECT_DOUBLE_EQ(cfg.train.lr_pretrain, 0.4);
  EXPECT_DOUBLE_EQ(cfg.train.lr_cluster, 0.004);
  EXPECT_DOUBLE_EQ(cfg.train.lr_model, 0.1);
  EXPECT_DOUBLE_EQ(cfg.train.dropout, 0.5);
  EXPECT_EQ(cfg.model.window, 3);
  EXPECT_EQ(cfg.model.filters, 230);
  EXPECT_EQ(cfg.model.word_dim, 50);
  EXPECT_EQ(cfg.model.position_dim, 5);
  EXPECT_EQ(cfg.cluster.runs, 5);
  EXPECT_EQ(cfg.cluster.c_min, 10);
  EXPECT_EQ(cfg.cluster.c_max, 500);
}

TEST(ExperimentConfig, UnknownKeyIsRejected) {
  Config c;
  c.set("train.phii", "0.1");
  EXPECT_THROW(load_experiment_config(c), ConfigError);
}

TEST(ExperimentConfig, BadValuesAreRejected) {
  for (const char* kv : {"train.phi=1.0", "train.phi=-0.1", "train.lambda=-1", "train.phi=abc",
                         "cluster.c_min=600", "train.dropout=1", "model.max_len=2",
                         "synthetic.noise_rate=1.0", "train.batch_size=0"}) {
    Config c;
    c.apply_override(kv);
    EXPECT_THROW(load_experiment_config(c), ConfigError) << kv;
  }
}

TEST(ExperimentConfig, InfeasibleSyntheticNoiseIsRejected) {
  Config c;
  c.apply_override("synthetic.positive_relations=1");
  c.apply_override("synthetic.noise_rate=0.3");
  EXPECT_THROW(load_experiment_config(c), ConfigError);
}

TEST(ExperimentConfig, RoundTripsThroughFlatConfig) {
  Config c;
  c.apply_override("train.phi=0.05");
  c.apply_override("model.filters=64");
  c.apply_override("synthetic.long_tail=false");
  const auto cfg = load_experiment_config(c);
  const auto again = load_experiment_config(to_config(cfg));
  EXPECT_DOUBLE_EQ(again.train.phi, 0.05);
  EXPECT_EQ(again.model.filters, 64);
  EXPECT_FALSE(again.synthetic.long_tail);
}

TEST(ExperimentConfig, ShippedConfigLoads) {
  const auto cfg = load_experiment_config(Config::parse_file(DCRE_CONFIG_DIR "/synthetic.ini"));
  EXPECT_EQ(cfg.model.filters, 64);
  EXPECT_EQ(cfg.model.word_dim, 25);
  EXPECT_EQ(cfg.synthetic.bags, 2000);
  EXPECT_DOUBLE_EQ(cfg.synthetic.noise_rate, 0.3);
}

}  // namespace
}  // namespace dcre
