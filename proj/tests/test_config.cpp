#include <gtest/gtest.h>

#include <fstream>

#include "efenet/config.hpp"
#include "efenet/errors.hpp"
#include "test_util.hpp"

using namespace efenet;
using nlohmann::json;

TEST(Config, DefaultsWithoutKeys) {
  const RunConfig c = parse_run_config(json::object());
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.synth.n, 4);
  EXPECT_EQ(c.train.iterations, 1000);
  EXPECT_DOUBLE_EQ(c.train.weights.flow1, 0.1);
  EXPECT_FALSE(c.data_root);
}

TEST(Config, ParsesEverySection) {
  const json doc = json::parse(R"({
    "seed": 9, "out": "runs/x", "checkpoint": "m.ckpt",
    "data": {"root": "clips", "count": 5, "eval_count": 2,
             "synthetic": {"height": 64, "width": 32, "n": 3, "motion": "affine", "step_translation": [0.5, 0]}},
    "train": {"learning_rate": 0.001, "iterations": 7, "batch_size": 2},
    "loss_weights": {"sr": 2, "flow1": 0.5, "flow2": 0.25},
    "strategies": {"provider": "noisy-oracle", "noise_sigma": 0.3, "margin": 4}
  })");
  RunConfig c = parse_run_config(doc);
  c.finalize();
  EXPECT_EQ(c.out, "runs/x");
  EXPECT_EQ(*c.data_root, "clips");
  EXPECT_EQ(c.synth.motion, MotionModel::Affine);
  EXPECT_EQ((*c.synth.step_translation)[0], 0.5);
  EXPECT_EQ(c.train.iterations, 7);
  EXPECT_EQ(c.train.n, 3);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.synth.seed, 9u);
  EXPECT_DOUBLE_EQ(c.train.weights.flow2, 0.25);
  EXPECT_EQ(c.strategies.provider, ProviderKind::NoisyOracle);
  EXPECT_EQ(c.strategies.margin, 4);
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_run_config(json::parse(R"({"sed": 1})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"train": {"lr": 1}})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"data": {"synthetic": {"depth": 1}}})")), ConfigError);
}

TEST(Config, BadValuesAreConfigErrors) {
  EXPECT_THROW(parse_run_config(json::parse(R"({"seed": "zero"})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"data": {"synthetic": {"motion": "spiral"}}})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"data": {"synthetic": {"height": 30}}})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"strategies": {"provider": "psychic"}})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"train": []})")), ConfigError);
}

TEST(Config, FileOverridesBaseAndRoundTrips) {
  efenet::testing::TempDir dir("cfg");
  const auto path = dir.path() / "c.json";
  std::ofstream(path) << "// comment\n{\"seed\": 4, \"train\": {\"iterations\": 12}}";
  RunConfig base;
  base.train.batch_size = 3;
  base.train.iterations = 99;
  const RunConfig c = load_run_config(path, base);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.train.iterations, 12);
  EXPECT_EQ(c.train.batch_size, 3);
  const RunConfig again = parse_run_config(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
  EXPECT_THROW(load_run_config(dir.path() / "missing.json"), ConfigError);
  std::ofstream(path, std::ios::trunc) << "{ not json";
  EXPECT_THROW(load_run_config(path), ConfigError);
}
