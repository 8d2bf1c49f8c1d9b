#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "efenet/data.hpp"
#include "efenet/strategies.hpp"
#include "efenet/training.hpp"

namespace efenet {

/// Run configuration shared by all subcommands.
///
/// JSON schema (every key optional, unknown keys rejected):
///
///   {
///     "seed": 0,
///     "out": "runs/example",
///     "checkpoint": "runs/example/model.ckpt",
///     "data": {
///       "root": "data/synth",          // clip folders; omitted -> synthetic clips in memory
///       "count": 64,                   // synthetic training clips
///       "eval_count": 20,              // synthetic evaluation clips
///       "synthetic": {
///         "height": 128, "width": 128, "channels": 3, "n": 4,
///         "motion": "translation",     // or "affine"
///         "max_step_displacement": 0.75,
///         "step_translation": [0.5, 0.0],
///         "noise_sigma": 0.0,
///         "texture_bandwidth": 0.0625, "texture_components": 32, "texture_contrast": 0.12
///       }
///     },
///     "train": {
///       "learning_rate": 1e-4, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8,
///       "iterations": 1000, "batch_size": 1, "checkpoint_interval": 0, "loss_border": 4
///     },
///     "loss_weights": { "sr": 1.0, "flow1": 0.1, "flow2": 0.1 },
///     "strategies": { "provider": "noisy-oracle", "noise_sigma": 0.5, "margin": 8 }
///   }
///
/// The sequence length n of training follows data.synthetic.n. The top-level
/// seed drives synthetic data, training and strategy noise.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> data_root;
  int synth_count = 64;
  int eval_count = 20;
  SynthClipConfig synth;
  TrainConfig train;
  StrategyOptions strategies;

  /// Propagates the top-level seed and sequence length into the sections.
  void finalize();
};

/// Parses a JSON document; throws ConfigError on syntax errors, type errors,
/// invalid values or unknown keys.
RunConfig parse_run_config(const nlohmann::json& doc, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
nlohmann::json to_json(const RunConfig& config);

}  // namespace efenet
