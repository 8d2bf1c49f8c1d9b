#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "efenet/data.hpp"
#include "efenet/losses.hpp"
#include "efenet/metrics.hpp"
#include "efenet/synthesis.hpp"

namespace efenet {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int iterations = 1000;
  int batch_size = 1;
  LossWeights weights;
  /// Border excluded from the warping losses.
  int loss_border = kWarpLossBorder;
  std::uint64_t seed = 0;
  /// Save every this many iterations; 0 disables periodic checkpoints.
  int checkpoint_interval = 0;
  std::filesystem::path checkpoint_path;
  /// Sequence length n (LR frames per sample).
  int n = 4;

  void validate() const;
};

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam step for a flat parameter block; `step` is the
/// 1-based update count. Arithmetic is carried out in double.
template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, std::int64_t step,
                 const AdamHyper& hyper);

/// Everything needed to continue training exactly where it stopped.
struct TrainState {
  ModelParams params;
  /// First and second Adam moments, aligned with params.parameters().
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
  std::int64_t adam_step = 0;
  /// Completed iterations.
  int iteration = 0;
  /// Serialized std::mt19937_64 state of the batch sampler.
  std::string rng_state;
  /// JSON snapshot of the configuration that produced this state.
  std::string config_json;

  /// Fresh state: zero-headed model, zero moments, seeded sampler.
  static TrainState initial(int image_channels, const TrainConfig& config);
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic, version, payload, CRC32 of the payload.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
/// Throws DataError on a missing file, bad magic, version mismatch or checksum
/// failure; nothing is returned unless the whole file parsed.
TrainState load_checkpoint(const std::filesystem::path& path);

struct LogRow {
  int iteration = 0;
  LossComponents loss;
  double total = 0.0;
  double wallclock_s = 0.0;
};

/// Header "iteration,l_sr,l_flow1,l_flow2,total,wallclock_s".
void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const LogRow& row);

struct TrainResult {
  TrainState state;
  std::vector<LogRow> log;
};

using LogCallback = std::function<void(const LogRow&)>;

/// Runs iterations state.iteration + 1 .. config.iterations. Batches are drawn
/// with replacement from the seeded sampler; each sample contributes its
/// losses to the batch mean before one Adam step over all parameter groups.
/// Throws NumericError naming the batch when a loss becomes non-finite.
TrainResult train(const TrainConfig& config, std::span<const ClipSample> dataset, TrainState state,
                  const LogCallback& on_row = {});
TrainResult train(const TrainConfig& config, std::span<const ClipSample> dataset, const LogCallback& on_row = {});

/// Losses of a single sample under the current parameters (no update).
LossComponents sample_losses(const ModelParams& params, const ClipSample& clip, int loss_border = kWarpLossBorder);

/// PSNR/SSIM of the super-resolved furthest frame against its ground truth,
/// plus the refined-flow EPE when ground-truth flows exist.
MetricReport evaluate(const ModelParams& params, std::span<const ClipSample> dataset);
/// Same report for plain bicubic x4 upsampling of the furthest LR frame.
MetricReport evaluate_bicubic(std::span<const ClipSample> dataset);

}  // namespace efenet
