#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efenet/frame.hpp"

namespace efenet {

/// One training or evaluation sample: an HR reference plus n LR frames.
struct ClipSample {
  std::string id;
  Frame reference_hr;
  std::vector<Frame> lr_frames;
  std::optional<std::vector<Frame>> gt_hr_frames;
  /// Backward flows from frame i to the reference, on the HR grid.
  std::optional<std::vector<FlowField>> gt_flows;

  int n() const { return static_cast<int>(lr_frames.size()); }
  /// Throws std::invalid_argument if the shape invariants do not hold.
  void validate() const;
};

enum class MotionModel { Translation, Affine };

struct SynthClipConfig {
  int height = 128;
  int width = 128;
  int channels = 3;
  int n = 4;
  MotionModel motion = MotionModel::Translation;
  /// Upper bound on the per-step displacement in HR pixels.
  double max_step_displacement = 0.75;
  /// Fixed per-step translation; overrides the random draw when set.
  std::optional<std::array<double, 2>> step_translation;
  std::uint64_t seed = 0;
  /// Gaussian noise added to the LR frames, in intensity units.
  double noise_sigma = 0.0;
  /// Standard deviation of the texture spectrum, cycles per HR pixel.
  double texture_bandwidth = 0.0625;
  int texture_components = 32;
  /// Per-channel intensity standard deviation around 0.5.
  double texture_contrast = 0.12;

  void validate() const;
};

MotionModel parse_motion_model(const std::string& name);
std::string to_string(MotionModel m);

/// Renders an analytic band-limited texture and its motion sequence.
/// Frame i is the texture sampled at B^i(p), so gt_flows[i-1](p) = B^i(p) - p
/// exactly, where B is the per-step backward map.
ClipSample generate_synth_clip(const SynthClipConfig& config);

/// `count` clips with seeds derived from config.seed; ids are clip_0000, ...
std::vector<ClipSample> generate_synth_dataset(const SynthClipConfig& config, int count);

/// Frame 0 becomes the reference, frames 1..n are bicubically downsampled by
/// 1/scale and kept as ground truth.
ClipSample make_training_sample(std::span<const Frame> hr_clip, int scale = 4);

/// Bicubic x4 upsampling of every LR frame.
std::vector<Frame> upsample_lr(std::span<const Frame> lr_frames);

/// Loads root/<clip_id>/frame_XX.png (and optional flow_XX.flo) in
/// lexicographic clip order. Malformed clips are skipped with a warning.
std::vector<ClipSample> load_clip_dataset(const std::filesystem::path& root);

/// Writes a clip in the dataset layout: HR frames when ground truth is
/// present, otherwise the reference followed by the LR frames.
void save_clip(const std::filesystem::path& dir, const ClipSample& clip);

}  // namespace efenet
