#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efenet/data.hpp"
#include "efenet/flow_estimator.hpp"
#include "efenet/flow_refiner.hpp"
#include "efenet/frame.hpp"

namespace efenet {

/// Source of pairwise flows for the alignment strategies. Frames are indexed
/// 1..n; frame 0 is the HR reference.
class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  /// Cross-scale flow from frame k back to the reference, on the HR grid.
  virtual FlowField reference_flow(const Frame& ref_hr, std::span<const Frame> lr_sequence, int k) const = 0;
  /// Flow from LR frame k back to LR frame k-1 (k >= 2), on the LR grid.
  virtual FlowField adjacent_flow(std::span<const Frame> lr_sequence, int k) const = 0;
};

/// Uses the flow estimator network.
class LearnedFlowProvider final : public FlowProvider {
 public:
  explicit LearnedFlowProvider(const FlowEstimatorParams& params) : params_(&params) {}
  FlowField reference_flow(const Frame& ref_hr, std::span<const Frame> lr_sequence, int k) const override;
  FlowField adjacent_flow(std::span<const Frame> lr_sequence, int k) const override;

 private:
  const FlowEstimatorParams* params_;
};

/// Derives exact pairwise flows from a clip's ground-truth reference flows.
class OracleFlowProvider : public FlowProvider {
 public:
  explicit OracleFlowProvider(std::vector<FlowField> gt_flows);
  FlowField reference_flow(const Frame& ref_hr, std::span<const Frame> lr_sequence, int k) const override;
  FlowField adjacent_flow(std::span<const Frame> lr_sequence, int k) const override;

 private:
  std::vector<FlowField> gt_;
};

/// Oracle flows plus i.i.d. Gaussian noise of `sigma` pixels (in the units of
/// the requested grid) per pixel and component. Noise for a given request is a
/// pure function of (seed, request), independent of call order.
class NoisyOracleFlowProvider final : public OracleFlowProvider {
 public:
  NoisyOracleFlowProvider(std::vector<FlowField> gt_flows, double sigma, std::uint64_t seed);
  FlowField reference_flow(const Frame& ref_hr, std::span<const Frame> lr_sequence, int k) const override;
  FlowField adjacent_flow(std::span<const Frame> lr_sequence, int k) const override;

 private:
  void add_noise(FlowField& f, std::uint64_t stream) const;
  double sigma_;
  std::uint64_t seed_;
};

/// Pairwise flow g with frame_k(p) = frame_{k-1}(p + g(p)), from reference
/// flows of frames k-1 and k (fixed-point solution).
FlowField adjacent_from_reference_flows(const FlowField& previous, const FlowField& current,
                                        int iterations = 20);

struct AlignmentStep {
  int frame = 0;
  /// Reference aligned to `frame` after this hop.
  Frame warped;
  /// Accumulated flow from `frame` back to the reference.
  FlowField flow;
  std::optional<double> epe_px;
  std::optional<double> warp_psnr_db;
};

struct AlignmentResult {
  Frame warped_reference;
  FlowField final_flow;
  std::vector<AlignmentStep> steps;
};

/// One cross-scale flow to the furthest frame, one warp.
AlignmentResult align_direct(const Frame& ref_hr, std::span<const Frame> lr_sequence, const FlowProvider& provider);
/// Warps the running reference by by every adjacent flow in turn.
AlignmentResult align_recursive(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                const FlowProvider& provider);
/// Composes the adjacent flows into one flow, then warps once.
AlignmentResult align_sequential(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                 const FlowProvider& provider);
/// Estimates every cross-scale flow, refines the furthest one, warps once.
AlignmentResult align_global_refined(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                     const FlowEstimatorParams& flow_params, const FlowRefinerParams& refiner_params);
/// Same scheme with flows from any provider; a null refiner keeps the
/// furthest flow unchanged (the residual refiner at initialization).
AlignmentResult align_global_refined(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                     const FlowProvider& provider, const FlowRefinerParams* refiner_params);

/// Fills per-step PSNR (against ground-truth HR frames) and EPE (against
/// ground-truth flows) where the clip provides them.
void annotate(AlignmentResult& result, const ClipSample& clip, int margin);

enum class ProviderKind { Learned, Oracle, NoisyOracle };
ProviderKind parse_provider_kind(const std::string& name);
std::string to_string(ProviderKind kind);

struct StrategyOptions {
  ProviderKind provider = ProviderKind::Oracle;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;
  /// Pixels excluded on each side for warp PSNR/SSIM and EPE.
  int margin = 8;
};

inline constexpr const char* kStrategyNames[4] = {"direct", "recursive", "sequential", "refined"};

struct StrategyRow {
  std::string clip_id;
  std::string strategy;
  double warp_psnr_db = 0.0;
  double warp_ssim = 0.0;
  std::optional<double> epe_px;
};

struct StrategySummary {
  std::string strategy;
  double warp_psnr_db = 0.0;
  double warp_ssim = 0.0;
  std::optional<double> epe_px;
};

struct StrategyReport {
  std::vector<StrategyRow> rows;
  /// Warped references of the first clip, in kStrategyNames order.
  std::vector<Frame> first_clip_warps;

  /// Mean per strategy, in kStrategyNames order.
  std::vector<StrategySummary> summary() const;
  /// Per-clip rows followed by one aggregate row per strategy (clip_id "mean").
  void write_csv(std::ostream& out) const;
};

/// Runs all four strategies on every clip. Without an estimator the learned
/// provider is unavailable; without a refiner the refined strategy keeps the
/// provider's furthest flow.
StrategyReport compare_strategies(std::span<const ClipSample> dataset, const StrategyOptions& options,
                                  const FlowEstimatorParams* estimator = nullptr,
                                  const FlowRefinerParams* refiner = nullptr);

}  // namespace efenet
