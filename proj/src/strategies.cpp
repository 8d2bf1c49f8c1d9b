#include "efenet/strategies.hpp"

#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>

#include "efenet/errors.hpp"
#include "efenet/imaging.hpp"
#include "efenet/metrics.hpp"

namespace efenet {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void check_inputs(const Frame& ref_hr, std::span<const Frame> lr) {
  if (lr.empty()) throw std::invalid_argument("alignment: empty LR sequence");
  for (const Frame& f : lr)
    if (f.shape() != lr.front().shape()) throw std::invalid_argument("alignment: LR frames differ in shape");
  if (ref_hr.height() != 4 * lr.front().height() || ref_hr.width() != 4 * lr.front().width())
    throw std::invalid_argument("alignment: reference must be 4x the LR extent");
}

void check_index(int k, std::size_t n, int lowest) {
  if (k < lowest || k > static_cast<int>(n)) throw std::out_of_range("flow provider: frame index out of range");
}

FlowField upscaled_adjacent(const FlowProvider& provider, std::span<const Frame> lr, int k, int h, int w) {
  return resize_flow(provider.adjacent_flow(lr, k), h, w);
}

FlowField refine_padded(std::span<const FlowField> flows, const FlowRefinerParams& refiner) {
  const int h = flows.front().height(), w = flows.front().width();
  std::vector<FlowField> padded;
  padded.reserve(flows.size());
  for (const FlowField& f : flows) padded.emplace_back(pad_reflect(f.tensor(), kFlowNetMultiple));
  const FlowField refined = refine_flows(padded, refiner);
  return FlowField(crop(refined.tensor(), h, w));
}

AlignmentResult single_warp(const Frame& ref_hr, FlowField flow, int frame) {
  AlignmentResult r;
  r.final_flow = std::move(flow);
  r.warped_reference = backward_warp(ref_hr, r.final_flow);
  r.steps.push_back({frame, r.warped_reference, r.final_flow, std::nullopt, std::nullopt});
  return r;
}

}  // namespace

FlowField LearnedFlowProvider::reference_flow(const Frame& ref_hr, std::span<const Frame> lr, int k) const {
  check_index(k, lr.size(), 1);
  return estimate_flow(ref_hr, bicubic_resample(lr[k - 1], 4.0), *params_);
}

FlowField LearnedFlowProvider::adjacent_flow(std::span<const Frame> lr, int k) const {
  check_index(k, lr.size(), 2);
  return estimate_flow(lr[k - 2], lr[k - 1], *params_);
}

OracleFlowProvider::OracleFlowProvider(std::vector<FlowField> gt_flows) : gt_(std::move(gt_flows)) {
  if (gt_.empty()) throw std::invalid_argument("OracleFlowProvider: no ground-truth flows");
}

FlowField OracleFlowProvider::reference_flow(const Frame& ref_hr, std::span<const Frame> lr, int k) const {
  check_index(k, gt_.size(), 1);
  const FlowField& f = gt_[k - 1];
  if (f.height() != ref_hr.height() || f.width() != ref_hr.width() || lr.size() != gt_.size())
    throw std::invalid_argument("OracleFlowProvider: flows do not match the clip");
  return f;
}

FlowField OracleFlowProvider::adjacent_flow(std::span<const Frame> lr, int k) const {
  check_index(k, gt_.size(), 2);
  if (lr.size() != gt_.size()) throw std::invalid_argument("OracleFlowProvider: flows do not match the clip");
  const FlowField hr = adjacent_from_reference_flows(gt_[k - 2], gt_[k - 1]);
  return resize_flow(hr, lr[k - 1].height(), lr[k - 1].width());
}

NoisyOracleFlowProvider::NoisyOracleFlowProvider(std::vector<FlowField> gt_flows, double sigma, std::uint64_t seed)
    : OracleFlowProvider(std::move(gt_flows)), sigma_(sigma), seed_(seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("NoisyOracleFlowProvider: sigma must be >= 0");
}

void NoisyOracleFlowProvider::add_noise(FlowField& f, std::uint64_t stream) const {
  std::mt19937_64 rng(mix(seed_ ^ mix(stream)));
  std::normal_distribution<double> noise(0.0, sigma_);
  for (float& v : f.tensor().span()) v = static_cast<float>(v + noise(rng));
}

FlowField NoisyOracleFlowProvider::reference_flow(const Frame& ref_hr, std::span<const Frame> lr, int k) const {
  FlowField f = OracleFlowProvider::reference_flow(ref_hr, lr, k);
  add_noise(f, 2 * static_cast<std::uint64_t>(k));
  return f;
}

FlowField NoisyOracleFlowProvider::adjacent_flow(std::span<const Frame> lr, int k) const {
  FlowField f = OracleFlowProvider::adjacent_flow(lr, k);
  add_noise(f, 2 * static_cast<std::uint64_t>(k) + 1);
  return f;
}

FlowField adjacent_from_reference_flows(const FlowField& previous, const FlowField& current, int iterations) {
  if (previous.height() != current.height() || previous.width() != current.width())
    throw std::invalid_argument("adjacent_from_reference_flows: dimension mismatch");
  // current(p) = g(p) + previous(p + g(p))
  FlowField g(current.height(), current.width());
  Tensor& gt = g.tensor();
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = current.tensor()[i] - previous.tensor()[i];
  for (int it = 0; it < iterations; ++it) {
    const Tensor sampled = backward_warp(previous.tensor(), g);
    for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = current.tensor()[i] - sampled[i];
  }
  return g;
}

AlignmentResult align_direct(const Frame& ref_hr, std::span<const Frame> lr, const FlowProvider& provider) {
  check_inputs(ref_hr, lr);
  const int n = static_cast<int>(lr.size());
  return single_warp(ref_hr, provider.reference_flow(ref_hr, lr, n), n);
}

AlignmentResult align_recursive(const Frame& ref_hr, std::span<const Frame> lr, const FlowProvider& provider) {
  check_inputs(ref_hr, lr);
  AlignmentResult r;
  r.final_flow = provider.reference_flow(ref_hr, lr, 1);
  r.warped_reference = backward_warp(ref_hr, r.final_flow);
  r.steps.push_back({1, r.warped_reference, r.final_flow, std::nullopt, std::nullopt});
  for (int k = 2; k <= static_cast<int>(lr.size()); ++k) {
    const FlowField step = upscaled_adjacent(provider, lr, k, ref_hr.height(), ref_hr.width());
    r.warped_reference = backward_warp(r.warped_reference, step);
    r.final_flow = compose_flows(r.final_flow, step);
    r.steps.push_back({k, r.warped_reference, r.final_flow, std::nullopt, std::nullopt});
  }
  return r;
}

AlignmentResult align_sequential(const Frame& ref_hr, std::span<const Frame> lr, const FlowProvider& provider) {
  check_inputs(ref_hr, lr);
  AlignmentResult r;
  r.final_flow = provider.reference_flow(ref_hr, lr, 1);
  r.warped_reference = backward_warp(ref_hr, r.final_flow);
  r.steps.push_back({1, r.warped_reference, r.final_flow, std::nullopt, std::nullopt});
  for (int k = 2; k <= static_cast<int>(lr.size()); ++k) {
    const FlowField step = upscaled_adjacent(provider, lr, k, ref_hr.height(), ref_hr.width());
    r.final_flow = compose_flows(r.final_flow, step);
    r.warped_reference = backward_warp(ref_hr, r.final_flow);
    r.steps.push_back({k, r.warped_reference, r.final_flow, std::nullopt, std::nullopt});
  }
  return r;
}

AlignmentResult align_global_refined(const Frame& ref_hr, std::span<const Frame> lr,
                                     const FlowEstimatorParams& flow_params, const FlowRefinerParams& refiner) {
  check_inputs(ref_hr, lr);
  const std::vector<FlowField> flows = estimate_flows_sequence(ref_hr, lr, flow_params);
  return single_warp(ref_hr, refine_padded(flows, refiner), static_cast<int>(lr.size()));
}

AlignmentResult align_global_refined(const Frame& ref_hr, std::span<const Frame> lr, const FlowProvider& provider,
                                     const FlowRefinerParams* refiner) {
  check_inputs(ref_hr, lr);
  const int n = static_cast<int>(lr.size());
  if (!refiner) return single_warp(ref_hr, provider.reference_flow(ref_hr, lr, n), n);
  std::vector<FlowField> flows;
  for (int k = 1; k <= n; ++k) flows.push_back(provider.reference_flow(ref_hr, lr, k));
  return single_warp(ref_hr, refine_padded(flows, *refiner), n);
}

void annotate(AlignmentResult& result, const ClipSample& clip, int margin) {
  for (AlignmentStep& s : result.steps) {
    const std::size_t i = static_cast<std::size_t>(s.frame - 1);
    if (clip.gt_flows) s.epe_px = endpoint_error(s.flow, (*clip.gt_flows)[i], margin);
    if (clip.gt_hr_frames)
      s.warp_psnr_db = psnr(crop_interior(s.warped, margin), crop_interior((*clip.gt_hr_frames)[i], margin));
  }
}

ProviderKind parse_provider_kind(const std::string& name) {
  if (name == "learned") return ProviderKind::Learned;
  if (name == "oracle") return ProviderKind::Oracle;
  if (name == "noisy-oracle" || name == "noisy") return ProviderKind::NoisyOracle;
  throw std::invalid_argument("unknown flow provider '" + name + "'");
}

std::string to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Learned: return "learned";
    case ProviderKind::Oracle: return "oracle";
    case ProviderKind::NoisyOracle: return "noisy-oracle";
  }
  return "unknown";
}

std::vector<StrategySummary> StrategyReport::summary() const {
  std::vector<StrategySummary> out;
  for (const char* name : kStrategyNames) {
    StrategySummary s{name, 0.0, 0.0, std::nullopt};
    int count = 0, epe_count = 0;
    double epe = 0.0;
    for (const StrategyRow& r : rows) {
      if (r.strategy != name) continue;
      s.warp_psnr_db += r.warp_psnr_db;
      s.warp_ssim += r.warp_ssim;
      ++count;
      if (r.epe_px) {
        epe += *r.epe_px;
        ++epe_count;
      }
    }
    if (count) {
      s.warp_psnr_db /= count;
      s.warp_ssim /= count;
    }
    if (epe_count) s.epe_px = epe / epe_count;
    out.push_back(s);
  }
  return out;
}

void StrategyReport::write_csv(std::ostream& out) const {
  out << "clip_id,strategy,warp_psnr_db,warp_ssim,epe_px\n";
  for (const StrategyRow& r : rows)
    out << r.clip_id << ',' << r.strategy << ',' << format_metric(r.warp_psnr_db) << ','
        << format_metric(r.warp_ssim) << ',' << format_metric(r.epe_px) << '\n';
  for (const StrategySummary& s : summary())
    out << "mean," << s.strategy << ',' << format_metric(s.warp_psnr_db) << ',' << format_metric(s.warp_ssim)
        << ',' << format_metric(s.epe_px) << '\n';
}

StrategyReport compare_strategies(std::span<const ClipSample> dataset, const StrategyOptions& options,
                                  const FlowEstimatorParams* estimator, const FlowRefinerParams* refiner) {
  if (dataset.empty()) throw DataError("compare_strategies: empty dataset");
  if (options.provider == ProviderKind::Learned && !estimator)
    throw std::invalid_argument("compare_strategies: learned provider needs estimator parameters");
  StrategyReport report;
  for (std::size_t ci = 0; ci < dataset.size(); ++ci) {
    const ClipSample& clip = dataset[ci];
    clip.validate();
    std::unique_ptr<FlowProvider> provider;
    switch (options.provider) {
      case ProviderKind::Learned:
        provider = std::make_unique<LearnedFlowProvider>(*estimator);
        break;
      case ProviderKind::Oracle:
      case ProviderKind::NoisyOracle:
        if (!clip.gt_flows) throw DataError("clip '" + clip.id + "' has no ground-truth flows for the oracle");
        if (options.provider == ProviderKind::Oracle)
          provider = std::make_unique<OracleFlowProvider>(*clip.gt_flows);
        else
          provider = std::make_unique<NoisyOracleFlowProvider>(*clip.gt_flows, options.noise_sigma,
                                                               mix(options.seed) ^ mix(ci + 1));
        break;
    }
    const std::span<const Frame> lr(clip.lr_frames);
    AlignmentResult results[4] = {
        align_direct(clip.reference_hr, lr, *provider),
        align_recursive(clip.reference_hr, lr, *provider),
        align_sequential(clip.reference_hr, lr, *provider),
        options.provider == ProviderKind::Learned && refiner
            ? align_global_refined(clip.reference_hr, lr, *estimator, *refiner)
            : align_global_refined(clip.reference_hr, lr, *provider, refiner),
    };
    const Frame target =
        clip.gt_hr_frames ? clip.gt_hr_frames->back() : bicubic_resample(clip.lr_frames.back(), 4.0);
    const Frame target_interior = crop_interior(target, options.margin);
    for (int s = 0; s < 4; ++s) {
      StrategyRow row{clip.id, kStrategyNames[s], 0.0, 0.0, std::nullopt};
      const Frame warped = crop_interior(results[s].warped_reference, options.margin);
      row.warp_psnr_db = psnr(warped, target_interior);
      row.warp_ssim = ssim(warped, target_interior);
      if (clip.gt_flows) row.epe_px = endpoint_error(results[s].final_flow, clip.gt_flows->back(), options.margin);
      report.rows.push_back(std::move(row));
      if (ci == 0) report.first_clip_warps.push_back(results[s].warped_reference);
    }
  }
  return report;
}

}  // namespace efenet
