#include "efenet/synthesis.hpp"

#include <stdexcept>

#include "efenet/imaging.hpp"

namespace efenet {
namespace {

constexpr int kDecoderFuseWidth = 16;

ag::Var act(ag::Var v) { return ag::leaky_relu(v, nn::kLeakySlope); }

ag::Var cat(std::initializer_list<ag::Var> parts) {
  return ag::concat(std::span<const ag::Var>(parts.begin(), parts.size()));
}

Tensor shifted(const Tensor& t, float offset) {
  Tensor out = t;
  for (float& v : out.span()) v += offset;
  return out;
}

template <class Params>
GraphPyramid encode_impl(ag::Graph& g, Params& params, ag::Var image) {
  const Shape s = image.shape();
  if (s.c != params.image_channels) throw std::invalid_argument("encode: channel mismatch");
  if (s.h % 8 || s.w % 8) throw std::invalid_argument("encode: extent not divisible by 8");
  auto& enc = params.encoder;
  GraphPyramid p;
  p[0] = act(enc[0](g, image));
  for (int s = 1; s < kPyramidLevels; ++s) p[s] = act(enc[s](g, p[s - 1]));
  return p;
}

template <class Params>
ag::Var decode_impl(ag::Graph& g, Params& params, ag::Var lr_up, ag::Var warped_ref,
                    const GraphPyramid& lr_pyr, const GraphPyramid& warped_pyr) {
  for (int s = 0; s < kPyramidLevels; ++s)
    if (lr_pyr[s].shape() != warped_pyr[s].shape())
      throw std::invalid_argument("decode: pyramid shape mismatch at level " + std::to_string(s + 1));
  if (lr_up.shape() != warped_ref.shape() || !lr_up.shape().same_spatial(lr_pyr[0].shape()))
    throw std::invalid_argument("decode: image/pyramid extent mismatch");
  auto& dec = params.decoder;
  ag::Var u = cat({lr_pyr[3], warped_pyr[3]});
  u = cat({act(dec[0](g, u)), lr_pyr[2], warped_pyr[2]});
  u = cat({act(dec[1](g, u)), lr_pyr[1], warped_pyr[1]});
  u = cat({act(dec[2](g, u)), lr_pyr[0], warped_pyr[0], lr_up, warped_ref});
  u = act(dec[3](g, u));
  return dec[4](g, u);
}

ag::Var scale_flow_impl(ag::Graph&, ag::Var flow, int level) {
  if (level < 1 || level > kPyramidLevels) throw std::invalid_argument("scale_flow: level out of range");
  const int f = 1 << (level - 1);
  if (flow.shape().h % f || flow.shape().w % f)
    throw std::invalid_argument("scale_flow: extent not divisible by 2^(level-1)");
  for (int s = 1; s < level; ++s) flow = ag::scale(ag::avg_pool2(flow), 0.5f);
  return flow;
}

template <class Params>
PipelineNodes pipeline_impl(ag::Graph& g, Params& params, const Tensor& ref_hr,
                            std::span<const Tensor> lr_up) {
  const int n = params.sequence_length();
  if (static_cast<int>(lr_up.size()) != n)
    throw std::invalid_argument("forward_pipeline: expected " + std::to_string(n) + " frames, got " +
                                std::to_string(lr_up.size()));
  for (const Tensor& t : lr_up)
    if (t.shape() != ref_hr.shape())
      throw std::invalid_argument("forward_pipeline: upsampled frame " + to_string(t.shape()) +
                                  " does not match reference " + to_string(ref_hr.shape()));
  const int h = ref_hr.height(), w = ref_hr.width();
  const Tensor ref = pad_reflect(ref_hr, kPipelineMultiple);

  PipelineNodes out;
  std::vector<ag::Var> padded_flows;
  for (const Tensor& up : lr_up) {
    ag::Var f = estimate_flow(g, params.estimator, ref, pad_reflect(up, kPipelineMultiple));
    padded_flows.push_back(f);
    out.flows.push_back(ag::crop(f, h, w));
  }
  ag::Var refined = refine_flows(g, params.refiner, padded_flows);
  out.refined = ag::crop(refined, h, w);

  const Tensor last_up = pad_reflect(lr_up.back(), kPipelineMultiple);
  ag::Var lr_in = g.constant(shifted(last_up, -0.5f));
  ag::Var ref_in = g.constant(shifted(ref, -0.5f));
  GraphPyramid lr_pyr = encode_impl(g, params.synthesis, lr_in);
  GraphPyramid ref_pyr = encode_impl(g, params.synthesis, ref_in);
  ag::Var warped_ref = ag::warp(ref_in, refined);
  GraphPyramid warped_pyr;
  for (int s = 0; s < kPyramidLevels; ++s)
    warped_pyr[s] = ag::warp(ref_pyr[s], scale_flow_impl(g, refined, s + 1));
  ag::Var residual = decode_impl(g, params.synthesis, lr_in, warped_ref, lr_pyr, warped_pyr);
  out.output = ag::crop(ag::add(g.constant(last_up), residual), h, w);
  return out;
}

Tensor clamp01(Tensor t) {
  for (float& v : t.span()) v = std::clamp(v, 0.0f, 1.0f);
  return t;
}

std::vector<Tensor> upsample_all(const Frame& ref_hr, std::span<const Frame> lr_sequence) {
  if (lr_sequence.empty()) throw std::invalid_argument("super_resolve: empty LR sequence");
  std::vector<Tensor> ups;
  for (const Frame& f : lr_sequence) {
    if (f.shape() != lr_sequence.front().shape())
      throw std::invalid_argument("super_resolve: inconsistent LR sizes");
    if (ref_hr.height() != 4 * f.height() || ref_hr.width() != 4 * f.width() ||
        ref_hr.channels() != f.channels())
      throw std::invalid_argument("super_resolve: reference must be 4x the LR extent");
    ups.push_back(bicubic_resample(f.tensor(), 4.0));
  }
  return ups;
}

}  // namespace

SynthesisParams SynthesisParams::create(int image_channels, std::uint64_t seed, nn::HeadInit head) {
  if (image_channels != 1 && image_channels != 3)
    throw std::invalid_argument("SynthesisParams: channels must be 1 or 3");
  SynthesisParams p;
  p.image_channels = image_channels;
  const auto& c = kPyramidChannels;
  auto& E = p.encoder.layers;
  E.push_back(nn::conv3x3("encoder.level1", image_channels, c[0], 1));
  E.push_back(nn::conv3x3("encoder.level2", c[0], c[1], 2));
  E.push_back(nn::conv3x3("encoder.level3", c[1], c[2], 2));
  E.push_back(nn::conv3x3("encoder.level4", c[2], c[3], 2));
  auto& D = p.decoder.layers;
  D.push_back(nn::deconv4x4("decoder.up3", 2 * c[3], c[2]));
  D.push_back(nn::deconv4x4("decoder.up2", 3 * c[2], c[1]));
  D.push_back(nn::deconv4x4("decoder.up1", 3 * c[1], c[0]));
  D.push_back(nn::conv3x3("decoder.fuse", 3 * c[0] + 2 * image_channels, kDecoderFuseWidth, 1));
  D.push_back(nn::conv3x3("decoder.head", kDecoderFuseWidth, image_channels, 1));
  p.encoder.initialize(seed, nn::HeadInit::Random);
  p.decoder.initialize(seed + 1, head);
  return p;
}

std::vector<ag::Parameter*> SynthesisParams::parameters() {
  auto out = encoder.parameters();
  for (auto* p : decoder.parameters()) out.push_back(p);
  return out;
}

std::vector<const ag::Parameter*> SynthesisParams::parameters() const {
  auto out = encoder.parameters();
  for (auto* p : decoder.parameters()) out.push_back(p);
  return out;
}

ModelParams ModelParams::create(int image_channels, int sequence_length, std::uint64_t seed,
                                nn::HeadInit head) {
  ModelParams m;
  m.estimator = FlowEstimatorParams::create(image_channels, seed * 4 + 1, head);
  m.refiner = FlowRefinerParams::create(sequence_length, seed * 4 + 2, head);
  m.synthesis = SynthesisParams::create(image_channels, seed * 4 + 3, head);
  return m;
}

std::vector<ag::Parameter*> ModelParams::parameters() {
  auto out = estimator.parameters();
  for (auto* p : refiner.parameters()) out.push_back(p);
  for (auto* p : synthesis.parameters()) out.push_back(p);
  return out;
}

std::vector<const ag::Parameter*> ModelParams::parameters() const {
  auto out = estimator.parameters();
  for (auto* p : refiner.parameters()) out.push_back(p);
  for (auto* p : synthesis.parameters()) out.push_back(p);
  return out;
}

void ModelParams::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

GraphPyramid encode(ag::Graph& g, SynthesisParams& params, ag::Var image) {
  return encode_impl(g, params, image);
}

ag::Var scale_flow(ag::Graph& g, ag::Var flow, int level) { return scale_flow_impl(g, flow, level); }

ag::Var decode(ag::Graph& g, SynthesisParams& params, ag::Var lr_up, ag::Var warped_ref,
               const GraphPyramid& lr_pyramid, const GraphPyramid& warped_pyramid) {
  return decode_impl(g, params, lr_up, warped_ref, lr_pyramid, warped_pyramid);
}

PipelineNodes forward_pipeline(ag::Graph& g, ModelParams& params, const Tensor& ref_hr,
                               std::span<const Tensor> lr_upsampled) {
  return pipeline_impl(g, params, ref_hr, lr_upsampled);
}

PipelineNodes forward_pipeline(ag::Graph& g, const ModelParams& params, const Tensor& ref_hr,
                               std::span<const Tensor> lr_upsampled) {
  return pipeline_impl(g, params, ref_hr, lr_upsampled);
}

FeaturePyramid encode(const Frame& frame, const SynthesisParams& params) {
  ag::Graph g;
  GraphPyramid p = encode_impl(g, params, g.constant(shifted(frame.tensor(), -0.5f)));
  FeaturePyramid out;
  for (int s = 0; s < kPyramidLevels; ++s) out.levels[s] = p[s].value();
  return out;
}

FlowField scale_flow(const FlowField& flow, int level) {
  ag::Graph g;
  return FlowField(scale_flow_impl(g, g.constant(flow.tensor()), level).value());
}

std::pair<Frame, FeaturePyramid> warp_reference(const Frame& ref_hr, const FeaturePyramid& ref_pyramid,
                                                const FlowField& refined_flow) {
  if (!ref_hr.shape().same_spatial(refined_flow.tensor().shape()))
    throw std::invalid_argument("warp_reference: flow extent differs from reference");
  std::pair<Frame, FeaturePyramid> out{backward_warp(ref_hr, refined_flow), {}};
  for (int s = 0; s < kPyramidLevels; ++s) {
    const Tensor& level = ref_pyramid.levels[s];
    const FlowField scaled = scale_flow(refined_flow, s + 1);
    if (!level.shape().same_spatial(scaled.tensor().shape()))
      throw std::invalid_argument("warp_reference: pyramid level " + std::to_string(s + 1) +
                                  " has unexpected extent");
    out.second.levels[s] = backward_warp(level, scaled);
  }
  return out;
}

Frame decode(const Frame& lr_up, const Frame& warped_ref, const FeaturePyramid& lr_pyramid,
             const FeaturePyramid& warped_ref_pyramid, const SynthesisParams& params) {
  ag::Graph g;
  GraphPyramid lp, wp;
  for (int s = 0; s < kPyramidLevels; ++s) {
    lp[s] = g.constant(lr_pyramid.levels[s]);
    wp[s] = g.constant(warped_ref_pyramid.levels[s]);
  }
  ag::Var residual = decode_impl(g, params, g.constant(shifted(lr_up.tensor(), -0.5f)),
                                 g.constant(shifted(warped_ref.tensor(), -0.5f)), lp, wp);
  Tensor out = lr_up.tensor();
  const Tensor& r = residual.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += r[i];
  return Frame(std::move(out));
}

SuperResolveTrace super_resolve_trace(const Frame& ref_hr, std::span<const Frame> lr_sequence,
                                      const ModelParams& params) {
  const std::vector<Tensor> ups = upsample_all(ref_hr, lr_sequence);
  ag::Graph g;
  PipelineNodes nodes = pipeline_impl(g, params, ref_hr.tensor(), ups);
  SuperResolveTrace trace{Frame(clamp01(nodes.output.value())), {}, FlowField(nodes.refined.value())};
  for (const ag::Var& f : nodes.flows) trace.flows.emplace_back(f.value());
  return trace;
}

Frame super_resolve(const Frame& ref_hr, std::span<const Frame> lr_sequence, const ModelParams& params) {
  return super_resolve_trace(ref_hr, lr_sequence, params).output;
}

}  // namespace efenet
