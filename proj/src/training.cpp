#include "efenet/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "efenet/errors.hpp"
#include "efenet/imaging.hpp"

namespace efenet {
namespace {

std::uint64_t sampler_seed(std::uint64_t seed) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string serialize(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 deserialize(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw DataError("corrupt sampler state");
  return rng;
}

struct PreparedClip {
  const ClipSample* clip;
  std::vector<Tensor> lr_up;
};

std::vector<PreparedClip> prepare(std::span<const ClipSample> dataset, int n) {
  std::vector<PreparedClip> out;
  out.reserve(dataset.size());
  for (const ClipSample& c : dataset) {
    c.validate();
    if (c.n() != n)
      throw DataError("clip '" + c.id + "' has n = " + std::to_string(c.n()) + ", configuration expects " +
                      std::to_string(n));
    if (!c.gt_hr_frames) throw DataError("clip '" + c.id + "' has no ground-truth HR frames");
    PreparedClip p{&c, {}};
    for (const Frame& f : upsample_lr(c.lr_frames)) p.lr_up.push_back(f.tensor());
    out.push_back(std::move(p));
  }
  return out;
}

// Builds the loss graph of one sample; returns the scalar total node and
// fills the unweighted components.
template <class Params>
ag::Var sample_graph(ag::Graph& g, Params& params, const PreparedClip& p, const LossWeights& w, double scale,
                     int border, LossComponents& out) {
  const ClipSample& c = *p.clip;
  const Tensor& ref = c.reference_hr.tensor();
  const PipelineNodes nodes = forward_pipeline(g, params, ref, p.lr_up);
  const std::vector<Frame>& gt = *c.gt_hr_frames;

  std::vector<ag::Var> terms;
  std::vector<double> weights;
  terms.push_back(sr_loss_node(nodes.output, gt.back().tensor()));
  weights.push_back(w.sr * scale);
  out.sr = terms.back().scalar();
  out.flow1 = 0.0;
  for (std::size_t i = 0; i < nodes.flows.size(); ++i) {
    terms.push_back(warp_loss_node(ref, nodes.flows[i], gt[i].tensor(), border, 0.5));
    weights.push_back(w.flow1 * scale);
    out.flow1 += terms.back().scalar();
  }
  terms.push_back(warp_loss_node(ref, nodes.refined, gt.back().tensor(), border, 1.0));
  weights.push_back(w.flow2 * scale);
  out.flow2 = terms.back().scalar();
  return ag::weighted_sum(terms, weights);
}

bool finite(const LossComponents& c) {
  return std::isfinite(c.sr) && std::isfinite(c.flow1) && std::isfinite(c.flow2);
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("train.iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw ConfigError("train.beta1 and train.beta2 must lie in (0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be > 0");
  if (checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval must be >= 0");
  if (n < 1) throw ConfigError("train.n must be >= 1");
  if (loss_border < 0) throw ConfigError("train.loss_border must be >= 0");
  try {
    weights.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, std::int64_t step,
                 const AdamHyper& h) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw std::invalid_argument("adam_update: size mismatch");
  if (step < 1) throw std::invalid_argument("adam_update: step must be >= 1");
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * g;
    const double vi = h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = h.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + h.epsilon);
    param[i] = static_cast<T>(static_cast<double>(param[i]) - update);
  }
}

template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                 std::int64_t, const AdamHyper&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, std::int64_t, const AdamHyper&);

TrainState TrainState::initial(int image_channels, const TrainConfig& config) {
  TrainState s;
  s.params = ModelParams::create(image_channels, config.n, config.seed, nn::HeadInit::Zero);
  for (const ag::Parameter* p : std::as_const(s.params).parameters()) {
    s.adam_m.emplace_back(p->value.shape());
    s.adam_v.emplace_back(p->value.shape());
  }
  s.rng_state = serialize(std::mt19937_64(sampler_seed(config.seed)));
  return s;
}

void write_log_header(std::ostream& out) { out << "iteration,l_sr,l_flow1,l_flow2,total,wallclock_s\n"; }

void write_log_row(std::ostream& out, const LogRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.3f\n", r.iteration, r.loss.sr, r.loss.flow1,
                r.loss.flow2, r.total, r.wallclock_s);
  out << buf;
}

TrainResult train(const TrainConfig& config, std::span<const ClipSample> dataset, const LogCallback& on_row) {
  if (dataset.empty()) throw DataError("train: empty dataset");
  return train(config, dataset, TrainState::initial(dataset.front().reference_hr.channels(), config), on_row);
}

TrainResult train(const TrainConfig& config, std::span<const ClipSample> dataset, TrainState state,
                  const LogCallback& on_row) {
  config.validate();
  if (dataset.empty()) throw DataError("train: empty dataset");
  if (state.params.sequence_length() != config.n)
    throw ConfigError("train: model sequence length differs from train.n");
  const std::vector<PreparedClip> clips = prepare(dataset, config.n);
  if (clips.front().clip->reference_hr.channels() != state.params.image_channels())
    throw DataError("train: dataset channels differ from the model");

  std::mt19937_64 rng = deserialize(state.rng_state);
  std::uniform_int_distribution<std::size_t> pick(0, clips.size() - 1);
  const AdamHyper hyper{config.learning_rate, config.beta1, config.beta2, config.epsilon};
  const auto params = state.params.parameters();
  if (state.adam_m.size() != params.size() || state.adam_v.size() != params.size())
    throw DataError("train: optimizer state does not match the model");

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  for (int it = state.iteration + 1; it <= config.iterations; ++it) {
    std::vector<std::size_t> batch(static_cast<std::size_t>(config.batch_size));
    for (std::size_t& b : batch) b = pick(rng);

    state.params.zero_grad();
    LossComponents mean;
    const double scale = 1.0 / config.batch_size;
    for (std::size_t b : batch) {
      ag::Graph g;
      LossComponents c;
      const ag::Var total = sample_graph(g, state.params, clips[b], config.weights, scale, config.loss_border, c);
      if (!finite(c)) {
        std::string ids;
        for (std::size_t j : batch) ids += (ids.empty() ? "" : ",") + clips[j].clip->id;
        throw NumericError("non-finite loss at iteration " + std::to_string(it) + " in batch [" + ids + "]");
      }
      g.backward(total);
      mean.sr += c.sr * scale;
      mean.flow1 += c.flow1 * scale;
      mean.flow2 += c.flow2 * scale;
    }
    const double total = total_loss(mean, config.weights);

    ++state.adam_step;
    for (std::size_t i = 0; i < params.size(); ++i)
      adam_update<float>(params[i]->value.span(), std::as_const(params[i]->grad).span(), state.adam_m[i].span(),
                         state.adam_v[i].span(), state.adam_step, hyper);
    for (const ag::Parameter* p : params)
      if (!all_finite(p->value))
        throw NumericError("non-finite parameter '" + p->name + "' after iteration " + std::to_string(it));
    state.iteration = it;

    LogRow row{it, mean, total,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    result.log.push_back(row);
    if (on_row) on_row(row);

    if (config.checkpoint_interval > 0 && !config.checkpoint_path.empty() && it % config.checkpoint_interval == 0) {
      state.rng_state = serialize(rng);
      save_checkpoint(state, config.checkpoint_path);
    }
  }
  state.params.zero_grad();
  state.rng_state = serialize(rng);
  result.state = std::move(state);
  return result;
}

LossComponents sample_losses(const ModelParams& params, const ClipSample& clip, int loss_border) {
  const std::vector<PreparedClip> p = prepare(std::span<const ClipSample>(&clip, 1), params.sequence_length());
  ag::Graph g;
  LossComponents c;
  sample_graph(g, params, p.front(), LossWeights{}, 1.0, loss_border, c);
  return c;
}

MetricReport evaluate(const ModelParams& params, std::span<const ClipSample> dataset) {
  MetricReport report;
  for (const ClipSample& c : dataset) {
    if (!c.gt_hr_frames) throw DataError("evaluate: clip '" + c.id + "' has no ground truth");
    const SuperResolveTrace t = super_resolve_trace(c.reference_hr, c.lr_frames, params);
    MetricRow row{c.id, psnr(t.output, c.gt_hr_frames->back()), ssim(t.output, c.gt_hr_frames->back()), std::nullopt};
    if (c.gt_flows) row.epe_px = endpoint_error(t.refined, c.gt_flows->back());
    report.rows.push_back(std::move(row));
  }
  return report;
}

MetricReport evaluate_bicubic(std::span<const ClipSample> dataset) {
  MetricReport report;
  for (const ClipSample& c : dataset) {
    if (!c.gt_hr_frames) throw DataError("evaluate: clip '" + c.id + "' has no ground truth");
    const Frame up = bicubic_resample(c.lr_frames.back(), 4.0);
    report.rows.push_back({c.id, psnr(up, c.gt_hr_frames->back()), ssim(up, c.gt_hr_frames->back()), std::nullopt});
  }
  return report;
}

}  // namespace efenet
