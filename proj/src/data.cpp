#include "efenet/data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "efenet/errors.hpp"
#include "efenet/imaging.hpp"
#include "efenet/io.hpp"

namespace efenet {
namespace fs = std::filesystem;

namespace {

struct Wave {
  double fx, fy, phase, amplitude;
};

// p -> a * p + b in pixel coordinates.
struct Affine {
  double a[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
  double b[2] = {0.0, 0.0};

  Affine then(const Affine& step) const {  // step applied to the output of *this
    Affine r;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) r.a[i][j] = step.a[i][0] * a[0][j] + step.a[i][1] * a[1][j];
      r.b[i] = step.a[i][0] * b[0] + step.a[i][1] * b[1] + step.b[i];
    }
    return r;
  }
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Frame render(const std::vector<std::vector<Wave>>& channels, const Affine& map, int h, int w) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Frame out(h, w, static_cast<int>(channels.size()));
  std::vector<double> acc(static_cast<std::size_t>(h) * w);
  std::vector<std::complex<double>> ex(w), ey(h);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    std::fill(acc.begin(), acc.end(), 0.5);
    for (const Wave& wv : channels[c]) {
      // f . (A p + b) = (A^T f) . p + f . b
      const double wx = two_pi * (map.a[0][0] * wv.fx + map.a[1][0] * wv.fy);
      const double wy = two_pi * (map.a[0][1] * wv.fx + map.a[1][1] * wv.fy);
      const double phase = two_pi * (wv.fx * map.b[0] + wv.fy * map.b[1]) + wv.phase;
      for (int x = 0; x < w; ++x) ex[x] = std::polar(1.0, wx * x);
      for (int y = 0; y < h; ++y) ey[y] = std::polar(wv.amplitude, wy * y + phase);
      for (int y = 0; y < h; ++y) {
        double* row = acc.data() + static_cast<std::size_t>(y) * w;
        const double er = ey[y].real(), ei = ey[y].imag();
        for (int x = 0; x < w; ++x) row[x] += ex[x].real() * er - ex[x].imag() * ei;
      }
    }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(y, x, static_cast<int>(c)) =
            static_cast<float>(std::clamp(acc[static_cast<std::size_t>(y) * w + x], 0.0, 1.0));
  }
  return out;
}

FlowField displacement(const Affine& map, int h, int w) {
  FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double qx = map.a[0][0] * x + map.a[0][1] * y + map.b[0];
      const double qy = map.a[1][0] * x + map.a[1][1] * y + map.b[1];
      f.dx(y, x) = static_cast<float>(qx - x);
      f.dy(y, x) = static_cast<float>(qy - y);
    }
  return f;
}

double max_corner_displacement(const Affine& map, int h, int w) {
  double m = 0.0;
  for (double y : {0.0, h - 1.0})
    for (double x : {0.0, w - 1.0}) {
      const double dx = map.a[0][0] * x + map.a[0][1] * y + map.b[0] - x;
      const double dy = map.a[1][0] * x + map.a[1][1] * y + map.b[1] - y;
      m = std::max(m, std::hypot(dx, dy));
    }
  return m;
}

Affine draw_step(const SynthClipConfig& cfg, std::mt19937_64& rng) {
  Affine step;
  if (cfg.step_translation) {
    step.b[0] = (*cfg.step_translation)[0];
    step.b[1] = (*cfg.step_translation)[1];
    return step;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double m = cfg.max_step_displacement;
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  if (cfg.motion == MotionModel::Translation) {
    const double r = m * unit(rng);
    step.b[0] = r * std::cos(theta);
    step.b[1] = r * std::sin(theta);
    return step;
  }
  // Half of the budget goes to the translation, half to the linear part
  // (bounded through its Frobenius norm at the image corners).
  const double r = 0.5 * m * unit(rng);
  const double cx = 0.5 * (cfg.width - 1), cy = 0.5 * (cfg.height - 1);
  const double radius = std::max(std::hypot(cx, cy), 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  double e[4];
  double norm = 0.0;
  for (double& v : e) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  const double scale = norm > 0.0 ? 0.5 * m * unit(rng) / (radius * norm) : 0.0;
  step.a[0][0] = 1.0 + scale * e[0];
  step.a[0][1] = scale * e[1];
  step.a[1][0] = scale * e[2];
  step.a[1][1] = 1.0 + scale * e[3];
  // Rotate/scale about the image center, then translate.
  step.b[0] = cx - (step.a[0][0] * cx + step.a[0][1] * cy) + r * std::cos(theta);
  step.b[1] = cy - (step.a[1][0] * cx + step.a[1][1] * cy) + r * std::sin(theta);
  return step;
}

std::string clip_file(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d.%s", stem, index, ext);
  return buf;
}

}  // namespace

void ClipSample::validate() const {
  if (lr_frames.empty()) throw std::invalid_argument("ClipSample: no LR frames");
  const Shape& lr = lr_frames.front().shape();
  for (const Frame& f : lr_frames)
    if (f.shape() != lr) throw std::invalid_argument("ClipSample: LR frames differ in shape");
  const Shape& ref = reference_hr.shape();
  if (ref.c != lr.c || ref.h != 4 * lr.h || ref.w != 4 * lr.w)
    throw std::invalid_argument("ClipSample: reference must be 4x the LR extent");
  if (gt_hr_frames) {
    if (gt_hr_frames->size() != lr_frames.size())
      throw std::invalid_argument("ClipSample: ground-truth frame count differs from n");
    for (const Frame& f : *gt_hr_frames)
      if (f.shape() != ref) throw std::invalid_argument("ClipSample: ground-truth frame shape differs");
  }
  if (gt_flows) {
    if (gt_flows->size() != lr_frames.size())
      throw std::invalid_argument("ClipSample: ground-truth flow count differs from n");
    for (const FlowField& f : *gt_flows)
      if (f.height() != ref.h || f.width() != ref.w)
        throw std::invalid_argument("ClipSample: ground-truth flow extent differs");
  }
}

void SynthClipConfig::validate() const {
  if (n < 1) throw std::invalid_argument("SynthClipConfig: n must be >= 1");
  if (height < 16 || width < 16 || height % 4 || width % 4)
    throw std::invalid_argument("SynthClipConfig: HR extent must be >= 16 and divisible by 4");
  if (channels != 1 && channels != 3) throw std::invalid_argument("SynthClipConfig: channels must be 1 or 3");
  if (!std::isfinite(max_step_displacement) || max_step_displacement < 0.0)
    throw std::invalid_argument("SynthClipConfig: max_step_displacement must be finite and >= 0");
  if (step_translation && !(std::isfinite((*step_translation)[0]) && std::isfinite((*step_translation)[1])))
    throw std::invalid_argument("SynthClipConfig: step_translation must be finite");
  if (!std::isfinite(noise_sigma) || noise_sigma < 0.0)
    throw std::invalid_argument("SynthClipConfig: noise_sigma must be finite and >= 0");
  if (!(texture_bandwidth > 0.0) || texture_components < 1 || !(texture_contrast >= 0.0))
    throw std::invalid_argument("SynthClipConfig: invalid texture parameters");
}

MotionModel parse_motion_model(const std::string& name) {
  if (name == "translation") return MotionModel::Translation;
  if (name == "affine") return MotionModel::Affine;
  throw std::invalid_argument("unknown motion model '" + name + "'");
}

std::string to_string(MotionModel m) { return m == MotionModel::Translation ? "translation" : "affine"; }

ClipSample generate_synth_clip(const SynthClipConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> freq(0.0, cfg.texture_bandwidth);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double amplitude = cfg.texture_contrast * std::sqrt(2.0 / cfg.texture_components);
  std::vector<std::vector<Wave>> texture(cfg.channels);
  for (auto& waves : texture)
    for (int k = 0; k < cfg.texture_components; ++k) {
      const double fx = freq(rng), fy = freq(rng);
      waves.push_back({fx, fy, phase(rng), amplitude});
    }

  const Affine step = draw_step(cfg, rng);
  std::vector<Affine> maps;
  Affine cumulative;
  for (int i = 1; i <= cfg.n; ++i) {
    cumulative = cumulative.then(step);
    maps.push_back(cumulative);
  }
  const double limit = 0.25 * std::min(cfg.height, cfg.width);
  if (max_corner_displacement(maps.back(), cfg.height, cfg.width) > limit)
    throw std::invalid_argument("generate_synth_clip: cumulative displacement exceeds a quarter of the frame");

  std::vector<Frame> hr;
  hr.push_back(render(texture, Affine{}, cfg.height, cfg.width));
  std::vector<FlowField> flows;
  for (const Affine& m : maps) {
    hr.push_back(render(texture, m, cfg.height, cfg.width));
    flows.push_back(displacement(m, cfg.height, cfg.width));
  }

  ClipSample clip = make_training_sample(hr, 4);
  clip.id = "synth_" + std::to_string(cfg.seed);
  clip.gt_flows = std::move(flows);
  if (cfg.noise_sigma > 0.0) {
    std::mt19937_64 noise_rng(splitmix64(cfg.seed ^ 0x6E6F697365ull));
    std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg.noise_sigma));
    for (Frame& f : clip.lr_frames)
      for (float& v : f.tensor().span()) v = std::clamp(v + noise(noise_rng), 0.0f, 1.0f);
  }
  return clip;
}

std::vector<ClipSample> generate_synth_dataset(const SynthClipConfig& config, int count) {
  if (count < 0) throw std::invalid_argument("generate_synth_dataset: negative count");
  std::vector<ClipSample> clips;
  clips.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SynthClipConfig c = config;
    c.seed = splitmix64(config.seed * 0x100000001B3ull + static_cast<std::uint64_t>(i));
    ClipSample clip = generate_synth_clip(c);
    char id[32];
    std::snprintf(id, sizeof id, "clip_%04d", i);
    clip.id = id;
    clips.push_back(std::move(clip));
  }
  return clips;
}

ClipSample make_training_sample(std::span<const Frame> hr_clip, int scale) {
  if (hr_clip.size() < 2) throw std::invalid_argument("make_training_sample: need at least 2 frames");
  if (scale < 1) throw std::invalid_argument("make_training_sample: scale must be >= 1");
  const Shape& s = hr_clip.front().shape();
  for (const Frame& f : hr_clip)
    if (f.shape() != s) throw std::invalid_argument("make_training_sample: frames differ in shape");
  if (s.h % scale || s.w % scale)
    throw std::invalid_argument("make_training_sample: extent " + to_string(s) + " not divisible by " +
                                std::to_string(scale));
  ClipSample clip;
  clip.reference_hr = hr_clip.front();
  std::vector<Frame> gt;
  for (std::size_t i = 1; i < hr_clip.size(); ++i) {
    clip.lr_frames.push_back(bicubic_resample(hr_clip[i], 1.0 / scale));
    gt.push_back(hr_clip[i]);
  }
  clip.gt_hr_frames = std::move(gt);
  return clip;
}

std::vector<Frame> upsample_lr(std::span<const Frame> lr_frames) {
  std::vector<Frame> out;
  out.reserve(lr_frames.size());
  for (const Frame& f : lr_frames) out.push_back(bicubic_resample(f, 4.0));
  return out;
}

std::vector<ClipSample> load_clip_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset root '" + root.string() + "' is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());

  std::vector<ClipSample> clips;
  for (const fs::path& dir : dirs) {
    const std::string id = dir.filename().string();
    std::vector<fs::path> frame_paths;
    while (fs::exists(dir / clip_file("frame", static_cast<int>(frame_paths.size()), "png")))
      frame_paths.push_back(dir / clip_file("frame", static_cast<int>(frame_paths.size()), "png"));
    if (frame_paths.size() < 2)
      throw DataError("clip '" + id + "' has " + std::to_string(frame_paths.size()) + " frame(s), need >= 2");

    try {
      std::vector<Frame> frames;
      for (const fs::path& p : frame_paths) frames.push_back(io::read_png(p));
      const Shape& first = frames.front().shape();
      const Shape& second = frames[1].shape();
      const bool all_rest_equal =
          std::all_of(frames.begin() + 1, frames.end(), [&](const Frame& f) { return f.shape() == second; });
      ClipSample clip;
      if (all_rest_equal && second == first) {
        clip = make_training_sample(frames, 4);
      } else if (all_rest_equal && first.c == second.c && first.h == 4 * second.h && first.w == 4 * second.w) {
        clip.reference_hr = frames.front();
        clip.lr_frames.assign(frames.begin() + 1, frames.end());
      } else {
        throw std::invalid_argument("mismatched frame sizes");
      }
      clip.id = id;
      std::vector<FlowField> flows;
      for (int i = 1; i <= clip.n(); ++i) {
        const fs::path p = dir / clip_file("flow", i, "flo");
        if (!fs::exists(p)) break;
        flows.push_back(io::read_flo(p));
      }
      if (!flows.empty()) {
        if (static_cast<int>(flows.size()) != clip.n()) throw std::invalid_argument("incomplete flow files");
        clip.gt_flows = std::move(flows);
      }
      clip.validate();
      clips.push_back(std::move(clip));
    } catch (const std::exception& e) {
      spdlog::warn("skipping clip '{}': {}", id, e.what());
    }
  }
  return clips;
}

void save_clip(const fs::path& dir, const ClipSample& clip) {
  clip.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  io::write_png(dir / clip_file("frame", 0, "png"), clip.reference_hr);
  const std::vector<Frame>& frames = clip.gt_hr_frames ? *clip.gt_hr_frames : clip.lr_frames;
  for (std::size_t i = 0; i < frames.size(); ++i)
    io::write_png(dir / clip_file("frame", static_cast<int>(i + 1), "png"), frames[i]);
  if (clip.gt_flows)
    for (std::size_t i = 0; i < clip.gt_flows->size(); ++i)
      io::write_flo(dir / clip_file("flow", static_cast<int>(i + 1), "flo"), (*clip.gt_flows)[i]);
}

}  // namespace efenet
