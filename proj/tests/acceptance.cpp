// Acceptance checks. Usage: acceptance <criterion 1-8>. Prints one
// "PASS criterion N: ..." or "FAIL criterion N: ..." line and exits 0 on pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "efenet/data.hpp"
#include "efenet/imaging.hpp"
#include "efenet/metrics.hpp"
#include "efenet/strategies.hpp"
#include "efenet/training.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace efenet;
using efenet::testing::random_flow;
using efenet::testing::random_frame;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
  bool pass;
  std::string detail;
};

Verdict identity_at_init() {
  SynthClipConfig c;  // 128x128 HR, 32x32 LR, n = 4
  const ModelParams params = ModelParams::create(3, c.n, 0);
  bool exact = true;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    c.seed = s;
    const ClipSample clip = generate_synth_clip(c);
    const auto t = Clock::now();
    const Frame out = super_resolve(clip.reference_hr, clip.lr_frames, params);
    worst = std::max(worst, seconds_since(t));
    exact = exact && out == bicubic_resample(clip.lr_frames.back(), 4.0);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "sr == bicubic x4 bit-exact on 5 clips: %s; slowest clip %.3f s (< 1 s)",
                exact ? "yes" : "no", worst);
  return {exact && worst < 1.0, buf};
}

Verdict gradient_suite() {
  const auto t = Clock::now();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const gradcheck::WarpErrors w = gradcheck::warp(s);
    worst = std::max({worst, w.flow, w.source, gradcheck::reconstruction(s), gradcheck::step_flows(s),
                      gradcheck::refined_flow(s)});
  }
  const double elapsed = seconds_since(t);
  char buf[160];
  std::snprintf(buf, sizeof buf, "max relative gradient error %.3g (< 1e-3) over warp and three losses; %.2f s (< 60 s)",
                worst, elapsed);
  return {worst < gradcheck::kTolerance && elapsed < 60.0, buf};
}

Verdict oracle_equivalence() {
  int failures = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int h = 12 + s % 5, w = 10 + s % 3, ch = s % 2 ? 3 : 1, n = 1 + s % 4, border = s % 3;
    const Frame a = random_frame(h, w, ch, 10 * s), b = random_frame(h, w, ch, 10 * s + 1);
    std::vector<FlowField> flows;
    std::vector<Frame> gts;
    for (int i = 0; i < n; ++i) {
      flows.push_back(random_flow(h, w, 1000 + 10 * s + i, 3.0));
      gts.push_back(random_frame(h, w, ch, 2000 + 10 * s + i));
    }
    const FlowField f1 = random_flow(h, w, 3000 + s, 3.0), f2 = random_flow(h, w, 4000 + s, 3.0);
    failures += !oracle::rel_close(loss_sr(a, b), oracle::loss_sr(a, b), 1e-9);
    failures += !oracle::rel_close(loss_flow_steps(a, flows, gts, border),
                                   oracle::loss_flow_steps(a, flows, gts, border), 1e-9);
    failures += !oracle::rel_close(loss_flow_refined(a, flows.back(), b, border),
                                   oracle::warp_error(a, flows.back(), b, border), 1e-9);
    failures += !oracle::rel_close(psnr(a, b), oracle::psnr(a, b), 1e-9);
    failures += !oracle::rel_close(endpoint_error(f1, f2, border), oracle::endpoint_error(f1, f2, border), 1e-9);
  }
  const bool charb = charbonnier(0.0) == 0.001;
  const double p = psnr(Frame(8, 8, 3, 0.0f), Frame(8, 8, 3, 0.1f));
  // 0.1 is not representable in float; the stored value is 0.1000000015.
  const bool psnr_ok = std::abs(p - 20.0) < 1e-6;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d/100 oracle mismatches (1e-9 rel); charbonnier(0) = %.17g; PSNR of 0.1 offset = %.9f dB", failures,
                charbonnier(0.0), p);
  return {failures == 0 && charb && psnr_ok, buf};
}

FlowField affine_flow(int h, int w, const double m[4], const double t[2]) {
  FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.dx(y, x) = static_cast<float>(m[0] * x + m[1] * y + t[0] - x);
      f.dy(y, x) = static_cast<float>(m[2] * x + m[3] * y + t[1] - y);
    }
  return f;
}

Verdict composition_algebra() {
  bool identity = true, additive = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const FlowField f = random_flow(24, 20, s, 4.0), zero(24, 20);
    identity = identity && compose_flows(zero, f) == f && compose_flows(f, zero) == f;
    const float ax = 0.25f * s, ay = -0.5f, bx = 1.75f, by = 0.125f * s;
    const FlowField c = compose_flows(FlowField(24, 20, ax, ay), FlowField(24, 20, bx, by));
    additive = additive && c == FlowField(24, 20, ax + bx, ay + by);
  }
  const double m1[4] = {1.01, 0.02, -0.015, 0.99}, t1[2] = {1.3, -0.7};
  const double m2[4] = {0.995, -0.01, 0.012, 1.008}, t2[2] = {-0.4, 0.9};
  const double m[4] = {m2[0] * m1[0] + m2[1] * m1[2], m2[0] * m1[1] + m2[1] * m1[3], m2[2] * m1[0] + m2[3] * m1[2],
                       m2[2] * m1[1] + m2[3] * m1[3]};
  const double t[2] = {m2[0] * t1[0] + m2[1] * t1[1] + t2[0], m2[2] * t1[0] + m2[3] * t1[1] + t2[1]};
  const double epe =
      endpoint_error(compose_flows(affine_flow(64, 64, m2, t2), affine_flow(64, 64, m1, t1)), affine_flow(64, 64, m, t), 4);
  char buf[200];
  std::snprintf(buf, sizeof buf, "zero identity exact: %s; constants add exactly: %s; two-affine interior EPE %.3g px (< 0.05)",
                identity ? "yes" : "no", additive ? "yes" : "no", epe);
  return {identity && additive && epe < 0.05, buf};
}

Verdict strategy_accumulation() {
  const auto t = Clock::now();
  SynthClipConfig c;
  c.n = 7;
  c.seed = 2024;
  c.step_translation = std::array<double, 2>{0.5, 0.0};
  const std::vector<ClipSample> clips = generate_synth_dataset(c, 50);
  StrategyOptions opt;
  opt.provider = ProviderKind::NoisyOracle;
  opt.noise_sigma = 0.5;
  opt.seed = 7;
  const StrategyReport a = compare_strategies(clips, opt);
  const StrategyReport b = compare_strategies(clips, opt);
  bool deterministic = a.rows.size() == b.rows.size();
  for (std::size_t i = 0; deterministic && i < a.rows.size(); ++i)
    deterministic = a.rows[i].warp_psnr_db == b.rows[i].warp_psnr_db && a.rows[i].epe_px == b.rows[i].epe_px;
  const auto s = a.summary();  // direct, recursive, sequential, refined

  opt.provider = ProviderKind::Oracle;
  const auto exact = compare_strategies(clips, opt).summary();
  const double elapsed = seconds_since(t);
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "EPE sequential %.3f > direct %.3f px; warp PSNR recursive %.2f < direct %.2f dB (noisy), %.2f < %.2f dB "
                "(exact flows); deterministic: %s; %.1f s (< 300 s)",
                *s[2].epe_px, *s[0].epe_px, s[1].warp_psnr_db, s[0].warp_psnr_db, exact[1].warp_psnr_db,
                exact[0].warp_psnr_db, deterministic ? "yes" : "no", elapsed);
  const bool pass = *s[2].epe_px > *s[0].epe_px && s[1].warp_psnr_db < s[0].warp_psnr_db &&
                    exact[1].warp_psnr_db < exact[0].warp_psnr_db && deterministic && elapsed < 300.0;
  return {pass, buf};
}

// Held-out clips come from a seed stream disjoint from the training clips.
constexpr std::uint64_t kHeldOutSeedOffset = 0x5EEDull << 32;

Verdict refinement_benefit() {
  int psnr_passes = 0, epe_passes = 0;
  std::string detail;
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    const auto t = Clock::now();
    SynthClipConfig synth;  // translation, 32x32 LR, n = 4, <= 0.75 px per step (<= 3 px total)
    synth.seed = seed;
    const std::vector<ClipSample> train_set = generate_synth_dataset(synth, 64);
    synth.seed = seed + kHeldOutSeedOffset;
    const std::vector<ClipSample> held_out = generate_synth_dataset(synth, 20);

    TrainConfig cfg;
    cfg.iterations = 2000;
    cfg.seed = seed;
    const TrainResult r = train(cfg, train_set);

    const MetricReport model = evaluate(r.state.params, held_out);
    const MetricReport bicubic = evaluate_bicubic(held_out);
    double raw_epe = 0.0;
    for (const ClipSample& clip : held_out) {
      const SuperResolveTrace trace = super_resolve_trace(clip.reference_hr, clip.lr_frames, r.state.params);
      raw_epe += endpoint_error(trace.flows.back(), clip.gt_flows->back());
    }
    raw_epe /= static_cast<double>(held_out.size());
    const double refined_epe = *model.mean_epe();
    const double gain = model.mean_psnr() - bicubic.mean_psnr();
    psnr_passes += gain >= 1.0;
    epe_passes += refined_epe <= raw_epe;
    char buf[256];
    std::snprintf(buf, sizeof buf, "seed %llu: PSNR %.2f vs bicubic %.2f dB (%+.2f), EPE refined %.3f vs raw %.3f px, %.0f s",
                  static_cast<unsigned long long>(seed), model.mean_psnr(), bicubic.mean_psnr(), gain, refined_epe,
                  raw_epe, seconds_since(t));
    std::printf("  %s\n", buf);
    std::fflush(stdout);
    detail += std::string(detail.empty() ? "" : "; ") + buf;
  }
  // ">= 90% of three seeds" means all three.
  const bool pass = psnr_passes == 3 && epe_passes == 3;
  return {pass, "PSNR gain >= 1 dB on " + std::to_string(psnr_passes) + "/3 seeds, refined EPE <= raw on " +
                    std::to_string(epe_passes) + "/3 seeds"};
}

Verdict determinism_and_persistence() {
  SynthClipConfig synth;
  synth.height = synth.width = 64;
  synth.n = 3;
  synth.seed = 11;
  const std::vector<ClipSample> data = generate_synth_dataset(synth, 4);
  TrainConfig cfg;
  cfg.n = 3;
  cfg.iterations = 10;
  cfg.batch_size = 2;
  cfg.seed = 5;
  cfg.learning_rate = 1e-3;
  auto same_log = [](const std::vector<LogRow>& a, std::size_t a0, const std::vector<LogRow>& b, std::size_t count) {
    if (a.size() < a0 + count || b.size() < count) return false;
    for (std::size_t i = 0; i < count; ++i) {
      const LogRow &x = a[a0 + i], &y = b[i];
      if (x.iteration != y.iteration || x.loss.sr != y.loss.sr || x.loss.flow1 != y.loss.flow1 ||
          x.loss.flow2 != y.loss.flow2 || x.total != y.total)
        return false;
    }
    return true;
  };
  const TrainResult a = train(cfg, data), b = train(cfg, data);
  const bool reproducible = same_log(a.log, 0, b.log, 10);

  efenet::testing::TempDir dir("acceptance");
  save_checkpoint(a.state, dir.path() / "a.ckpt");
  const TrainState loaded = load_checkpoint(dir.path() / "a.ckpt");
  bool forward_equal = true;
  for (const ClipSample& clip : data)
    forward_equal = forward_equal && super_resolve(clip.reference_hr, clip.lr_frames, loaded.params) ==
                                         super_resolve(clip.reference_hr, clip.lr_frames, a.state.params);

  TrainConfig first = cfg;
  first.iterations = 4;
  first.checkpoint_interval = 4;
  first.checkpoint_path = dir.path() / "partial.ckpt";
  train(first, data);
  const TrainResult resumed = train(cfg, data, load_checkpoint(first.checkpoint_path));
  const bool resume_equal = same_log(a.log, 4, resumed.log, 6) && resumed.log.size() == 6;

  char buf[200];
  std::snprintf(buf, sizeof buf, "repeat run log bit-identical: %s; checkpoint forward bit-identical: %s; resumed log matches: %s",
                reproducible ? "yes" : "no", forward_equal ? "yes" : "no", resume_equal ? "yes" : "no");
  return {reproducible && forward_equal && resume_equal, buf};
}

Verdict metric_sanity() {
  double worst_identity = 0.0, worst_symmetry = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Frame a = random_frame(32, 24, s % 2 ? 3 : 1, s), b = random_frame(32, 24, s % 2 ? 3 : 1, 100 + s);
    worst_identity = std::max(worst_identity, std::abs(ssim(a, a) - 1.0));
    worst_symmetry = std::max(worst_symmetry, std::abs(ssim(a, b) - ssim(b, a)));
  }
  const auto [x, y] = oracle::checkerboard_pair();
  const double board = ssim(x, y);
  char buf[200];
  std::snprintf(buf, sizeof buf, "|ssim(a,a)-1| %.2g (<= 1e-9); asymmetry %.2g (<= 1e-12); checkerboard %.10f vs %.10f",
                worst_identity, worst_symmetry, board, oracle::kCheckerboardSsim);
  return {worst_identity <= 1e-9 && worst_symmetry <= 1e-12 && std::abs(board - oracle::kCheckerboardSsim) <= 1e-6, buf};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion 1-8>\n", argv[0]);
    return 2;
  }
  const int criterion = std::atoi(argv[1]);
  Verdict v;
  try {
    switch (criterion) {
      case 1: v = identity_at_init(); break;
      case 2: v = gradient_suite(); break;
      case 3: v = oracle_equivalence(); break;
      case 4: v = composition_algebra(); break;
      case 5: v = strategy_accumulation(); break;
      case 6: v = refinement_benefit(); break;
      case 7: v = determinism_and_persistence(); break;
      case 8: v = metric_sanity(); break;
      default:
        std::fprintf(stderr, "unknown criterion %d\n", criterion);
        return 2;
    }
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s criterion %d: %s\n", v.pass ? "PASS" : "FAIL", criterion, v.detail.c_str());
  return v.pass ? 0 : 1;
}
