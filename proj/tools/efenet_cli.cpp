// efenet: command-line entry point.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric failure.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "efenet/config.hpp"
#include "efenet/errors.hpp"
#include "efenet/flow_viz.hpp"
#include "efenet/imaging.hpp"
#include "efenet/io.hpp"
#include "efenet/strategies.hpp"
#include "efenet/synthesis.hpp"
#include "efenet/training.hpp"

namespace fs = std::filesystem;
using namespace efenet;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Evaluation clips use a seed stream disjoint from the training clips.
constexpr std::uint64_t kHeldOutSeedOffset = 0x5EEDull << 32;

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--config", c.config, "JSON run configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed for data generation, training and noise (overrides the config)");
  cmd->add_option("--out", c.out, out_help);
}

// defaults < file < flags
RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (c.config) cfg = load_run_config(*c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out = *c.out;
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory '" + dir.string() + "'");
}

std::vector<ClipSample> training_data(const RunConfig& cfg) {
  if (cfg.data_root) return load_clip_dataset(*cfg.data_root);
  return generate_synth_dataset(cfg.synth, cfg.synth_count);
}

std::vector<ClipSample> evaluation_data(const RunConfig& cfg) {
  if (cfg.data_root) return load_clip_dataset(*cfg.data_root);
  SynthClipConfig s = cfg.synth;
  s.seed = cfg.seed + kHeldOutSeedOffset;
  return generate_synth_dataset(s, cfg.eval_count);
}

std::string clip_file(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d.%s", stem, index, ext);
  return buf;
}

int cmd_synth_data(RunConfig cfg, std::optional<int> count) {
  if (cfg.out.empty()) throw ConfigError("--out is required");
  cfg.finalize();
  const int total = count.value_or(cfg.synth_count);
  if (total < 0) throw ConfigError("--count must be >= 0");
  ensure_dir(cfg.out);
  nlohmann::json manifest = {{"seed", cfg.seed}, {"count", total}, {"clips", nlohmann::json::array()}};
  const std::vector<ClipSample> clips = generate_synth_dataset(cfg.synth, total);
  for (const ClipSample& clip : clips) {
    save_clip(cfg.out / clip.id, clip);
    manifest["clips"].push_back({{"id", clip.id},
                                 {"frames", clip.n() + 1},
                                 {"hr", {clip.reference_hr.height(), clip.reference_hr.width()}},
                                 {"flows", clip.n()}});
  }
  std::ofstream(cfg.out / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << manifest.dump(2) << '\n';
  return 0;
}

int cmd_train(RunConfig cfg, const std::optional<std::string>& resume) {
  if (cfg.out.empty()) throw ConfigError("--out is required");
  if (cfg.data_root && !fs::is_directory(*cfg.data_root))
    throw DataError("data root '" + cfg.data_root->string() + "' does not exist");
  if (resume && !fs::exists(*resume)) throw DataError("checkpoint '" + *resume + "' does not exist");
  cfg.finalize();
  ensure_dir(cfg.out);
  const fs::path ckpt = cfg.checkpoint.value_or(cfg.out / "model.ckpt");
  cfg.train.checkpoint_path = ckpt;
  cfg.train.validate();

  const std::vector<ClipSample> data = training_data(cfg);
  if (data.empty()) throw DataError("training dataset is empty");
  if (cfg.data_root) cfg.train.n = data.front().n();

  TrainState state = resume ? load_checkpoint(*resume) : TrainState::initial(data.front().reference_hr.channels(), cfg.train);
  state.config_json = to_json(cfg).dump();
  std::ofstream(cfg.out / "config.json") << to_json(cfg).dump(2) << '\n';

  std::ofstream log(cfg.out / "train_log.csv");
  if (!log) throw DataError("cannot write training log in '" + cfg.out.string() + "'");
  write_log_header(log);
  const int every = std::max(1, cfg.train.iterations / 20);
  TrainResult result = train(cfg.train, data, std::move(state), [&](const LogRow& row) {
    write_log_row(log, row);
    log.flush();
    if (row.iteration % every == 0)
      spdlog::info("iteration {:>6}  total {:.6g}  sr {:.6g}  flow1 {:.6g}  flow2 {:.6g}", row.iteration, row.total,
                   row.loss.sr, row.loss.flow1, row.loss.flow2);
  });
  result.state.config_json = to_json(cfg).dump();
  save_checkpoint(result.state, ckpt);
  spdlog::info("checkpoint written to {}", ckpt.string());
  return 0;
}

int cmd_eval(RunConfig cfg) {
  if (!cfg.checkpoint) throw ConfigError("--checkpoint is required");
  if (!fs::exists(*cfg.checkpoint)) throw DataError("checkpoint '" + cfg.checkpoint->string() + "' does not exist");
  cfg.finalize();
  const TrainState state = load_checkpoint(*cfg.checkpoint);
  cfg.synth.n = state.params.sequence_length();
  cfg.synth.channels = state.params.image_channels();
  const std::vector<ClipSample> data = evaluation_data(cfg);
  if (data.empty()) throw DataError("evaluation dataset is empty");
  const MetricReport report = evaluate(state.params, data);
  const MetricReport baseline = evaluate_bicubic(data);
  if (cfg.out.empty()) {
    report.write_csv(std::cout);
  } else {
    std::ofstream out(cfg.out);
    if (!out) throw DataError("cannot write '" + cfg.out.string() + "'");
    report.write_csv(out);
  }
  spdlog::info("{} clips  model PSNR {:.3f} dB  SSIM {:.4f}  |  bicubic PSNR {:.3f} dB  SSIM {:.4f}", report.count(),
               report.mean_psnr(), report.mean_ssim(), baseline.mean_psnr(), baseline.mean_ssim());
  return 0;
}

int cmd_sr(RunConfig cfg, const std::string& clip_dir) {
  if (!cfg.checkpoint) throw ConfigError("--checkpoint is required");
  if (cfg.out.empty()) throw ConfigError("--out is required");
  if (!fs::exists(*cfg.checkpoint)) throw DataError("checkpoint '" + cfg.checkpoint->string() + "' does not exist");
  if (!fs::is_directory(clip_dir)) throw DataError("clip directory '" + clip_dir + "' does not exist");
  const TrainState state = load_checkpoint(*cfg.checkpoint);

  std::vector<Frame> frames;
  while (fs::exists(fs::path(clip_dir) / clip_file("frame", static_cast<int>(frames.size()), "png")))
    frames.push_back(io::read_png(fs::path(clip_dir) / clip_file("frame", static_cast<int>(frames.size()), "png")));
  if (frames.size() < 2) throw DataError("clip '" + clip_dir + "' needs at least 2 frames");
  std::vector<Frame> lr;
  if (frames[1].shape() == frames[0].shape()) {
    lr = make_training_sample(frames, 4).lr_frames;
  } else {
    lr.assign(frames.begin() + 1, frames.end());
  }
  if (static_cast<int>(lr.size()) != state.params.sequence_length())
    throw DataError("clip has " + std::to_string(lr.size()) + " LR frames, model expects " +
                    std::to_string(state.params.sequence_length()));
  const Frame out = super_resolve(frames.front(), lr, state.params);
  io::write_png(cfg.out, out);
  return 0;
}

int cmd_compare(RunConfig cfg) {
  if (cfg.out.empty()) throw ConfigError("--out is required");
  cfg.finalize();
  std::optional<TrainState> model;
  if (cfg.checkpoint) {
    if (!fs::exists(*cfg.checkpoint)) throw DataError("checkpoint '" + cfg.checkpoint->string() + "' does not exist");
    model = load_checkpoint(*cfg.checkpoint);
  }
  if (cfg.strategies.provider == ProviderKind::Learned && !model)
    throw ConfigError("the learned provider needs --checkpoint");
  if (model) {
    cfg.synth.n = model->params.sequence_length();
    cfg.synth.channels = model->params.image_channels();
  }
  ensure_dir(cfg.out);
  std::vector<ClipSample> data = cfg.data_root ? load_clip_dataset(*cfg.data_root)
                                               : generate_synth_dataset(cfg.synth, cfg.eval_count);
  if (cfg.strategies.provider != ProviderKind::Learned &&
      std::any_of(data.begin(), data.end(), [](const ClipSample& c) { return !c.gt_flows; }))
    throw DataError("oracle providers need ground-truth flows for every clip; pass --checkpoint for learned flows");
  const StrategyReport report =
      compare_strategies(data, cfg.strategies, model ? &model->params.estimator : nullptr,
                         model ? &model->params.refiner : nullptr);
  std::ofstream csv(cfg.out / "strategies.csv");
  report.write_csv(csv);
  for (std::size_t s = 0; s < report.first_clip_warps.size(); ++s)
    io::write_png(cfg.out / (std::string("warped_") + kStrategyNames[s] + ".png"), report.first_clip_warps[s]);
  for (const StrategySummary& s : report.summary())
    spdlog::info("{:<10}  warp PSNR {:.3f} dB  SSIM {:.4f}  EPE {}", s.strategy, s.warp_psnr_db, s.warp_ssim,
                 s.epe_px ? fmt::format("{:.4f} px", *s.epe_px) : std::string("n/a"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("efenet"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Reference-based video super-resolution with cross-scale flow refinement"};
  app.require_subcommand(1);

  Common synth_c, train_c, eval_c, sr_c, cmp_c, viz_c;
  std::optional<int> count;
  std::optional<int> n, size, iterations, batch;
  std::optional<std::string> motion, data_root, resume, checkpoint, provider, clip_dir, flow_file;
  std::optional<double> max_step, noise, lr, sigma;
  std::optional<std::vector<double>> step;

  auto* synth = app.add_subcommand("synth-data", "Write synthetic clips with oracle flows");
  add_common(synth, synth_c, "Output directory");
  synth->add_option("--count", count, "Number of clips (default: data.count)");
  synth->add_option("--n", n, "LR frames per clip");
  synth->add_option("--size", size, "HR width and height");
  synth->add_option("--motion", motion, "translation or affine");
  synth->add_option("--max-step", max_step, "Per-step displacement bound in HR pixels");
  synth->add_option("--step", step, "Fixed per-step translation DX DY")->expected(2);
  synth->add_option("--noise", noise, "Gaussian noise on LR frames");

  auto* train_cmd = app.add_subcommand("train", "Train the model");
  add_common(train_cmd, train_c, "Run directory (log, checkpoint, config snapshot)");
  train_cmd->add_option("--data", data_root, "Dataset root (default: synthetic clips)");
  train_cmd->add_option("--iterations", iterations, "Training iterations");
  train_cmd->add_option("--batch-size", batch, "Samples per iteration");
  train_cmd->add_option("--lr", lr, "Adam learning rate");
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");
  train_cmd->add_option("--checkpoint", checkpoint, "Checkpoint output path (default: OUT/model.ckpt)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval_cmd, eval_c, "CSV output path (default: stdout)");
  eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--data", data_root, "Dataset root (default: held-out synthetic clips)");

  auto* sr_cmd = app.add_subcommand("sr", "Super-resolve the furthest frame of one clip");
  add_common(sr_cmd, sr_c, "Output PNG");
  sr_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  sr_cmd->add_option("--clip", clip_dir, "Clip directory (frame_00.png ...)")->required();

  auto* cmp_cmd = app.add_subcommand("compare-strategies", "Compare the four alignment strategies");
  add_common(cmp_cmd, cmp_c, "Output directory (CSV and warped references)");
  cmp_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint for learned flows and the refiner");
  cmp_cmd->add_option("--data", data_root, "Dataset root (default: synthetic clips)");
  cmp_cmd->add_option("--provider", provider, "learned, oracle or noisy-oracle");
  cmp_cmd->add_option("--sigma", sigma, "Noise of the noisy oracle in pixels");
  cmp_cmd->add_option("--count", count, "Number of synthetic clips (default: data.eval_count)");
  cmp_cmd->add_option("--n", n, "LR frames per synthetic clip");
  cmp_cmd->add_option("--step", step, "Fixed per-step translation DX DY")->expected(2);

  auto* viz_cmd = app.add_subcommand("flow-viz", "Color-code a FLO1 flow file");
  add_common(viz_cmd, viz_c, "Output PNG");
  viz_cmd->add_option("--flow", flow_file, "FLO1 input file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const auto apply_synth = [&](RunConfig& cfg) {
    try {
      if (n) cfg.synth.n = *n;
      if (size) cfg.synth.height = cfg.synth.width = *size;
      if (motion) cfg.synth.motion = parse_motion_model(*motion);
      if (max_step) cfg.synth.max_step_displacement = *max_step;
      if (step) cfg.synth.step_translation = std::array<double, 2>{(*step)[0], (*step)[1]};
      if (noise) cfg.synth.noise_sigma = *noise;
      cfg.synth.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };

  try {
    if (synth->parsed()) {
      RunConfig cfg = resolve(synth_c);
      apply_synth(cfg);
      return cmd_synth_data(cfg, count);
    }
    if (train_cmd->parsed()) {
      RunConfig cfg = resolve(train_c);
      if (data_root) cfg.data_root = *data_root;
      if (iterations) cfg.train.iterations = *iterations;
      if (batch) cfg.train.batch_size = *batch;
      if (lr) cfg.train.learning_rate = *lr;
      if (checkpoint) cfg.checkpoint = *checkpoint;
      return cmd_train(cfg, resume);
    }
    if (eval_cmd->parsed()) {
      RunConfig cfg = resolve(eval_c);
      if (data_root) cfg.data_root = *data_root;
      cfg.checkpoint = *checkpoint;
      return cmd_eval(cfg);
    }
    if (sr_cmd->parsed()) {
      RunConfig cfg = resolve(sr_c);
      cfg.checkpoint = *checkpoint;
      return cmd_sr(cfg, *clip_dir);
    }
    if (cmp_cmd->parsed()) {
      RunConfig cfg = resolve(cmp_c);
      if (data_root) cfg.data_root = *data_root;
      if (checkpoint) cfg.checkpoint = *checkpoint;
      try {
        if (provider) cfg.strategies.provider = parse_provider_kind(*provider);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      if (sigma) cfg.strategies.noise_sigma = *sigma;
      if (count) cfg.eval_count = *count;
      apply_synth(cfg);
      return cmd_compare(cfg);
    }
    if (viz_cmd->parsed()) {
      RunConfig cfg = resolve(viz_c);
      if (cfg.out.empty()) throw ConfigError("--out is required");
      write_flow_visualization(*flow_file, cfg.out);
      return 0;
    }
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    spdlog::error("numeric: {}", e.what());
    return kExitNumeric;
  } catch (const DataError& e) {
    spdlog::error("data: {}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return 0;
}
