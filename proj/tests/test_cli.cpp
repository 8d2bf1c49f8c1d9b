#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "efenet/imaging.hpp"
#include "efenet/io.hpp"
#include "test_util.hpp"

using efenet::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(EFENET_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// A tiny run: 32x32 HR clips, n = 2.
fs::path small_config(const fs::path& dir) {
  const fs::path p = dir / "small.json";
  std::ofstream(p) << R"({"data": {"count": 3, "eval_count": 2,
                                   "synthetic": {"height": 32, "width": 32, "n": 2}},
                          "train": {"iterations": 50, "learning_rate": 0.001}})";
  return p;
}

}  // namespace

TEST(Cli, HelpExitsZeroForEverySubcommand) {
  EXPECT_EQ(run("--help").code, 0);
  for (const char* sub : {"synth-data", "train", "eval", "sr", "compare-strategies", "flow-viz"}) {
    const CliResult r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--seed"), std::string::npos) << sub;
  }
}

TEST(Cli, SynthDataWritesClipsDeterministically) {
  TempDir dir("cli");
  const CliResult a = run("synth-data --count 5 --n 2 --size 32 --seed 3 --out " + (dir.path() / "a").string());
  ASSERT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("clip_0004"), std::string::npos);
  for (int i = 0; i < 5; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "clip_%04d", i);
    EXPECT_TRUE(fs::exists(dir.path() / "a" / id / "frame_02.png")) << id;
    EXPECT_TRUE(fs::exists(dir.path() / "a" / id / "flow_02.flo")) << id;
  }
  ASSERT_EQ(run("synth-data --count 5 --n 2 --size 32 --seed 3 --out " + (dir.path() / "b").string()).code, 0);
  for (const char* f : {"clip_0000/frame_01.png", "clip_0003/flow_02.flo", "manifest.json"})
    EXPECT_EQ(slurp(dir.path() / "a" / f), slurp(dir.path() / "b" / f)) << f;

  ASSERT_EQ(run("synth-data --count 0 --out " + (dir.path() / "c").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir.path() / "c" / "manifest.json"));
}

TEST(Cli, TrainEvalAndSuperResolve) {
  TempDir dir("cli");
  const std::string cfg = "--config " + small_config(dir.path()).string();
  const fs::path run_dir = dir.path() / "run";
  ASSERT_EQ(run("train " + cfg + " --out " + run_dir.string()).code, 0);
  const std::string log = slurp(run_dir / "train_log.csv");
  EXPECT_EQ(count_lines(log), 51);
  EXPECT_EQ(log.rfind("iteration,l_sr,l_flow1,l_flow2,total,wallclock_s\n", 0), 0u);
  EXPECT_TRUE(fs::exists(run_dir / "model.ckpt"));
  EXPECT_TRUE(fs::exists(run_dir / "config.json"));

  const CliResult eval = run("eval " + cfg + " --checkpoint " + (run_dir / "model.ckpt").string());
  ASSERT_EQ(eval.code, 0);
  EXPECT_EQ(count_lines(eval.out), 3);
  EXPECT_EQ(eval.out.rfind("clip_id,psnr_db,ssim,epe_px\n", 0), 0u);

  // Resuming to 60 iterations appends the remaining 10 rows.
  ASSERT_EQ(run("train " + cfg + " --iterations 60 --resume " + (run_dir / "model.ckpt").string() + " --out " +
                (dir.path() / "resumed").string())
                .code,
            0);
  EXPECT_EQ(count_lines(slurp(dir.path() / "resumed" / "train_log.csv")), 11);
}

TEST(Cli, SuperResolveAtInitializationIsBicubic) {
  TempDir dir("cli");
  const std::string cfg = "--config " + small_config(dir.path()).string();
  ASSERT_EQ(run("synth-data " + cfg + " --count 1 --out " + (dir.path() / "data").string()).code, 0);
  ASSERT_EQ(run("train " + cfg + " --iterations 1 --lr 1e-30 --out " + (dir.path() / "run").string()).code, 0);
  const fs::path clip = dir.path() / "data" / "clip_0000";
  ASSERT_EQ(run("sr --checkpoint " + (dir.path() / "run" / "model.ckpt").string() + " --clip " + clip.string() +
                " --out " + (dir.path() / "sr.png").string())
                .code,
            0);
  const efenet::Frame out = efenet::io::read_png(dir.path() / "sr.png");
  const efenet::Frame last = efenet::io::read_png(clip / "frame_02.png");
  const efenet::Frame lr = efenet::bicubic_resample(last, 0.25);
  const efenet::Frame expected = efenet::bicubic_resample(lr, 4.0);
  EXPECT_EQ(out.shape(), expected.shape());
  double max_diff = 0.0;
  for (std::size_t i = 0; i < out.tensor().size(); ++i)
    max_diff = std::max(max_diff, std::abs(static_cast<double>(out.tensor()[i]) - expected.tensor()[i]));
  // A single step at a negligible learning rate keeps the output on the bicubic grid up to quantization.
  EXPECT_LE(max_diff, 0.5 / 255.0 + 1e-6);
}

TEST(Cli, CompareStrategiesAndFlowViz) {
  TempDir dir("cli");
  const std::string cfg = "--config " + small_config(dir.path()).string();
  ASSERT_EQ(run("compare-strategies " + cfg + " --provider noisy-oracle --sigma 0.5 --count 3 --n 3 --out " +
                (dir.path() / "cmp").string())
                .code,
            0);
  const std::string csv = slurp(dir.path() / "cmp" / "strategies.csv");
  EXPECT_EQ(count_lines(csv), 1 + 12 + 4);
  for (const char* s : {"direct", "recursive", "sequential", "refined"})
    EXPECT_TRUE(fs::exists(dir.path() / "cmp" / (std::string("warped_") + s + ".png"))) << s;

  ASSERT_EQ(run("synth-data " + cfg + " --count 1 --out " + (dir.path() / "data").string()).code, 0);
  const fs::path flo = dir.path() / "data" / "clip_0000" / "flow_02.flo";
  ASSERT_EQ(run("flow-viz --flow " + flo.string() + " --out " + (dir.path() / "f.png").string()).code, 0);
  EXPECT_EQ(efenet::io::read_png(dir.path() / "f.png").channels(), 3);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("synth-data --bogus").code, 1);
  EXPECT_EQ(run("synth-data --motion spiral --out " + dir.path().string()).code, 1);
  const fs::path bad = dir.path() / "bad.json";
  std::ofstream(bad) << R"({"unknown": 1})";
  EXPECT_EQ(run("train --config " + bad.string() + " --out " + dir.path().string()).code, 1);
  EXPECT_EQ(run("eval --checkpoint " + (dir.path() / "missing.ckpt").string()).code, 2);
  EXPECT_EQ(run("train --data /nonexistent/efenet --out " + dir.path().string()).code, 2);
  std::ofstream(dir.path() / "junk.ckpt") << "junk";
  EXPECT_EQ(run("eval --checkpoint " + (dir.path() / "junk.ckpt").string()).code, 2);
}
