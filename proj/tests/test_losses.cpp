#include <gtest/gtest.h>

#include <cmath>

#include "efenet/imaging.hpp"
#include "efenet/losses.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace efenet;
using efenet::testing::random_flow;
using efenet::testing::random_frame;

TEST(Losses, ReconstructionMatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Frame a = random_frame(9 + s % 4, 7 + s % 3, s % 2 ? 3 : 1, 10 * s);
    const Frame b = random_frame(a.height(), a.width(), a.channels(), 10 * s + 1);
    EXPECT_TRUE(oracle::rel_close(loss_sr(a, b), oracle::loss_sr(a, b), 1e-9)) << s;
  }
}

TEST(Losses, StepFlowLossMatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int h = 12 + s % 5, w = 10 + s % 3, n = 1 + s % 4;
    const Frame ref = random_frame(h, w, 3, 100 + s);
    std::vector<FlowField> flows;
    std::vector<Frame> gts;
    for (int i = 0; i < n; ++i) {
      flows.push_back(random_flow(h, w, 200 + 10 * s + i, 3.0));
      gts.push_back(random_frame(h, w, 3, 300 + 10 * s + i));
    }
    const int border = s % 3;
    EXPECT_TRUE(oracle::rel_close(loss_flow_steps(ref, flows, gts, border),
                                  oracle::loss_flow_steps(ref, flows, gts, border), 1e-9))
        << s;
  }
}

TEST(Losses, RefinedFlowLossMatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Frame ref = random_frame(16, 12, s % 2 ? 3 : 1, 400 + s);
    const FlowField flow = random_flow(16, 12, 500 + s, 4.0);
    const Frame gt = random_frame(16, 12, ref.channels(), 600 + s);
    EXPECT_TRUE(oracle::rel_close(loss_flow_refined(ref, flow, gt, 4), oracle::warp_error(ref, flow, gt, 4), 1e-9))
        << s;
  }
}

TEST(Losses, KnownValues) {
  EXPECT_EQ(charbonnier(0.0), 0.001);
  const Frame z(4, 4, 3, 0.5f);
  EXPECT_NEAR(loss_sr(z, z), 0.048, 1e-15);
  Frame one(1, 1, 1, 1.0f);
  EXPECT_DOUBLE_EQ(loss_sr(one, Frame(1, 1, 1)), std::sqrt(1.000001));
  EXPECT_DOUBLE_EQ(total_loss({1.0, 0.0, 0.0}, {}), 1.0);
  EXPECT_DOUBLE_EQ(total_loss({2.0, 10.0, 20.0}, {}), 2.0 + 1.0 + 2.0);
}

TEST(Losses, BatchMeanOfReconstruction) {
  const Frame a = random_frame(5, 5, 3, 1), b = random_frame(5, 5, 3, 2), c = random_frame(5, 5, 3, 3);
  const Frame preds[] = {a, b}, gts[] = {c, c};
  EXPECT_DOUBLE_EQ(loss_sr(preds, gts), (loss_sr(a, c) + loss_sr(b, c)) / 2.0);
}

TEST(Losses, PerfectWarpHasZeroFlowLoss) {
  const Frame ref = random_frame(12, 12, 3, 4);
  const FlowField zero(12, 12);
  EXPECT_EQ(loss_flow_refined(ref, zero, ref, 0), 0.0);
  const FlowField flows[] = {zero, zero};
  const Frame gts[] = {ref, ref};
  EXPECT_EQ(loss_flow_steps(ref, flows, gts), 0.0);
}

TEST(Losses, BorderExcludesEdges) {
  const Frame ref(10, 10, 1, 0.0f);
  Frame gt(10, 10, 1, 0.0f);
  gt.at(0, 0, 0) = 1.0f;
  gt.at(5, 5, 0) = 0.5f;
  EXPECT_DOUBLE_EQ(loss_flow_refined(ref, FlowField(10, 10), gt, 0), 1.25);
  EXPECT_DOUBLE_EQ(loss_flow_refined(ref, FlowField(10, 10), gt, 4), 0.25);
}

TEST(Losses, RejectsMismatchedInputs) {
  EXPECT_THROW(loss_sr(Frame(4, 4, 3), Frame(4, 5, 3)), std::invalid_argument);
  const Frame ref(8, 8, 3);
  const FlowField flows[] = {FlowField(8, 8)};
  EXPECT_THROW(loss_flow_steps(ref, flows, std::span<const Frame>{}), std::invalid_argument);
  EXPECT_THROW((LossWeights{-1.0, 0, 0}.validate()), std::invalid_argument);
}
