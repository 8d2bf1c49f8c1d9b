#include <gtest/gtest.h>

#include <chrono>
#include <set>

#include "efenet/flow_estimator.hpp"
#include "efenet/flow_refiner.hpp"
#include "efenet/imaging.hpp"
#include "efenet/synthesis.hpp"
#include "test_util.hpp"

using namespace efenet;
using efenet::testing::random_flow;
using efenet::testing::random_frame;

namespace {

std::vector<Frame> lr_sequence(int n, int h, int w, std::uint64_t seed) {
  std::vector<Frame> lr;
  for (int i = 0; i < n; ++i) lr.push_back(random_frame(h, w, 3, seed + i));
  return lr;
}

}  // namespace

TEST(FlowEstimator, ZeroHeadPredictsZeroFlow) {
  const auto params = FlowEstimatorParams::create(3, 1);
  const Frame ref = random_frame(32, 48, 3, 1);
  const FlowField f = estimate_flow(ref, random_frame(32, 48, 3, 2), params);
  EXPECT_EQ(f, FlowField(32, 48));
}

TEST(FlowEstimator, RandomHeadOutputsShapeAndDependsOnInput) {
  const auto params = FlowEstimatorParams::create(3, 1, nn::HeadInit::Random);
  const Frame ref = random_frame(32, 32, 3, 1);
  const FlowField a = estimate_flow(ref, random_frame(32, 32, 3, 2), params);
  const FlowField b = estimate_flow(ref, random_frame(32, 32, 3, 3), params);
  EXPECT_EQ(a.height(), 32);
  EXPECT_EQ(a.width(), 32);
  EXPECT_NE(a, b);
  const std::vector<Frame> lr = lr_sequence(3, 8, 8, 4);
  EXPECT_EQ(estimate_flows_sequence(ref, lr, params).size(), 3u);
}

TEST(FlowEstimator, RejectsMisalignedInputs) {
  const auto params = FlowEstimatorParams::create(3, 1);
  EXPECT_THROW(estimate_flow(Frame(32, 32, 3), Frame(32, 16, 3), params), std::invalid_argument);
}

TEST(FlowRefiner, ZeroHeadIsExactIdentity) {
  const auto params = FlowRefinerParams::create(3, 2);
  const FlowField flows[] = {random_flow(32, 32, 1, 2.0), random_flow(32, 32, 2, 2.0), random_flow(32, 32, 3, 2.0)};
  EXPECT_EQ(refine_flows(flows, params), flows[2]);
}

TEST(FlowRefiner, RejectsWrongSequenceLength) {
  const auto params = FlowRefinerParams::create(3, 2);
  const FlowField flows[] = {FlowField(32, 32), FlowField(32, 32)};
  EXPECT_THROW(refine_flows(flows, params), std::invalid_argument);
}

TEST(Synthesis, EncoderPyramidShapes) {
  const auto params = SynthesisParams::create(3, 1);
  const FeaturePyramid p = encode(random_frame(64, 32, 3, 1), params);
  for (int s = 0; s < kPyramidLevels; ++s) {
    EXPECT_EQ(p.levels[s].channels(), kPyramidChannels[s]);
    EXPECT_EQ(p.levels[s].height(), 64 >> s);
    EXPECT_EQ(p.levels[s].width(), 32 >> s);
  }
}

TEST(Synthesis, ScaleFlowAveragesAndDivides) {
  const FlowField f(16, 16, 4.0f, -8.0f);
  EXPECT_EQ(scale_flow(f, 1), f);
  const FlowField s = scale_flow(f, 3);
  EXPECT_EQ(s.height(), 4);
  EXPECT_FLOAT_EQ(s.dx(1, 1), 1.0f);
  EXPECT_FLOAT_EQ(s.dy(1, 1), -2.0f);
}

TEST(Synthesis, IdentityAtInitializationEqualsBicubic) {
  const ModelParams params = ModelParams::create(3, 4, 5);
  const Frame ref = random_frame(128, 128, 3, 6);
  const std::vector<Frame> lr = lr_sequence(4, 32, 32, 7);
  const auto start = std::chrono::steady_clock::now();
  const Frame out = super_resolve(ref, lr, params);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(out, bicubic_resample(lr.back(), 4.0));
  EXPECT_LT(seconds, 1.0);
}

TEST(Synthesis, NonMultipleExtentsArePaddedAndCropped) {
  const ModelParams params = ModelParams::create(1, 2, 5);
  std::vector<Frame> lr;
  for (int i = 0; i < 2; ++i) lr.push_back(random_frame(9, 7, 1, 20 + i));
  const SuperResolveTrace t = super_resolve_trace(random_frame(36, 28, 1, 8), lr, params);
  EXPECT_EQ(t.output, bicubic_resample(lr.back(), 4.0));
  EXPECT_EQ(t.refined.height(), 36);
  EXPECT_EQ(t.flows.size(), 2u);
}

TEST(Synthesis, GradientsReachEveryParameter) {
  ModelParams params = ModelParams::create(3, 2, 9, nn::HeadInit::Random);
  const Frame ref = random_frame(32, 32, 3, 10);
  std::vector<Tensor> ups;
  for (int i = 0; i < 2; ++i) ups.push_back(bicubic_resample(random_frame(8, 8, 3, 11 + i), 4.0).tensor());
  ag::Graph g;
  const PipelineNodes nodes = forward_pipeline(g, params, ref.tensor(), ups);
  Tensor seed(nodes.output.shape());
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = (i % 7) * 0.1f - 0.3f;
  g.backward(nodes.output, seed);
  for (const ag::Parameter* p : params.parameters()) {
    bool nonzero = false;
    for (float v : p->grad.span()) nonzero |= v != 0.0f;
    EXPECT_TRUE(nonzero) << p->name;
  }
}

TEST(ModelParams, ParameterNamesAreUnique) {
  ModelParams params = ModelParams::create(3, 4, 0);
  std::set<std::string> names;
  for (const ag::Parameter* p : params.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
  EXPECT_EQ(params.sequence_length(), 4);
  EXPECT_EQ(params.image_channels(), 3);
}

TEST(ModelParams, SeedDeterminesInitialization) {
  const ModelParams a = ModelParams::create(3, 2, 1), b = ModelParams::create(3, 2, 1), c = ModelParams::create(3, 2, 2);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  EXPECT_EQ(pa.front()->value, pb.front()->value);
  EXPECT_NE(pa.front()->value, pc.front()->value);
}
