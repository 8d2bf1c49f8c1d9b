#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "efenet/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace efenet;
using efenet::testing::random_flow;
using efenet::testing::random_frame;

TEST(Psnr, ConstantDifferenceOfOneTenth) {
  const Frame a(8, 8, 3, 0.0f), b(8, 8, 3, 0.1f);
  // 0.1f carries float rounding; the residual is well below 1e-6 dB.
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-6);
}

TEST(Psnr, IdenticalIsInfinite) {
  const Frame a = random_frame(5, 5, 3, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, MatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Frame a = random_frame(7 + s, 9, s % 2 ? 1 : 3, s), b = random_frame(7 + s, 9, s % 2 ? 1 : 3, 50 + s);
    EXPECT_TRUE(oracle::rel_close(psnr(a, b), oracle::psnr(a, b), 1e-9)) << s;
  }
}

TEST(Ssim, IdentityAndSymmetry) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Frame a = random_frame(24, 20, 3, 10 + s), b = random_frame(24, 20, 3, 20 + s);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_LT(ssim(a, b), 0.5);
  }
}

TEST(Ssim, CheckerboardMatchesReference) {
  const auto [a, b] = oracle::checkerboard_pair();
  EXPECT_NEAR(ssim(a, b), oracle::kCheckerboardSsim, 1e-6);
}

TEST(Ssim, MatchesDirectWindowOracle) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Frame a = random_frame(16 + s, 18, 1, 30 + s), b = random_frame(16 + s, 18, 1, 40 + s);
    EXPECT_NEAR(ssim(a, b), oracle::ssim_gray(a, b), 1e-10);
  }
}

TEST(Ssim, RgbUsesLuma) {
  Frame rgb(16, 16, 3), gray(16, 16, 1);
  const Frame r = random_frame(16, 16, 3, 5);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = r.at(y, x, c);
      gray.at(y, x, 0) = 0.299f * r.at(y, x, 0) + 0.587f * r.at(y, x, 1) + 0.114f * r.at(y, x, 2);
    }
  const Frame flat3(16, 16, 3, 0.5f), flat1(16, 16, 1, 0.5f);
  EXPECT_NEAR(ssim(rgb, flat3), ssim(gray, flat1), 1e-6);
}

TEST(EndpointError, ThreeFourFive) {
  EXPECT_DOUBLE_EQ(endpoint_error(FlowField(10, 10, 3.0f, 4.0f), FlowField(10, 10)), 5.0);
}

TEST(EndpointError, MatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const FlowField a = random_flow(12 + s % 5, 14, s, 3.0), b = random_flow(12 + s % 5, 14, 100 + s, 3.0);
    const int m = s % 5;
    EXPECT_TRUE(oracle::rel_close(endpoint_error(a, b, m), oracle::endpoint_error(a, b, m), 1e-9)) << s;
  }
}

TEST(EndpointError, MarginIgnoresBorder) {
  FlowField f(10, 10);
  f.dx(0, 0) = 100.0f;
  EXPECT_EQ(endpoint_error(f, FlowField(10, 10), 1), 0.0);
  EXPECT_THROW(endpoint_error(f, FlowField(10, 10), 5), std::invalid_argument);
}

TEST(MetricReport, CsvAndMeans) {
  MetricReport r;
  r.rows.push_back({"a", 30.0, 0.9, 1.5});
  r.rows.push_back({"b", std::numeric_limits<double>::infinity(), 1.0, std::nullopt});
  std::ostringstream os;
  r.write_csv(os);
  EXPECT_EQ(os.str(), "clip_id,psnr_db,ssim,epe_px\na,30.000000,0.900000,1.500000\nb,inf,1.000000,\n");
  EXPECT_DOUBLE_EQ(*r.mean_epe(), 1.5);
  EXPECT_DOUBLE_EQ(r.mean_ssim(), 0.95);
}
