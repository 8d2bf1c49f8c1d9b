#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "efenet/flow_viz.hpp"
#include "efenet/io.hpp"
#include "test_util.hpp"

using namespace efenet;

namespace {

// Hue in degrees of an RGB triple with value 1.
double hue_of(const Frame& f, int y, int x) {
  const double r = f.at(y, x, 0), g = f.at(y, x, 1), b = f.at(y, x, 2);
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  if (mx - mn < 1e-9) return 0.0;
  double h;
  if (mx == r)
    h = 60.0 * std::fmod((g - b) / (mx - mn), 6.0);
  else if (mx == g)
    h = 60.0 * ((b - r) / (mx - mn) + 2.0);
  else
    h = 60.0 * ((r - g) / (mx - mn) + 4.0);
  return h < 0.0 ? h + 360.0 : h;
}

double angular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

}  // namespace

TEST(FlowViz, ZeroFlowIsWhite) {
  const Frame img = flow_to_color(FlowField(4, 4), 1.0);
  for (float v : img.tensor().span()) EXPECT_FLOAT_EQ(v, 1.0f);
}

TEST(FlowViz, UniformRightwardFlowHasOneSaturatedHue) {
  const Frame img = flow_to_color(FlowField(5, 5, 2.0f, 0.0f), 2.0);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      EXPECT_FLOAT_EQ(img.at(y, x, 0), 1.0f);
      EXPECT_FLOAT_EQ(img.at(y, x, 1), 0.0f);
      EXPECT_FLOAT_EQ(img.at(y, x, 2), 0.0f);
    }
}

TEST(FlowViz, RotationFieldHuesFollowDirection) {
  const int s = 33, c = 16;
  FlowField f(s, s);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      f.dx(y, x) = static_cast<float>(-(y - c));
      f.dy(y, x) = static_cast<float>(x - c);
    }
  const Frame img = flow_to_color(f, flow_magnitude_percentile(f));
  // Probes at right, bottom, left and top of the center.
  const int probes[4][2] = {{c, c + 10}, {c + 10, c}, {c, c - 10}, {c - 10, c}};
  for (const auto& p : probes) {
    const double dx = f.dx(p[0], p[1]), dy = f.dy(p[0], p[1]);
    double expected = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
    if (expected < 0) expected += 360.0;
    EXPECT_LE(angular_distance(hue_of(img, p[0], p[1]), expected), 10.0);
  }
}

TEST(FlowViz, PercentileAndLegend) {
  FlowField f(10, 10);
  for (int i = 0; i < 100; ++i) f.dx(i / 10, i % 10) = static_cast<float>(i + 1);
  EXPECT_NEAR(flow_magnitude_percentile(f, 99.0), 99.0, 1.0);
  const auto legend = flow_legend(2.5);
  ASSERT_FALSE(legend.empty());
  bool has_normalizer = false;
  for (const auto& [k, v] : legend) has_normalizer |= k == "Flow-Normalizer" && v.find("2.5") != std::string::npos;
  EXPECT_TRUE(has_normalizer);
}

TEST(FlowViz, WritesPngFromFlo) {
  efenet::testing::TempDir dir("viz");
  io::write_flo(dir.path() / "f.flo", efenet::testing::random_flow(8, 12, 1, 3.0));
  write_flow_visualization(dir.path() / "f.flo", dir.path() / "f.png");
  const Frame img = io::read_png(dir.path() / "f.png");
  EXPECT_EQ(img.shape(), (Shape{3, 8, 12}));
}
