#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "efenet/errors.hpp"
#include "efenet/io.hpp"
#include "test_util.hpp"

using namespace efenet;
using efenet::testing::TempDir;

TEST(Tensor, IndexingIsChannelMajor) {
  Tensor t(2, 3, 4);
  t(1, 2, 3) = 7.0f;
  EXPECT_EQ(t[(1 * 3 + 2) * 4 + 3], 7.0f);
  EXPECT_EQ(t.channel(1).size(), 12u);
}

TEST(Tensor, ConcatAndSliceRoundTrip) {
  const Tensor a = efenet::testing::random_tensor(2, 3, 3, 1);
  const Tensor b = efenet::testing::random_tensor(3, 3, 3, 2);
  const Tensor* parts[] = {&a, &b};
  const Tensor cat = concat_channels<float>(parts);
  EXPECT_EQ(cat.channels(), 5);
  EXPECT_EQ(slice_channels(cat, 0, 2), a);
  EXPECT_EQ(slice_channels(cat, 2, 3), b);
}

TEST(Tensor, AllFiniteDetectsNan) {
  Tensor t(1, 2, 2, 0.5f);
  EXPECT_TRUE(all_finite(t));
  t[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(all_finite(t));
}

TEST(Frame, RejectsInvalidChannelCounts) {
  EXPECT_THROW(Frame(4, 4, 2), std::invalid_argument);
  EXPECT_THROW(Frame(0, 4, 3), std::invalid_argument);
  EXPECT_NO_THROW(Frame(4, 4, 1));
}

TEST(FlowField, RequiresTwoChannels) {
  EXPECT_THROW(FlowField(Tensor(3, 4, 4)), std::invalid_argument);
  const FlowField f(2, 3, 1.5f, -2.0f);
  EXPECT_EQ(f.dx(1, 2), 1.5f);
  EXPECT_EQ(f.dy(0, 0), -2.0f);
}

TEST(Png, QuantizesRoundHalfUp) {
  EXPECT_EQ(io::quantize(0.0f), 0);
  EXPECT_EQ(io::quantize(1.0f), 255);
  EXPECT_EQ(io::quantize(2.0f), 255);
  EXPECT_EQ(io::quantize(-1.0f), 0);
  EXPECT_EQ(io::quantize(0.5f / 255.0f), 1);
  EXPECT_EQ(io::quantize(0.49f / 255.0f), 0);
}

TEST(Png, RoundTripIsExactOnQuantizedValues) {
  TempDir dir("png");
  for (int channels : {1, 3}) {
    Frame f(5, 7, channels);
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) f.at(y, x, c) = static_cast<float>((c * 35 + y * 7 + x) % 256) / 255.0f;
    const auto path = dir.path() / ("f" + std::to_string(channels) + ".png");
    io::write_png(path, f, {{"Key", "value"}});
    const Frame g = io::read_png(path);
    ASSERT_EQ(g.shape(), f.shape());
    EXPECT_EQ(g, f);
  }
}

TEST(Png, MissingFileIsDataError) {
  EXPECT_THROW(io::read_png("/nonexistent/x.png"), DataError);
}

TEST(Flo, RoundTripIsBitExact) {
  TempDir dir("flo");
  const FlowField f = efenet::testing::random_flow(6, 9, 3, 5.0);
  io::write_flo(dir.path() / "a.flo", f);
  EXPECT_EQ(io::read_flo(dir.path() / "a.flo"), f);
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "a.flo"), 8u + 6u * 9u * 8u);
}

TEST(Flo, HeaderLayout) {
  TempDir dir("flo");
  io::write_flo(dir.path() / "a.flo", FlowField(3, 2, 1.0f, 2.0f));
  std::ifstream in(dir.path() / "a.flo", std::ios::binary);
  char bytes[12];
  in.read(bytes, 12);
  EXPECT_EQ(std::string(bytes, 4), "FLO1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3);  // H, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 2);  // W
  float dx;
  std::memcpy(&dx, bytes + 8, 4);
  EXPECT_EQ(dx, 1.0f);
}

TEST(Flo, CorruptFilesAreRejected) {
  TempDir dir("flo");
  const auto good = dir.path() / "good.flo";
  io::write_flo(good, FlowField(4, 4, 0.5f, 0.5f));

  const auto truncated = dir.path() / "truncated.flo";
  std::filesystem::copy_file(good, truncated);
  std::filesystem::resize_file(truncated, std::filesystem::file_size(good) - 3);
  EXPECT_THROW(io::read_flo(truncated), DataError);

  const auto trailing = dir.path() / "trailing.flo";
  std::filesystem::copy_file(good, trailing);
  std::ofstream(trailing, std::ios::app | std::ios::binary) << "x";
  EXPECT_THROW(io::read_flo(trailing), DataError);

  const auto magic = dir.path() / "magic.flo";
  std::ofstream(magic, std::ios::binary) << "PIEH0000";
  EXPECT_THROW(io::read_flo(magic), DataError);
}
