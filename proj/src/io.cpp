#include "efenet/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "efenet/errors.hpp"

namespace efenet::io {
namespace {

static_assert(std::endian::native == std::endian::little, "FLO1 I/O assumes a little-endian host");

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

std::uint8_t quantize(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

Frame read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  Frame frame(h, w, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        frame.at(y, x, c) = buffer[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0f;
  return frame;
}

namespace {

// Kept free of C++ objects so that libpng's longjmp cannot skip destructors.
bool encode_png(png_structp png, png_infop info, std::FILE* file, int w, int h, int color, png_bytep* rows,
                png_textp text, int text_count) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (text_count > 0) png_set_text(png, info, text, text_count);
  png_set_rows(png, info, rows);
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  return true;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Frame& frame,
               const std::vector<std::pair<std::string, std::string>>& text) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialization failed");
  }
  const int h = frame.height(), w = frame.width(), channels = frame.channels();
  std::vector<png_byte> rows(static_cast<std::size_t>(h) * w * channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        rows[(static_cast<std::size_t>(y) * w + x) * channels + c] = quantize(frame.at(y, x, c));
  std::vector<png_bytep> row_ptrs(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * w * channels;

  std::vector<png_text> chunks(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
    chunks[i].key = const_cast<char*>(text[i].first.c_str());
    chunks[i].text = const_cast<char*>(text[i].second.c_str());
  }

  const bool ok = encode_png(png, info, file.get(), w, h, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                             row_ptrs.data(), chunks.data(), static_cast<int>(chunks.size()));
  png_destroy_write_struct(&png, &info);
  if (!ok) throw DataError("failed writing PNG " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open flow file " + path.string());
  char magic[4];
  std::uint16_t h = 0, w = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h), 2);
  in.read(reinterpret_cast<char*>(&w), 2);
  if (!in || std::memcmp(magic, "FLO1", 4) != 0) throw DataError("not a FLO1 file: " + path.string());
  if (h == 0 || w == 0) throw DataError("FLO1 file has empty extent: " + path.string());
  std::vector<float> body(static_cast<std::size_t>(h) * w * 2);
  in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size() * 4));
  if (in.gcount() != static_cast<std::streamsize>(body.size() * 4))
    throw DataError("truncated FLO1 file: " + path.string());
  in.peek();
  if (!in.eof()) throw DataError("trailing bytes in FLO1 file: " + path.string());
  FlowField flow(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 2;
      flow.dx(y, x) = body[i];
      flow.dy(y, x) = body[i + 1];
    }
  return flow;
}

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  if (flow.height() > 65535 || flow.width() > 65535)
    throw std::invalid_argument("FLO1 extent exceeds 16 bits");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const auto h = static_cast<std::uint16_t>(flow.height());
  const auto w = static_cast<std::uint16_t>(flow.width());
  out.write("FLO1", 4);
  out.write(reinterpret_cast<const char*>(&h), 2);
  out.write(reinterpret_cast<const char*>(&w), 2);
  std::vector<float> body(static_cast<std::size_t>(h) * w * 2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 2;
      body[i] = flow.dx(y, x);
      body[i + 1] = flow.dy(y, x);
    }
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size() * 4));
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace efenet::io
