#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "efenet/frame.hpp"

namespace efenet::testing {

template <class T = float>
BasicTensor<T> random_tensor(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  BasicTensor<T> t(c, h, w);
  for (T& v : t.span()) v = static_cast<T>(u(rng));
  return t;
}

inline Frame random_frame(int h, int w, int c, std::uint64_t seed) { return Frame(random_tensor(c, h, w, seed)); }

inline FlowField random_flow(int h, int w, std::uint64_t seed, double mag) {
  return FlowField(random_tensor(2, h, w, seed, -mag, mag));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("efenet_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace efenet::testing
