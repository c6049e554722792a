#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "hygienefeat/image.hpp"

namespace hftest {

using hygienefeat::FloatImage;
using hygienefeat::GrayImage;

// Portable uniform draws: std::uniform_*_distribution differs between
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

inline GrayImage random_gray(int w, int h, Rng& rng) {
  GrayImage img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.integer(0, 255));
  return img;
}

inline FloatImage random_float(int w, int h, Rng& rng) {
  FloatImage img(w, h);
  for (auto& v : img.data()) v = rng.uniform();
  return img;
}

// Mirror reflection written out independently of the library.
inline int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("hygienefeat_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace hftest
