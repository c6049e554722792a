#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hygienefeat/error.hpp"

namespace hygienefeat {

// Interleaved 8-bit raster, row-major, top-left origin. channels is 1 (gray)
// or 3 (R,G,B).
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(int w, int h, int c, std::uint8_t fill = 0);
  RasterImage(int w, int h, int c, std::vector<std::uint8_t> data);

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

// Single-channel grid. The tag keeps grayscale images, binary masks and
// real-valued maps from being mixed up at call sites.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 1");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1 ||
        data_.size() != static_cast<std::size_t>(width) * height) {
      throw Error(ErrorCode::InvalidArgument,
                  "grid data length does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int x, int y) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> row(int y) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(y) * width_,
                                       width_);
  }
  std::span<const T> row(int y) const {
    return std::span<const T>(data_).subspan(
        static_cast<std::size_t>(y) * width_, width_);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct GrayTag {};
struct FloatTag {};
struct MaskTag {};

using GrayImage = Grid<std::uint8_t, GrayTag>;
using FloatImage = Grid<double, FloatTag>;
// Bits are stored as 0/1 bytes.
using BinaryMask = Grid<std::uint8_t, MaskTag>;

struct GradientField {
  FloatImage gx;
  FloatImage gy;
};

struct Point {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

// Conversions between the raster container and typed grids.
GrayImage as_gray(const RasterImage& img);
RasterImage as_raster(const GrayImage& img);
RasterImage to_rgb(const RasterImage& img);
FloatImage to_float(const GrayImage& img, double scale = 1.0);

}  // namespace hygienefeat
