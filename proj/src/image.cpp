#include "hygienefeat/image.hpp"

namespace hygienefeat {

RasterImage::RasterImage(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c) {
  if (w < 1 || h < 1 || (c != 1 && c != 3)) {
    throw Error(ErrorCode::InvalidArgument, "invalid raster dimensions");
  }
  pixels.assign(static_cast<std::size_t>(w) * h * c, fill);
}

RasterImage::RasterImage(int w, int h, int c, std::vector<std::uint8_t> data)
    : width(w), height(h), channels(c), pixels(std::move(data)) {
  if (w < 1 || h < 1 || (c != 1 && c != 3) ||
      pixels.size() != static_cast<std::size_t>(w) * h * c) {
    throw Error(ErrorCode::InvalidArgument, "invalid raster dimensions");
  }
}

GrayImage as_gray(const RasterImage& img) {
  if (img.channels != 1) {
    throw Error(ErrorCode::InvalidArgument, "expected a single-channel image");
  }
  return GrayImage(img.width, img.height, img.pixels);
}

RasterImage as_raster(const GrayImage& img) {
  auto d = img.data();
  return RasterImage(img.width(), img.height(), 1,
                     std::vector<std::uint8_t>(d.begin(), d.end()));
}

RasterImage to_rgb(const RasterImage& img) {
  if (img.channels == 3) return img;
  RasterImage out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] =
        img.pixels[i];
  }
  return out;
}

FloatImage to_float(const GrayImage& img, double scale) {
  FloatImage out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
  return out;
}

}  // namespace hygienefeat
