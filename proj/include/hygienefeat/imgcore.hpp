#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "hygienefeat/image.hpp"

namespace hygienefeat {

// Reads binary PNM (P5 grayscale or P6 RGB, maxval 255). Header comments are
// rejected so that load/save round trips are bit-exact.
RasterImage load_pnm(const std::filesystem::path& path);
RasterImage decode_pnm(std::span<const std::uint8_t> bytes);

// Writes P5 for one channel, P6 for three.
void save_pnm(const RasterImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pnm(const RasterImage& img);

// BT.601 luma, rounded half away from zero. Gray input is returned as is.
GrayImage to_grayscale(const RasterImage& img);

struct Kernel1D {
  int radius = 0;
  std::vector<double> taps;  // 2 * radius + 1 entries, normalized to sum 1
};

// Sampled Gaussian truncated at radius ceil(3 * sigma).
Kernel1D gaussian_kernel(double sigma);

// Separable blur (rows then columns), mirror border without edge repeat.
FloatImage gaussian_blur(const FloatImage& img, double sigma);
GrayImage gaussian_blur(const GrayImage& img, double sigma);

// Correlates with an arbitrary separable kernel pair; exposed for the
// structure tensor and for tests.
FloatImage separable_filter(const FloatImage& img, const Kernel1D& horizontal,
                            const Kernel1D& vertical);

BinaryMask threshold_binary(const GrayImage& img, int t);

// 3x3 (8-connected) dilation, borders clipped.
BinaryMask dilate(const BinaryMask& mask, int iterations = 1);

// Raw-scale 3x3 Sobel derivatives with mirror border.
GradientField sobel_gradients(const GrayImage& img);
GradientField sobel_gradients(const FloatImage& img);

// Mirror index into [0, n) without repeating the edge sample
// (..., 2, 1, | 0, 1, 2, ..., n-1 |, n-2, ...).
int reflect_index(int i, int n) noexcept;

// Bilinear sample with clamped coordinates.
double sample_bilinear(const FloatImage& img, double x, double y) noexcept;

// Rounds half away from zero and clamps to [0, 255].
std::uint8_t to_byte(double v) noexcept;

// Worker count used by the row-parallel kernels and per-frame loops.
// Results never depend on the value.
void set_thread_count(int n);
int thread_count() noexcept;

// Runs body(i) for i in [0, n), split into contiguous chunks across the
// configured workers. Each index is visited exactly once.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace hygienefeat
