#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hygienefeat/image.hpp"

namespace hygienefeat {

// Gaussian-windowed gradient products; per pixel the 2x2 matrix
// [[ixx, ixy], [ixy, iyy]].
struct StructureTensorField {
  FloatImage ixx;
  FloatImage ixy;
  FloatImage iyy;
  double window_sigma = 1.0;
};

struct CornerPoint {
  int x = 0;
  int y = 0;
  double response = 0.0;
};

struct CornerConfig {
  double harris_k = 0.04;
  double window_sigma = 1.0;
  double quality_level = 0.01;
  int max_corners = 100;
  double min_distance = 10.0;
  // When set, replaces the quality_level * max(response) threshold.
  std::optional<double> absolute_threshold;
};

void validate(const CornerConfig& cfg);

// Gradients are taken on intensities scaled to [0, 1].
StructureTensorField structure_tensor(const GrayImage& img,
                                      double window_sigma);

// det(M) - k * trace(M)^2, 0 < k < 0.25.
FloatImage harris_response(const StructureTensorField& field, double k);

// Smaller eigenvalue of M, clamped at zero.
FloatImage shi_tomasi_response(const StructureTensorField& field);

// Relative (or absolute) threshold, strict 3x3 non-maximum suppression,
// ordering by response and greedy minimum-distance selection. Every stage
// breaks ties by row-major index.
std::vector<CornerPoint> detect_corners(const FloatImage& response,
                                        const CornerConfig& cfg);

// The threshold detect_corners would apply to this response map.
double corner_threshold(const FloatImage& response, const CornerConfig& cfg);

// Red 5x5 dots: each corner pixel dilated twice with the 3x3 element.
RasterImage mark_corners(const RasterImage& img,
                         std::span<const CornerPoint> corners);

enum class CornerMethod { Harris, ShiTomasi };

FloatImage corner_response(const GrayImage& img, CornerMethod method,
                           const CornerConfig& cfg);

inline std::vector<CornerPoint> find_corners(const GrayImage& img,
                                             CornerMethod method,
                                             const CornerConfig& cfg = {}) {
  return detect_corners(corner_response(img, method, cfg), cfg);
}

}  // namespace hygienefeat
