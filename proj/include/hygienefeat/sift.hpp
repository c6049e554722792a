#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "hygienefeat/image.hpp"

namespace hygienefeat {

struct SiftConfig {
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  double assumed_blur = 0.5;  // blur already present in the input
  bool upsample = true;
  double contrast_threshold = 0.03;
  double edge_r = 10.0;
  int max_refine_iters = 5;
  int border = 5;
  int orientation_bins = 36;
  double orientation_peak_ratio = 0.8;
  double orientation_sigma_factor = 1.5;
  int descriptor_width = 4;
  int descriptor_bins = 8;
  double descriptor_scale = 3.0;  // spatial bin width in units of sigma
  double descriptor_clamp = 0.2;
};

void validate(const SiftConfig& cfg);

// Gaussian scale space. images[o][i] has blur sigmas[o][i], expressed in
// pixels of the pyramid base (the upsampled image when upsampling is on).
struct ScaleSpacePyramid {
  std::vector<std::vector<FloatImage>> images;
  std::vector<std::vector<double>> sigmas;
  double base_sigma = 1.6;
  int scales_per_octave = 3;
  // Pyramid-base pixels per input pixel (2 with upsampling, else 1).
  double input_scale = 2.0;

  int octave_count() const noexcept { return static_cast<int>(images.size()); }
};

struct DoGPyramid {
  std::vector<std::vector<FloatImage>> images;
};

struct SiftKeypoint {
  double x = 0.0;  // input-image pixels
  double y = 0.0;
  double sigma = 0.0;  // input-image pixels
  int octave = 0;
  int layer = 0;
  double response = 0.0;     // |interpolated DoG|
  double orientation = 0.0;  // radians in [0, 2*pi)
  // Refined location inside the octave (octave pixels) and the octave-local
  // scale; used to sample the pyramid.
  double octave_x = 0.0;
  double octave_y = 0.0;
  double octave_sigma = 0.0;
};

struct SiftDescriptor {
  std::array<double, 128> values{};
};

// Intensities are scaled to [0, 1] before the pyramid is built.
ScaleSpacePyramid build_pyramid(const GrayImage& img,
                                const SiftConfig& cfg = {});

DoGPyramid dog_pyramid(const ScaleSpacePyramid& p);

// Scale-space extrema with quadratic refinement and contrast/edge rejection.
// Orientation is left at zero.
std::vector<SiftKeypoint> detect_extrema(const DoGPyramid& d,
                                         const ScaleSpacePyramid& p,
                                         const SiftConfig& cfg = {});

// Dominant orientations; throws DegenerateNeighborhood on a flat patch.
std::vector<SiftKeypoint> assign_orientations(const ScaleSpacePyramid& p,
                                              const SiftKeypoint& kp,
                                              const SiftConfig& cfg = {});

// Angles (radians, [0, 2*pi)) of every local histogram peak reaching
// peak_ratio of the maximum, refined by parabolic interpolation.
std::vector<double> orientation_peaks(std::span<const double> hist,
                                      double peak_ratio);

// Throws OutOfImage when the sampling window leaves the layer.
SiftDescriptor compute_descriptor(const ScaleSpacePyramid& p,
                                  const SiftKeypoint& kp,
                                  const SiftConfig& cfg = {});

// Ratio-test matching. A single-element b is matched iff d1 < ratio.
std::vector<std::pair<std::size_t, std::size_t>> match_descriptors(
    std::span<const SiftDescriptor> a, std::span<const SiftDescriptor> b,
    double ratio = 0.8);

// Sorts by (octave, layer, y, x, orientation).
void sort_keypoints(std::vector<SiftKeypoint>& kps);

// Extrema plus orientations; keypoints with a flat neighbourhood are dropped.
std::vector<SiftKeypoint> detect_keypoints(const GrayImage& img,
                                           const SiftConfig& cfg = {});

struct SiftFeatures {
  std::vector<SiftKeypoint> keypoints;
  std::vector<SiftDescriptor> descriptors;  // index-aligned with keypoints
};

// Full pipeline; keypoints whose descriptor window leaves the image are
// dropped so that both lists stay aligned.
SiftFeatures detect_and_describe(const GrayImage& img,
                                 const SiftConfig& cfg = {});

}  // namespace hygienefeat
