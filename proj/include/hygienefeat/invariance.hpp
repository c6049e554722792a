#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hygienefeat/corners.hpp"
#include "hygienefeat/image.hpp"
#include "hygienefeat/sift.hpp"

namespace hygienefeat {

enum class TransformKind { Rotation, Scale, Illumination };

struct Transform {
  TransformKind kind = TransformKind::Rotation;
  double angle = 0.0;   // degrees, rotation
  double factor = 1.0;  // scale
  double gain = 1.0;    // illumination: p' = clamp(round(gain * p + bias))
  double bias = 0.0;

  static Transform rotation(double degrees) {
    return {TransformKind::Rotation, degrees, 1.0, 1.0, 0.0};
  }
  static Transform scale(double f) {
    return {TransformKind::Scale, 0.0, f, 1.0, 0.0};
  }
  static Transform illumination(double g, double b) {
    return {TransformKind::Illumination, 0.0, 1.0, g, b};
  }
};

struct PointF {
  double x = 0.0;
  double y = 0.0;
};

struct Dims {
  int width = 0;
  int height = 0;
};

std::string to_string(TransformKind kind);
// Single scalar describing the transform ("90", "0.5", "1.3/20").
std::string parameter_label(const Transform& t);

// Rotations by multiples of 90 degrees are exact pixel permutations
// ((x, y) -> (h-1-y, x) per quarter turn); other angles are resampled
// bilinearly about the image centre.
GrayImage warp_image(const GrayImage& img, const Transform& t);

Dims warped_dims(const Transform& t, Dims dims);

// Where a source coordinate lands in the warped image.
PointF map_point(const Transform& t, PointF pt, Dims dims);

enum class Detector { Harris, ShiTomasi, Sift };

std::string to_string(Detector d);

struct RepeatabilityReport {
  Detector detector = Detector::Harris;
  Transform transform;
  int repeated = 0;
  int total = 0;
  double ratio = 0.0;
  bool verdict = false;  // Yes when ratio >= the verdict threshold
};

// Fraction of source points whose mapped location has a destination point
// within tol_px. Destination points may be claimed more than once.
RepeatabilityReport repeatability(std::span<const PointF> src,
                                  std::span<const PointF> dst,
                                  const Transform& t, Dims dims,
                                  double tol_px = 3.0);

struct InvarianceConfig {
  CornerConfig corners;
  SiftConfig sift;
  double tol_px = 3.0;
  double verdict_ratio = 0.5;
  int min_features = 10;
  Transform rotation = Transform::rotation(90.0);
  Transform scale = Transform::scale(0.5);
  Transform illumination = Transform::illumination(1.3, 20.0);
};

// Detector points used by the harness. For Harris and Shi-Tomasi an
// absolute threshold may be supplied (illumination row).
std::vector<PointF> detector_points(const GrayImage& img, Detector d,
                                    const InvarianceConfig& cfg);

// Runs every detector on the source and on the three canonical transforms.
// Report order: Harris, Shi-Tomasi, SIFT; rotation, scale, illumination.
std::vector<RepeatabilityReport> invariance_matrix(
    const GrayImage& img, const InvarianceConfig& cfg = {});

// The expected Yes/No pattern, same order as invariance_matrix.
std::vector<bool> reference_pattern();

bool matches_reference(std::span<const RepeatabilityReport> reports);

// Seeded procedural texture on a bright field: fine checker patches with
// random cell intensities (185..255) and dark Gaussian blobs of several
// sizes placed away from the patches. The patches carry most of the
// strongest fixed-scale corners; the blobs carry most scale-space extrema.
GrayImage synthetic_texture(int size = 512, std::uint64_t seed = 7);

std::string render_table(std::span<const RepeatabilityReport> reports);
std::string render_csv(std::span<const RepeatabilityReport> reports);

}  // namespace hygienefeat
