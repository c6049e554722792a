#pragma once

#include <span>
#include <vector>

#include "hygienefeat/image.hpp"

namespace hygienefeat {

// Closed 8-connected outer boundary, clockwise in image coordinates.
struct Contour {
  std::vector<Point> points;
};

// Counter-clockwise (mathematical orientation) starting at the
// lexicographically smallest vertex; no three consecutive vertices collinear.
struct ConvexPolygon {
  std::vector<Point> vertices;
};

struct Moments {
  double m00 = 0.0;
  double m10 = 0.0;
  double m01 = 0.0;
};

struct Centroid {
  double cx = 0.0;
  double cy = 0.0;
};

// YCbCr box thresholds for the skin classifier.
struct SkinModel {
  int y_min = 40;  // exclusive
  int cb_min = 77;
  int cb_max = 127;
  int cr_min = 133;
  int cr_max = 173;
};

struct YCbCr {
  int y;
  int cb;
  int cr;
};

// Integer BT.601 full-range conversion.
YCbCr rgb_to_ycbcr(int r, int g, int b) noexcept;

bool is_skin(int r, int g, int b, const SkinModel& model = {}) noexcept;

// Per-pixel skin classification followed by one dilation pass.
BinaryMask skin_mask(const RasterImage& img, const SkinModel& model = {});

// One outer contour per 8-connected component, in row-major discovery order.
std::vector<Contour> find_contours(const BinaryMask& mask);

// Absolute shoelace area of the contour's vertex cycle.
double contour_area(const Contour& contour) noexcept;

// Largest by shoelace area; ties go to the earliest contour.
const Contour& largest_contour(std::span<const Contour> contours);

// Monotone chain hull with exact integer orientation tests.
ConvexPolygon convex_hull(std::span<const Point> points);

// 8-connected component containing the contour's first point, with its holes
// filled.
BinaryMask fill_region(const BinaryMask& mask, const Contour& contour);

Moments region_moments(const BinaryMask& mask);

// Throws EmptyRegion when m00 == 0.
Centroid centroid(const Moments& m);

// Contour pixels green, hull edges red, markers as blue 3x3 squares.
// Gray inputs are promoted to RGB.
RasterImage draw_overlay(const RasterImage& img,
                         std::span<const Point> contour,
                         std::span<const Point> hull,
                         std::span<const Point> markers);

// Integer line rasterization (Bresenham), endpoints included.
std::vector<Point> raster_line(Point a, Point b);

}  // namespace hygienefeat
