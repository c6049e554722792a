#include "hygienefeat/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>

#include "hygienefeat/imgcore.hpp"

namespace hygienefeat {

namespace {

// Moore neighborhood, clockwise on screen (y down), starting west.
constexpr std::array<Point, 8> kRing = {{{-1, 0},
                                         {-1, -1},
                                         {0, -1},
                                         {1, -1},
                                         {1, 0},
                                         {1, 1},
                                         {0, 1},
                                         {-1, 1}}};

int ring_index(int dx, int dy) {
  for (int i = 0; i < 8; ++i) {
    if (kRing[i].x == dx && kRing[i].y == dy) return i;
  }
  return -1;
}

bool set_at(const BinaryMask& m, int x, int y) {
  return m.contains(x, y) && m(x, y) != 0;
}

long long cross(const Point& o, const Point& a, const Point& b) {
  return static_cast<long long>(a.x - o.x) * (b.y - o.y) -
         static_cast<long long>(a.y - o.y) * (b.x - o.x);
}

// Moore-neighbor tracing. The tracer is a deterministic function of
// (pixel, backtrack direction); it stops the first time it re-enters the
// start pixel in a state it has already entered it with (Jacob's criterion)
// and returns exactly one period of the boundary cycle.
Contour trace_boundary(const BinaryMask& mask, Point start) {
  std::array<int, 8> seen;
  seen.fill(-1);
  Contour c;
  c.points.push_back(start);
  Point p = start;
  int back = 0;  // west of the first pixel is background by scan order
  seen[back] = 0;
  const std::size_t limit =
      8 * static_cast<std::size_t>(mask.width()) * mask.height() + 16;
  while (c.points.size() < limit) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      if (set_at(mask, p.x + kRing[d].x, p.y + kRing[d].y)) {
        found = k;
        break;
      }
    }
    if (found < 0) return c;  // isolated pixel
    const int d = (back + found) % 8;
    const int prev = (back + found - 1) % 8;
    const Point q{p.x + kRing[d].x, p.y + kRing[d].y};
    const Point b{p.x + kRing[prev].x, p.y + kRing[prev].y};
    const int next_back = ring_index(b.x - q.x, b.y - q.y);
    if (q == start) {
      if (seen[next_back] >= 0) {
        c.points.erase(c.points.begin(), c.points.begin() + seen[next_back]);
        return c;
      }
      seen[next_back] = static_cast<int>(c.points.size());
    }
    c.points.push_back(q);
    p = q;
    back = next_back;
  }
  return c;
}

}  // namespace

YCbCr rgb_to_ycbcr(int r, int g, int b) noexcept {
  YCbCr out;
  out.y = (77 * r + 150 * g + 29 * b + 128) >> 8;
  out.cb = ((-43 * r - 85 * g + 128 * b + 128) >> 8) + 128;
  out.cr = ((128 * r - 107 * g - 21 * b + 128) >> 8) + 128;
  out.y = std::clamp(out.y, 0, 255);
  out.cb = std::clamp(out.cb, 0, 255);
  out.cr = std::clamp(out.cr, 0, 255);
  return out;
}

bool is_skin(int r, int g, int b, const SkinModel& model) noexcept {
  const YCbCr c = rgb_to_ycbcr(r, g, b);
  return c.y > model.y_min && c.cb >= model.cb_min && c.cb <= model.cb_max &&
         c.cr >= model.cr_min && c.cr <= model.cr_max;
}

BinaryMask skin_mask(const RasterImage& img, const SkinModel& model) {
  if (img.channels != 3) {
    throw Error(ErrorCode::NotColorImage, "skin mask needs an RGB image");
  }
  BinaryMask raw(img.width, img.height);
  auto bits = raw.data();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = is_skin(img.pixels[3 * i], img.pixels[3 * i + 1],
                      img.pixels[3 * i + 2], model)
                  ? 1
                  : 0;
  }
  return dilate(raw, 1);
}

std::vector<Contour> find_contours(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> labeled(static_cast<std::size_t>(w) * h, 0);
  std::vector<Contour> out;
  std::deque<Point> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (!mask(x, y) || labeled[idx]) continue;
      labeled[idx] = 1;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const Point p = queue.front();
        queue.pop_front();
        for (const Point& d : kRing) {
          const int nx = p.x + d.x;
          const int ny = p.y + d.y;
          if (!set_at(mask, nx, ny)) continue;
          auto& l = labeled[static_cast<std::size_t>(ny) * w + nx];
          if (!l) {
            l = 1;
            queue.push_back({nx, ny});
          }
        }
      }
      out.push_back(trace_boundary(mask, {x, y}));
    }
  }
  return out;
}

double contour_area(const Contour& contour) noexcept {
  const auto& pts = contour.points;
  long long twice = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point& a = pts[i];
    const Point& b = pts[(i + 1) % pts.size()];
    twice += static_cast<long long>(a.x) * b.y -
             static_cast<long long>(b.x) * a.y;
  }
  return std::abs(static_cast<double>(twice)) / 2.0;
}

const Contour& largest_contour(std::span<const Contour> contours) {
  if (contours.empty()) {
    throw Error(ErrorCode::EmptyInput, "no contours found");
  }
  std::size_t best = 0;
  double best_area = contour_area(contours[0]);
  for (std::size_t i = 1; i < contours.size(); ++i) {
    const double a = contour_area(contours[i]);
    if (a > best_area) {
      best = i;
      best_area = a;
    }
  }
  return contours[best];
}

ConvexPolygon convex_hull(std::span<const Point> points) {
  if (points.empty()) {
    throw Error(ErrorCode::EmptyInput, "convex hull of an empty point set");
  }
  std::vector<Point> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() == 1) return {pts};

  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return {hull};
}

BinaryMask fill_region(const BinaryMask& mask, const Contour& contour) {
  if (contour.points.empty()) {
    throw Error(ErrorCode::EmptyInput, "cannot fill an empty contour");
  }
  const int w = mask.width();
  const int h = mask.height();
  const Point seed = contour.points.front();
  if (!set_at(mask, seed.x, seed.y)) {
    throw Error(ErrorCode::OutOfBounds, "contour does not lie on the mask");
  }

  BinaryMask component(w, h);
  std::deque<Point> queue{seed};
  component(seed.x, seed.y) = 1;
  while (!queue.empty()) {
    const Point p = queue.front();
    queue.pop_front();
    for (const Point& d : kRing) {
      const int nx = p.x + d.x;
      const int ny = p.y + d.y;
      if (set_at(mask, nx, ny) && !component(nx, ny)) {
        component(nx, ny) = 1;
        queue.push_back({nx, ny});
      }
    }
  }

  // Background reachable from the border through 4-connected steps is
  // outside; everything else belongs to the filled region.
  BinaryMask outside(w, h);
  auto seed_outside = [&](int x, int y) {
    if (!component(x, y) && !outside(x, y)) {
      outside(x, y) = 1;
      queue.push_back({x, y});
    }
  };
  for (int x = 0; x < w; ++x) {
    seed_outside(x, 0);
    seed_outside(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed_outside(0, y);
    seed_outside(w - 1, y);
  }
  constexpr std::array<Point, 4> kCross = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  while (!queue.empty()) {
    const Point p = queue.front();
    queue.pop_front();
    for (const Point& d : kCross) {
      const int nx = p.x + d.x;
      const int ny = p.y + d.y;
      if (component.contains(nx, ny)) seed_outside(nx, ny);
    }
  }

  BinaryMask filled(w, h);
  auto out = filled.data();
  auto o = outside.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = o[i] ? 0 : 1;
  return filled;
}

Moments region_moments(const BinaryMask& mask) {
  Moments m;
  for (int y = 0; y < mask.height(); ++y) {
    auto row = mask.row(y);
    for (int x = 0; x < mask.width(); ++x) {
      if (!row[x]) continue;
      m.m00 += 1.0;
      m.m10 += x;
      m.m01 += y;
    }
  }
  return m;
}

Centroid centroid(const Moments& m) {
  if (m.m00 == 0.0) {
    throw Error(ErrorCode::EmptyRegion, "region is empty (no hand present)");
  }
  return {m.m10 / m.m00, m.m01 / m.m00};
}

std::vector<Point> raster_line(Point a, Point b) {
  std::vector<Point> out;
  const int dx = std::abs(b.x - a.x);
  const int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Point p = a;
  while (true) {
    out.push_back(p);
    if (p == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      p.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      p.y += sy;
    }
  }
  return out;
}

RasterImage draw_overlay(const RasterImage& img,
                         std::span<const Point> contour,
                         std::span<const Point> hull,
                         std::span<const Point> markers) {
  auto check = [&](std::span<const Point> pts, const char* what) {
    for (const Point& p : pts) {
      if (!img.contains(p.x, p.y)) {
        throw Error(ErrorCode::OutOfBounds,
                    std::string(what) + " point outside the image");
      }
    }
  };
  check(contour, "contour");
  check(hull, "hull");
  check(markers, "marker");

  RasterImage out = to_rgb(img);
  auto paint = [&](Point p, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (!out.contains(p.x, p.y)) return;
    out.at(p.x, p.y, 0) = r;
    out.at(p.x, p.y, 1) = g;
    out.at(p.x, p.y, 2) = b;
  };
  for (const Point& p : contour) paint(p, 0, 255, 0);
  if (hull.size() == 1) paint(hull[0], 255, 0, 0);
  const std::size_t edges = hull.size() > 2 ? hull.size() : hull.size() - 1;
  for (std::size_t i = 0; hull.size() > 1 && i < edges; ++i) {
    for (const Point& p : raster_line(hull[i], hull[(i + 1) % hull.size()])) {
      paint(p, 255, 0, 0);
    }
  }
  for (const Point& m : markers) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) paint({m.x + dx, m.y + dy}, 0, 0, 255);
    }
  }
  return out;
}

}  // namespace hygienefeat
