#include "hygienefeat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <memory>

#include <fmt/format.h>

#include "hygienefeat/imgcore.hpp"

namespace hygienefeat {

namespace {

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Error row_error(int row, const std::string& what) {
  return Error(ErrorCode::RowParseError,
               fmt::format("row {}: {}", row, what));
}

bool is_pnm_extension(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pnm" || ext == ".ppm" || ext == ".pgm";
}

}  // namespace

std::vector<ParticipantRecord> parse_manifest(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != kManifestHeader) {
    throw Error(ErrorCode::HeaderMismatch,
                fmt::format("manifest header must be exactly '{}'",
                            kManifestHeader));
  }
  std::vector<ParticipantRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int row = static_cast<int>(i) + 1;
    if (trim(lines[i]).empty()) continue;
    const auto fields = split(lines[i], ',');
    if (fields.size() != 7) {
      throw row_error(row, fmt::format("expected 7 fields, found {}",
                                       fields.size()));
    }
    ParticipantRecord r;
    r.gender = trim(fields[0]);
    r.profession = trim(fields[2]);
    r.country_of_origin = trim(fields[3]);
    r.skin_tone = trim(fields[4]);
    if (!parse_number(trim(fields[1]), r.age) || r.age <= 0) {
      throw row_error(row, fmt::format("invalid age '{}'", trim(fields[1])));
    }
    if (!parse_number(trim(fields[5]), r.video_size_mb) ||
        !(r.video_size_mb > 0.0) || !std::isfinite(r.video_size_mb)) {
      throw row_error(row, fmt::format("invalid video_size_mb '{}'",
                                       trim(fields[5])));
    }
    if (!parse_number(trim(fields[6]), r.video_length_s) ||
        !(r.video_length_s > 0.0) || !std::isfinite(r.video_length_s)) {
      throw row_error(row, fmt::format("invalid video_length_s '{}'",
                                       trim(fields[6])));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ParticipantRecord> ingest_manifest(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return parse_manifest(text);
}

std::string render_manifest(std::span<const ParticipantRecord> records) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : records) {
    for (const std::string* s :
         {&r.gender, &r.profession, &r.country_of_origin, &r.skin_tone}) {
      if (s->find_first_of(",\n") != std::string::npos) {
        throw Error(ErrorCode::InvalidArgument,
                    "manifest text fields cannot contain ',' or newlines");
      }
    }
    out += fmt::format("{},{},{},{},{},{},{}\n", r.gender, r.age, r.profession,
                       r.country_of_origin, r.skin_tone, r.video_size_mb,
                       r.video_length_s);
  }
  return out;
}

FrameSequence list_frames(const std::filesystem::path& dir, double fps) {
  if (!(fps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fps must be > 0");
  }
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::FrameLoadError,
                dir.string() + ": not a directory");
  }
  FrameSequence seq;
  seq.fps = fps;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_pnm_extension(entry.path())) {
      seq.frames.push_back(entry.path());
    }
  }
  std::sort(seq.frames.begin(), seq.frames.end());
  if (seq.frames.empty()) {
    throw Error(ErrorCode::FrameLoadError,
                dir.string() + ": no PNM frames found");
  }
  return seq;
}

RasterImage load_frame(const std::filesystem::path& path) {
  try {
    return to_rgb(load_pnm(path));
  } catch (const Error& e) {
    throw Error(ErrorCode::FrameLoadError,
                fmt::format("{}: {}", path.string(), e.what()));
  }
}

StageSegmentation segment_activity(std::span<const bool> active,
                                   int min_pause_frames) {
  if (min_pause_frames < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_pause_frames must be >= 1");
  }
  std::vector<std::pair<int, int>> runs;
  const int n = static_cast<int>(active.size());
  for (int i = 0; i < n;) {
    if (!active[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && active[j + 1]) ++j;
    if (!runs.empty() && i - runs.back().second - 1 < min_pause_frames) {
      runs.back().second = j;
    } else {
      runs.emplace_back(i, j);
    }
    i = j + 1;
  }

  StageSegmentation out;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (k >= kStageNames.size()) {
      ++out.dropped_runs;
      continue;
    }
    out.segments.push_back(
        {static_cast<int>(k) + 1, runs[k].first, runs[k].second});
  }
  return out;
}

double skin_fraction(const RasterImage& frame, const SkinModel& skin) {
  const BinaryMask mask = skin_mask(frame, skin);
  auto bits = mask.data();
  const auto set = std::count(bits.begin(), bits.end(), std::uint8_t{1});
  return static_cast<double>(set) / static_cast<double>(bits.size());
}

StageSegmentation segment_stages(const FrameSequence& seq,
                                 const StageConfig& cfg) {
  if (!(cfg.area_fraction >= 0.0 && cfg.area_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "area_fraction must lie in [0, 1)");
  }
  // std::vector<bool> is packed and unsafe for concurrent writes.
  const std::size_t n = seq.frames.size();
  auto active = std::make_unique<bool[]>(n);
  parallel_for(static_cast<int>(n), [&](int i) {
    active[i] = skin_fraction(load_frame(seq.frames[i]), cfg.skin) >
                cfg.area_fraction;
  });
  return segment_activity(std::span<const bool>(active.get(), n),
                          cfg.min_pause_frames);
}

std::optional<Centroid> hand_centroid(const RasterImage& frame,
                                      CentroidSource source,
                                      const SkinModel& skin) {
  const BinaryMask mask = skin_mask(frame, skin);
  if (source == CentroidSource::FullMask) {
    const Moments m = region_moments(mask);
    if (m.m00 == 0.0) return std::nullopt;
    return centroid(m);
  }
  const std::vector<Contour> contours = find_contours(mask);
  if (contours.empty()) return std::nullopt;
  const Contour& largest = largest_contour(contours);
  try {
    return centroid(region_moments(fill_region(mask, largest)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyRegion) return std::nullopt;
    throw;
  }
}

CentroidTrace centroid_track(const FrameSequence& seq, CentroidSource source,
                             const SkinModel& skin) {
  CentroidTrace trace(seq.frames.size());
  parallel_for(static_cast<int>(seq.frames.size()), [&](int i) {
    trace[i].frame_index = i;
    trace[i].centroid = hand_centroid(load_frame(seq.frames[i]), source, skin);
  });
  return trace;
}

double json_real(double v) {
  if (!std::isfinite(v)) return v;
  double out = 0.0;
  const std::string s = fmt::format("{:.6g}", v);
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out == 0.0 ? 0.0 : out;  // folds -0
}

std::string format_real(double v) {
  return fmt::format("{:.6g}", json_real(v));
}

nlohmann::json points_json(std::span<const Point> points) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Point& p : points) arr.push_back({p.x, p.y});
  return arr;
}

nlohmann::json corners_json(std::span<const CornerPoint> corners) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CornerPoint& c : corners) {
    arr.push_back({{"x", c.x}, {"y", c.y}, {"response", json_real(c.response)}});
  }
  return arr;
}

nlohmann::json keypoints_json(std::span<const SiftKeypoint> keypoints) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SiftKeypoint& k : keypoints) {
    arr.push_back({{"x", json_real(k.x)},
                   {"y", json_real(k.y)},
                   {"sigma", json_real(k.sigma)},
                   {"orientation", json_real(k.orientation)},
                   {"response", json_real(k.response)}});
  }
  return arr;
}

nlohmann::json descriptors_json(std::span<const SiftDescriptor> descriptors) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SiftDescriptor& d : descriptors) {
    nlohmann::json row = nlohmann::json::array();
    for (double v : d.values) row.push_back(json_real(v));
    arr.push_back(std::move(row));
  }
  return arr;
}

nlohmann::json manifest_json(std::span<const ParticipantRecord> records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"gender", r.gender},
                   {"age", r.age},
                   {"profession", r.profession},
                   {"country_of_origin", r.country_of_origin},
                   {"skin_tone", r.skin_tone},
                   {"video_size_mb", json_real(r.video_size_mb)},
                   {"video_length_s", json_real(r.video_length_s)}});
  }
  return arr;
}

std::string render_centroid_csv(const CentroidTrace& trace) {
  std::string out = "frame,cx,cy,has_hand\n";
  for (const auto& s : trace) {
    if (s.centroid) {
      out += fmt::format("{},{},{},1\n", s.frame_index,
                         format_real(s.centroid->cx),
                         format_real(s.centroid->cy));
    } else {
      out += fmt::format("{},,,0\n", s.frame_index);
    }
  }
  return out;
}

std::string render_stages_csv(const StageSegmentation& stages) {
  std::string out = "stage_index,start_frame,end_frame,stage_name\n";
  for (const auto& s : stages.segments) {
    out += fmt::format("{},{},{},{}\n", s.stage_index, s.start_frame,
                       s.end_frame, kStageNames[s.stage_index - 1]);
  }
  return out;
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

std::string checksum_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

RasterImage draw_keypoints(const RasterImage& img,
                           std::span<const SiftKeypoint> keypoints) {
  RasterImage out = to_rgb(img);
  auto paint = [&](int x, int y, std::uint8_t r, std::uint8_t g,
                   std::uint8_t b) {
    if (!out.contains(x, y)) return;
    out.at(x, y, 0) = r;
    out.at(x, y, 1) = g;
    out.at(x, y, 2) = b;
  };
  for (const SiftKeypoint& k : keypoints) {
    const int cx = static_cast<int>(std::lround(k.x));
    const int cy = static_cast<int>(std::lround(k.y));
    const int radius = std::max(2, static_cast<int>(std::lround(2.0 * k.sigma)));
    // Midpoint circle.
    int x = radius, y = 0, err = 1 - radius;
    while (x >= y) {
      for (auto [dx, dy] : {std::pair{x, y}, {y, x}, {-y, x}, {-x, y},
                            {-x, -y}, {-y, -x}, {y, -x}, {x, -y}}) {
        paint(cx + dx, cy + dy, 0, 255, 0);
      }
      ++y;
      if (err < 0) {
        err += 2 * y + 1;
      } else {
        --x;
        err += 2 * (y - x) + 1;
      }
    }
    const Point tip{cx + static_cast<int>(std::lround(radius * std::cos(k.orientation))),
                    cy + static_cast<int>(std::lround(radius * std::sin(k.orientation)))};
    for (const Point& p : raster_line({cx, cy}, tip)) paint(p.x, p.y, 255, 0, 0);
  }
  return out;
}

}  // namespace hygienefeat
