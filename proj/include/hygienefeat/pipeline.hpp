#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hygienefeat/corners.hpp"
#include "hygienefeat/invariance.hpp"
#include "hygienefeat/segmentation.hpp"
#include "hygienefeat/sift.hpp"

namespace hygienefeat {

// ---------------------------------------------------------------------------
// Dataset manifest

struct ParticipantRecord {
  std::string gender;
  int age = 0;
  std::string profession;
  std::string country_of_origin;
  std::string skin_tone;
  double video_size_mb = 0.0;
  double video_length_s = 0.0;

  friend bool operator==(const ParticipantRecord&,
                         const ParticipantRecord&) = default;
};

inline constexpr std::string_view kManifestHeader =
    "gender,age,profession,country_of_origin,skin_tone,video_size_mb,"
    "video_length_s";

// Row numbers in RowParseError diagnostics count the header as row 1.
std::vector<ParticipantRecord> parse_manifest(std::string_view text);
std::vector<ParticipantRecord> ingest_manifest(
    const std::filesystem::path& path);
std::string render_manifest(std::span<const ParticipantRecord> records);

// ---------------------------------------------------------------------------
// Frame sequences

inline constexpr double kDefaultFps = 29.84;

struct FrameSequence {
  std::vector<std::filesystem::path> frames;
  double fps = kDefaultFps;
};

// PNM files (.pnm, .ppm, .pgm) in a directory, sorted lexicographically.
FrameSequence list_frames(const std::filesystem::path& dir,
                          double fps = kDefaultFps);

// Loads a frame as RGB; failures surface as FrameLoadError.
RasterImage load_frame(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Stage segmentation

inline constexpr std::array<std::string_view, 6> kStageNames = {
    "palm to palm",
    "right palm over left dorsum",
    "palm to palm fingers interlaced",
    "backs of fingers to opposing palms",
    "rotational rubbing of thumbs",
    "rotational rubbing of fingertips in palms",
};

struct StageSegment {
  int stage_index = 0;  // 1..6
  int start_frame = 0;
  int end_frame = 0;  // inclusive

  friend bool operator==(const StageSegment&, const StageSegment&) = default;
};

struct StageSegmentation {
  std::vector<StageSegment> segments;
  int dropped_runs = 0;  // activity runs beyond the sixth
};

struct StageConfig {
  double area_fraction = 0.02;
  int min_pause_frames = 15;
  SkinModel skin;
};

// Groups active frames into runs; gaps shorter than min_pause_frames are
// bridged. Only the first six runs become stages.
StageSegmentation segment_activity(std::span<const bool> active,
                                   int min_pause_frames);

// Fraction of skin pixels in a frame.
double skin_fraction(const RasterImage& frame, const SkinModel& skin = {});

StageSegmentation segment_stages(const FrameSequence& seq,
                                 const StageConfig& cfg = {});

// ---------------------------------------------------------------------------
// Centroid tracking

enum class CentroidSource {
  LargestComponent,  // filled region of the largest skin contour
  FullMask,          // every skin pixel
};

struct CentroidSample {
  int frame_index = 0;
  std::optional<Centroid> centroid;  // empty: no hand in the frame
};

using CentroidTrace = std::vector<CentroidSample>;

std::optional<Centroid> hand_centroid(
    const RasterImage& frame, CentroidSource source = CentroidSource::LargestComponent,
    const SkinModel& skin = {});

CentroidTrace centroid_track(
    const FrameSequence& seq,
    CentroidSource source = CentroidSource::LargestComponent,
    const SkinModel& skin = {});

// ---------------------------------------------------------------------------
// Serialization. Reals carry six significant digits.

double json_real(double v);
std::string format_real(double v);

nlohmann::json points_json(std::span<const Point> points);
nlohmann::json corners_json(std::span<const CornerPoint> corners);
nlohmann::json keypoints_json(std::span<const SiftKeypoint> keypoints);
nlohmann::json descriptors_json(std::span<const SiftDescriptor> descriptors);
nlohmann::json manifest_json(std::span<const ParticipantRecord> records);

std::string render_centroid_csv(const CentroidTrace& trace);
std::string render_stages_csv(const StageSegmentation& stages);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);
std::string checksum_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// SIFT overlay: a circle of radius 2 sigma per keypoint with an orientation
// tick.
RasterImage draw_keypoints(const RasterImage& img,
                           std::span<const SiftKeypoint> keypoints);

}  // namespace hygienefeat
