// hygienefeat: command-line front end for the feature toolkit.
//
// Exit codes: 0 success, 1 module or I/O error, 2 usage error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hygienefeat/corners.hpp"
#include "hygienefeat/error.hpp"
#include "hygienefeat/imgcore.hpp"
#include "hygienefeat/invariance.hpp"
#include "hygienefeat/pipeline.hpp"
#include "hygienefeat/segmentation.hpp"
#include "hygienefeat/sift.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hygienefeat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitModule = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  double blur_sigma = 2.0;
  int threshold = 50;
  bool skin = false;
  CornerConfig corners;
  SiftConfig sift;
  StageConfig stages;
  double fps = kDefaultFps;
  CentroidSource centroid_source = CentroidSource::LargestComponent;
  InvarianceConfig invariance;
  int texture_size = 512;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T out{};
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), out);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(fmt::format("config: invalid value '{}' for {}", text, key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError(fmt::format("config: invalid boolean '{}' for {}", text, key));
}

struct ConfigKey {
  std::function<void(Settings&, std::string_view key, std::string_view value)> set;
  std::function<json(const Settings&)> get;
};

template <typename T>
ConfigKey number_key(T Settings::*member) {
  return {[member](Settings& s, std::string_view k, std::string_view v) {
            s.*member = parse_value<T>(k, v);
          },
          [member](const Settings& s) { return json(s.*member); }};
}

template <typename Sub, typename T>
ConfigKey nested_key(Sub Settings::*sub, T Sub::*member) {
  return {[sub, member](Settings& s, std::string_view k, std::string_view v) {
            if constexpr (std::is_same_v<T, bool>) {
              s.*sub.*member = parse_bool(k, v);
            } else {
              s.*sub.*member = parse_value<T>(k, v);
            }
          },
          [sub, member](const Settings& s) { return json(s.*sub.*member); }};
}

template <typename T>
ConfigKey skin_key(T SkinModel::*member) {
  return {[member](Settings& s, std::string_view k, std::string_view v) {
            s.stages.skin.*member = parse_value<T>(k, v);
          },
          [member](const Settings& s) { return json(s.stages.skin.*member); }};
}

// Sorted by key so that run metadata is stable.
const std::map<std::string, ConfigKey, std::less<>>& config_keys() {
  static const std::map<std::string, ConfigKey, std::less<>> keys = {
      {"contour.blur_sigma", number_key(&Settings::blur_sigma)},
      {"contour.threshold", number_key(&Settings::threshold)},
      {"contour.skin",
       {[](Settings& s, std::string_view k, std::string_view v) {
          s.skin = parse_bool(k, v);
        },
        [](const Settings& s) { return json(s.skin); }}},
      {"corners.harris_k", nested_key(&Settings::corners, &CornerConfig::harris_k)},
      {"corners.window_sigma",
       nested_key(&Settings::corners, &CornerConfig::window_sigma)},
      {"corners.quality_level",
       nested_key(&Settings::corners, &CornerConfig::quality_level)},
      {"corners.max_corners",
       nested_key(&Settings::corners, &CornerConfig::max_corners)},
      {"corners.min_distance",
       nested_key(&Settings::corners, &CornerConfig::min_distance)},
      {"corners.absolute_threshold",
       {[](Settings& s, std::string_view k, std::string_view v) {
          if (v == "none") {
            s.corners.absolute_threshold.reset();
          } else {
            s.corners.absolute_threshold = parse_value<double>(k, v);
          }
        },
        [](const Settings& s) {
          return s.corners.absolute_threshold ? json(*s.corners.absolute_threshold)
                                              : json(nullptr);
        }}},
      {"sift.scales_per_octave",
       nested_key(&Settings::sift, &SiftConfig::scales_per_octave)},
      {"sift.base_sigma", nested_key(&Settings::sift, &SiftConfig::base_sigma)},
      {"sift.assumed_blur", nested_key(&Settings::sift, &SiftConfig::assumed_blur)},
      {"sift.upsample", nested_key(&Settings::sift, &SiftConfig::upsample)},
      {"sift.contrast_threshold",
       nested_key(&Settings::sift, &SiftConfig::contrast_threshold)},
      {"sift.edge_r", nested_key(&Settings::sift, &SiftConfig::edge_r)},
      {"sift.border", nested_key(&Settings::sift, &SiftConfig::border)},
      {"sift.orientation_peak_ratio",
       nested_key(&Settings::sift, &SiftConfig::orientation_peak_ratio)},
      {"sift.descriptor_clamp",
       nested_key(&Settings::sift, &SiftConfig::descriptor_clamp)},
      {"stages.area_fraction",
       nested_key(&Settings::stages, &StageConfig::area_fraction)},
      {"stages.min_pause_frames",
       nested_key(&Settings::stages, &StageConfig::min_pause_frames)},
      {"skin.y_min", skin_key(&SkinModel::y_min)},
      {"skin.cb_min", skin_key(&SkinModel::cb_min)},
      {"skin.cb_max", skin_key(&SkinModel::cb_max)},
      {"skin.cr_min", skin_key(&SkinModel::cr_min)},
      {"skin.cr_max", skin_key(&SkinModel::cr_max)},
      {"sequence.fps", number_key(&Settings::fps)},
      {"centroid.source",
       {[](Settings& s, std::string_view, std::string_view v) {
          if (v == "largest") {
            s.centroid_source = CentroidSource::LargestComponent;
          } else if (v == "mask") {
            s.centroid_source = CentroidSource::FullMask;
          } else {
            throw UsageError(fmt::format(
                "config: centroid.source must be 'largest' or 'mask', got '{}'", v));
          }
        },
        [](const Settings& s) {
          return json(s.centroid_source == CentroidSource::FullMask ? "mask"
                                                                    : "largest");
        }}},
      {"invariance.tol_px", nested_key(&Settings::invariance, &InvarianceConfig::tol_px)},
      {"invariance.verdict_ratio",
       nested_key(&Settings::invariance, &InvarianceConfig::verdict_ratio)},
      {"invariance.min_features",
       nested_key(&Settings::invariance, &InvarianceConfig::min_features)},
      {"invariance.texture_size", number_key(&Settings::texture_size)},
  };
  return keys;
}

void apply_override(Settings& s, std::string_view key, std::string_view value) {
  const auto& keys = config_keys();
  const auto it = keys.find(key);
  if (it == keys.end()) {
    throw UsageError(fmt::format("config: unknown key '{}'", key));
  }
  it->second.set(s, key, value);
}

void load_config(Settings& s, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(fmt::format("{}:{}: expected key=value", path.string(), lineno));
    }
    apply_override(s, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
  }
}

json settings_json(const Settings& s) {
  json out = json::object();
  for (const auto& [name, key] : config_keys()) {
    json v = key.get(s);
    if (v.is_number_float()) v = json_real(v.get<double>());
    out[name] = std::move(v);
  }
  return out;
}

struct RunContext {
  std::string command;
  fs::path out_dir;
  Settings settings;

  fs::path file(std::string_view name) const { return out_dir / name; }

  void prepare() const {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
      throw Error(ErrorCode::IoFailure,
                  fmt::format("cannot create output directory {}: {}",
                              out_dir.string(), ec.message()));
    }
  }

  void write_run(const json& input) const {
    json run;
    run["command"] = command;
    run["config"] = settings_json(settings);
    run["input"] = input;
    write_json(file("run.json"), run);
  }
};

json file_input(const fs::path& path) {
  return {{"path", path.filename().string()}, {"checksum", checksum_file(path)}};
}

// Frame sequences are identified by a digest of the per-frame checksums.
json sequence_input(const FrameSequence& seq) {
  std::string digests;
  for (const auto& f : seq.frames) digests += checksum_file(f);
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(digests.data());
  return {{"frames", seq.frames.size()},
          {"checksum", fnv1a_hex({bytes, digests.size()})}};
}

int run_contour(RunContext& ctx, const fs::path& input) {
  const RasterImage img = load_pnm(input);
  BinaryMask mask;
  if (ctx.settings.skin) {
    mask = skin_mask(img, ctx.settings.stages.skin);
  } else {
    const GrayImage blurred =
        gaussian_blur(to_grayscale(img), ctx.settings.blur_sigma);
    mask = threshold_binary(blurred, ctx.settings.threshold);
  }
  const std::vector<Contour> contours = find_contours(mask);
  const Contour& largest = largest_contour(contours);
  const ConvexPolygon hull = convex_hull(largest.points);

  ctx.prepare();
  save_pnm(draw_overlay(img, largest.points, hull.vertices, {}),
           ctx.file("contour.pnm"));
  write_json(ctx.file("contour.json"),
             {{"contour_count", contours.size()},
              {"area", json_real(contour_area(largest))},
              {"contour", points_json(largest.points)},
              {"hull", points_json(hull.vertices)}});
  ctx.write_run(file_input(input));
  return kExitOk;
}

int run_corners(RunContext& ctx, const fs::path& input, CornerMethod method) {
  const RasterImage img = load_pnm(input);
  const std::vector<CornerPoint> corners =
      find_corners(to_grayscale(img), method, ctx.settings.corners);
  const std::string stem =
      method == CornerMethod::Harris ? "harris" : "shi_tomasi";

  ctx.prepare();
  save_pnm(mark_corners(img, corners), ctx.file(stem + ".pnm"));
  write_json(ctx.file(stem + ".json"), corners_json(corners));
  ctx.write_run(file_input(input));
  return kExitOk;
}

int run_sift(RunContext& ctx, const fs::path& input) {
  const RasterImage img = load_pnm(input);
  const SiftFeatures features =
      detect_and_describe(to_grayscale(img), ctx.settings.sift);

  ctx.prepare();
  save_pnm(draw_keypoints(img, features.keypoints), ctx.file("sift.pnm"));
  write_json(ctx.file("sift.json"), keypoints_json(features.keypoints));
  write_json(ctx.file("sift_descriptors.json"),
             descriptors_json(features.descriptors));
  ctx.write_run(file_input(input));
  return kExitOk;
}

int run_centroid_track(RunContext& ctx, const fs::path& dir) {
  const FrameSequence seq = list_frames(dir, ctx.settings.fps);
  const CentroidTrace trace =
      centroid_track(seq, ctx.settings.centroid_source, ctx.settings.stages.skin);

  ctx.prepare();
  write_text(ctx.file("centroids.csv"), render_centroid_csv(trace));
  ctx.write_run(sequence_input(seq));
  return kExitOk;
}

int run_segment_stages(RunContext& ctx, const fs::path& dir) {
  const FrameSequence seq = list_frames(dir, ctx.settings.fps);
  const StageSegmentation stages = segment_stages(seq, ctx.settings.stages);
  if (stages.dropped_runs > 0) {
    std::cerr << fmt::format("warning: {} activity run(s) beyond the sixth dropped\n",
                             stages.dropped_runs);
  }

  json segments = json::array();
  for (const StageSegment& s : stages.segments) {
    segments.push_back({{"stage_index", s.stage_index},
                        {"start_frame", s.start_frame},
                        {"end_frame", s.end_frame},
                        {"stage_name", kStageNames[s.stage_index - 1]},
                        {"start_s", json_real(s.start_frame / seq.fps)},
                        {"end_s", json_real((s.end_frame + 1) / seq.fps)}});
  }

  ctx.prepare();
  write_text(ctx.file("stages.csv"), render_stages_csv(stages));
  write_json(ctx.file("stages.json"),
             {{"fps", json_real(seq.fps)},
              {"frame_count", seq.frames.size()},
              {"dropped_runs", stages.dropped_runs},
              {"segments", segments}});
  ctx.write_run(sequence_input(seq));
  return kExitOk;
}

int run_invariance(RunContext& ctx, const std::optional<fs::path>& input,
                   bool synthetic, std::uint64_t seed) {
  GrayImage img;
  json source;
  if (synthetic) {
    img = synthetic_texture(ctx.settings.texture_size, seed);
    source = {{"synthetic", true},
              {"seed", seed},
              {"size", ctx.settings.texture_size}};
  } else {
    img = to_grayscale(load_pnm(*input));
    source = file_input(*input);
  }
  InvarianceConfig cfg = ctx.settings.invariance;
  cfg.corners = ctx.settings.corners;
  cfg.sift = ctx.settings.sift;
  const auto reports = invariance_matrix(img, cfg);
  const std::string table = render_table(reports);
  const bool match = matches_reference(reports);

  ctx.prepare();
  write_text(ctx.file("invariance.csv"), render_csv(reports));
  write_text(ctx.file("invariance.txt"), table);
  ctx.write_run(source);
  std::cout << table;
  std::cout << (match ? "verdict pattern matches the reference\n"
                      : "verdict pattern differs from the reference\n");
  return match ? kExitOk : kExitModule;
}

int run_manifest(RunContext& ctx, const fs::path& input) {
  const std::vector<ParticipantRecord> records = ingest_manifest(input);
  ctx.prepare();
  write_json(ctx.file("manifest.json"), manifest_json(records));
  write_text(ctx.file("manifest.csv"), render_manifest(records));
  ctx.write_run(file_input(input));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical feature detection toolkit for hand-hygiene footage",
               "hygienefeat"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = "out";
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 7;
  int threads = 1;
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--set", overrides, "Single key=value override (repeatable)");
  app.add_option("--seed", seed, "Seed for the synthetic texture")
      ->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();

  std::string input;
  std::optional<double> sigma;
  std::optional<int> threshold;
  bool skin = false;

  auto* contour = app.add_subcommand("contour", "Largest contour and convex hull");
  contour->add_option("image", input, "Input PNM")->required();
  contour->add_option("--sigma", sigma, "Blur sigma (default 2.0)");
  contour->add_option("--threshold", threshold, "Binary threshold (default 50)");
  contour->add_flag("--skin", skin, "Segment with the skin classifier instead");

  auto* harris = app.add_subcommand("harris", "Harris corners");
  harris->add_option("image", input, "Input PNM")->required();
  auto* shi = app.add_subcommand("shi-tomasi", "Shi-Tomasi corners");
  shi->add_option("image", input, "Input PNM")->required();
  auto* sift = app.add_subcommand("sift", "SIFT keypoints and descriptors");
  sift->add_option("image", input, "Input PNM")->required();

  std::optional<double> fps;
  auto* track = app.add_subcommand("centroid-track", "Per-frame hand centroid");
  track->add_option("frames", input, "Directory of PNM frames")->required();
  track->add_option("--fps", fps, "Frame rate");

  std::optional<double> area_fraction;
  std::optional<int> min_pause;
  auto* stages = app.add_subcommand("segment-stages", "Pause-based stage segmentation");
  stages->add_option("frames", input, "Directory of PNM frames")->required();
  stages->add_option("--fps", fps, "Frame rate");
  stages->add_option("--area-fraction", area_fraction, "Skin fraction for activity");
  stages->add_option("--min-pause", min_pause, "Minimum pause length in frames");

  bool synthetic = false;
  auto* inv = app.add_subcommand("invariance-report",
                                 "Detector repeatability under rotation, scale, illumination");
  inv->add_option("image", input, "Input PNM");
  inv->add_flag("--synthetic", synthetic, "Use the seeded synthetic texture");

  auto* manifest = app.add_subcommand("manifest", "Validate a participant manifest");
  manifest->add_option("csv", input, "Manifest CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto extra = app.remaining();
    if (app.get_subcommands().empty() && !extra.empty()) {
      std::cerr << "error: unknown subcommand '" << extra.front() << "'\n\n";
    } else {
      std::cerr << "error: " << e.what() << "\n\n";
    }
    std::cerr << app.help();
    return kExitUsage;
  }

  RunContext ctx;
  ctx.out_dir = out_dir;
  try {
    if (!config_path.empty()) load_config(ctx.settings, config_path);
    for (const std::string& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value");
      apply_override(ctx.settings, trim(std::string_view(o).substr(0, eq)),
                     trim(std::string_view(o).substr(eq + 1)));
    }
    if (sigma) ctx.settings.blur_sigma = *sigma;
    if (threshold) ctx.settings.threshold = *threshold;
    if (skin) ctx.settings.skin = true;
    if (fps) ctx.settings.fps = *fps;
    if (area_fraction) ctx.settings.stages.area_fraction = *area_fraction;
    if (min_pause) ctx.settings.stages.min_pause_frames = *min_pause;
    if (inv->parsed() && synthetic == !input.empty()) {
      throw UsageError("invariance-report takes either an image or --synthetic");
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  set_thread_count(threads);
  try {
    if (contour->parsed()) {
      ctx.command = "contour";
      return run_contour(ctx, input);
    }
    if (harris->parsed()) {
      ctx.command = "harris";
      return run_corners(ctx, input, CornerMethod::Harris);
    }
    if (shi->parsed()) {
      ctx.command = "shi-tomasi";
      return run_corners(ctx, input, CornerMethod::ShiTomasi);
    }
    if (sift->parsed()) {
      ctx.command = "sift";
      return run_sift(ctx, input);
    }
    if (track->parsed()) {
      ctx.command = "centroid-track";
      return run_centroid_track(ctx, input);
    }
    if (stages->parsed()) {
      ctx.command = "segment-stages";
      return run_segment_stages(ctx, input);
    }
    if (inv->parsed()) {
      ctx.command = "invariance-report";
      return run_invariance(ctx, input.empty() ? std::nullopt
                                               : std::optional<fs::path>(input),
                            synthetic, seed);
    }
    if (manifest->parsed()) {
      ctx.command = "manifest";
      return run_manifest(ctx, input);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitModule;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModule;
  }
  std::cerr << app.help();
  return kExitUsage;
}
