#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plumewatch/config.hpp"
#include "plumewatch/image.hpp"
#include "plumewatch/thumbnail.hpp"
#include "plumewatch/timelapse.hpp"

namespace plumewatch {

struct SmokeParams {
  int bg_window = 60;              // frames in the trailing median background
  int diff_threshold = 20;         // max-channel |frame - background| must exceed this
  double max_saturation = 0.25;    // smoke is grey-ish: HSV saturation below this
  double min_value = 0.5;          // and bright: HSV value above this
  int min_component_area = 64;     // px, 8-connected
  double daytime_luminance = 50.0; // mean Rec.601 luma gate
  int event_threshold = 500;       // px per frame
  int min_event_frames = 3;
  int merge_gap = 12;              // below-threshold gaps shorter than this are bridged

  void validate() const;
  // Keys mirror the field names; missing keys keep their defaults.
  static SmokeParams from_config(const FlatConfig& cfg);
};

struct SmokeFrameResult {
  int frame_index = 0;
  int smoke_pixel_count = 0;
  bool is_daytime = false;
  std::vector<PixelRect> component_boxes;
};

struct SmokeEvent {
  int start_frame = 0;
  int end_frame = 0;  // inclusive
  int peak_count = 0;
  PixelRect bounds;
  ThumbnailSpec thumbnail;
};

// Streaming detector: feed frames in capture order. The background for frame i is
// the per-channel temporal median (lower median) of frames max(0, i-bg_window)..i-1;
// frame 0 is its own background.
class SmokeDetector {
 public:
  SmokeDetector(int width, int height, SmokeParams params);

  SmokeFrameResult push(const Image& frame);
  int frames_seen() const noexcept { return frames_seen_; }

 private:
  void update_window(const Image& frame);

  int width_;
  int height_;
  SmokeParams params_;
  int frames_seen_ = 0;
  int window_size_ = 0;
  // For every pixel channel, the window's values kept sorted: channel c of pixel p
  // occupies sorted_[(p*3 + c) * bg_window, +window_size_).
  std::vector<std::uint8_t> sorted_;
  // Raw frames currently in the window, oldest at ring_head_.
  std::vector<Image> ring_;
  int ring_head_ = 0;
  std::vector<std::uint8_t> mask_;
};

double mean_luminance(const Image& frame);

// Maximal runs of count >= threshold; runs separated by fewer than merge_gap
// below-threshold frames are merged; merged runs shorter than min_frames are dropped.
struct FrameRun {
  int start = 0;
  int end = 0;  // inclusive
  friend bool operator==(const FrameRun&, const FrameRun&) = default;
};
std::vector<FrameRun> segment_runs(std::span<const int> counts, int threshold, int min_frames,
                                   int merge_gap);

inline constexpr int kEventThumbnailMaxFrames = 240;
inline constexpr int kEventThumbnailFps = 12;
inline constexpr int kEventThumbnailWidth = 320;
inline constexpr int kEventThumbnailHeight = 240;

// Union of component boxes over the event frames, padded by 10% of its size on each side
// and clamped to the frame.
PixelRect event_bounds(std::span<const SmokeFrameResult> members, int frame_width, int frame_height);

std::vector<SmokeFrameResult> detect_frames(const DataRoot& root, const Dataset& ds,
                                            const SmokeParams& params);
std::vector<SmokeEvent> segment_events(std::span<const SmokeFrameResult> results, const Dataset& ds,
                                       const SmokeParams& params);

struct DetectionRun {
  std::vector<SmokeFrameResult> frames;
  std::vector<SmokeEvent> events;
};

// detect + segment + persist to datasets/<id>/smoke/.
DetectionRun run_detection(const DataRoot& root, const std::string& dataset_id,
                           const SmokeParams& params);
// Empty when detection never ran.
std::vector<SmokeFrameResult> load_frame_results(const DataRoot& root, const std::string& dataset_id);
std::vector<SmokeEvent> load_events(const DataRoot& root, const std::string& dataset_id);
std::vector<std::pair<std::string, SmokeEvent>> list_event_thumbnails(const DataRoot& root,
                                                                      const std::string& dataset_id);

}  // namespace plumewatch
