#include "plumewatch/smoke.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "plumewatch/error.hpp"

namespace plumewatch {

namespace fs = std::filesystem;
using json = nlohmann::json;

void SmokeParams::validate() const {
  auto positive = [](bool ok, const char* key) {
    if (!ok) throw ValidationError(std::string(key) + " must be positive", key);
  };
  positive(bg_window > 0, "bg_window");
  positive(diff_threshold > 0, "diff_threshold");
  positive(min_component_area > 0, "min_component_area");
  positive(daytime_luminance > 0, "daytime_luminance");
  positive(event_threshold > 0, "event_threshold");
  positive(min_event_frames > 0, "min_event_frames");
  positive(merge_gap > 0, "merge_gap");
  if (!(max_saturation > 0 && max_saturation <= 1)) {
    throw ValidationError("max_saturation must be in (0, 1]", "max_saturation");
  }
  if (!(min_value > 0 && min_value <= 1)) {
    throw ValidationError("min_value must be in (0, 1]", "min_value");
  }
  if (diff_threshold > 255) throw ValidationError("diff_threshold must be <= 255", "diff_threshold");
  if (daytime_luminance > 255) {
    throw ValidationError("daytime_luminance must be <= 255", "daytime_luminance");
  }
}

SmokeParams SmokeParams::from_config(const FlatConfig& cfg) {
  static const char* const kKnown[] = {"bg_window",          "diff_threshold",    "max_saturation",
                                       "min_value",          "min_component_area", "daytime_luminance",
                                       "event_threshold",    "min_event_frames",  "merge_gap"};
  for (const auto& [key, value] : cfg.entries()) {
    if (std::find_if(std::begin(kKnown), std::end(kKnown),
                     [&](const char* k) { return key == k; }) == std::end(kKnown)) {
      throw ValidationError("unknown smoke parameter '" + key + "'", key);
    }
  }
  SmokeParams p;
  p.bg_window = static_cast<int>(cfg.get_int("bg_window", p.bg_window));
  p.diff_threshold = static_cast<int>(cfg.get_int("diff_threshold", p.diff_threshold));
  p.max_saturation = cfg.get_double("max_saturation", p.max_saturation);
  p.min_value = cfg.get_double("min_value", p.min_value);
  p.min_component_area = static_cast<int>(cfg.get_int("min_component_area", p.min_component_area));
  p.daytime_luminance = cfg.get_double("daytime_luminance", p.daytime_luminance);
  p.event_threshold = static_cast<int>(cfg.get_int("event_threshold", p.event_threshold));
  p.min_event_frames = static_cast<int>(cfg.get_int("min_event_frames", p.min_event_frames));
  p.merge_gap = static_cast<int>(cfg.get_int("merge_gap", p.merge_gap));
  p.validate();
  return p;
}

double mean_luminance(const Image& frame) {
  const auto px = frame.bytes();
  if (px.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < px.size(); i += 3) {
    sum += 299u * px[i] + 587u * px[i + 1] + 114u * px[i + 2];
  }
  return static_cast<double>(sum) / (1000.0 * static_cast<double>(px.size() / 3));
}

SmokeDetector::SmokeDetector(int width, int height, SmokeParams params)
    : width_(width), height_(height), params_(params) {
  params_.validate();
  if (width <= 0 || height <= 0) throw ValidationError("detector needs non-empty frames");
  const std::size_t channels = static_cast<std::size_t>(width) * height * 3;
  sorted_.resize(channels * static_cast<std::size_t>(params_.bg_window));
  ring_.resize(static_cast<std::size_t>(params_.bg_window));
  mask_.resize(static_cast<std::size_t>(width) * height);
}

void SmokeDetector::update_window(const Image& frame) {
  const std::size_t window = static_cast<std::size_t>(params_.bg_window);
  const auto incoming = frame.bytes();
  const std::size_t channels = incoming.size();

  if (window_size_ < params_.bg_window) {
    const std::size_t k = static_cast<std::size_t>(window_size_);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      std::uint8_t* s = &sorted_[ch * window];
      const std::uint8_t v = incoming[ch];
      std::size_t pos = static_cast<std::size_t>(std::upper_bound(s, s + k, v) - s);
      std::memmove(s + pos + 1, s + pos, k - pos);
      s[pos] = v;
    }
    ring_[(static_cast<std::size_t>(ring_head_) + k) % window] = frame;
    ++window_size_;
    return;
  }

  // Full window: replace the oldest value in place, sliding the neighbours over.
  const auto outgoing = ring_[static_cast<std::size_t>(ring_head_)].bytes();
  for (std::size_t ch = 0; ch < channels; ++ch) {
    std::uint8_t* s = &sorted_[ch * window];
    const std::uint8_t old_v = outgoing[ch];
    const std::uint8_t new_v = incoming[ch];
    if (old_v == new_v) continue;
    std::size_t pos = static_cast<std::size_t>(std::lower_bound(s, s + window, old_v) - s);
    if (new_v > old_v) {
      while (pos + 1 < window && s[pos + 1] < new_v) {
        s[pos] = s[pos + 1];
        ++pos;
      }
    } else {
      while (pos > 0 && s[pos - 1] > new_v) {
        s[pos] = s[pos - 1];
        --pos;
      }
    }
    s[pos] = new_v;
  }
  ring_[static_cast<std::size_t>(ring_head_)] = frame;
  ring_head_ = (ring_head_ + 1) % params_.bg_window;
}

SmokeFrameResult SmokeDetector::push(const Image& frame) {
  if (frame.width() != width_ || frame.height() != height_) {
    throw ValidationError("frame size differs from the detector's");
  }
  SmokeFrameResult result;
  result.frame_index = frames_seen_;
  result.is_daytime = mean_luminance(frame) > params_.daytime_luminance;

  if (result.is_daytime && window_size_ > 0) {
    const std::size_t window = static_cast<std::size_t>(params_.bg_window);
    const std::size_t median_at = static_cast<std::size_t>(window_size_ - 1) / 2;
    const auto px = frame.bytes();
    const double value_floor = params_.min_value * 255.0;
    const std::size_t n_pixels = mask_.size();
    for (std::size_t p = 0; p < n_pixels; ++p) {
      const std::uint8_t* rgb = &px[p * 3];
      int max_diff = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        const int bg = sorted_[(p * 3 + c) * window + median_at];
        max_diff = std::max(max_diff, std::abs(static_cast<int>(rgb[c]) - bg));
      }
      bool smoke = false;
      if (max_diff > params_.diff_threshold) {
        const int mx = std::max({rgb[0], rgb[1], rgb[2]});
        const int mn = std::min({rgb[0], rgb[1], rgb[2]});
        smoke = mx > value_floor && (mx - mn) < params_.max_saturation * mx;
      }
      mask_[p] = smoke ? 1 : 0;
    }

    // 8-connected components; mask cells are cleared as they are visited.
    std::vector<int> stack;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const std::size_t seed = static_cast<std::size_t>(y) * width_ + x;
        if (!mask_[seed]) continue;
        mask_[seed] = 0;
        stack.assign(1, static_cast<int>(seed));
        int area = 0;
        PixelRect box{x, y, x + 1, y + 1};
        while (!stack.empty()) {
          const int idx = stack.back();
          stack.pop_back();
          ++area;
          const int cx = idx % width_;
          const int cy = idx / width_;
          box.left = std::min(box.left, cx);
          box.right = std::max(box.right, cx + 1);
          box.top = std::min(box.top, cy);
          box.bottom = std::max(box.bottom, cy + 1);
          for (int dy = -1; dy <= 1; ++dy) {
            const int ny = cy + dy;
            if (ny < 0 || ny >= height_) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = cx + dx;
              if (nx < 0 || nx >= width_) continue;
              const std::size_t n = static_cast<std::size_t>(ny) * width_ + nx;
              if (mask_[n]) {
                mask_[n] = 0;
                stack.push_back(static_cast<int>(n));
              }
            }
          }
        }
        if (area >= params_.min_component_area) {
          result.smoke_pixel_count += area;
          result.component_boxes.push_back(box);
        }
      }
    }
  }

  // The window always holds the original frames, night or day.
  update_window(frame);
  ++frames_seen_;
  return result;
}

std::vector<FrameRun> segment_runs(std::span<const int> counts, int threshold, int min_frames,
                                   int merge_gap) {
  std::vector<FrameRun> runs;
  const int n = static_cast<int>(counts.size());
  for (int i = 0; i < n;) {
    if (counts[static_cast<std::size_t>(i)] < threshold) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && counts[static_cast<std::size_t>(j) + 1] >= threshold) ++j;
    const int gap = runs.empty() ? 0 : i - runs.back().end - 1;
    if (!runs.empty() && gap < merge_gap) {
      runs.back().end = j;
    } else {
      runs.push_back({i, j});
    }
    i = j + 1;
  }
  std::erase_if(runs, [&](const FrameRun& r) { return r.end - r.start + 1 < min_frames; });
  return runs;
}

PixelRect event_bounds(std::span<const SmokeFrameResult> members, int frame_width,
                       int frame_height) {
  bool any = false;
  PixelRect u{};
  for (const SmokeFrameResult& r : members) {
    for (const PixelRect& b : r.component_boxes) {
      if (!any) {
        u = b;
        any = true;
      } else {
        u.left = std::min(u.left, b.left);
        u.top = std::min(u.top, b.top);
        u.right = std::max(u.right, b.right);
        u.bottom = std::max(u.bottom, b.bottom);
      }
    }
  }
  if (!any) return {0, 0, frame_width, frame_height};
  const int pad_x = static_cast<int>(std::ceil(0.1 * u.width()));
  const int pad_y = static_cast<int>(std::ceil(0.1 * u.height()));
  return {std::max(0, u.left - pad_x), std::max(0, u.top - pad_y),
          std::min(frame_width, u.right + pad_x), std::min(frame_height, u.bottom + pad_y)};
}

std::vector<SmokeFrameResult> detect_frames(const DataRoot& root, const Dataset& ds,
                                            const SmokeParams& params) {
  params.validate();
  if (ds.frame_count() == 0) throw ValidationError("dataset '" + ds.id + "' has no frames");
  if (params.bg_window >= ds.frame_count()) {
    throw ValidationError("bg_window must be smaller than the frame count (" +
                              std::to_string(ds.frame_count()) + ")",
                          "bg_window");
  }
  SmokeDetector detector(ds.frame_width, ds.frame_height, params);
  std::vector<SmokeFrameResult> results;
  results.reserve(static_cast<std::size_t>(ds.frame_count()));
  for (int i = 0; i < ds.frame_count(); ++i) results.push_back(detector.push(root.read_frame(ds, i)));
  return results;
}

std::vector<SmokeEvent> segment_events(std::span<const SmokeFrameResult> results, const Dataset& ds,
                                       const SmokeParams& params) {
  std::vector<SmokeEvent> events;
  if (results.empty()) return events;
  const int first = results.front().frame_index;
  std::vector<int> counts;
  counts.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].frame_index != first + static_cast<int>(i)) {
      throw ValidationError("frame results are not contiguous at index " +
                            std::to_string(results[i].frame_index));
    }
    counts.push_back(results[i].smoke_pixel_count);
  }

  for (const FrameRun& run :
       segment_runs(counts, params.event_threshold, params.min_event_frames, params.merge_gap)) {
    const auto members = results.subspan(static_cast<std::size_t>(run.start),
                                         static_cast<std::size_t>(run.end - run.start + 1));
    SmokeEvent ev;
    ev.start_frame = first + run.start;
    ev.end_frame = first + run.end;
    for (const SmokeFrameResult& r : members) ev.peak_count = std::max(ev.peak_count, r.smoke_pixel_count);
    ev.bounds = event_bounds(members, ds.frame_width, ds.frame_height);
    ev.thumbnail.dataset_id = ds.id;
    ev.thumbnail.bounds = ev.bounds;
    ev.thumbnail.out_width = kEventThumbnailWidth;
    ev.thumbnail.out_height = kEventThumbnailHeight;
    ev.thumbnail.start_frame = ev.start_frame;
    ev.thumbnail.nframes = std::min(ev.end_frame - ev.start_frame + 1, kEventThumbnailMaxFrames);
    ev.thumbnail.fps = kEventThumbnailFps;
    ev.thumbnail.format = ThumbnailFormat::gif;
    ev.thumbnail.origin = Origin::algorithm;
    events.push_back(std::move(ev));
  }
  return events;
}

// --- persistence ---

namespace {

json rect_json(const PixelRect& r) { return json::array({r.left, r.top, r.right, r.bottom}); }

PixelRect rect_from(const json& j) {
  return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

DetectionRun run_detection(const DataRoot& root, const std::string& dataset_id,
                           const SmokeParams& params) {
  const Dataset ds = root.load_dataset(dataset_id);
  DetectionRun run;
  run.frames = detect_frames(root, ds, params);
  run.events = segment_events(run.frames, ds, params);

  const fs::path dir = root.smoke_dir(dataset_id);
  fs::create_directories(dir);

  std::ostringstream csv;
  csv << "frame_index,smoke_pixel_count,is_daytime\n";
  for (const SmokeFrameResult& r : run.frames) {
    csv << r.frame_index << ',' << r.smoke_pixel_count << ',' << (r.is_daytime ? 1 : 0) << '\n';
  }
  write_atomic(dir / "frames.csv", csv.str());

  json events = json::array();
  for (const SmokeEvent& ev : run.events) {
    events.push_back({{"start_frame", ev.start_frame},
                      {"end_frame", ev.end_frame},
                      {"peak_count", ev.peak_count},
                      {"bounds", rect_json(ev.bounds)},
                      {"url", encode_url(ev.thumbnail)}});
  }
  write_atomic(dir / "events.json", events.dump(1));
  return run;
}

std::vector<SmokeFrameResult> load_frame_results(const DataRoot& root,
                                                 const std::string& dataset_id) {
  std::vector<SmokeFrameResult> out;
  std::ifstream in(root.smoke_dir(dataset_id) / "frames.csv");
  if (!in) return out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SmokeFrameResult r;
    char c1 = 0, c2 = 0;
    int day = 0;
    std::istringstream ls(line);
    if (!(ls >> r.frame_index >> c1 >> r.smoke_pixel_count >> c2 >> day) || c1 != ',' || c2 != ',') {
      throw IoError("corrupt smoke results for '" + dataset_id + "': " + line);
    }
    r.is_daytime = day != 0;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SmokeEvent> load_events(const DataRoot& root, const std::string& dataset_id) {
  std::vector<SmokeEvent> out;
  std::ifstream in(root.smoke_dir(dataset_id) / "events.json");
  if (!in) return out;
  try {
    const json arr = json::parse(in);
    for (const json& j : arr) {
      SmokeEvent ev;
      ev.start_frame = j.at("start_frame").get<int>();
      ev.end_frame = j.at("end_frame").get<int>();
      ev.peak_count = j.at("peak_count").get<int>();
      ev.bounds = rect_from(j.at("bounds"));
      ev.thumbnail = decode_url(j.at("url").get<std::string>());
      out.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    throw IoError("corrupt smoke events for '" + dataset_id + "': " + e.what());
  }
  std::sort(out.begin(), out.end(),
            [](const SmokeEvent& a, const SmokeEvent& b) { return a.start_frame < b.start_frame; });
  return out;
}

std::vector<std::pair<std::string, SmokeEvent>> list_event_thumbnails(
    const DataRoot& root, const std::string& dataset_id) {
  std::vector<std::pair<std::string, SmokeEvent>> out;
  for (SmokeEvent& ev : load_events(root, dataset_id)) {
    std::string url = encode_url(ev.thumbnail);
    out.emplace_back(std::move(url), std::move(ev));
  }
  return out;
}

}  // namespace plumewatch
