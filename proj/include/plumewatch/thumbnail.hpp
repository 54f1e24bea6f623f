#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "plumewatch/image.hpp"
#include "plumewatch/timelapse.hpp"

namespace plumewatch {

enum class ThumbnailFormat { gif, mp4 };
enum class Origin { human, algorithm };

std::string_view to_string(ThumbnailFormat f);
std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);  // throws ValidationError

// Native-resolution pixel rectangle, half open: [left, right) x [top, bottom).
struct PixelRect {
  int left = 0, top = 0, right = 0, bottom = 0;
  int width() const noexcept { return right - left; }
  int height() const noexcept { return bottom - top; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

inline constexpr int kMaxThumbnailSide = 4096;
inline constexpr int kMaxThumbnailFrames = 3000;
inline constexpr int kMaxThumbnailFps = 100;

struct ThumbnailSpec {
  std::string dataset_id;
  PixelRect bounds;
  int out_width = 0;
  int out_height = 0;
  int start_frame = 0;
  int nframes = 1;
  int fps = 12;
  ThumbnailFormat format = ThumbnailFormat::gif;
  Origin origin = Origin::human;

  friend bool operator==(const ThumbnailSpec&, const ThumbnailSpec&) = default;
};

// Checks everything that does not need the dataset. Errors name the URL parameter.
void validate(const ThumbnailSpec& spec);
// Adds the frame-size and frame-count invariants.
void validate_against(const ThumbnailSpec& spec, const Dataset& ds);

// /thumbnail?root=..&boundsLTRB=l,t,r,b&width=..&height=..&startFrame=..&nframes=..&fps=..&format=..&origin=..
std::string encode_url(const ThumbnailSpec& spec);
// Accepts a bare path+query or an absolute URL. Unknown parameters are ignored and a
// missing origin means human.
ThumbnailSpec decode_url(std::string_view url);

// Per-frame GIF delay in hundredths of a second.
int gif_delay_centiseconds(int fps);

struct RenderedThumbnail {
  std::vector<std::uint8_t> bytes;
  std::string content_type;
  int frame_count = 0;
  int delay_centiseconds = 0;
  double duration_s = 0.0;  // nframes / fps
};

using FrameReader = std::function<std::shared_ptr<const Image>(int index)>;

// The resampled frames before encoding.
std::vector<Image> render_frames(const ThumbnailSpec& spec, const Dataset& ds,
                                 const FrameReader& read_frame);
RenderedThumbnail render_thumbnail(const ThumbnailSpec& spec, const Dataset& ds,
                                   const FrameReader& read_frame);
RenderedThumbnail render_thumbnail(const DataRoot& root, const ThumbnailSpec& spec);

}  // namespace plumewatch
