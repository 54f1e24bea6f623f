#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plumewatch/image.hpp"
#include "plumewatch/time.hpp"

namespace plumewatch {

inline constexpr double kDefaultCaptureIntervalS = 5.0;
inline constexpr int kDefaultTileSize = 512;
inline constexpr int kDefaultSegmentLength = 1000;

struct FrameInfo {
  int index = 0;
  Timestamp capture_time;
  std::string file;  // name inside datasets/<id>/frames/
};

// A gap between consecutive frames that differs from the capture interval by
// more than a second. Gaps over twice the interval are counted as dropped frames.
struct GapAnnotation {
  int after_index = 0;
  std::int64_t gap_s = 0;
  int missing_frames = 0;
};

struct Dataset {
  std::string id;
  double capture_interval_s = kDefaultCaptureIntervalS;
  int frame_width = 0;
  int frame_height = 0;
  CivilDate capture_date;  // UTC date of the first frame
  std::vector<FrameInfo> frames;
  std::vector<GapAnnotation> gaps;

  int frame_count() const noexcept { return static_cast<int>(frames.size()); }
};

// Dataset ids are url/path safe tokens: [A-Za-z0-9_-], 1..64 chars.
bool is_valid_dataset_id(std::string_view id);

// Filesystem layout under a data root:
//   datasets/<id>/dataset.json
//   datasets/<id>/frames/<YYYYMMDDTHHMMSSZ>.{jpg,png}
//   datasets/<id>/tiles/pyramid.json
//   datasets/<id>/tiles/<level>/<row>_<col>/<segment>.bin
//   datasets/<id>/smoke/{frames.csv,events.json}
class DataRoot {
 public:
  explicit DataRoot(std::filesystem::path root);

  const std::filesystem::path& path() const noexcept { return root_; }
  std::filesystem::path dataset_dir(const std::string& id) const;
  std::filesystem::path frames_dir(const std::string& id) const;
  std::filesystem::path tiles_dir(const std::string& id) const;
  std::filesystem::path smoke_dir(const std::string& id) const;
  std::filesystem::path telemetry_db() const;

  bool has_dataset(const std::string& id) const;
  Dataset load_dataset(const std::string& id) const;
  void save_dataset(const Dataset& ds) const;
  std::vector<std::string> list_datasets() const;

  Image read_frame(const Dataset& ds, int index) const;

 private:
  std::filesystem::path root_;
};

// Scans `source_dir` for <ISO8601-basic-UTC>.{jpg,jpeg,png}, validates the set and
// persists the dataset (copying frames under the data root unless they already live there).
Dataset ingest_frames(const DataRoot& root, const std::string& dataset_id,
                      const std::filesystem::path& source_dir);

// Seconds-level seek: largest capture_time <= t, or 0 when t precedes the dataset.
int frame_index_at(const Dataset& ds, Timestamp t);

struct TilePyramid {
  std::string dataset_id;
  int tile_size = kDefaultTileSize;
  int num_levels = 1;
  int frame_width = 0;
  int frame_height = 0;
  int frame_count = 0;
  int segment_length = kDefaultSegmentLength;

  // Geometry only; nothing is read or written.
  static TilePyramid plan(std::string dataset_id, int frame_width, int frame_height,
                          int tile_size = kDefaultTileSize);

  int native_level() const noexcept { return num_levels - 1; }
  int scale(int level) const;  // 2^(num_levels-1-level)
  int level_width(int level) const;
  int level_height(int level) const;
  int cols(int level) const;
  int rows(int level) const;
  int segment_count() const;
};

struct TileAddress {
  std::string dataset_id;
  int level = 0;
  int row = 0;
  int col = 0;
  int frame_start = 0;
  int frame_count = 1;
};

struct TileClip {
  TileAddress address;
  int tile_size = 0;
  std::vector<Image> frames;  // each tile_size x tile_size
};

// Every pyramid level of one frame, index = level (0 is coarsest).
std::vector<Image> level_images(const Image& native, int num_levels);
// The (row, col) tile of a level image, padded with black to tile_size.
Image cut_tile(const Image& level_image, int row, int col, int tile_size);

TilePyramid build_pyramid(const DataRoot& root, const std::string& dataset_id,
                          int tile_size = kDefaultTileSize,
                          int segment_length = kDefaultSegmentLength);
TilePyramid load_pyramid(const DataRoot& root, const std::string& dataset_id);

// Throws NotFoundError for addresses outside the pyramid or frame range.
TileClip get_tile(const DataRoot& root, const TileAddress& address);

// Wire/disk encoding of a clip (see docs/tile-format.md).
std::vector<std::uint8_t> encode_tile_clip(const TileClip& clip);
TileClip decode_tile_clip(std::span<const std::uint8_t> bytes);

}  // namespace plumewatch
