#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <random>

#include "plumewatch/image.hpp"
#include "plumewatch/smoke.hpp"
#include "plumewatch/telemetry.hpp"
#include "plumewatch/thumbnail.hpp"
#include "plumewatch/usage.hpp"
#include "plumewatch/time.hpp"

namespace pwtest {

namespace fs = std::filesystem;
using plumewatch::Image;
using plumewatch::Rgb;
using plumewatch::Timestamp;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Textured, frame-dependent content: gradients, a moving bar and hashed noise.
Image pattern_frame(int width, int height, int k, std::uint32_t seed);

// Writes frames named <YYYYMMDDTHHMMSSZ><ext> into dir.
void write_frames(const fs::path& dir, int count, Timestamp start, int interval_s,
                  const std::function<Image(int)>& make, const std::string& ext = ".png",
                  int png_level = 1);

Timestamp at(const std::string& iso);

// A random spec satisfying every dataset-independent invariant.
plumewatch::ThumbnailSpec random_spec(std::mt19937& rng);

// Frames split into four solid quadrants whose colours depend on k.
Image colour_block_frame(int width, int height, int k);
Rgb colour_block_colour(int quadrant, int k);

// Synthetic smoke scenes: a static noisy background with grey blobs pasted on
// known frame ranges. The generator knows every blob mask, so ground truth is exact.
struct Blob {
  int first_frame = 0;
  int last_frame = 0;  // inclusive
  int left = 0;
  int top = 0;
  int side = 0;
};
struct SmokeScene {
  int width = 160;
  int height = 120;
  Rgb background{70, 80, 100};
  int noise = 3;  // uniform +-noise per pixel and frame
  Rgb blob_colour{230, 230, 218};
  std::uint32_t seed = 1;
  std::vector<Blob> blobs;

  Image frame(int k) const;
  int truth(int k) const;  // union area of blobs visible on frame k
};

// Event runs by filling below-threshold gaps shorter than g, then keeping filled runs of length >= m.
std::vector<plumewatch::FrameRun> runs_oracle(const std::vector<int>& counts, int t, int m, int g);

// Brute-force bucket grouping over readings already deduplicated by (station, t).
struct OracleBucket {
  long long count = 0;
  double sum = 0.0;
};
std::map<std::string, std::vector<OracleBucket>> bucket_oracle(
    const std::vector<plumewatch::SensorReading>& readings, Timestamp t0, Timestamp t1, long long bucket_s);
// Applies last-write-wins on (station, t) in ingest order; result sorted by (station, t).
std::vector<plumewatch::SensorReading> last_write_wins(const std::vector<plumewatch::SensorReading>& ingested);

// Brute-force usage recount over a script's own ledger of what it requested.
// Dates come from integer division of epoch seconds shifted by a fixed offset.
struct LedgerView {
  std::string ip;
  long long epoch_s = 0;
  std::string dataset_id;
  long long dataset_day = 0;  // days since 1970-01-01
  bool human = true;
  std::string key;  // the exact URL requested
};
struct UsageOracle {
  // unique_hg, views_hg, unique_ag, views_ag, total, users_created, users_hg, users_ag, users_total
  std::array<std::size_t, 9> summary{};
  // [axis d/dataset_date/view_date][filter all/human/algorithm] -> sparse counts
  std::map<long long, unsigned long long> hist[3][3];
  // ip -> created, viewed_hg, datasets_hg, viewed_ag, datasets_ag
  std::map<std::string, std::array<long long, 5>> vectors;
};
UsageOracle usage_oracle(const std::vector<LedgerView>& views, const std::vector<std::string>& creator_ips,
                         long long utc_offset_s);

// "<ip> - - [dd/Mon/yyyy:HH:MM:SS +0000] \"<method> <target> HTTP/1.1\" <status> 123 \"-\" \"test-agent\""
std::string log_line(const std::string& ip, long long epoch_s, const std::string& method,
                     const std::string& target, int status);

// Empty when the dense histogram carries exactly the oracle's counts (zeros in between).
std::string compare_histogram(const plumewatch::Histogram& h, const std::map<long long, unsigned long long>& want);

// Textbook sum formula, long double accumulation. nullopt on zero variance.
std::optional<double> pearson_oracle(const std::vector<double>& x, const std::vector<double>& y);

// Right-tailed signed-rank p by enumerating every sign assignment of the nonzero diffs.
double wilcoxon_enumeration_p(const std::vector<double>& diffs);

// Minimal GIF89a reader written independently of the encoder under test.
struct DecodedGif {
  int width = 0;
  int height = 0;
  std::vector<Image> frames;
  std::vector<int> delays_cs;
  bool loops = false;
};
DecodedGif decode_gif(std::span<const std::uint8_t> bytes);

// Explicitly pads to even dimensions with black, then averages 2x2 blocks with
// round-half-up integer arithmetic.
Image box_halve_oracle(const Image& src);

// Streams the frames of one tile segment file (gzip of magic + six u32 LE + RGB frames).
class SegmentReader {
 public:
  explicit SegmentReader(const fs::path& file);
  ~SegmentReader();
  SegmentReader(const SegmentReader&) = delete;
  SegmentReader& operator=(const SegmentReader&) = delete;

  std::uint32_t tile_size() const { return header_[0]; }
  std::uint32_t level() const { return header_[1]; }
  std::uint32_t row() const { return header_[2]; }
  std::uint32_t col() const { return header_[3]; }
  std::uint32_t frame_start() const { return header_[4]; }
  std::uint32_t frame_count() const { return header_[5]; }
  Image next();

 private:
  void* gz_ = nullptr;
  std::uint32_t header_[6] = {};
};

}  // namespace pwtest
