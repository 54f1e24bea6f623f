#include "plumewatch/timelapse.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "plumewatch/error.hpp"

namespace plumewatch {

namespace fs = std::filesystem;
using json = nlohmann::json;

bool is_valid_dataset_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

namespace {

void require_id(const std::string& id) {
  if (!is_valid_dataset_id(id)) throw ValidationError("invalid dataset id '" + id + "'", "dataset");
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Exclusive per-dataset lock held for the duration of an ingest.
class DatasetLock {
 public:
  explicit DatasetLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw ValidationError("dataset is locked by another ingest (" + path_.string() + ")",
                            "dataset");
    }
  }
  ~DatasetLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DatasetLock(const DatasetLock&) = delete;
  DatasetLock& operator=(const DatasetLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::optional<Timestamp> parse_frame_stem(const std::string& stem) {
  // YYYYMMDDTHHMMSSZ exactly.
  if (stem.size() != 16 || stem[8] != 'T' || stem[15] != 'Z') return std::nullopt;
  return try_parse_iso8601(stem);
}

bool is_image_extension(std::string ext) {
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

json dataset_to_json(const Dataset& ds) {
  json frames = json::array();
  for (const FrameInfo& f : ds.frames) {
    frames.push_back({{"index", f.index},
                      {"capture_time", format_iso8601(f.capture_time)},
                      {"file", f.file}});
  }
  json gaps = json::array();
  for (const GapAnnotation& g : ds.gaps) {
    gaps.push_back(
        {{"after_index", g.after_index}, {"gap_s", g.gap_s}, {"missing_frames", g.missing_frames}});
  }
  return {{"id", ds.id},
          {"capture_interval_s", ds.capture_interval_s},
          {"frame_width", ds.frame_width},
          {"frame_height", ds.frame_height},
          {"capture_date", format_date(ds.capture_date)},
          {"frames", frames},
          {"gaps", gaps}};
}

Dataset dataset_from_json(const json& j) {
  Dataset ds;
  ds.id = j.at("id").get<std::string>();
  ds.capture_interval_s = j.at("capture_interval_s").get<double>();
  ds.frame_width = j.at("frame_width").get<int>();
  ds.frame_height = j.at("frame_height").get<int>();
  ds.capture_date = parse_date(j.at("capture_date").get<std::string>());
  for (const json& f : j.at("frames")) {
    ds.frames.push_back({f.at("index").get<int>(),
                         parse_iso8601(f.at("capture_time").get<std::string>()),
                         f.at("file").get<std::string>()});
  }
  for (const json& g : j.value("gaps", json::array())) {
    ds.gaps.push_back({g.at("after_index").get<int>(), g.at("gap_s").get<std::int64_t>(),
                       g.at("missing_frames").get<int>()});
  }
  return ds;
}

// --- tile segment encoding ---

constexpr std::array<char, 8> kTileMagic = {'P', 'W', 'T', 'I', 'L', 'E', '1', '\0'};
constexpr std::size_t kTileHeaderSize = 8 + 6 * 4;

struct TileHeader {
  std::uint32_t tile_size, level, row, col, frame_start, frame_count;
};

std::array<std::uint8_t, kTileHeaderSize> pack_header(const TileHeader& h) {
  std::array<std::uint8_t, kTileHeaderSize> out{};
  std::memcpy(out.data(), kTileMagic.data(), kTileMagic.size());
  const std::uint32_t fields[6] = {h.tile_size, h.level, h.row, h.col, h.frame_start, h.frame_count};
  for (int i = 0; i < 6; ++i) {
    for (int b = 0; b < 4; ++b) {
      out[8 + i * 4 + b] = static_cast<std::uint8_t>((fields[i] >> (8 * b)) & 0xff);
    }
  }
  return out;
}

TileHeader unpack_header(std::span<const std::uint8_t> in) {
  if (in.size() < kTileHeaderSize || std::memcmp(in.data(), kTileMagic.data(), kTileMagic.size())) {
    throw IoError("not a tile clip (bad magic)");
  }
  std::uint32_t fields[6];
  for (int i = 0; i < 6; ++i) {
    fields[i] = 0;
    for (int b = 0; b < 4; ++b) fields[i] |= std::uint32_t{in[8 + i * 4 + b]} << (8 * b);
  }
  return {fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]};
}

struct GzCloser {
  void operator()(gzFile f) const noexcept {
    if (f) gzclose(f);
  }
};
using GzPtr = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

void gz_write_all(gzFile f, const void* data, std::size_t size, const fs::path& path) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  while (size > 0) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(size, 1u << 30));
    if (gzwrite(f, p, chunk) != static_cast<int>(chunk)) throw IoError("write failed: " + path.string());
    p += chunk;
    size -= chunk;
  }
}

void gz_read_all(gzFile f, void* data, std::size_t size, const fs::path& path) {
  auto* p = static_cast<std::uint8_t*>(data);
  while (size > 0) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(size, 1u << 30));
    if (gzread(f, p, chunk) != static_cast<int>(chunk)) {
      throw IoError("truncated tile segment: " + path.string());
    }
    p += chunk;
    size -= chunk;
  }
}

fs::path segment_path(const fs::path& tiles_dir, int level, int row, int col, int segment) {
  return tiles_dir / std::to_string(level) / (std::to_string(row) + "_" + std::to_string(col)) /
         (std::to_string(segment) + ".bin");
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

// --- DataRoot ---

DataRoot::DataRoot(fs::path root) : root_(std::move(root)) {}

fs::path DataRoot::dataset_dir(const std::string& id) const {
  require_id(id);
  return root_ / "datasets" / id;
}
fs::path DataRoot::frames_dir(const std::string& id) const { return dataset_dir(id) / "frames"; }
fs::path DataRoot::tiles_dir(const std::string& id) const { return dataset_dir(id) / "tiles"; }
fs::path DataRoot::smoke_dir(const std::string& id) const { return dataset_dir(id) / "smoke"; }
fs::path DataRoot::telemetry_db() const { return root_ / "telemetry.sqlite"; }

bool DataRoot::has_dataset(const std::string& id) const {
  return is_valid_dataset_id(id) && fs::exists(dataset_dir(id) / "dataset.json");
}

Dataset DataRoot::load_dataset(const std::string& id) const {
  if (!has_dataset(id)) throw NotFoundError("unknown dataset '" + id + "'");
  try {
    return dataset_from_json(json::parse(read_text(dataset_dir(id) / "dataset.json")));
  } catch (const json::exception& e) {
    throw IoError("corrupt dataset.json for '" + id + "': " + e.what());
  }
}

void DataRoot::save_dataset(const Dataset& ds) const {
  fs::create_directories(dataset_dir(ds.id));
  write_file_atomic(dataset_dir(ds.id) / "dataset.json", dataset_to_json(ds).dump(1));
}

std::vector<std::string> DataRoot::list_datasets() const {
  std::vector<std::string> ids;
  const fs::path dir = root_ / "datasets";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && has_dataset(name)) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Image DataRoot::read_frame(const Dataset& ds, int index) const {
  if (index < 0 || index >= ds.frame_count()) {
    throw NotFoundError("frame " + std::to_string(index) + " outside dataset '" + ds.id + "'");
  }
  Image img = read_image(frames_dir(ds.id) / ds.frames[static_cast<std::size_t>(index)].file);
  if (img.width() != ds.frame_width || img.height() != ds.frame_height) {
    throw IoError("frame " + std::to_string(index) + " of '" + ds.id + "' changed size on disk");
  }
  return img;
}

// --- ingest ---

Dataset ingest_frames(const DataRoot& root, const std::string& dataset_id,
                      const fs::path& source_dir) {
  require_id(dataset_id);
  std::error_code ec;
  if (!fs::is_directory(source_dir, ec)) {
    throw IoError("frame directory not found: " + source_dir.string());
  }

  struct Candidate {
    fs::path path;
    Timestamp time;
  };
  std::vector<Candidate> found;
  for (const auto& entry : fs::directory_iterator(source_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    const auto t = parse_frame_stem(entry.path().stem().string());
    if (!t || !is_image_extension(entry.path().extension().string())) {
      throw ValidationError("unparsable frame filename: " + name, "filename");
    }
    found.push_back({entry.path(), *t});
  }
  if (found.empty()) throw ValidationError("no frames in " + source_dir.string(), "dir");

  std::sort(found.begin(), found.end(),
            [](const Candidate& a, const Candidate& b) { return a.time < b.time; });
  for (std::size_t i = 1; i < found.size(); ++i) {
    if (found[i].time == found[i - 1].time) {
      throw ValidationError("duplicate capture time: " + found[i].path.filename().string(),
                            "filename");
    }
  }

  const ImageSize first = read_image_size(found.front().path);
  for (const Candidate& c : found) {
    const ImageSize size = read_image_size(c.path);
    if (size != first) {
      throw ValidationError("frame " + c.path.filename().string() + " is " +
                                std::to_string(size.width) + "x" + std::to_string(size.height) +
                                ", expected " + std::to_string(first.width) + "x" +
                                std::to_string(first.height),
                            "filename");
    }
  }

  fs::create_directories(root.path() / "datasets");
  DatasetLock lock(root.path() / "datasets" / (dataset_id + ".lock"));

  Dataset ds;
  ds.id = dataset_id;
  ds.frame_width = first.width;
  ds.frame_height = first.height;
  ds.capture_date = utc_date(found.front().time);

  std::vector<std::int64_t> gaps;
  for (std::size_t i = 1; i < found.size(); ++i) {
    gaps.push_back((found[i].time - found[i - 1].time).count());
  }
  if (!gaps.empty()) {
    std::vector<std::int64_t> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    ds.capture_interval_s = sorted.size() % 2 ? static_cast<double>(sorted[mid])
                                              : (sorted[mid - 1] + sorted[mid]) / 2.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const double g = static_cast<double>(gaps[i]);
      if (std::abs(g - ds.capture_interval_s) <= 1.0) continue;
      const int missing =
          g > 2.0 * ds.capture_interval_s
              ? static_cast<int>(std::lround(g / ds.capture_interval_s)) - 1
              : 0;
      ds.gaps.push_back({static_cast<int>(i), gaps[i], missing});
    }
  }

  const fs::path frames_dir = root.frames_dir(dataset_id);
  fs::create_directories(frames_dir);
  const bool in_place = fs::equivalent(source_dir, frames_dir, ec);
  for (std::size_t i = 0; i < found.size(); ++i) {
    std::string ext = found[i].path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".jpeg") ext = ".jpg";
    const std::string file = format_iso8601_basic(found[i].time) + ext;
    if (!in_place) {
      fs::copy_file(found[i].path, frames_dir / file, fs::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy " + found[i].path.string() + ": " + ec.message());
    } else if (found[i].path.filename() != file) {
      fs::rename(found[i].path, frames_dir / file);
    }
    ds.frames.push_back({static_cast<int>(i), found[i].time, file});
  }
  root.save_dataset(ds);
  return ds;
}

int frame_index_at(const Dataset& ds, Timestamp t) {
  auto it = std::upper_bound(ds.frames.begin(), ds.frames.end(), t,
                             [](Timestamp v, const FrameInfo& f) { return v < f.capture_time; });
  if (it == ds.frames.begin()) return 0;
  return std::prev(it)->index;
}

// --- pyramid geometry ---

TilePyramid TilePyramid::plan(std::string dataset_id, int frame_width, int frame_height,
                              int tile_size) {
  if (tile_size <= 0) throw ValidationError("tile size must be positive", "tile_size");
  if (frame_width <= 0 || frame_height <= 0) throw ValidationError("empty frames");
  TilePyramid p;
  p.dataset_id = std::move(dataset_id);
  p.tile_size = tile_size;
  p.frame_width = frame_width;
  p.frame_height = frame_height;
  const long long longest = std::max(frame_width, frame_height);
  int levels = 1;
  while (longest > (static_cast<long long>(tile_size) << (levels - 1))) ++levels;
  p.num_levels = levels;
  return p;
}

int TilePyramid::scale(int level) const { return 1 << (num_levels - 1 - level); }
int TilePyramid::level_width(int level) const { return ceil_div(frame_width, scale(level)); }
int TilePyramid::level_height(int level) const { return ceil_div(frame_height, scale(level)); }
int TilePyramid::cols(int level) const { return ceil_div(frame_width, tile_size * scale(level)); }
int TilePyramid::rows(int level) const { return ceil_div(frame_height, tile_size * scale(level)); }
int TilePyramid::segment_count() const {
  return frame_count == 0 ? 0 : ceil_div(frame_count, segment_length);
}

std::vector<Image> level_images(const Image& native, int num_levels) {
  std::vector<Image> levels(static_cast<std::size_t>(num_levels));
  levels.back() = native;
  for (int l = num_levels - 2; l >= 0; --l) {
    levels[static_cast<std::size_t>(l)] = halve(levels[static_cast<std::size_t>(l) + 1]);
  }
  return levels;
}

Image cut_tile(const Image& level_image, int row, int col, int tile_size) {
  return crop_padded(level_image, col * tile_size, row * tile_size, tile_size, tile_size);
}

// --- pyramid build / read ---

namespace {

json pyramid_to_json(const TilePyramid& p) {
  return {{"dataset_id", p.dataset_id},       {"tile_size", p.tile_size},
          {"num_levels", p.num_levels},       {"frame_width", p.frame_width},
          {"frame_height", p.frame_height},   {"frame_count", p.frame_count},
          {"segment_length", p.segment_length}, {"encoding", "PWTILE1+gzip"}};
}

}  // namespace

TilePyramid build_pyramid(const DataRoot& root, const std::string& dataset_id, int tile_size,
                          int segment_length) {
  if (segment_length <= 0) throw ValidationError("segment length must be positive", "segment_length");
  const Dataset ds = root.load_dataset(dataset_id);
  TilePyramid pyr = TilePyramid::plan(dataset_id, ds.frame_width, ds.frame_height, tile_size);
  pyr.frame_count = ds.frame_count();
  pyr.segment_length = segment_length;

  const fs::path final_dir = root.tiles_dir(dataset_id);
  fs::path staging = final_dir;
  staging += ".partial";
  fs::remove_all(staging);

  struct Writer {
    int level, row, col;
    fs::path path;
    GzPtr file;
  };
  std::vector<Writer> writers;
  for (int l = 0; l < pyr.num_levels; ++l) {
    for (int r = 0; r < pyr.rows(l); ++r) {
      for (int c = 0; c < pyr.cols(l); ++c) {
        fs::create_directories(segment_path(staging, l, r, c, 0).parent_path());
        writers.push_back({l, r, c, {}, nullptr});
      }
    }
  }

  const std::size_t tile_bytes = static_cast<std::size_t>(tile_size) * tile_size * 3;
  for (int f = 0; f < pyr.frame_count; ++f) {
    const int segment = f / segment_length;
    if (f % segment_length == 0) {
      const int seg_start = segment * segment_length;
      const int seg_frames = std::min(segment_length, pyr.frame_count - seg_start);
      for (Writer& w : writers) {
        w.file.reset();
        w.path = segment_path(staging, w.level, w.row, w.col, segment);
        w.file.reset(gzopen(w.path.c_str(), "wb1"));
        if (!w.file) throw IoError("cannot create " + w.path.string());
        const auto header = pack_header({static_cast<std::uint32_t>(tile_size),
                                         static_cast<std::uint32_t>(w.level),
                                         static_cast<std::uint32_t>(w.row),
                                         static_cast<std::uint32_t>(w.col),
                                         static_cast<std::uint32_t>(seg_start),
                                         static_cast<std::uint32_t>(seg_frames)});
        gz_write_all(w.file.get(), header.data(), header.size(), w.path);
      }
    }
    const auto levels = level_images(root.read_frame(ds, f), pyr.num_levels);
    for (Writer& w : writers) {
      const Image tile = cut_tile(levels[static_cast<std::size_t>(w.level)], w.row, w.col, tile_size);
      gz_write_all(w.file.get(), tile.bytes().data(), tile_bytes, w.path);
    }
  }
  for (Writer& w : writers) {
    if (w.file && gzclose(w.file.release()) != Z_OK) throw IoError("cannot finish " + w.path.string());
  }

  write_file_atomic(staging / "pyramid.json", pyramid_to_json(pyr).dump(1));
  fs::remove_all(final_dir);
  fs::rename(staging, final_dir);
  return pyr;
}

TilePyramid load_pyramid(const DataRoot& root, const std::string& dataset_id) {
  const fs::path meta = root.tiles_dir(dataset_id) / "pyramid.json";
  if (!fs::exists(meta)) throw NotFoundError("no tile pyramid for dataset '" + dataset_id + "'");
  const json j = json::parse(read_text(meta));
  TilePyramid p;
  p.dataset_id = j.at("dataset_id").get<std::string>();
  p.tile_size = j.at("tile_size").get<int>();
  p.num_levels = j.at("num_levels").get<int>();
  p.frame_width = j.at("frame_width").get<int>();
  p.frame_height = j.at("frame_height").get<int>();
  p.frame_count = j.at("frame_count").get<int>();
  p.segment_length = j.at("segment_length").get<int>();
  return p;
}

TileClip get_tile(const DataRoot& root, const TileAddress& a) {
  const TilePyramid pyr = load_pyramid(root, a.dataset_id);
  if (a.level < 0 || a.level >= pyr.num_levels) {
    throw NotFoundError("level " + std::to_string(a.level) + " outside pyramid");
  }
  if (a.row < 0 || a.row >= pyr.rows(a.level) || a.col < 0 || a.col >= pyr.cols(a.level)) {
    throw NotFoundError("tile " + std::to_string(a.row) + "_" + std::to_string(a.col) +
                        " outside level " + std::to_string(a.level) + " grid");
  }
  if (a.frame_count < 1 || a.frame_start < 0 || a.frame_start + a.frame_count > pyr.frame_count) {
    throw NotFoundError("frame range outside dataset");
  }

  TileClip clip;
  clip.address = a;
  clip.tile_size = pyr.tile_size;
  const std::size_t tile_bytes = static_cast<std::size_t>(pyr.tile_size) * pyr.tile_size * 3;
  const fs::path tiles = root.tiles_dir(a.dataset_id);

  int frame = a.frame_start;
  const int end = a.frame_start + a.frame_count;
  while (frame < end) {
    const int segment = frame / pyr.segment_length;
    const int seg_start = segment * pyr.segment_length;
    const fs::path path = segment_path(tiles, a.level, a.row, a.col, segment);
    GzPtr file(gzopen(path.c_str(), "rb"));
    if (!file) throw IoError("missing tile segment " + path.string());
    std::array<std::uint8_t, kTileHeaderSize> raw{};
    gz_read_all(file.get(), raw.data(), raw.size(), path);
    const TileHeader h = unpack_header(raw);
    if (static_cast<int>(h.frame_start) != seg_start || static_cast<int>(h.tile_size) != pyr.tile_size) {
      throw IoError("tile segment header mismatch in " + path.string());
    }
    const z_off_t skip = static_cast<z_off_t>((frame - seg_start) * tile_bytes);
    if (skip > 0 && gzseek(file.get(), skip, SEEK_CUR) < 0) {
      throw IoError("cannot seek in " + path.string());
    }
    const int seg_end = std::min(end, seg_start + static_cast<int>(h.frame_count));
    for (; frame < seg_end; ++frame) {
      Image img(pyr.tile_size, pyr.tile_size);
      gz_read_all(file.get(), img.bytes().data(), tile_bytes, path);
      clip.frames.push_back(std::move(img));
    }
  }
  return clip;
}

std::vector<std::uint8_t> encode_tile_clip(const TileClip& clip) {
  std::vector<std::uint8_t> raw;
  const auto header = pack_header({static_cast<std::uint32_t>(clip.tile_size),
                                   static_cast<std::uint32_t>(clip.address.level),
                                   static_cast<std::uint32_t>(clip.address.row),
                                   static_cast<std::uint32_t>(clip.address.col),
                                   static_cast<std::uint32_t>(clip.address.frame_start),
                                   static_cast<std::uint32_t>(clip.frames.size())});
  raw.insert(raw.end(), header.begin(), header.end());
  for (const Image& f : clip.frames) raw.insert(raw.end(), f.bytes().begin(), f.bytes().end());

  z_stream zs{};
  if (deflateInit2(&zs, 1, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IoError("deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(raw.size())));
  zs.next_in = raw.data();
  zs.avail_in = static_cast<uInt>(raw.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("tile clip compression failed");
  return out;
}

TileClip decode_tile_clip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw IoError("inflateInit2 failed");
  std::vector<std::uint8_t> raw;
  std::array<std::uint8_t, 1 << 16> buf{};
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError("corrupt tile clip");
    }
    raw.insert(raw.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  }
  inflateEnd(&zs);

  const TileHeader h = unpack_header(raw);
  const std::size_t tile_bytes = static_cast<std::size_t>(h.tile_size) * h.tile_size * 3;
  if (raw.size() != kTileHeaderSize + tile_bytes * h.frame_count) {
    throw IoError("tile clip length mismatch");
  }
  TileClip clip;
  clip.tile_size = static_cast<int>(h.tile_size);
  clip.address = {"", static_cast<int>(h.level), static_cast<int>(h.row), static_cast<int>(h.col),
                  static_cast<int>(h.frame_start), static_cast<int>(h.frame_count)};
  for (std::uint32_t i = 0; i < h.frame_count; ++i) {
    Image img(clip.tile_size, clip.tile_size);
    std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(kTileHeaderSize + i * tile_bytes),
                tile_bytes, img.bytes().begin());
    clip.frames.push_back(std::move(img));
  }
  return clip;
}

}  // namespace plumewatch
