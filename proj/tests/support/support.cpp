#include "support.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <set>
#include <cstring>
#include <stdexcept>

namespace pwtest {

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "plumewatch-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

std::uint32_t mix(std::uint32_t x) {
  x ^= x >> 16;
  x *= 0x7feb352dU;
  x ^= x >> 15;
  x *= 0x846ca68bU;
  x ^= x >> 16;
  return x;
}

}  // namespace

Image pattern_frame(int width, int height, int k, std::uint32_t seed) {
  Image img(width, height);
  const int bar = (k * 37) % std::max(1, width);
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = img.row(y);
    for (int x = 0; x < width; ++x) {
      std::uint8_t r = static_cast<std::uint8_t>((x * 255) / std::max(1, width - 1));
      std::uint8_t g = static_cast<std::uint8_t>((y * 255) / std::max(1, height - 1));
      std::uint8_t b = static_cast<std::uint8_t>((x + y + k * 3 + seed) & 0xff);
      if (std::abs(x - bar) < 24) {
        r = 250;
        g = static_cast<std::uint8_t>(k * 5);
      }
      // a patch of hashed noise keeps the box filter honest
      if (x % 97 < 16 && y % 89 < 16) {
        const std::uint32_t h = mix(seed * 2654435761U ^ (static_cast<std::uint32_t>(x) << 16) ^
                                    static_cast<std::uint32_t>(y) ^ (static_cast<std::uint32_t>(k) << 24));
        r = static_cast<std::uint8_t>(h);
        g = static_cast<std::uint8_t>(h >> 8);
        b = static_cast<std::uint8_t>(h >> 16);
      }
      row[x * 3] = r;
      row[x * 3 + 1] = g;
      row[x * 3 + 2] = b;
    }
  }
  return img;
}

void write_frames(const fs::path& dir, int count, Timestamp start, int interval_s,
                  const std::function<Image(int)>& make, const std::string& ext, int png_level) {
  fs::create_directories(dir);
  for (int k = 0; k < count; ++k) {
    const Timestamp t = start + std::chrono::seconds(static_cast<long long>(k) * interval_s);
    const fs::path file = dir / (plumewatch::format_iso8601_basic(t) + ext);
    const Image img = make(k);
    if (ext == ".png") {
      plumewatch::write_png(file, img, png_level);
    } else {
      plumewatch::write_jpeg(file, img, 95);
    }
  }
}

Timestamp at(const std::string& iso) { return plumewatch::parse_iso8601(iso); }

plumewatch::ThumbnailSpec random_spec(std::mt19937& rng) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  static const char kIdChars[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
  plumewatch::ThumbnailSpec s;
  const int id_len = uni(1, 24);
  for (int i = 0; i < id_len; ++i) s.dataset_id += kIdChars[uni(0, static_cast<int>(sizeof kIdChars) - 2)];
  s.bounds.left = uni(0, 5000);
  s.bounds.top = uni(0, 5000);
  s.bounds.right = s.bounds.left + uni(1, 5000);
  s.bounds.bottom = s.bounds.top + uni(1, 5000);
  s.out_width = uni(1, plumewatch::kMaxThumbnailSide);
  s.out_height = uni(1, plumewatch::kMaxThumbnailSide);
  s.start_frame = uni(0, 100000);
  s.nframes = uni(1, plumewatch::kMaxThumbnailFrames);
  s.fps = uni(1, plumewatch::kMaxThumbnailFps);
  s.format = uni(0, 1) ? plumewatch::ThumbnailFormat::gif : plumewatch::ThumbnailFormat::mp4;
  s.origin = uni(0, 1) ? plumewatch::Origin::human : plumewatch::Origin::algorithm;
  return s;
}

Rgb colour_block_colour(int quadrant, int k) {
  const auto v = static_cast<std::uint8_t>(20 * (k % 10));
  switch (quadrant) {
    case 0: return {255, v, 0};
    case 1: return {0, 255, v};
    case 2: return {v, 0, 255};
    default: return {255, 255, v};
  }
}

Image colour_block_frame(int width, int height, int k) {
  Image img(width, height);
  const int hw = width / 2, hh = height / 2;
  img.fill_rect(0, 0, hw, hh, colour_block_colour(0, k));
  img.fill_rect(hw, 0, width, hh, colour_block_colour(1, k));
  img.fill_rect(0, hh, hw, height, colour_block_colour(2, k));
  img.fill_rect(hw, hh, width, height, colour_block_colour(3, k));
  return img;
}

Image SmokeScene::frame(int k) const {
  Image img(width, height);
  const int span = 2 * noise + 1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint32_t h = mix(seed * 0x9E3779B9U ^ mix(static_cast<std::uint32_t>(k) * 65537U +
                                                         static_cast<std::uint32_t>(y * width + x)));
      auto jitter = [&](std::uint8_t base, int shift) {
        const int v = base + static_cast<int>((h >> shift) % static_cast<std::uint32_t>(span)) - noise;
        return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      };
      img.set(x, y, {jitter(background.r, 0), jitter(background.g, 8), jitter(background.b, 16)});
    }
  }
  for (const Blob& b : blobs) {
    if (k < b.first_frame || k > b.last_frame) continue;
    img.fill_rect(b.left, b.top, b.left + b.side, b.top + b.side, blob_colour);
  }
  return img;
}

int SmokeScene::truth(int k) const {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(width) * height, 0);
  for (const Blob& b : blobs) {
    if (k < b.first_frame || k > b.last_frame) continue;
    for (int y = std::max(0, b.top); y < std::min(height, b.top + b.side); ++y) {
      for (int x = std::max(0, b.left); x < std::min(width, b.left + b.side); ++x) m[y * width + x] = 1;
    }
  }
  int n = 0;
  for (auto v : m) n += v;
  return n;
}

std::vector<plumewatch::SensorReading> last_write_wins(const std::vector<plumewatch::SensorReading>& ingested) {
  std::map<std::pair<std::string, long long>, double> latest;
  for (const auto& r : ingested) latest[{r.station_id, r.t.time_since_epoch().count()}] = r.pm25;
  std::vector<plumewatch::SensorReading> out;
  for (const auto& [key, v] : latest) out.push_back({key.first, Timestamp(std::chrono::seconds(key.second)), v});
  return out;
}

std::map<std::string, std::vector<OracleBucket>> bucket_oracle(
    const std::vector<plumewatch::SensorReading>& readings, Timestamp t0, Timestamp t1, long long bucket_s) {
  std::map<std::string, std::vector<OracleBucket>> out;
  const long long a = t0.time_since_epoch().count(), b = t1.time_since_epoch().count();
  const long long n = (b - a + bucket_s - 1) / bucket_s;
  for (const auto& r : readings) {
    auto& buckets = out[r.station_id];
    if (buckets.empty()) buckets.resize(static_cast<std::size_t>(n));
    const long long t = r.t.time_since_epoch().count();
    if (t < a || t >= b) continue;
    // linear scan on purpose: no division shortcut
    for (long long k = 0; k < n; ++k) {
      if (t >= a + k * bucket_s && t < a + (k + 1) * bucket_s) {
        buckets[k].count += 1;
        buckets[k].sum += r.pm25;
        break;
      }
    }
  }
  return out;
}

UsageOracle usage_oracle(const std::vector<LedgerView>& views, const std::vector<std::string>& creator_ips,
                         long long utc_offset_s) {
  auto floor_div = [](long long a, long long b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); };
  UsageOracle o;
  std::set<std::string> keys_hg, keys_ag, users_hg, users_ag, creators, users;
  std::map<std::string, std::set<std::string>> ds_hg, ds_ag;
  for (const auto& v : views) {
    const long long view_day = floor_div(v.epoch_s + utc_offset_s, 86400);
    const long long d = view_day - v.dataset_day;
    const long long keys[3] = {d, v.dataset_day, view_day};
    for (int axis = 0; axis < 3; ++axis) {
      o.hist[axis][0][keys[axis]] += 1;
      o.hist[axis][v.human ? 1 : 2][keys[axis]] += 1;
    }
    users.insert(v.ip);
    auto& vec = o.vectors[v.ip];
    if (v.human) {
      ++o.summary[1];
      keys_hg.insert(v.key);
      users_hg.insert(v.ip);
      ++vec[1];
      ds_hg[v.ip].insert(v.dataset_id);
    } else {
      ++o.summary[3];
      keys_ag.insert(v.key);
      users_ag.insert(v.ip);
      ++vec[3];
      ds_ag[v.ip].insert(v.dataset_id);
    }
  }
  for (const auto& ip : creator_ips) {
    creators.insert(ip);
    users.insert(ip);
    ++o.vectors[ip][0];
  }
  for (auto& [ip, vec] : o.vectors) {
    vec[2] = ds_hg.count(ip) ? static_cast<long long>(ds_hg[ip].size()) : 0;
    vec[4] = ds_ag.count(ip) ? static_cast<long long>(ds_ag[ip].size()) : 0;
  }
  o.summary[0] = keys_hg.size();
  o.summary[2] = keys_ag.size();
  o.summary[4] = o.summary[1] + o.summary[3];
  o.summary[5] = creators.size();
  o.summary[6] = users_hg.size();
  o.summary[7] = users_ag.size();
  o.summary[8] = users.size();
  return o;
}

std::string log_line(const std::string& ip, long long epoch_s, const std::string& method,
                     const std::string& target, int status) {
  static const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  const std::time_t t = static_cast<std::time_t>(epoch_s);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[64];
  std::snprintf(stamp, sizeof stamp, "%02d/%s/%04d:%02d:%02d:%02d +0000", tm.tm_mday, kMonths[tm.tm_mon],
                tm.tm_year + 1900, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return ip + " - - [" + stamp + "] \"" + method + " " + target + " HTTP/1.1\" " + std::to_string(status) +
         " 123 \"-\" \"test-agent\"";
}

std::string compare_histogram(const plumewatch::Histogram& h, const std::map<long long, unsigned long long>& want) {
  if (want.empty()) return h.bins.empty() ? "" : "expected no bins";
  const long long lo = want.begin()->first, hi = want.rbegin()->first;
  if (h.bins.size() != static_cast<std::size_t>(hi - lo + 1)) {
    return "bin count " + std::to_string(h.bins.size()) + " vs " + std::to_string(hi - lo + 1);
  }
  for (std::size_t i = 0; i < h.bins.size(); ++i) {
    const long long key = lo + static_cast<long long>(i);
    const auto it = want.find(key);
    const unsigned long long expect = it == want.end() ? 0 : it->second;
    if (h.bins[i].first != key || h.bins[i].second != expect) {
      return "bin " + std::to_string(key) + ": got " + std::to_string(h.bins[i].first) + "=" +
             std::to_string(h.bins[i].second) + " want " + std::to_string(expect);
    }
  }
  return "";
}

std::optional<double> pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double vx = n * sxx - sx * sx, vy = n * syy - sy * sy;
  if (x.size() < 2 || vx <= 0 || vy <= 0) return std::nullopt;
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt(vx * vy));
}

double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0) nz.push_back(d);
  }
  const std::size_t n = nz.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    int less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += std::fabs(nz[j]) < std::fabs(nz[i]);
      equal += std::fabs(nz[j]) == std::fabs(nz[i]);
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nz[i] > 0) observed += rank[i];
  }
  unsigned long long hits = 0;
  const unsigned long long total = 1ULL << n;
  for (unsigned long long mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) w += rank[i];
    }
    hits += w >= observed - 1e-9;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// --- GIF ---

namespace {

class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() {
    if (pos_ >= b_.size()) throw std::runtime_error("gif: truncated");
    return b_[pos_++];
  }
  int u16() {
    const int lo = u8();
    return lo | (u8() << 8);
  }
  void skip(std::size_t n) {
    if (pos_ + n > b_.size()) throw std::runtime_error("gif: truncated");
    pos_ += n;
  }
  std::vector<std::uint8_t> sub_blocks() {
    std::vector<std::uint8_t> out;
    for (;;) {
      const std::uint8_t n = u8();
      if (n == 0) break;
      for (int i = 0; i < n; ++i) out.push_back(u8());
    }
    return out;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data, int min_code_size,
                                     std::size_t expected) {
  const int clear = 1 << min_code_size;
  const int eoi = clear + 1;
  std::vector<int> prefix(4096, -1);
  std::vector<std::uint8_t> suffix(4096, 0);
  std::vector<int> length(4096, 0);
  for (int i = 0; i < clear; ++i) {
    suffix[i] = static_cast<std::uint8_t>(i);
    length[i] = 1;
  }
  int code_size = min_code_size + 1;
  int next_code = eoi + 1;
  int prev = -1;

  auto expand = [&](int code, std::vector<std::uint8_t>& out) {
    const std::size_t base = out.size();
    out.resize(base + length[code]);
    for (int c = code, i = length[code] - 1; i >= 0; --i) {
      out[base + i] = suffix[c];
      c = prefix[c];
    }
  };
  auto first_of = [&](int code) {
    while (prefix[code] >= 0) code = prefix[code];
    return suffix[code];
  };

  std::vector<std::uint8_t> out;
  std::uint32_t bits = 0;
  int nbits = 0;
  std::size_t pos = 0;
  for (;;) {
    while (nbits < code_size && pos < data.size()) {
      bits |= static_cast<std::uint32_t>(data[pos++]) << nbits;
      nbits += 8;
    }
    if (nbits < code_size) break;
    const int code = static_cast<int>(bits & ((1u << code_size) - 1));
    bits >>= code_size;
    nbits -= code_size;

    if (code == clear) {
      code_size = min_code_size + 1;
      next_code = eoi + 1;
      prev = -1;
      continue;
    }
    if (code == eoi) break;
    if (prev < 0) {
      if (code >= clear) throw std::runtime_error("gif: bad first code");
      expand(code, out);
      prev = code;
      continue;
    }
    std::uint8_t head;
    if (code < next_code) {
      head = first_of(code);
      expand(code, out);
    } else if (code == next_code) {
      head = first_of(prev);
      expand(prev, out);
      out.push_back(head);
    } else {
      throw std::runtime_error("gif: code out of range");
    }
    if (next_code < 4096) {
      prefix[next_code] = prev;
      suffix[next_code] = head;
      length[next_code] = length[prev] + 1;
      ++next_code;
      if (next_code == (1 << code_size) && code_size < 12) ++code_size;
    }
    prev = code;
  }
  if (out.size() < expected) throw std::runtime_error("gif: short image data");
  out.resize(expected);
  return out;
}

}  // namespace

DecodedGif decode_gif(std::span<const std::uint8_t> bytes) {
  ByteCursor c(bytes);
  char sig[6];
  for (char& ch : sig) ch = static_cast<char>(c.u8());
  if (std::string(sig, 6) != "GIF89a") throw std::runtime_error("gif: bad signature");
  DecodedGif g;
  g.width = c.u16();
  g.height = c.u16();
  const std::uint8_t packed = c.u8();
  c.u8();  // background
  c.u8();  // aspect
  std::vector<Rgb> global;
  if (packed & 0x80) {
    const int n = 1 << ((packed & 7) + 1);
    for (int i = 0; i < n; ++i) global.push_back({c.u8(), c.u8(), c.u8()});
  }
  int pending_delay = 0;
  for (;;) {
    const std::uint8_t block = c.u8();
    if (block == 0x3B) break;
    if (block == 0x21) {
      const std::uint8_t label = c.u8();
      const auto payload = c.sub_blocks();
      if (label == 0xF9 && payload.size() >= 3) pending_delay = payload[1] | (payload[2] << 8);
      if (label == 0xFF && payload.size() >= 11 && std::memcmp(payload.data(), "NETSCAPE2.0", 11) == 0) {
        g.loops = true;
      }
      continue;
    }
    if (block != 0x2C) throw std::runtime_error("gif: unknown block");
    const int left = c.u16(), top = c.u16(), w = c.u16(), h = c.u16();
    const std::uint8_t ipacked = c.u8();
    if (ipacked & 0x40) throw std::runtime_error("gif: interlace not supported by the test reader");
    std::vector<Rgb> palette = global;
    if (ipacked & 0x80) {
      palette.clear();
      const int n = 1 << ((ipacked & 7) + 1);
      for (int i = 0; i < n; ++i) palette.push_back({c.u8(), c.u8(), c.u8()});
    }
    const int min_code = c.u8();
    const auto data = c.sub_blocks();
    const auto indices = lzw_decode(data, min_code, static_cast<std::size_t>(w) * h);
    Image frame(g.width, g.height);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::uint8_t idx = indices[static_cast<std::size_t>(y) * w + x];
        if (idx >= palette.size()) throw std::runtime_error("gif: index outside palette");
        frame.set(left + x, top + y, palette[idx]);
      }
    }
    g.frames.push_back(std::move(frame));
    g.delays_cs.push_back(pending_delay);
  }
  return g;
}

Image box_halve_oracle(const Image& src) {
  const int pw = src.width() + (src.width() % 2);
  const int ph = src.height() + (src.height() % 2);
  Image padded(pw, ph);  // black
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) padded.set(x, y, src.at(x, y));
  }
  Image out(pw / 2, ph / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const Rgb a = padded.at(2 * x, 2 * y), b = padded.at(2 * x + 1, 2 * y);
      const Rgb c = padded.at(2 * x, 2 * y + 1), d = padded.at(2 * x + 1, 2 * y + 1);
      out.set(x, y,
              {static_cast<std::uint8_t>((a.r + b.r + c.r + d.r + 2) / 4),
               static_cast<std::uint8_t>((a.g + b.g + c.g + d.g + 2) / 4),
               static_cast<std::uint8_t>((a.b + b.b + c.b + d.b + 2) / 4)});
    }
  }
  return out;
}

SegmentReader::SegmentReader(const fs::path& file) {
  gz_ = gzopen(file.c_str(), "rb");
  if (!gz_) throw std::runtime_error("cannot open " + file.string());
  std::uint8_t head[32];
  if (gzread(static_cast<gzFile>(gz_), head, sizeof head) != static_cast<int>(sizeof head)) {
    throw std::runtime_error("short header in " + file.string());
  }
  if (std::memcmp(head, "PWTILE1\0", 8) != 0) throw std::runtime_error("bad magic in " + file.string());
  for (int i = 0; i < 6; ++i) {
    header_[i] = static_cast<std::uint32_t>(head[8 + 4 * i]) | (static_cast<std::uint32_t>(head[9 + 4 * i]) << 8) |
                 (static_cast<std::uint32_t>(head[10 + 4 * i]) << 16) |
                 (static_cast<std::uint32_t>(head[11 + 4 * i]) << 24);
  }
}

SegmentReader::~SegmentReader() {
  if (gz_) gzclose(static_cast<gzFile>(gz_));
}

Image SegmentReader::next() {
  const int ts = static_cast<int>(tile_size());
  Image img(ts, ts);
  const auto want = static_cast<unsigned>(img.bytes().size());
  if (gzread(static_cast<gzFile>(gz_), img.bytes().data(), want) != static_cast<int>(want)) {
    throw std::runtime_error("short tile frame");
  }
  return img;
}

std::vector<plumewatch::FrameRun> runs_oracle(const std::vector<int>& counts, int t, int m, int g) {
  const int n = static_cast<int>(counts.size());
  std::vector<int> above(n), filled(n);
  for (int i = 0; i < n; ++i) above[i] = filled[i] = counts[i] >= t;
  int last_above = -1;
  for (int i = 0; i < n; ++i) {
    if (!above[i]) continue;
    if (last_above >= 0 && i - last_above - 1 > 0 && i - last_above - 1 < g) {
      for (int j = last_above + 1; j < i; ++j) filled[j] = 1;
    }
    last_above = i;
  }
  std::vector<plumewatch::FrameRun> out;
  for (int i = 0; i < n;) {
    if (!filled[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && filled[j + 1]) ++j;
    if (j - i + 1 >= m) out.push_back({i, j});
    i = j + 1;
  }
  return out;
}

}  // namespace pwtest
