#include "plumewatch/thumbnail.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "plumewatch/error.hpp"
#include "plumewatch/gif.hpp"

namespace plumewatch {

std::string_view to_string(ThumbnailFormat f) {
  return f == ThumbnailFormat::gif ? "gif" : "mp4";
}

std::string_view to_string(Origin o) { return o == Origin::human ? "human" : "algorithm"; }

Origin parse_origin(std::string_view s) {
  if (s == "human") return Origin::human;
  if (s == "algorithm") return Origin::algorithm;
  throw ValidationError("origin must be human or algorithm", "origin");
}

namespace {

ThumbnailFormat parse_format(std::string_view s) {
  if (s == "gif") return ThumbnailFormat::gif;
  if (s == "mp4") return ThumbnailFormat::mp4;
  throw ValidationError("format must be gif or mp4", "format");
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(s[i] == '+' ? ' ' : s[i]);
  }
  return out;
}

int parse_int(std::string_view text, const char* param) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(std::string(param) + ": not an integer: '" + std::string(text) + "'",
                          param);
  }
  return v;
}

void require(bool ok, const char* param, const std::string& what) {
  if (!ok) throw ValidationError(std::string(param) + ": " + what, param);
}

}  // namespace

void validate(const ThumbnailSpec& s) {
  require(is_valid_dataset_id(s.dataset_id), "root", "invalid dataset id");
  const PixelRect& b = s.bounds;
  require(b.left >= 0 && b.top >= 0, "boundsLTRB", "negative coordinate");
  require(b.left < b.right, "boundsLTRB", "left ≥ right");
  require(b.top < b.bottom, "boundsLTRB", "top ≥ bottom");
  require(s.out_width >= 1 && s.out_width <= kMaxThumbnailSide, "width",
          "must be in 1.." + std::to_string(kMaxThumbnailSide));
  require(s.out_height >= 1 && s.out_height <= kMaxThumbnailSide, "height",
          "must be in 1.." + std::to_string(kMaxThumbnailSide));
  require(s.start_frame >= 0, "startFrame", "must be >= 0");
  require(s.nframes >= 1 && s.nframes <= kMaxThumbnailFrames, "nframes",
          "must be in 1.." + std::to_string(kMaxThumbnailFrames));
  require(s.fps >= 1 && s.fps <= kMaxThumbnailFps, "fps",
          "must be in 1.." + std::to_string(kMaxThumbnailFps));
}

void validate_against(const ThumbnailSpec& s, const Dataset& ds) {
  validate(s);
  require(s.dataset_id == ds.id, "root", "dataset mismatch");
  require(s.bounds.right <= ds.frame_width, "boundsLTRB", "right exceeds frame width");
  require(s.bounds.bottom <= ds.frame_height, "boundsLTRB", "bottom exceeds frame height");
  require(static_cast<long long>(s.start_frame) + s.nframes <= ds.frame_count(), "nframes",
          "startFrame + nframes exceeds the dataset frame count");
}

std::string encode_url(const ThumbnailSpec& s) {
  std::string url = "/thumbnail?root=";
  url += s.dataset_id;
  url += "&boundsLTRB=" + std::to_string(s.bounds.left) + "," + std::to_string(s.bounds.top) + "," +
         std::to_string(s.bounds.right) + "," + std::to_string(s.bounds.bottom);
  url += "&width=" + std::to_string(s.out_width);
  url += "&height=" + std::to_string(s.out_height);
  url += "&startFrame=" + std::to_string(s.start_frame);
  url += "&nframes=" + std::to_string(s.nframes);
  url += "&fps=" + std::to_string(s.fps);
  url += "&format=";
  url += to_string(s.format);
  url += "&origin=";
  url += to_string(s.origin);
  return url;
}

ThumbnailSpec decode_url(std::string_view url) {
  const auto q = url.find('?');
  std::string_view path = url.substr(0, q);
  if (const auto scheme = path.find("://"); scheme != std::string_view::npos) {
    const auto slash = path.find('/', scheme + 3);
    path = slash == std::string_view::npos ? std::string_view{} : path.substr(slash);
  }
  if (path != "/thumbnail") throw ValidationError("not a thumbnail URL", "path");
  if (q == std::string_view::npos) throw ValidationError("root: missing parameter", "root");

  std::map<std::string, std::string, std::less<>> params;
  std::string_view query = url.substr(q + 1);
  if (const auto hash = query.find('#'); hash != std::string_view::npos) query = query.substr(0, hash);
  while (!query.empty()) {
    const auto amp = query.find('&');
    const std::string_view pair = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    if (pair.empty()) continue;
    const auto eq = pair.find('=');
    std::string key = percent_decode(pair.substr(0, eq));
    std::string value = eq == std::string_view::npos ? std::string{} : percent_decode(pair.substr(eq + 1));
    params[std::move(key)] = std::move(value);
  }

  auto get = [&](const char* name) -> const std::string& {
    auto it = params.find(name);
    if (it == params.end()) throw ValidationError(std::string(name) + ": missing parameter", name);
    return it->second;
  };

  ThumbnailSpec s;
  s.dataset_id = get("root");
  {
    const std::string& b = get("boundsLTRB");
    int v[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
      const auto comma = b.find(',', pos);
      if ((i < 3) == (comma == std::string::npos)) {
        throw ValidationError("boundsLTRB: expected four comma-separated integers", "boundsLTRB");
      }
      v[i] = parse_int(std::string_view(b).substr(pos, comma - pos), "boundsLTRB");
      pos = comma + 1;
    }
    s.bounds = {v[0], v[1], v[2], v[3]};
  }
  s.out_width = parse_int(get("width"), "width");
  s.out_height = parse_int(get("height"), "height");
  s.start_frame = parse_int(get("startFrame"), "startFrame");
  s.nframes = parse_int(get("nframes"), "nframes");
  s.fps = parse_int(get("fps"), "fps");
  s.format = parse_format(get("format"));
  if (auto it = params.find("origin"); it != params.end()) s.origin = parse_origin(it->second);
  validate(s);
  return s;
}

int gif_delay_centiseconds(int fps) {
  if (fps <= 0) throw ValidationError("fps must be positive", "fps");
  return static_cast<int>(std::lround(100.0 / fps));
}

std::vector<Image> render_frames(const ThumbnailSpec& spec, const Dataset& ds,
                                 const FrameReader& read_frame) {
  validate_against(spec, ds);
  std::vector<Image> frames;
  frames.reserve(static_cast<std::size_t>(spec.nframes));
  for (int k = 0; k < spec.nframes; ++k) {
    const auto src = read_frame(spec.start_frame + k);
    const PixelRect& b = spec.bounds;
    frames.push_back(
        resample_bilinear(*src, b.left, b.top, b.right, b.bottom, spec.out_width, spec.out_height));
  }
  return frames;
}

RenderedThumbnail render_thumbnail(const ThumbnailSpec& spec, const Dataset& ds,
                                   const FrameReader& read_frame) {
  validate_against(spec, ds);
  if (spec.format == ThumbnailFormat::mp4) {
    throw NotImplementedError("mp4 thumbnails are not available; use format=gif");
  }
  const auto frames = render_frames(spec, ds, read_frame);
  RenderedThumbnail out;
  out.delay_centiseconds = gif_delay_centiseconds(spec.fps);
  out.bytes = encode_gif(frames, out.delay_centiseconds);
  out.content_type = "image/gif";
  out.frame_count = spec.nframes;
  out.duration_s = static_cast<double>(spec.nframes) / spec.fps;
  return out;
}

RenderedThumbnail render_thumbnail(const DataRoot& root, const ThumbnailSpec& spec) {
  const Dataset ds = root.load_dataset(spec.dataset_id);
  return render_thumbnail(spec, ds, [&](int index) {
    return std::make_shared<const Image>(root.read_frame(ds, index));
  });
}

}  // namespace plumewatch
