#include "plumewatch/gif.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "plumewatch/error.hpp"

namespace plumewatch {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(unsigned v) {
    out_.push_back(static_cast<std::uint8_t>(v & 0xff));
    out_.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(const char* s) {
    while (*s) out_.push_back(static_cast<std::uint8_t>(*s++));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

struct IndexedFrame {
  std::vector<Rgb> palette;  // padded to a power of two, >= 2
  int table_bits = 1;        // palette.size() == 1 << table_bits
  std::vector<std::uint8_t> indices;
};

std::uint32_t pack(Rgb c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

IndexedFrame index_frame(const Image& img) {
  IndexedFrame f;
  const auto px = img.bytes();
  const std::size_t n = px.size() / 3;

  std::vector<std::uint32_t> colours;
  colours.reserve(257);
  std::unordered_map<std::uint32_t, std::uint8_t> lookup;
  bool exact = true;
  for (std::size_t i = 0; i < n && exact; ++i) {
    const std::uint32_t key = pack({px[3 * i], px[3 * i + 1], px[3 * i + 2]});
    if (lookup.try_emplace(key, 0).second) {
      colours.push_back(key);
      exact = colours.size() <= 256;
    }
  }

  f.indices.resize(n);
  if (exact) {
    std::sort(colours.begin(), colours.end());
    for (std::size_t i = 0; i < colours.size(); ++i) {
      lookup[colours[i]] = static_cast<std::uint8_t>(i);
      f.palette.push_back({static_cast<std::uint8_t>(colours[i] >> 16),
                           static_cast<std::uint8_t>((colours[i] >> 8) & 0xff),
                           static_cast<std::uint8_t>(colours[i] & 0xff)});
    }
    for (std::size_t i = 0; i < n; ++i) {
      f.indices[i] = lookup[pack({px[3 * i], px[3 * i + 1], px[3 * i + 2]})];
    }
  } else {
    // 3-3-2: 8 red, 8 green, 4 blue levels spread evenly over 0..255.
    for (int i = 0; i < 256; ++i) {
      f.palette.push_back({static_cast<std::uint8_t>(((i >> 5) & 7) * 255 / 7),
                           static_cast<std::uint8_t>(((i >> 2) & 7) * 255 / 7),
                           static_cast<std::uint8_t>((i & 3) * 255 / 3)});
    }
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned r = (px[3 * i] * 7u + 127) / 255;
      const unsigned g = (px[3 * i + 1] * 7u + 127) / 255;
      const unsigned b = (px[3 * i + 2] * 3u + 127) / 255;
      f.indices[i] = static_cast<std::uint8_t>((r << 5) | (g << 2) | b);
    }
  }

  int bits = 1;
  while ((std::size_t{1} << bits) < f.palette.size()) ++bits;
  f.table_bits = bits;
  f.palette.resize(std::size_t{1} << bits);
  return f;
}

// Variable-width LZW as used by GIF, emitting a clear code when the table fills.
std::vector<std::uint8_t> lzw_compress(std::span<const std::uint8_t> indices, int min_code_size) {
  const unsigned clear = 1u << min_code_size;
  const unsigned stop = clear + 1;

  std::vector<std::uint8_t> out;
  std::uint32_t bit_buffer = 0;
  int bit_count = 0;
  int code_size = min_code_size + 1;
  auto emit = [&](unsigned code) {
    bit_buffer |= code << bit_count;
    bit_count += code_size;
    while (bit_count >= 8) {
      out.push_back(static_cast<std::uint8_t>(bit_buffer & 0xff));
      bit_buffer >>= 8;
      bit_count -= 8;
    }
  };

  // (prefix code << 8 | next symbol) -> code
  std::unordered_map<std::uint32_t, unsigned> table;
  table.reserve(4096);
  unsigned next_code = stop + 1;
  auto reset = [&] {
    table.clear();
    next_code = stop + 1;
    code_size = min_code_size + 1;
  };

  emit(clear);
  if (!indices.empty()) {
    unsigned prefix = indices[0];
    for (std::size_t i = 1; i < indices.size(); ++i) {
      const std::uint8_t sym = indices[i];
      const std::uint32_t key = (prefix << 8) | sym;
      if (auto it = table.find(key); it != table.end()) {
        prefix = it->second;
        continue;
      }
      emit(prefix);
      const unsigned assigned = next_code++;
      table.emplace(key, assigned);
      if (assigned >= (1u << code_size)) ++code_size;
      if (assigned == 4095) {
        emit(clear);
        reset();
      }
      prefix = sym;
    }
    emit(prefix);
  }
  emit(stop);
  if (bit_count > 0) out.push_back(static_cast<std::uint8_t>(bit_buffer & 0xff));
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_gif(std::span<const Image> frames, int delay_centiseconds,
                                     bool loop_forever) {
  if (frames.empty()) throw ValidationError("an animation needs at least one frame");
  const int w = frames.front().width();
  const int h = frames.front().height();
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) {
    throw ValidationError("GIF frame dimensions out of range");
  }
  for (const Image& f : frames) {
    if (f.width() != w || f.height() != h) throw ValidationError("GIF frames differ in size");
  }

  ByteWriter out;
  out.text("GIF89a");
  out.u16(static_cast<unsigned>(w));
  out.u16(static_cast<unsigned>(h));
  out.u8(0x70);  // no global table, 8-bit colour resolution
  out.u8(0);
  out.u8(0);

  if (loop_forever && frames.size() > 1) {
    out.u8(0x21);
    out.u8(0xff);
    out.u8(11);
    out.text("NETSCAPE2.0");
    out.u8(3);
    out.u8(1);
    out.u16(0);
    out.u8(0);
  }

  for (const Image& frame : frames) {
    const IndexedFrame indexed = index_frame(frame);

    out.u8(0x21);  // graphic control extension
    out.u8(0xf9);
    out.u8(4);
    out.u8(0x04);  // dispose: do not dispose
    out.u16(static_cast<unsigned>(std::clamp(delay_centiseconds, 0, 65535)));
    out.u8(0);
    out.u8(0);

    out.u8(0x2c);  // image descriptor
    out.u16(0);
    out.u16(0);
    out.u16(static_cast<unsigned>(w));
    out.u16(static_cast<unsigned>(h));
    out.u8(static_cast<std::uint8_t>(0x80 | (indexed.table_bits - 1)));
    for (const Rgb& c : indexed.palette) {
      out.u8(c.r);
      out.u8(c.g);
      out.u8(c.b);
    }

    const int min_code_size = std::max(2, indexed.table_bits);
    out.u8(static_cast<std::uint8_t>(min_code_size));
    const auto data = lzw_compress(indexed.indices, min_code_size);
    for (std::size_t pos = 0; pos < data.size(); pos += 255) {
      const std::size_t len = std::min<std::size_t>(255, data.size() - pos);
      out.u8(static_cast<std::uint8_t>(len));
      out.bytes(std::span(data).subspan(pos, len));
    }
    out.u8(0);
  }
  out.u8(0x3b);
  return out.take();
}

}  // namespace plumewatch
