#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace plumewatch {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major interleaved RGB, 8 bits per channel.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &pixels_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &pixels_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  std::uint8_t* row(int y) { return pixels_.data() + offset(0, y); }
  const std::uint8_t* row(int y) const { return pixels_.data() + offset(0, y); }

  std::span<std::uint8_t> bytes() noexcept { return pixels_; }
  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }

  void fill_rect(int left, int top, int right, int bottom, Rgb c);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Decoders pick the codec from the extension (.png, .jpg, .jpeg).
Image read_image(const std::filesystem::path& path);
ImageSize read_image_size(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img, int compression_level = 6);
void write_jpeg(const std::filesystem::path& path, const Image& img, int quality = 90);

// One 2x2 box-filter halving. Output is ceil(w/2) x ceil(h/2); pixels that fall
// outside the source count as black, so odd edges darken exactly as if the
// source were padded with black first.
Image halve(const Image& src);

// Copies the window [x0, x0+w) x [y0, y0+h) out of src; anything outside src is black.
Image crop_padded(const Image& src, int x0, int y0, int w, int h);

// Bilinear resample of the rectangle [left,right) x [top,bottom) of src to out_w x out_h
// using pixel-centre alignment. When the rectangle and output sizes match this is an
// exact copy.
Image resample_bilinear(const Image& src, int left, int top, int right, int bottom, int out_w,
                        int out_h);

}  // namespace plumewatch
