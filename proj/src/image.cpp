#include "plumewatch/image.hpp"

#include <png.h>
// jpeglib.h expects FILE and size_t to be declared already.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <memory>
#include <string>

#include "plumewatch/error.hpp"

namespace plumewatch {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("negative image dimensions");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  if (fill != Rgb{}) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
    }
  }
}

void Image::fill_rect(int left, int top, int right, int bottom, Rgb c) {
  left = std::max(left, 0);
  top = std::max(top, 0);
  right = std::min(right, width_);
  bottom = std::min(bottom, height_);
  for (int y = top; y < bottom; ++y) {
    for (int x = left; x < right; ++x) set(x, y, c);
  }
}

namespace {

enum class Codec { png, jpeg };

Codec codec_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return Codec::png;
  if (ext == ".jpg" || ext == ".jpeg") return Codec::jpeg;
  throw ValidationError("unsupported image extension: " + path.filename().string());
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

// --- PNG (libpng simplified API) ---

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.bytes().data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return img;
}

ImageSize read_png_size(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  ImageSize size{static_cast<int>(png.width), static_cast<int>(png.height)};
  png_image_free(&png);
  return size;
}

// --- JPEG (libjpeg) ---

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Decodes header only when `header_only` is set. Kept free of non-trivial locals
// between setjmp and longjmp.
bool decode_jpeg(std::FILE* file, Image* out, ImageSize* size, std::string& error) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    error = jerr.message;
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  size->width = static_cast<int>(cinfo.image_width);
  size->height = static_cast<int>(cinfo.image_height);
  if (out) {
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    *out = Image(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row = out->row(static_cast<int>(cinfo.output_scanline));
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
  }
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (codec_for(path) == Codec::png) return read_png(path);
  auto file = open_file(path, "rb");
  Image img;
  ImageSize size;
  std::string error;
  if (!decode_jpeg(file.get(), &img, &size, error)) {
    throw IoError("cannot decode JPEG " + path.string() + ": " + error);
  }
  return img;
}

ImageSize read_image_size(const std::filesystem::path& path) {
  if (codec_for(path) == Codec::png) return read_png_size(path);
  auto file = open_file(path, "rb");
  ImageSize size;
  std::string error;
  if (!decode_jpeg(file.get(), nullptr, &size, error)) {
    throw IoError("cannot decode JPEG " + path.string() + ": " + error);
  }
  return size;
}

void write_png(const std::filesystem::path& path, const Image& img, int compression_level) {
  // The simplified write API has no compression knob, so use the classic one.
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot write PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, compression_level);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(img.row(y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_jpeg(const std::filesystem::path& path, const Image& img, int quality) {
  auto file = open_file(path, "wb");
  jpeg_compress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw IoError("cannot write JPEG " + path.string());
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(img.row(static_cast<int>(cinfo.next_scanline)));
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

Image halve(const Image& src) {
  const int w = (src.width() + 1) / 2;
  const int h = (src.height() + 1) / 2;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = 2 * y;
    const bool has_y1 = y0 + 1 < src.height();
    const std::uint8_t* r0 = src.row(y0);
    const std::uint8_t* r1 = has_y1 ? src.row(y0 + 1) : nullptr;
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x;
      const bool has_x1 = x0 + 1 < src.width();
      for (int c = 0; c < 3; ++c) {
        unsigned sum = r0[x0 * 3 + c];
        if (has_x1) sum += r0[(x0 + 1) * 3 + c];
        if (r1) {
          sum += r1[x0 * 3 + c];
          if (has_x1) sum += r1[(x0 + 1) * 3 + c];
        }
        dst[x * 3 + c] = static_cast<std::uint8_t>((sum + 2) / 4);
      }
    }
  }
  return out;
}

Image crop_padded(const Image& src, int x0, int y0, int w, int h) {
  Image out(w, h);
  const int sx_begin = std::max(x0, 0);
  const int sx_end = std::min(x0 + w, src.width());
  if (sx_end <= sx_begin) return out;
  const std::size_t run = static_cast<std::size_t>(sx_end - sx_begin) * 3;
  for (int y = 0; y < h; ++y) {
    const int sy = y0 + y;
    if (sy < 0 || sy >= src.height()) continue;
    std::copy_n(src.row(sy) + sx_begin * 3, run, out.row(y) + (sx_begin - x0) * 3);
  }
  return out;
}

Image resample_bilinear(const Image& src, int left, int top, int right, int bottom, int out_w,
                        int out_h) {
  if (left < 0 || top < 0 || right > src.width() || bottom > src.height() || left >= right ||
      top >= bottom) {
    throw ValidationError("resample rectangle outside the source image");
  }
  if (out_w <= 0 || out_h <= 0) throw ValidationError("resample output must be non-empty");

  const int crop_w = right - left;
  const int crop_h = bottom - top;
  const double sx = static_cast<double>(crop_w) / out_w;
  const double sy = static_cast<double>(crop_h) / out_h;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int n_out, int n_in, double scale, int origin) {
    std::vector<Tap> t(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      double pos = (o + 0.5) * scale - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(pos));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[static_cast<std::size_t>(o)] = {origin + i0, origin + i1, pos - i0};
    }
    return t;
  };
  const auto xt = taps(out_w, crop_w, sx, left);
  const auto yt = taps(out_h, crop_h, sy, top);

  Image out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const Tap& ty = yt[static_cast<std::size_t>(y)];
    const std::uint8_t* ra = src.row(ty.i0);
    const std::uint8_t* rb = src.row(ty.i1);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < out_w; ++x) {
      const Tap& tx = xt[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const double top_v = ra[tx.i0 * 3 + c] + (ra[tx.i1 * 3 + c] - ra[tx.i0 * 3 + c]) * tx.w1;
        const double bot_v = rb[tx.i0 * 3 + c] + (rb[tx.i1 * 3 + c] - rb[tx.i0 * 3 + c]) * tx.w1;
        const double v = top_v + (bot_v - top_v) * ty.w1;
        dst[x * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace plumewatch
