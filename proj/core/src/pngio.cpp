#include "panoweave/pngio.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "panoweave/errors.hpp"
#include "panoweave/ntf.hpp"

namespace panoweave {

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void flush_noop(png_structp) {}

struct Reader {
  const std::string* bytes;
  std::size_t pos;
};

void read_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* r = static_cast<Reader*>(png_get_io_ptr(png));
  if (r->pos + len > r->bytes->size()) {
    png_error(png, "unexpected end of PNG stream");
  }
  std::memcpy(data, r->bytes->data() + r->pos, len);
  r->pos += len;
}

void encode_png(const std::vector<png_byte>& rows_flat, int width, int height,
                int bit_depth, int color_type, std::size_t row_bytes,
                const std::string& path) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (!png) throw DataError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png encode failed: " + path);
  }
  png_set_write_fn(png, &out, append_bytes, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(rows_flat.data() + y * row_bytes);
  }
  png_write_image(png, row_ptrs.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  atomic_write_file(path, out);
}

struct Decoded {
  std::vector<png_byte> rows;
  int width = 0;
  int height = 0;
  std::size_t row_bytes = 0;
};

Decoded decode_png(const std::string& path, int want_color_type,
                   int want_depth) {
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open PNG: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes = std::move(ss).str();
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  if (!png) throw DataError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png decode failed: " + path);
  }
  Reader reader{&bytes, 0};
  png_set_read_fn(png, &reader, read_bytes);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != want_color_type ||
      png_get_bit_depth(png, info) != want_depth) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unexpected PNG pixel format: " + path);
  }
  Decoded d;
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.row_bytes = png_get_rowbytes(png, info);
  d.rows.resize(d.row_bytes * d.height);
  std::vector<png_bytep> row_ptrs(d.height);
  for (int y = 0; y < d.height; ++y) {
    row_ptrs[y] = d.rows.data() + y * d.row_bytes;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, info);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

png_byte quantize8(double v) {
  const double s = std::lround(v * 255.0);
  if (s < 0.0) return 0;
  if (s > 255.0) return 255;
  return static_cast<png_byte>(s);
}

}  // namespace

void png_write_rgb(const Tensor& t, const std::string& path) {
  if (t.channels() != 3) throw ShapeError("png_write_rgb expects 3 channels");
  const std::size_t row_bytes = static_cast<std::size_t>(t.width()) * 3;
  std::vector<png_byte> rows(row_bytes * t.height());
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        rows[y * row_bytes + x * 3 + c] = quantize8(t.at(c, y, x));
      }
    }
  }
  encode_png(rows, t.width(), t.height(), 8, PNG_COLOR_TYPE_RGB, row_bytes, path);
}

Tensor png_read_rgb(const std::string& path) {
  Decoded d = decode_png(path, PNG_COLOR_TYPE_RGB, 8);
  Tensor t(3, d.height, d.width);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.at(c, y, x) = d.rows[y * d.row_bytes + x * 3 + c] / 255.0;
      }
    }
  }
  return t;
}

void png_write_gray16_mm(const Tensor& t, const std::string& path) {
  if (t.channels() != 1) throw ShapeError("png_write_gray16_mm expects 1 channel");
  const std::size_t row_bytes = static_cast<std::size_t>(t.width()) * 2;
  std::vector<png_byte> rows(row_bytes * t.height());
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      double mm = std::lround(t.at(0, y, x) * 1000.0);
      if (mm < 0.0) mm = 0.0;
      if (mm > 65535.0) mm = 65535.0;
      const auto q = static_cast<std::uint16_t>(mm);
      rows[y * row_bytes + x * 2] = static_cast<png_byte>(q >> 8);
      rows[y * row_bytes + x * 2 + 1] = static_cast<png_byte>(q & 0xff);
    }
  }
  encode_png(rows, t.width(), t.height(), 16, PNG_COLOR_TYPE_GRAY, row_bytes, path);
}

Tensor png_read_gray16_mm(const std::string& path) {
  Decoded d = decode_png(path, PNG_COLOR_TYPE_GRAY, 16);
  Tensor t(1, d.height, d.width);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const std::uint16_t hi = d.rows[y * d.row_bytes + x * 2];
      const std::uint16_t lo = d.rows[y * d.row_bytes + x * 2 + 1];
      t.at(0, y, x) = ((hi << 8) | lo) / 1000.0;
    }
  }
  return t;
}

}  // namespace panoweave
