#include "rim/png_writer.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "rim/binary_io.hpp"
#include "rim/error.hpp"

namespace rim {

void write_png(const std::filesystem::path& path, const RealImage& img, double lo, double hi) {
  if (img.height == 0 || img.width == 0) throw_error(ErrorKind::InvalidShape, "cannot write an empty image");
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw_error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw_error(ErrorKind::Io, "libpng initialization failed");
  }
  std::vector<png_byte> row(img.width);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw_error(ErrorKind::Io, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double v = std::clamp((img(r, c) - lo) / span, 0.0, 1.0);
      row[c] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png(const std::filesystem::path& path, const RealImage& img) {
  const double hi = img.data.empty() ? 1.0 : *std::max_element(img.data.begin(), img.data.end());
  write_png(path, img, 0.0, hi);
}

void write_float_dump(const std::filesystem::path& path, const RealImage& img) {
  io::ByteWriter w;
  w.bytes("RIMF");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(img.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(img.width));
  for (double v : img.data) w.put<double>(v);
  io::write_file(path, w.buffer());
}

RealImage read_float_dump(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes);
  r.expect_magic("RIMF");
  const std::size_t h = r.get<std::uint32_t>("height");
  const std::size_t w = r.get<std::uint32_t>("width");
  RealImage img(h, w);
  for (auto& v : img.data) v = r.get<double>("pixel");
  r.expect_end();
  return img;
}

}  // namespace rim
