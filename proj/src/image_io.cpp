#include "satin/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <csetjmp>
#include <cstring>
#include <vector>

#include <jpeglib.h>
#include <png.h>

namespace satin {

namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext;
}

Tensor from_rgb8(const std::vector<unsigned char>& rgb, int64_t h, int64_t w) {
  Tensor out({3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        out.at(c, y, x) = double(rgb[(y * w + x) * 3 + c]) / 255.0;
  return out;
}

Tensor load_png_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  check(fp != nullptr, "cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail("png decode failed for " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  int64_t w = png_get_image_width(png, info);
  int64_t h = png_get_image_height(png, info);
  std::vector<unsigned char> rgb(size_t(h * w * 3));
  std::vector<png_bytep> rows(static_cast<size_t>(h), nullptr);
  for (int64_t y = 0; y < h; ++y) rows[size_t(y)] = rgb.data() + y * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return from_rgb8(rgb, h, w);
}

Tensor load_jpeg_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  check(fp != nullptr, "cannot open " + path);
  jpeg_decompress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  int64_t w = cinfo.output_width, h = cinfo.output_height;
  std::vector<unsigned char> rgb(size_t(h * w * 3));
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = rgb.data() + int64_t(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);
  return from_rgb8(rgb, h, w);
}

}  // namespace

Tensor load_image(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == "png") return load_png_file(path);
  if (ext == "jpg" || ext == "jpeg") return load_jpeg_file(path);
  fail("unsupported image extension: " + path);
}

void save_png(const std::string& path, const Tensor& img) {
  check(img.rank() == 3 && img.extent(0) == 3, "save_png: expected (3,H,W)");
  int64_t h = img.extent(1), w = img.extent(2);
  FILE* fp = std::fopen(path.c_str(), "wb");
  check(fp != nullptr, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail("png encode failed for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(size_t(w * 3));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        row[size_t(x * 3 + c)] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace satin
