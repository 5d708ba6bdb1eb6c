#include <cstdio>
#include <memory>

#include <png.h>

#include "diff3f/error.hpp"
#include "diff3f/png_io.hpp"

namespace diff3f {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::vector<png_byte> pack_row(const PngImage& image, int row) {
  const int values = image.width * image.channels;
  const int bytes = image.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> out(static_cast<std::size_t>(values) * bytes);
  for (int i = 0; i < values; ++i) {
    const std::uint16_t v = image.samples[static_cast<std::size_t>(row) * values + i];
    if (bytes == 2) {
      out[2 * i] = static_cast<png_byte>(v >> 8);  // PNG is big-endian
      out[2 * i + 1] = static_cast<png_byte>(v & 0xff);
    } else {
      out[i] = static_cast<png_byte>(v);
    }
  }
  return out;
}

}  // namespace

void write_png(const std::filesystem::path& path, const PngImage& image) {
  if ((image.channels != 1 && image.channels != 3) ||
      (image.bit_depth != 8 && image.bit_depth != 16) ||
      image.samples.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent PNG image description");
  }
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.height; ++r) {
    auto row = pack_row(image, r);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

PngImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIoError, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kUnreadableFile, "libpng failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  PngImage image;
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if ((color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB) ||
      (image.bit_depth != 8 && image.bit_depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kUnreadableFile, "unsupported PNG layout in " + path.string());
  }
  image.channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
  const std::size_t values = static_cast<std::size_t>(image.width) * image.channels;
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  image.samples.resize(values * image.height);
  for (int r = 0; r < image.height; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t i = 0; i < values; ++i) {
      image.samples[r * values + i] = image.bit_depth == 16
                                          ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                                          : row[i];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace diff3f
