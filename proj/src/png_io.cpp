#include "donn/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "donn/error.hpp"

namespace donn {
namespace {

struct MemoryReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (src->pos + length > src->size) png_error(png, "unexpected end of data");
  std::memcpy(out, src->data + src->pos, length);
  src->pos += length;
}

struct ErrorSlot {
  char message[256] = "";
};

void on_error(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  std::snprintf(slot->message, sizeof(slot->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// All C++ objects live outside the setjmp region; libpng errors longjmp back here.
bool decode(const std::vector<unsigned char>& bytes, RasterImage& out, std::vector<png_bytep>& rows,
            ErrorSlot& err) {
  MemoryReader reader{bytes.data(), bytes.size(), 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);

  // Read into a byte buffer carved out of `out.samples` storage.
  out.samples.assign((rowbytes * out.height + 1) / 2 + 1, 0);
  auto* base = reinterpret_cast<unsigned char*>(out.samples.data());
  rows.resize(out.height);
  for (std::size_t r = 0; r < out.height; ++r) rows[r] = base + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

}  // namespace

RasterImage read_png(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  RasterImage raw;
  std::vector<png_bytep> rows;
  ErrorSlot err;
  if (!decode(bytes, raw, rows, err)) throw IoError(path.string() + ": " + err.message);

  RasterImage img;
  img.width = raw.width;
  img.height = raw.height;
  img.channels = raw.channels;
  img.bit_depth = raw.bit_depth;
  const std::size_t count = img.width * img.height * static_cast<std::size_t>(img.channels);
  img.samples.resize(count);
  if (raw.bit_depth == 16) {
    std::memcpy(img.samples.data(), raw.samples.data(), count * sizeof(std::uint16_t));
  } else {
    const auto* bytes8 = reinterpret_cast<const unsigned char*>(raw.samples.data());
    for (std::size_t i = 0; i < count; ++i) img.samples[i] = bytes8[i];
  }
  return img;
}

PngInfo probe_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  unsigned char head[24];
  in.read(reinterpret_cast<char*>(head), sizeof(head));
  if (in.gcount() != sizeof(head) || png_sig_cmp(head, 0, 8) != 0 || std::memcmp(head + 12, "IHDR", 4) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  auto be32 = [](const unsigned char* p) {
    return (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) | (std::size_t{p[2]} << 8) | std::size_t{p[3]};
  };
  return {be32(head + 16), be32(head + 20)};
}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               std::span<const std::uint8_t> pixels) {
  if (channels != 1 && channels != 3) throw UsageError("write_png: channels must be 1 or 3");
  if (pixels.size() != width * height * static_cast<std::size_t>(channels)) {
    throw DimensionError("write_png: pixel buffer size mismatch");
  }
  std::vector<png_bytep> rows(height);
  for (std::size_t r = 0; r < height; ++r) {
    rows[r] = const_cast<png_bytep>(pixels.data() + r * width * static_cast<std::size_t>(channels));
  }
  const std::string name = path.string();
  ErrorSlot err;

  FILE* fp = std::fopen(name.c_str(), "wb");
  if (!fp) throw IoError("cannot write " + name);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  volatile bool ok = png && info;
  if (ok) {
    if (setjmp(png_jmpbuf(png))) {
      ok = false;
    } else {
      png_init_io(png, fp);
      png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                   channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                   PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
      png_write_info(png, info);
      png_write_image(png, rows.data());
      png_write_end(png, nullptr);
    }
  }
  png_destroy_write_struct(&png, &info);
  const bool closed = std::fclose(fp) == 0;
  if (!ok || !closed) throw IoError("failed writing " + name + (err.message[0] ? std::string(": ") + err.message : ""));
}

}  // namespace donn
