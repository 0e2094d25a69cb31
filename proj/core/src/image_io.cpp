#include "shadowlane/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

namespace shadowlane {
namespace {

int read_header_int(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) throw std::runtime_error("malformed PNM header");
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  // exactly one whitespace byte separates maxval from the raster
  return value;
}

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_pnm(std::istream& in) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw std::runtime_error("not a binary PNM (P5/P6) stream");
  }
  const int channels = magic[1] == '6' ? 3 : 1;
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w <= 0 || h <= 0) throw std::runtime_error("PNM has empty dimensions");
  if (maxval != 255) throw std::runtime_error("only 8-bit PNM (maxval 255) is supported");
  Image img(w, h, channels);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw std::runtime_error("truncated PNM raster");
  }
  return img;
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_pnm(in);
}

void write_ppm(std::ostream& out, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_ppm expects 1 or 3 channels");
  }
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  if (img.channels == 3) {
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
  } else {
    std::string row(static_cast<std::size_t>(img.width) * 3, '\0');
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const char v = static_cast<char>(img.at(x, y));
        row[3 * x] = row[3 * x + 1] = row[3 * x + 2] = v;
      }
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw std::runtime_error("failed writing PPM");
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_ppm(out, img);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed decoding PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  png_set_expand(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = Image(w, h, 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = img.data.data() + img.index(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_png expects 1 or 3 channels");
  }
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed encoding PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.data.data() + img.index(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw std::invalid_argument("unsupported image extension: " + path.string());
}

void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return write_png(path, img);
  if (ext == ".ppm" || ext == ".pnm") return write_ppm(path, img);
  throw std::invalid_argument("unsupported image extension: " + path.string());
}

}  // namespace shadowlane
