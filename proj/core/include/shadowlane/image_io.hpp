// Binary PNM (P5/P6) and PNG raster I/O.
#pragma once

#include <filesystem>
#include <iosfwd>

#include "shadowlane/raster.hpp"

namespace shadowlane {

/// Reads a binary PGM (P5) or PPM (P6) with maxval 255.
Image read_pnm(std::istream& in);
Image read_pnm(const std::filesystem::path& path);

/// Writes P6 for 3-channel images. Single-channel images are expanded to P6
/// so that every output is a colour PPM.
void write_ppm(std::ostream& out, const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

/// Dispatches on extension: .ppm/.pgm/.pnm or .png.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

}  // namespace shadowlane
