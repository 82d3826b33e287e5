#pragma once

#include <filesystem>
#include <string>

#include "segarena/types.hpp"

namespace segarena {

/// Binary mask files are 8-bit single-channel PGM (P5): 0 background,
/// 255 foreground. Images are 8-bit PPM (P6). Rendered images only take
/// values on the 1/255 grid, so a write/read round trip is exact.

void write_mask_pgm(const MaskGrid& mask, const std::filesystem::path& path);
MaskGrid read_mask_pgm(const std::filesystem::path& path);

void write_image_ppm(const Image& image, const std::filesystem::path& path);
Image read_image_ppm(const std::filesystem::path& path);

/// Quantize one intensity to the nearest 8-bit level.
inline std::uint8_t to_byte(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(c * 255.0 + 0.5);
}

inline double from_byte(std::uint8_t b) { return b / 255.0; }

/// Snap every channel to the 8-bit grid; applied at render time so in-memory
/// images and their files agree bit for bit.
void quantize_image(Image& image);

}  // namespace segarena
