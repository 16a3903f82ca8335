#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spdhg/image.hpp"

namespace spdhg {

struct ImageMeta {
  Index rows = 0;
  Index cols = 0;
  double min = 0.0;
  double max = 0.0;
};

/// Writes the magnitude of `image` as <stem>.f32 (raw little-endian float32,
/// row-major) with a <stem>.meta sidecar, and as an 8-bit binary PGM
/// <stem>.pgm scaled so the largest magnitude maps to 255.
void write_image(const ComplexImage& image, const std::filesystem::path& stem);

std::vector<float> read_f32(const std::filesystem::path& path);
ImageMeta read_meta(const std::filesystem::path& path);
/// Pixel bytes of a P5 graymap; the dimensions are returned through meta.
std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path, ImageMeta* meta = nullptr);

}  // namespace spdhg
