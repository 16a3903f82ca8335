#include "spdhg/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spdhg {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return in;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void write_image(const ComplexImage& image, const std::filesystem::path& stem) {
  const Eigen::VectorXd mag = image.data.cwiseAbs();
  const double lo = mag.size() ? mag.minCoeff() : 0.0;
  const double hi = mag.size() ? mag.maxCoeff() : 0.0;

  {
    const auto path = with_suffix(stem, ".f32");
    auto out = open_out(path);
    for (Index i = 0; i < mag.size(); ++i) {
      const float f = static_cast<float>(mag[i]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  {
    const auto path = with_suffix(stem, ".meta");
    auto out = open_out(path);
    out.precision(17);
    out << "rows " << image.shape.rows << "\ncols " << image.shape.cols << "\nmin " << lo
        << "\nmax " << hi << "\ndtype float32_le\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  {
    const auto path = with_suffix(stem, ".pgm");
    auto out = open_out(path);
    out << "P5\n" << image.shape.cols << " " << image.shape.rows << "\n255\n";
    for (Index i = 0; i < mag.size(); ++i) {
      const double v = hi > 0.0 ? std::round(255.0 * mag[i] / hi) : 0.0;
      const auto byte = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      out.put(static_cast<char>(byte));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
}

std::vector<float> read_f32(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<float> out;
  std::uint32_t bits;
  while (in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    out.push_back(f);
  }
  return out;
}

ImageMeta read_meta(const std::filesystem::path& path) {
  auto in = open_in(path);
  ImageMeta meta;
  std::string key;
  while (in >> key) {
    if (key == "rows") in >> meta.rows;
    else if (key == "cols") in >> meta.cols;
    else if (key == "min") in >> meta.min;
    else if (key == "max") in >> meta.max;
    else in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return meta;
}

std::vector<std::uint8_t> read_pgm(const std::filesystem::path& path, ImageMeta* meta) {
  auto in = open_in(path);
  std::string magic;
  Index cols = 0, rows = 0;
  int maxval = 0;
  in >> magic >> cols >> rows >> maxval;
  if (magic != "P5" || maxval != 255) throw std::runtime_error(path.string() + ": not an 8-bit P5 graymap");
  in.get();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
  if (meta) {
    meta->rows = rows;
    meta->cols = cols;
  }
  return pixels;
}

}  // namespace spdhg
