#ifndef RIDE_IMAGE_HPP
#define RIDE_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ride/random.hpp"

namespace ride {

// Real-valued grayscale grid, row-major. Intensities are nominally in [0,1)
// after dequantization but the container itself accepts any finite values;
// 8-bit sources are loaded as raw integers in [0,255].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // height * width, row-major

  Image() = default;
  Image(int h, int w, double fill = 0.0);

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * width + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * width + j]; }

  std::size_t pixel_count() const { return values.size(); }
  bool in_bounds(int i, int j) const {
    return i >= 0 && i < height && j >= 0 && j < width;
  }

  // Throws DomainError if sizes disagree or any value is non-finite.
  void validate() const;
};

// Decodes a binary P5 portable graymap (maxval 255 only) or an FGRD float
// grid. Format errors name the offending byte offset.
Image load_image(const std::vector<std::uint8_t>& bytes);
Image load_image_file(const std::filesystem::path& path);

// FGRD: "FGRD\n" "v1 <height> <width>\n" then height*width little-endian
// 32-bit floats, row-major. Canonical header, bit-exact roundtrip.
std::vector<std::uint8_t> save_fgrd(const Image& img);

// P5 with maxval 255; values must be integral in [0,255].
std::vector<std::uint8_t> save_pgm(const Image& img);

// Picks the format from the file extension: .pgm -> P5, anything else -> FGRD.
void save_image_file(const Image& img, const std::filesystem::path& path);

// Maps integer intensities v in [0,255] to (v + u)/256 with u ~ U[0,1) drawn
// independently per pixel.
Image dequantize(const Image& img8, RandomStream& rng);

// Rounds [0,1) intensities back to integer [0,255] for 8-bit output.
Image quantize(const Image& img);

// All side x side patches at the given stride, raster order over top-left
// corners; trailing remainders smaller than side are discarded.
std::vector<Image> extract_patches(const Image& img, int side, int stride);

}  // namespace ride

#endif  // RIDE_IMAGE_HPP
