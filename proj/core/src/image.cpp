#include "ride/image.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ride/errors.hpp"

namespace ride {

namespace {

bool is_pnm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

[[noreturn]] void format_fail(const std::string& what, std::size_t offset) {
  throw FormatError(what + " at byte offset " + std::to_string(offset));
}

// Reads a decimal integer token, skipping PNM whitespace and '#' comments.
long read_pnm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (is_pnm_space(bytes[pos])) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size()) format_fail("unexpected end of header", pos);
  if (bytes[pos] < '0' || bytes[pos] > '9') format_fail("expected integer", pos);
  long value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > std::numeric_limits<int>::max()) format_fail("integer overflow", pos);
    ++pos;
  }
  return value;
}

Image load_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 2;  // past "P5"
  const long width = read_pnm_int(bytes, pos);
  const long height = read_pnm_int(bytes, pos);
  const long maxval = read_pnm_int(bytes, pos);
  if (width <= 0 || height <= 0) format_fail("non-positive dimensions", pos);
  if (maxval != 255) format_fail("unsupported max-value " + std::to_string(maxval), pos);
  if (pos >= bytes.size() || !is_pnm_space(bytes[pos])) {
    format_fail("missing whitespace after max-value", pos);
  }
  ++pos;  // exactly one whitespace byte before the raster
  const std::size_t npix = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < npix) format_fail("truncated pixel payload", bytes.size());
  Image img(static_cast<int>(height), static_cast<int>(width));
  for (std::size_t k = 0; k < npix; ++k) {
    img.values[k] = static_cast<double>(bytes[pos + k]);
  }
  return img;
}

Image load_fgrd(const std::vector<std::uint8_t>& bytes) {
  // Strict canonical header: "FGRD\n" then "v1 <height> <width>\n".
  std::size_t pos = 5;  // past "FGRD\n"
  auto expect = [&](const char* token) {
    const std::size_t len = std::strlen(token);
    if (bytes.size() - pos < len || std::memcmp(bytes.data() + pos, token, len) != 0) {
      format_fail(std::string("expected \"") + token + "\"", pos);
    }
    pos += len;
  };
  expect("v1 ");
  auto read_int = [&]() {
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      format_fail("expected integer", pos);
    }
    long value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      value = value * 10 + (bytes[pos] - '0');
      if (value > std::numeric_limits<int>::max()) format_fail("integer overflow", pos);
      ++pos;
    }
    return value;
  };
  const long height = read_int();
  expect(" ");
  const long width = read_int();
  expect("\n");
  if (height <= 0 || width <= 0) format_fail("non-positive dimensions", pos);
  const std::size_t npix = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  if ((bytes.size() - pos) < npix * 4) format_fail("truncated float payload", bytes.size());
  if ((bytes.size() - pos) > npix * 4) format_fail("trailing bytes after payload", pos + npix * 4);
  Image img(static_cast<int>(height), static_cast<int>(width));
  for (std::size_t k = 0; k < npix; ++k) {
    std::uint32_t u = static_cast<std::uint32_t>(bytes[pos + 4 * k]) |
                      static_cast<std::uint32_t>(bytes[pos + 4 * k + 1]) << 8 |
                      static_cast<std::uint32_t>(bytes[pos + 4 * k + 2]) << 16 |
                      static_cast<std::uint32_t>(bytes[pos + 4 * k + 3]) << 24;
    float f;
    std::memcpy(&f, &u, 4);
    if (!std::isfinite(f)) format_fail("non-finite pixel value", pos + 4 * k);
    img.values[k] = static_cast<double>(f);
  }
  return img;
}

}  // namespace

Image::Image(int h, int w, double fill) : height(h), width(w) {
  if (h <= 0 || w <= 0) {
    throw DomainError("image dimensions must be positive, got " + std::to_string(h) + "x" +
                      std::to_string(w));
  }
  values.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill);
}

void Image::validate() const {
  if (height <= 0 || width <= 0) throw DomainError("image dimensions must be positive");
  if (values.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw DomainError("image value count does not match height*width");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("image contains non-finite value");
  }
}

Image load_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pgm(bytes);
  if (bytes.size() >= 5 && std::memcmp(bytes.data(), "FGRD\n", 5) == 0) return load_fgrd(bytes);
  format_fail("unrecognized image magic", 0);
}

Image load_image_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_image(bytes);
}

std::vector<std::uint8_t> save_fgrd(const Image& img) {
  img.validate();
  std::string header = "FGRD\nv1 " + std::to_string(img.height) + " " +
                       std::to_string(img.width) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.values.size() * 4);
  for (double v : img.values) {
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    out.push_back(static_cast<std::uint8_t>(u & 0xff));
    out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> save_pgm(const Image& img) {
  img.validate();
  std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                       "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.values.size());
  for (double v : img.values) {
    if (v != std::floor(v) || v < 0.0 || v > 255.0) {
      throw DomainError("P5 output requires integral values in [0,255], got " +
                        std::to_string(v));
    }
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

void save_image_file(const Image& img, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes =
      path.extension() == ".pgm" ? save_pgm(img) : save_fgrd(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open output file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

Image dequantize(const Image& img8, RandomStream& rng) {
  img8.validate();
  Image out(img8.height, img8.width);
  for (std::size_t k = 0; k < img8.values.size(); ++k) {
    const double v = img8.values[k];
    if (v != std::floor(v) || v < 0.0 || v > 255.0) {
      throw DomainError("dequantize requires integral values in [0,255], got " +
                        std::to_string(v));
    }
    out.values[k] = (v + rng.uniform()) / 256.0;
  }
  return out;
}

Image quantize(const Image& img) {
  img.validate();
  Image out(img.height, img.width);
  for (std::size_t k = 0; k < img.values.size(); ++k) {
    double v = std::floor(img.values[k] * 256.0);
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    out.values[k] = v;
  }
  return out;
}

std::vector<Image> extract_patches(const Image& img, int side, int stride) {
  img.validate();
  if (side <= 0 || stride <= 0) throw DomainError("patch side and stride must be positive");
  if (side > img.height || side > img.width) {
    throw DomainError("patch side " + std::to_string(side) + " exceeds image size " +
                      std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  std::vector<Image> patches;
  for (int i = 0; i + side <= img.height; i += stride) {
    for (int j = 0; j + side <= img.width; j += stride) {
      Image patch(side, side);
      for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
          patch.at(r, c) = img.at(i + r, j + c);
        }
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

}  // namespace ride
