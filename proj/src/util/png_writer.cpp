#include "qzlora/util/png_writer.hpp"

#include "qzlora/util/rng.hpp"

#include <png.h>

#include <cstring>
#include <stdexcept>
#include <vector>

namespace qzlora {

Bytes encode_png_rgb(std::span<const std::uint8_t> rgb, std::uint32_t width, std::uint32_t height) {
  if (rgb.size() != std::size_t(width) * height * 3) {
    throw std::invalid_argument("encode_png_rgb: pixel buffer size mismatch");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = width;
  image.height = height;
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png sizing failed: ") + image.message);
  }
  Bytes out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Bytes render_noise_png(std::uint64_t seed, std::uint32_t width, std::uint32_t height) {
  std::vector<std::uint8_t> rgb(std::size_t(width) * height * 3);
  CounterRng rng(seed);
  for (std::size_t i = 0; i < rgb.size(); i += 8) {
    std::uint64_t word = rng.next();
    for (std::size_t j = i; j < std::min(rgb.size(), i + 8); ++j) {
      rgb[j] = std::uint8_t(word & 0xff);
      word >>= 8;
    }
  }
  return encode_png_rgb(rgb, width, height);
}

}  // namespace qzlora
