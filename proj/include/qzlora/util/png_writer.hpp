#pragma once

#include "qzlora/util/digest.hpp"

#include <cstdint>
#include <span>

namespace qzlora {

/// Encodes 8-bit RGB pixels (row-major, width*height*3 bytes) as PNG.
Bytes encode_png_rgb(std::span<const std::uint8_t> rgb, std::uint32_t width, std::uint32_t height);

/// Seed-keyed RGB noise. Same (seed, width, height) gives the same bytes.
Bytes render_noise_png(std::uint64_t seed, std::uint32_t width, std::uint32_t height);

}  // namespace qzlora
