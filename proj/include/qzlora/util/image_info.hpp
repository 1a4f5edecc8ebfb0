#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace qzlora {

enum class ImageFormat { Png, Jpeg, WebP };

struct ImageInfo {
  ImageFormat format;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

/// Identifies PNG, JPEG and WebP payloads from their headers and reads the
/// pixel dimensions. Returns nullopt for anything else or truncated data.
std::optional<ImageInfo> sniff_image(std::string_view bytes);

std::string_view extension(ImageFormat format);
std::string_view media_type(ImageFormat format);

}  // namespace qzlora
