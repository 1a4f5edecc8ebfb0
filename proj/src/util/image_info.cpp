#include "qzlora/util/image_info.hpp"

namespace qzlora {
namespace {

std::uint32_t be16(std::string_view b, std::size_t at) {
  return (std::uint32_t(std::uint8_t(b[at])) << 8) | std::uint8_t(b[at + 1]);
}

std::uint32_t be32(std::string_view b, std::size_t at) {
  return (be16(b, at) << 16) | be16(b, at + 2);
}

std::uint32_t le16(std::string_view b, std::size_t at) {
  return std::uint8_t(b[at]) | (std::uint32_t(std::uint8_t(b[at + 1])) << 8);
}

std::uint32_t le24(std::string_view b, std::size_t at) {
  return le16(b, at) | (std::uint32_t(std::uint8_t(b[at + 2])) << 16);
}

std::optional<ImageInfo> sniff_png(std::string_view b) {
  static constexpr std::string_view kSig("\x89PNG\r\n\x1a\n", 8);
  if (b.size() < 24 || b.substr(0, 8) != kSig || b.substr(12, 4) != "IHDR") return std::nullopt;
  return ImageInfo{ImageFormat::Png, be32(b, 16), be32(b, 20)};
}

std::optional<ImageInfo> sniff_jpeg(std::string_view b) {
  if (b.size() < 4 || std::uint8_t(b[0]) != 0xFF || std::uint8_t(b[1]) != 0xD8) return std::nullopt;
  std::size_t pos = 2;
  while (pos + 4 <= b.size()) {
    if (std::uint8_t(b[pos]) != 0xFF) return std::nullopt;
    const std::uint8_t marker = std::uint8_t(b[pos + 1]);
    if (marker == 0xFF) {  // fill byte
      ++pos;
      continue;
    }
    if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
      pos += 2;
      continue;
    }
    if (marker == 0xD9 || marker == 0xDA) return std::nullopt;  // no frame header before scan
    const std::uint32_t len = be16(b, pos + 2);
    if (len < 2) return std::nullopt;
    const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                     marker != 0xCC;
    if (sof) {
      if (pos + 9 > b.size()) return std::nullopt;
      return ImageInfo{ImageFormat::Jpeg, be16(b, pos + 7), be16(b, pos + 5)};
    }
    pos += 2 + len;
  }
  return std::nullopt;
}

std::optional<ImageInfo> sniff_webp(std::string_view b) {
  if (b.size() < 30 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WEBP") return std::nullopt;
  const std::string_view chunk = b.substr(12, 4);
  if (chunk == "VP8 ") {
    // Keyframe start code 9d 01 2a, then 14-bit dimensions.
    if (std::uint8_t(b[23]) != 0x9d || std::uint8_t(b[24]) != 0x01 || std::uint8_t(b[25]) != 0x2a)
      return std::nullopt;
    return ImageInfo{ImageFormat::WebP, le16(b, 26) & 0x3fff, le16(b, 28) & 0x3fff};
  }
  if (chunk == "VP8L") {
    if (std::uint8_t(b[20]) != 0x2f) return std::nullopt;
    const std::uint32_t bits = le16(b, 21) | (le16(b, 23) << 16);
    return ImageInfo{ImageFormat::WebP, (bits & 0x3fff) + 1, ((bits >> 14) & 0x3fff) + 1};
  }
  if (chunk == "VP8X") {
    return ImageInfo{ImageFormat::WebP, le24(b, 24) + 1, le24(b, 27) + 1};
  }
  return std::nullopt;
}

}  // namespace

std::optional<ImageInfo> sniff_image(std::string_view bytes) {
  std::optional<ImageInfo> info = sniff_png(bytes);
  if (!info) info = sniff_jpeg(bytes);
  if (!info) info = sniff_webp(bytes);
  if (info && (info->width == 0 || info->height == 0)) return std::nullopt;
  return info;
}

std::string_view extension(ImageFormat format) {
  switch (format) {
    case ImageFormat::Png: return "png";
    case ImageFormat::Jpeg: return "jpg";
    case ImageFormat::WebP: return "webp";
  }
  return "bin";
}

std::string_view media_type(ImageFormat format) {
  switch (format) {
    case ImageFormat::Png: return "image/png";
    case ImageFormat::Jpeg: return "image/jpeg";
    case ImageFormat::WebP: return "image/webp";
  }
  return "application/octet-stream";
}

}  // namespace qzlora
