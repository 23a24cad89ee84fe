#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "iqaforge/rng.hpp"

namespace iqaforge {

// Decoded 8-bit sRGB raster, row-major, three interleaved channels.
class PixelImage {
 public:
  PixelImage() = default;
  PixelImage(int width, int height);
  PixelImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(int x, int y, int c) const noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::uint8_t& at(int x, int y, int c) noexcept {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  friend bool operator==(const PixelImage&, const PixelImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Rounds half-to-even and clamps into [0, 255].
std::uint8_t to_u8(float value) noexcept;
std::uint8_t to_u8(double value) noexcept;

enum class ImageFormat { Png, Jpeg };

ImageFormat format_from_path(const std::filesystem::path& path);

PixelImage decode(std::span<const std::uint8_t> bytes, ImageFormat format);
// quality is 1..100 for JPEG and ignored for PNG.
std::vector<std::uint8_t> encode(const PixelImage& img, ImageFormat format, int quality = 90);

PixelImage read_image(const std::filesystem::path& path);
void write_image(const PixelImage& img, const std::filesystem::path& path, int quality = 90);

// Identifies the codec builds that produced encoded bytes.
std::string_view jpeg_codec_version();
std::string_view png_codec_version();

// Bilinear with half-pixel-center sampling and edge clamping.
PixelImage resize_bilinear(const PixelImage& img, int new_width, int new_height);
// Resizes so the shorter side equals target, preserving aspect ratio.
PixelImage resize_shorter_side(const PixelImage& img, int target);
// Resizes so the longer side equals target, preserving aspect ratio.
PixelImage resize_longer_side(const PixelImage& img, int target);

PixelImage crop(const PixelImage& img, int x0, int y0, int crop_width, int crop_height);
PixelImage center_crop(const PixelImage& img, int crop_width, int crop_height);
PixelImage random_crop(const PixelImage& img, int crop_width, int crop_height, Rng& rng);
PixelImage hflip(const PixelImage& img);

}  // namespace iqaforge
