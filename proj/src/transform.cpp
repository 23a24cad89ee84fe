#include <algorithm>
#include <cmath>
#include <string>

#include "iqaforge/error.hpp"
#include "iqaforge/image.hpp"

namespace iqaforge {

PixelImage::PixelImage(int width, int height)
    : PixelImage(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                          static_cast<std::size_t>(std::max(height, 0)) * 3)) {}

PixelImage::PixelImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    fail(ErrorCode::InvalidArgument,
         "image dimensions must be >= 1, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
    fail(ErrorCode::InvalidArgument, "pixel buffer length does not match width*height*3");
  }
}

std::uint8_t to_u8(float value) noexcept {
  if (!(value > 0.0f)) return 0;
  if (value >= 255.0f) return 255;
  return static_cast<std::uint8_t>(std::nearbyint(value));
}

std::uint8_t to_u8(double value) noexcept {
  if (!(value > 0.0)) return 0;
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::nearbyint(value));
}

namespace {

struct Tap {
  int i0;
  int i1;
  float frac;
};

std::vector<Tap> bilinear_taps(int in_size, int out_size) {
  std::vector<Tap> taps(static_cast<std::size_t>(out_size));
  const float scale = static_cast<float>(in_size) / static_cast<float>(out_size);
  for (int o = 0; o < out_size; ++o) {
    float src = (static_cast<float>(o) + 0.5f) * scale - 0.5f;
    src = std::clamp(src, 0.0f, static_cast<float>(in_size - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in_size - 1);
    taps[static_cast<std::size_t>(o)] = {i0, i1, src - static_cast<float>(i0)};
  }
  return taps;
}

int scaled_side(int side, int num, int den) {
  const long long v = (static_cast<long long>(side) * num * 2 + den) / (2LL * den);
  return static_cast<int>(std::max(1LL, v));
}

}  // namespace

PixelImage resize_bilinear(const PixelImage& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) {
    fail(ErrorCode::InvalidArgument, "resize target must be >= 1 in both dimensions");
  }
  if (new_width == img.width() && new_height == img.height()) return img;

  const auto xt = bilinear_taps(img.width(), new_width);
  const auto yt = bilinear_taps(img.height(), new_height);
  PixelImage out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const Tap& ty = yt[static_cast<std::size_t>(y)];
    for (int x = 0; x < new_width; ++x) {
      const Tap& tx = xt[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        const float p00 = img.at(tx.i0, ty.i0, c);
        const float p10 = img.at(tx.i1, ty.i0, c);
        const float p01 = img.at(tx.i0, ty.i1, c);
        const float p11 = img.at(tx.i1, ty.i1, c);
        const float top = p00 + (p10 - p00) * tx.frac;
        const float bottom = p01 + (p11 - p01) * tx.frac;
        out.at(x, y, c) = to_u8(top + (bottom - top) * ty.frac);
      }
    }
  }
  return out;
}

PixelImage resize_shorter_side(const PixelImage& img, int target) {
  if (target < 1) fail(ErrorCode::InvalidArgument, "resize target must be >= 1");
  if (img.width() <= img.height()) {
    return resize_bilinear(img, target, scaled_side(img.height(), target, img.width()));
  }
  return resize_bilinear(img, scaled_side(img.width(), target, img.height()), target);
}

PixelImage resize_longer_side(const PixelImage& img, int target) {
  if (target < 1) fail(ErrorCode::InvalidArgument, "resize target must be >= 1");
  if (img.width() >= img.height()) {
    return resize_bilinear(img, target, scaled_side(img.height(), target, img.width()));
  }
  return resize_bilinear(img, scaled_side(img.width(), target, img.height()), target);
}

PixelImage crop(const PixelImage& img, int x0, int y0, int crop_width, int crop_height) {
  if (crop_width < 1 || crop_height < 1) fail(ErrorCode::InvalidArgument, "crop dimensions must be >= 1");
  if (crop_width > img.width() || crop_height > img.height()) {
    fail(ErrorCode::CropLargerThanImage, std::to_string(crop_width) + "x" + std::to_string(crop_height) +
                                             " crop from " + std::to_string(img.width()) + "x" +
                                             std::to_string(img.height()) + " image");
  }
  if (x0 < 0 || y0 < 0 || x0 + crop_width > img.width() || y0 + crop_height > img.height()) {
    fail(ErrorCode::InvalidArgument, "crop window outside image");
  }
  PixelImage out(crop_width, crop_height);
  const auto src = img.pixels();
  auto dst = out.pixels();
  const std::size_t row_bytes = static_cast<std::size_t>(crop_width) * 3;
  for (int y = 0; y < crop_height; ++y) {
    const auto* from = src.data() + (static_cast<std::size_t>(y0 + y) * img.width() + x0) * 3;
    std::copy_n(from, row_bytes, dst.data() + static_cast<std::size_t>(y) * row_bytes);
  }
  return out;
}

PixelImage center_crop(const PixelImage& img, int crop_width, int crop_height) {
  if (crop_width > img.width() || crop_height > img.height()) return crop(img, 0, 0, crop_width, crop_height);
  return crop(img, (img.width() - crop_width) / 2, (img.height() - crop_height) / 2, crop_width, crop_height);
}

PixelImage random_crop(const PixelImage& img, int crop_width, int crop_height, Rng& rng) {
  if (crop_width > img.width() || crop_height > img.height()) return crop(img, 0, 0, crop_width, crop_height);
  const auto x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width() - crop_width + 1)));
  const auto y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height() - crop_height + 1)));
  return crop(img, x0, y0, crop_width, crop_height);
}

PixelImage hflip(const PixelImage& img) {
  PixelImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

}  // namespace iqaforge
