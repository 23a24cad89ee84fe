#pragma once

#include <array>
#include <string_view>

#include "iqaforge/image.hpp"

namespace iqaforge {

inline constexpr std::size_t kFeatureDim = 34;
inline constexpr std::string_view kFeatureExtractorVersion = "iqaforge-nss-features/1";
inline constexpr int kMinFeatureSide = 32;

using FeatureVector = std::array<double, kFeatureDim>;

// Slot layout.
namespace feature_slot {
inline constexpr std::size_t kMscn = 0;  // mean, var, skew, kurt at scale 1 then scale 2
inline constexpr std::size_t kGradientMean = 8;
inline constexpr std::size_t kGradientVar = 9;
inline constexpr std::size_t kLaplacianVar = 10;
inline constexpr std::size_t kBlockinessH = 11;
inline constexpr std::size_t kBlockinessV = 12;
inline constexpr std::size_t kChannelMean = 13;  // R, G, B
inline constexpr std::size_t kChannelStd = 16;   // R, G, B
inline constexpr std::size_t kSaturationMean = 19;
inline constexpr std::size_t kSaturationStd = 20;
inline constexpr std::size_t kLumaP5 = 21;
inline constexpr std::size_t kLumaP50 = 22;
inline constexpr std::size_t kLumaP95 = 23;
inline constexpr std::size_t kRmsContrast = 24;
inline constexpr std::size_t kColorfulness = 25;
inline constexpr std::size_t kReserved = 26;  // 8 zero slots
}  // namespace feature_slot

std::string_view feature_name(std::size_t slot) noexcept;

// Flip-invariant natural-scene and colour statistics of the image. Throws
// ImageTooSmall below 32x32.
FeatureVector extract_features(const PixelImage& img);

}  // namespace iqaforge
