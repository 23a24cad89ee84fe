#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iqaforge/image.hpp"

namespace iqaforge {

enum class DistortionFamily { JpegCompression, GaussianBlur, Pixelation, Sharpen, Brightness, Color, Contrast };

inline constexpr int kDistortionFamilyCount = 7;

// Short, stable token used in manifests and ladder files ("jpeg", "blur", ...).
std::string_view family_token(DistortionFamily family) noexcept;
std::optional<DistortionFamily> parse_family(std::string_view token) noexcept;

struct DistortionSpec {
  DistortionFamily family = DistortionFamily::JpegCompression;
  int level = 1;  // 1-based within the family
  double parameter = 0.0;

  friend bool operator==(const DistortionSpec&, const DistortionSpec&) = default;
};

// Throws InvalidSpec when the parameter is outside the family's domain.
void validate(const DistortionSpec& spec);

struct DistortionLadder {
  std::vector<DistortionSpec> entries;

  // JPEG q{40,20,7}, blur sigma{3}, pixelation{8,16}, sharpen{1,2,4},
  // brightness{1.4,1.8,0.7,0.4}, color{0.4,0.1}, contrast{0.5,1.8,0.3}.
  static DistortionLadder standard();

  std::size_t size() const noexcept { return entries.size(); }
  std::size_t count(DistortionFamily family) const noexcept;
};

// Ladder file: CSV with header `family,level,parameter`; '#' starts a comment.
// Errors carry the offending 1-based line number.
DistortionLadder parse_ladder(std::string_view text);
DistortionLadder load_ladder(const std::filesystem::path& path);
std::string format_ladder(const DistortionLadder& ladder);

PixelImage gaussian_blur(const PixelImage& img, double sigma);

PixelImage apply(const PixelImage& img, const DistortionSpec& spec);

std::vector<std::pair<DistortionSpec, PixelImage>> expand_pristine(const PixelImage& img,
                                                                   const DistortionLadder& ladder);

std::string distorted_id(std::string_view pristine_id, const DistortionSpec& spec);

}  // namespace iqaforge
