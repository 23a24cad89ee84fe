#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iqaforge/features.hpp"
#include "iqaforge/mlp.hpp"

namespace iqaforge {

// Per-feature compression and standardisation fitted on the training
// partition: z = (asinh(x / knee) - mean) * scale. The knee is the mean
// absolute raw value, so heavy-tailed energies become roughly logarithmic.
struct FeatureNormalizer {
  FeatureVector knee{};
  FeatureVector mean{};
  FeatureVector scale{};  // 1 / std of the compressed value, or 1 if constant

  static FeatureNormalizer fit(std::span<const FeatureVector> samples);
  FeatureVector apply(const FeatureVector& f) const;

  friend bool operator==(const FeatureNormalizer&, const FeatureNormalizer&) = default;
};

struct ModelCheckpoint {
  MlpRegressor model;
  FeatureNormalizer normalizer;
  // Regressor output o maps to MOS as target_mean + target_scale * o.
  double target_mean = 0.0;
  double target_scale = 1.0;
  std::string extractor_version{kFeatureExtractorVersion};
  std::string config_json = "{}";  // training config snapshot
  int input_size = 224;

  double predict_features(const FeatureVector& raw) const;

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Byte layout is documented in docs/checkpoint-format.md.
std::vector<std::uint8_t> serialize_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iqaforge
