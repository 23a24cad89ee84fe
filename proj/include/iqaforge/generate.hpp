#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iqaforge/datasets.hpp"
#include "iqaforge/distort.hpp"

namespace iqaforge {

struct GenerationFailure {
  std::string path;
  std::string message;
};

struct GenerationReport {
  std::vector<ImageRecord> records;  // pristine row then one row per ladder entry, input order
  std::vector<GenerationFailure> failures;
  bool ok() const noexcept { return failures.empty(); }
};

// Writes out_dir/images/<id>.png for every pristine image and each of its
// distorted views, plus out_dir/manifest.csv and out_dir/generation.json
// (codec versions and the ladder). Relative pristine paths resolve against
// pristine_base. Unreadable inputs and unwritable outputs are collected in
// the report; an output directory that cannot be created throws IoError.
GenerationReport generate_dataset(std::span<const ImageRecord> pristine, const std::filesystem::path& pristine_base,
                                  const DistortionLadder& ladder, const std::filesystem::path& out_dir, int jobs = 1);

// File name used for an image id ('/' and other separators replaced).
std::string image_file_name(std::string_view id);

}  // namespace iqaforge
