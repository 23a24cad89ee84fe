#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "iqaforge/image.hpp"
#include "iqaforge/rng.hpp"

namespace testsupport {

// Filled with independent uniform noise; deterministic for a seed.
inline iqaforge::PixelImage noise_image(int w, int h, std::uint64_t seed) {
  iqaforge::Rng rng(seed);
  iqaforge::PixelImage img(w, h);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Fresh scratch directory below the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("iqaforge-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
