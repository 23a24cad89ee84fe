#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqaforge/datasets.hpp"
#include "iqaforge/image.hpp"

namespace iqaforge {

// Procedural pristine content for synthetic benchmarks and tests.
enum class FixtureDomain { Texture, Shape };

std::string_view to_string(FixtureDomain domain) noexcept;
FixtureDomain parse_fixture_domain(std::string_view text);

// Oriented colour gratings plus smoothed noise; every channel stays within
// [58, 198] so contrast gains up to 1.8 never clip.
PixelImage texture_image(int size, std::uint64_t seed);

// Two-colour linear gradient with flat-coloured discs and rectangles.
PixelImage shape_image(int size, std::uint64_t seed);

PixelImage fixture_image(FixtureDomain domain, int size, std::uint64_t seed);

// Severity rank 0..3 of a manifest row (empty family = pristine = 0).
// Entries of the standard ladder use a fixed table; other levels clamp to 3.
int severity_rank(std::string_view family, std::optional<int> level);

inline constexpr double kPseudoMosNoise = 0.3;

// 8.5 - 2 * severity + N(0, noise_sd), clamped to [1, 10]. Half-integer
// centres split each severity evenly across two quality levels, so no level
// is populated only by noise tails.
double pseudo_mos(int severity, Rng& rng, double noise_sd = kPseudoMosNoise);

// Sets mos from severity with noise drawn per image id.
void assign_pseudo_mos(std::span<ImageRecord> records, std::uint64_t seed, double noise_sd = kPseudoMosNoise);

// Integer panel ratings in [1, 10] whose mean tracks the pseudo-MOS.
std::map<std::string, std::vector<int>> synthesize_ratings(std::span<const ImageRecord> records, std::uint64_t seed,
                                                           int n_observers = 40);

// Writes <dir>/images/<name>-NNN.png and <dir>/pristine.csv; returns rows.
std::vector<ImageRecord> write_pristine_fixture(const std::filesystem::path& dir, const std::string& name,
                                                FixtureDomain domain, int count, int size, std::uint64_t seed);

}  // namespace iqaforge
