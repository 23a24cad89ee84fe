#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <system_error>

#include "iqaforge/distort.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/fixture.hpp"

namespace iqaforge {

std::string_view to_string(FixtureDomain domain) noexcept {
  return domain == FixtureDomain::Texture ? "texture" : "shape";
}

FixtureDomain parse_fixture_domain(std::string_view text) {
  if (text == "texture" || text == "textures") return FixtureDomain::Texture;
  if (text == "shape" || text == "shapes") return FixtureDomain::Shape;
  fail(ErrorCode::InvalidArgument, "fixture domain must be texture|shape, got '" + std::string(text) + "'");
}

namespace {

// Mid-grey plus a chroma offset of fixed magnitude and random hue.
void tinted(double lightness, double chroma, Rng& rng, double out[3]) {
  const double hue = 2.0 * std::numbers::pi * rng.uniform();
  for (int c = 0; c < 3; ++c) out[c] = lightness + chroma * std::cos(hue + c * 2.0 * std::numbers::pi / 3.0);
}

}  // namespace

PixelImage texture_image(int size, std::uint64_t seed) {
  if (size < 1) fail(ErrorCode::InvalidArgument, "fixture size must be >= 1");
  Rng rng(seed);
  struct Grating {
    double fx, fy, phase;
    double amp[3];
  };
  double base[3];
  tinted(128.0, 12.0, rng, base);
  Grating g[3];
  for (auto& gr : g) {
    const double wavelength = 8.0 + 12.0 * rng.uniform();
    const double theta = std::numbers::pi * rng.uniform();
    gr.fx = std::cos(theta) * 2.0 * std::numbers::pi / wavelength;
    gr.fy = std::sin(theta) * 2.0 * std::numbers::pi / wavelength;
    gr.phase = 2.0 * std::numbers::pi * rng.uniform();
    for (double& a : gr.amp) a = 12.0 + 4.0 * rng.uniform();
  }
  // Value noise on a 4-pixel lattice, bilinearly interpolated.
  constexpr int cell = 4;
  constexpr double noise_amp = 8.0;
  const int gw = size / cell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gw * 3);
  for (double& v : lattice) v = 2.0 * rng.uniform() - 1.0;

  PixelImage img(size, size);
  for (int y = 0; y < size; ++y) {
    const double gy = static_cast<double>(y) / cell;
    const int y0 = static_cast<int>(gy);
    const double ty = gy - y0;
    for (int x = 0; x < size; ++x) {
      const double gx = static_cast<double>(x) / cell;
      const int x0 = static_cast<int>(gx);
      const double tx = gx - x0;
      for (int c = 0; c < 3; ++c) {
        double v = base[c];
        for (const auto& gr : g) v += gr.amp[c] * std::sin(gr.fx * x + gr.fy * y + gr.phase);
        auto L = [&](int i, int j) { return lattice[(static_cast<std::size_t>(j) * gw + i) * 3 + c]; };
        const double n = (1 - ty) * ((1 - tx) * L(x0, y0) + tx * L(x0 + 1, y0)) +
                         ty * ((1 - tx) * L(x0, y0 + 1) + tx * L(x0 + 1, y0 + 1));
        img.at(x, y, c) = to_u8(v + noise_amp * n);
      }
    }
  }
  return img;
}

PixelImage shape_image(int size, std::uint64_t seed) {
  if (size < 1) fail(ErrorCode::InvalidArgument, "fixture size must be >= 1");
  Rng rng(seed);
  double c0[3], c1[3];
  tinted(100.0 + 20.0 * rng.uniform(), 25.0, rng, c0);
  tinted(136.0 + 20.0 * rng.uniform(), 25.0, rng, c1);
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  const double dx = std::cos(theta), dy = std::sin(theta);
  const double half = 0.5 * (size - 1);
  const double span = std::max(1.0, half * (std::abs(dx) + std::abs(dy)));

  PixelImage img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double t = std::clamp(0.5 + 0.5 * ((x - half) * dx + (y - half) * dy) / span, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = to_u8(c0[c] + t * (c1[c] - c0[c]));
    }
  }

  const int n_shapes = 14 + static_cast<int>(rng.below(7));
  for (int s = 0; s < n_shapes; ++s) {
    double tone[3];
    tinted(70.0 + 116.0 * rng.uniform(), 30.0, rng, tone);
    std::uint8_t colour[3];
    for (int c = 0; c < 3; ++c) colour[c] = to_u8(tone[c]);
    const double cx = size * rng.uniform(), cy = size * rng.uniform();
    const double r = size * (0.05 + 0.08 * rng.uniform());
    const bool disc = rng.bernoulli(0.5);
    const double aspect = 0.5 + rng.uniform();
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double ux = x + 0.5 - cx, uy = y + 0.5 - cy;
        const bool inside = disc ? ux * ux + uy * uy <= r * r : std::abs(ux) <= r && std::abs(uy) <= r * aspect;
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = colour[c];
      }
    }
  }
  // Fine luminance grain, as left by a camera sensor on flat regions.
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double g = 4.0 * rng.normal();
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = to_u8(img.at(x, y, c) + g);
    }
  }
  return img;
}

PixelImage fixture_image(FixtureDomain domain, int size, std::uint64_t seed) {
  return domain == FixtureDomain::Texture ? texture_image(size, seed) : shape_image(size, seed);
}

int severity_rank(std::string_view family, std::optional<int> level) {
  if (family.empty()) return 0;
  const auto parsed = parse_family(family);
  if (!parsed) fail(ErrorCode::InvalidSpec, "unknown distortion family '" + std::string(family) + "'");
  if (!level || *level < 1) fail(ErrorCode::InvalidSpec, "distorted row without a level");
  static const std::map<DistortionFamily, std::vector<int>> table = {
      {DistortionFamily::JpegCompression, {1, 2, 3}},  {DistortionFamily::GaussianBlur, {2}},
      {DistortionFamily::Pixelation, {2, 3}},          {DistortionFamily::Sharpen, {1, 2, 3}},
      {DistortionFamily::Brightness, {1, 3, 1, 3}},    {DistortionFamily::Color, {1, 2}},
      {DistortionFamily::Contrast, {2, 2, 3}},
  };
  const auto& ranks = table.at(*parsed);
  return *level <= static_cast<int>(ranks.size()) ? ranks[static_cast<std::size_t>(*level - 1)] : 3;
}

double pseudo_mos(int severity, Rng& rng, double noise_sd) {
  return std::clamp(8.5 - 2.0 * severity + noise_sd * rng.normal(), kMosMin, kMosMax);
}

void assign_pseudo_mos(std::span<ImageRecord> records, std::uint64_t seed, double noise_sd) {
  for (auto& r : records) {
    Rng rng(derive_seed(seed, fnv1a(r.id)));
    r.mos = pseudo_mos(severity_rank(r.family, r.level), rng, noise_sd);
  }
}

std::map<std::string, std::vector<int>> synthesize_ratings(std::span<const ImageRecord> records, std::uint64_t seed,
                                                           int n_observers) {
  if (n_observers < 1) fail(ErrorCode::InvalidArgument, "observer count must be >= 1");
  std::map<std::string, std::vector<int>> out;
  for (const auto& r : records) {
    Rng rng(derive_seed(seed, fnv1a(r.id)));
    const double target = pseudo_mos(severity_rank(r.family, r.level), rng);
    auto& ratings = out[r.id];
    for (int o = 0; o < n_observers; ++o) {
      const double v = std::nearbyint(target + rng.normal());
      ratings.push_back(static_cast<int>(std::clamp(v, kMosMin, kMosMax)));
    }
  }
  return out;
}

std::vector<ImageRecord> write_pristine_fixture(const std::filesystem::path& dir, const std::string& name,
                                                FixtureDomain domain, int count, int size, std::uint64_t seed) {
  if (count < 1) fail(ErrorCode::InvalidArgument, "fixture count must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create fixture directory '" + dir.string() + "': " + ec.message());
  std::vector<ImageRecord> rows;
  for (int i = 0; i < count; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%03d", i);
    ImageRecord r;
    r.id = name + "-" + id;
    r.subject_id = r.id;
    r.source = name;
    r.path = "images/" + r.id + ".png";
    const auto img = fixture_image(domain, size, derive_seed(seed, fnv1a(name), static_cast<std::uint64_t>(i)));
    write_image(img, dir / r.path);
    rows.push_back(std::move(r));
  }
  write_manifest(dir / "pristine.csv", rows);
  return rows;
}

}  // namespace iqaforge
