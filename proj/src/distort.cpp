#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "iqaforge/csv.hpp"
#include "iqaforge/distort.hpp"
#include "iqaforge/error.hpp"

namespace iqaforge {

namespace {

constexpr std::array<std::string_view, kDistortionFamilyCount> kTokens = {
    "jpeg", "blur", "pixelate", "sharpen", "brightness", "color", "contrast"};

std::string spec_label(const DistortionSpec& spec) {
  std::ostringstream os;
  os << family_token(spec.family) << " level " << spec.level << " parameter " << spec.parameter;
  return os.str();
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  std::vector<double> tmp(k.size());
  for (int i = -radius; i <= radius; ++i) {
    tmp[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += tmp[static_cast<std::size_t>(i + radius)];
  }
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<float>(tmp[i] / sum);
  return k;
}

// Separable blur over interleaved RGB, returned unrounded.
std::vector<float> blur_float(const PixelImage& img, double sigma) {
  const int w = img.width();
  const int h = img.height();
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const auto src = img.pixels();

  std::vector<float> horiz(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc[3] = {0.0f, 0.0f, 0.0f};
      for (int k = -radius; k <= radius; ++k) {
        const int sx = reflect_index(x + k, w);
        const float kv = kernel[static_cast<std::size_t>(k + radius)];
        const std::size_t base = (static_cast<std::size_t>(y) * w + sx) * 3;
        acc[0] += kv * src[base];
        acc[1] += kv * src[base + 1];
        acc[2] += kv * src[base + 2];
      }
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
      horiz[o] = acc[0];
      horiz[o + 1] = acc[1];
      horiz[o + 2] = acc[2];
    }
  }

  std::vector<float> out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc[3] = {0.0f, 0.0f, 0.0f};
      for (int k = -radius; k <= radius; ++k) {
        const int sy = reflect_index(y + k, h);
        const float kv = kernel[static_cast<std::size_t>(k + radius)];
        const std::size_t base = (static_cast<std::size_t>(sy) * w + x) * 3;
        acc[0] += kv * horiz[base];
        acc[1] += kv * horiz[base + 1];
        acc[2] += kv * horiz[base + 2];
      }
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
      out[o] = acc[0];
      out[o + 1] = acc[1];
      out[o + 2] = acc[2];
    }
  }
  return out;
}

PixelImage pixelate(const PixelImage& img, int block) {
  PixelImage out(img.width(), img.height());
  for (int by = 0; by < img.height(); by += block) {
    const int ey = std::min(by + block, img.height());
    for (int bx = 0; bx < img.width(); bx += block) {
      const int ex = std::min(bx + block, img.width());
      const float n = static_cast<float>((ey - by) * (ex - bx));
      for (int c = 0; c < 3; ++c) {
        float sum = 0.0f;
        for (int y = by; y < ey; ++y) {
          for (int x = bx; x < ex; ++x) sum += img.at(x, y, c);
        }
        const std::uint8_t mean = to_u8(sum / n);
        for (int y = by; y < ey; ++y) {
          for (int x = bx; x < ex; ++x) out.at(x, y, c) = mean;
        }
      }
    }
  }
  return out;
}

template <typename Fn>
PixelImage map_channels(const PixelImage& img, Fn&& fn) {
  PixelImage out(img.width(), img.height());
  const auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = to_u8(fn(static_cast<float>(src[i])));
  return out;
}

}  // namespace

std::string_view family_token(DistortionFamily family) noexcept {
  return kTokens[static_cast<std::size_t>(family)];
}

std::optional<DistortionFamily> parse_family(std::string_view token) noexcept {
  for (std::size_t i = 0; i < kTokens.size(); ++i) {
    if (kTokens[i] == token) return static_cast<DistortionFamily>(i);
  }
  return std::nullopt;
}

void validate(const DistortionSpec& spec) {
  if (spec.level < 1) fail(ErrorCode::InvalidSpec, "level must be >= 1: " + spec_label(spec));
  const double p = spec.parameter;
  if (!std::isfinite(p)) fail(ErrorCode::InvalidSpec, "non-finite parameter: " + spec_label(spec));
  bool ok = true;
  switch (spec.family) {
    case DistortionFamily::JpegCompression: ok = is_integral(p) && p >= 1 && p <= 100; break;
    case DistortionFamily::GaussianBlur: ok = p > 0 && p <= 64; break;
    case DistortionFamily::Pixelation: ok = is_integral(p) && p >= 1 && p <= 4096; break;
    case DistortionFamily::Sharpen:
    case DistortionFamily::Brightness:
    case DistortionFamily::Color:
    case DistortionFamily::Contrast: ok = p >= 0; break;
  }
  if (!ok) fail(ErrorCode::InvalidSpec, "parameter outside family domain: " + spec_label(spec));
}

DistortionLadder DistortionLadder::standard() {
  using F = DistortionFamily;
  DistortionLadder ladder;
  auto add = [&](F family, std::initializer_list<double> params) {
    int level = 1;
    for (double p : params) ladder.entries.push_back({family, level++, p});
  };
  add(F::JpegCompression, {40, 20, 7});
  add(F::GaussianBlur, {3.0});
  add(F::Pixelation, {8, 16});
  add(F::Sharpen, {1.0, 2.0, 4.0});
  add(F::Brightness, {1.4, 1.8, 0.7, 0.4});
  add(F::Color, {0.4, 0.1});
  add(F::Contrast, {0.5, 1.8, 0.3});
  return ladder;
}

std::size_t DistortionLadder::count(DistortionFamily family) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.family == family; }));
}

DistortionLadder parse_ladder(std::string_view text) {
  DistortionLadder ladder;
  bool seen_header = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      if (end == text.size()) break;
      continue;
    }
    const auto fields = split_csv_line(line);
    auto bad = [&](const std::string& why) -> void {
      fail(ErrorCode::InvalidSpec, "ladder line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 3) bad("expected 3 fields (family,level,parameter), got " + std::to_string(fields.size()));
    if (!seen_header) {
      seen_header = true;
      if (fields[0] == "family" && fields[1] == "level" && fields[2] == "parameter") continue;
      bad("missing header 'family,level,parameter'");
    }
    const auto family = parse_family(trim(fields[0]));
    if (!family) bad("unknown family '" + fields[0] + "'");
    int level = 0;
    const std::string level_text = trim(fields[1]);
    auto [lp, lec] = std::from_chars(level_text.data(), level_text.data() + level_text.size(), level);
    if (lec != std::errc{} || lp != level_text.data() + level_text.size()) bad("level is not an integer");
    double parameter = 0.0;
    if (!parse_double(trim(fields[2]), parameter)) bad("parameter is not a number");
    DistortionSpec spec{*family, level, parameter};
    try {
      validate(spec);
    } catch (const Error& e) {
      bad(e.what());
    }
    const auto expected_level = static_cast<int>(ladder.count(*family)) + 1;
    if (level != expected_level) {
      bad("levels of a family must be consecutive from 1 (expected " + std::to_string(expected_level) + ")");
    }
    ladder.entries.push_back(spec);
    if (end == text.size()) break;
  }
  if (!seen_header) fail(ErrorCode::InvalidSpec, "ladder line 1: missing header 'family,level,parameter'");
  return ladder;
}

DistortionLadder load_ladder(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open ladder file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_ladder(os.str());
}

std::string format_ladder(const DistortionLadder& ladder) {
  std::ostringstream os;
  os << "family,level,parameter\n";
  for (const auto& e : ladder.entries) {
    os << family_token(e.family) << ',' << e.level << ',' << format_double(e.parameter) << '\n';
  }
  return os.str();
}

PixelImage gaussian_blur(const PixelImage& img, double sigma) {
  if (!(sigma > 0)) fail(ErrorCode::InvalidSpec, "blur sigma must be > 0");
  const auto blurred = blur_float(img, sigma);
  PixelImage out(img.width(), img.height());
  auto dst = out.pixels();
  for (std::size_t i = 0; i < blurred.size(); ++i) dst[i] = to_u8(blurred[i]);
  return out;
}

PixelImage apply(const PixelImage& img, const DistortionSpec& spec) {
  validate(spec);
  const auto p = static_cast<float>(spec.parameter);
  switch (spec.family) {
    case DistortionFamily::JpegCompression: {
      const auto bytes = encode(img, ImageFormat::Jpeg, static_cast<int>(spec.parameter));
      return decode(bytes, ImageFormat::Jpeg);
    }
    case DistortionFamily::GaussianBlur:
      return gaussian_blur(img, spec.parameter);
    case DistortionFamily::Pixelation:
      return pixelate(img, static_cast<int>(spec.parameter));
    case DistortionFamily::Sharpen: {
      const auto blurred = blur_float(img, 1.5);
      PixelImage out(img.width(), img.height());
      const auto src = img.pixels();
      auto dst = out.pixels();
      for (std::size_t i = 0; i < src.size(); ++i) {
        const float in = src[i];
        dst[i] = to_u8(in + p * (in - blurred[i]));
      }
      return out;
    }
    case DistortionFamily::Brightness:
      return map_channels(img, [p](float v) { return p * v; });
    case DistortionFamily::Color: {
      PixelImage out(img.width(), img.height());
      const auto src = img.pixels();
      auto dst = out.pixels();
      for (std::size_t i = 0; i < src.size(); i += 3) {
        const float r = src[i], g = src[i + 1], b = src[i + 2];
        const float y = 0.299f * r + 0.587f * g + 0.114f * b;
        dst[i] = to_u8(y + p * (r - y));
        dst[i + 1] = to_u8(y + p * (g - y));
        dst[i + 2] = to_u8(y + p * (b - y));
      }
      return out;
    }
    case DistortionFamily::Contrast:
      return map_channels(img, [p](float v) { return 128.0f + p * (v - 128.0f); });
  }
  fail(ErrorCode::InvalidSpec, "unknown family");
}

std::vector<std::pair<DistortionSpec, PixelImage>> expand_pristine(const PixelImage& img,
                                                                   const DistortionLadder& ladder) {
  std::vector<std::pair<DistortionSpec, PixelImage>> out;
  out.reserve(ladder.size());
  for (const auto& spec : ladder.entries) out.emplace_back(spec, apply(img, spec));
  return out;
}

std::string distorted_id(std::string_view pristine_id, const DistortionSpec& spec) {
  return std::string(pristine_id) + "__" + std::string(family_token(spec.family)) + "-" + std::to_string(spec.level);
}

}  // namespace iqaforge
