#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "iqaforge/error.hpp"
#include "iqaforge/features.hpp"

namespace iqaforge {

namespace {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;

  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double skew = 0.0;
  double kurt = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  m.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.var = m2;
  if (m2 > 1e-12) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt = m4 / (m2 * m2);
  }
  return m;
}

// 7x7 Gaussian window, sigma 7/6, applied separably with reflect padding.
std::vector<double> gaussian_filter7(const Plane& p) {
  constexpr int r = 3;
  double k[7];
  double sum = 0.0;
  const double sigma = 7.0 / 6.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& x : k) x /= sum;

  std::vector<double> tmp(p.v.size()), out(p.v.size());
  for (int y = 0; y < p.h; ++y) {
    const double* row = p.v.data() + static_cast<std::size_t>(y) * p.w;
    double* dst = tmp.data() + static_cast<std::size_t>(y) * p.w;
    for (int x = 0; x < p.w; ++x) {
      double acc = 0.0;
      if (x >= r && x < p.w - r) {
        for (int t = -r; t <= r; ++t) acc += k[t + r] * row[x + t];
      } else {
        for (int t = -r; t <= r; ++t) acc += k[t + r] * row[reflect(x + t, p.w)];
      }
      dst[x] = acc;
    }
  }
  for (int y = 0; y < p.h; ++y) {
    double* dst = out.data() + static_cast<std::size_t>(y) * p.w;
    for (int t = -r; t <= r; ++t) {
      const double kv = k[t + r];
      const double* src = tmp.data() + static_cast<std::size_t>(reflect(y + t, p.h)) * p.w;
      for (int x = 0; x < p.w; ++x) dst[x] += kv * src[x];
    }
  }
  return out;
}

Moments mscn_moments(const Plane& luma) {
  Plane sq{luma.w, luma.h, luma.v};
  for (double& x : sq.v) x *= x;
  const auto mu = gaussian_filter7(luma);
  const auto mu_sq = gaussian_filter7(sq);
  std::vector<double> coeffs(luma.v.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double sigma = std::sqrt(std::abs(mu_sq[i] - mu[i] * mu[i]));
    coeffs[i] = (luma.v[i] - mu[i]) / (sigma + 1.0);
  }
  return moments(coeffs);
}

Plane downsample2(const Plane& p) {
  Plane out{std::max(1, p.w / 2), std::max(1, p.h / 2), {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      const int x0 = std::min(2 * x, p.w - 1), x1 = std::min(2 * x + 1, p.w - 1);
      const int y0 = std::min(2 * y, p.h - 1), y1 = std::min(2 * y + 1, p.h - 1);
      out.v[static_cast<std::size_t>(y) * out.w + x] = 0.25 * (p.at(x0, y0) + p.at(x1, y0) + p.at(x0, y1) + p.at(x1, y1));
    }
  }
  return out;
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// Accumulated relative to the first sample so constant input gives exactly 0.
void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  const double ref = v.front();
  double sum = 0.0;
  for (double x : v) sum += x - ref;
  const double shift = sum / static_cast<double>(v.size());
  mean = ref + shift;
  double ss = 0.0;
  for (double x : v) ss += (x - ref - shift) * (x - ref - shift);
  sd = std::sqrt(ss / static_cast<double>(v.size()));
}

// Grid blocking: mean clipped absolute step on the strongest phase of a
// block grid relative to the mean step on the other phases,
// (peak + 1) / (rest + 1) in 8-bit units, maximised over grid periods 7..9
// so an 8-pixel coding grid is still found after the +-12.5% rescales of the
// input transforms. Steps are clipped at 16 so object edges do not swamp the
// small discontinuities left in smooth areas.
double blockiness_at(const Plane& luma, bool horizontal, int period) {
  std::array<double, 9> sum{};
  std::array<std::size_t, 9> cnt{};
  const int len = horizontal ? luma.w : luma.h;
  const int other = horizontal ? luma.h : luma.w;
  for (int o = 0; o < other; ++o) {
    for (int i = 0; i + 1 < len; ++i) {
      const double a = horizontal ? luma.at(i, o) : luma.at(o, i);
      const double b = horizontal ? luma.at(i + 1, o) : luma.at(o, i + 1);
      sum[static_cast<std::size_t>(i % period)] += std::min(std::abs(b - a), 16.0);
      ++cnt[static_cast<std::size_t>(i % period)];
    }
  }
  double peak = -1.0, total = 0.0;
  int used = 0;
  for (int p = 0; p < period; ++p) {
    if (!cnt[static_cast<std::size_t>(p)]) continue;
    const double m = sum[static_cast<std::size_t>(p)] / static_cast<double>(cnt[static_cast<std::size_t>(p)]);
    peak = std::max(peak, m);
    total += m;
    ++used;
  }
  if (used < 2) return 1.0;
  const double rest = (total - peak) / (used - 1);
  return (peak + 1.0) / (rest + 1.0);
}

double blockiness(const Plane& luma, bool horizontal) {
  double best = 0.0;
  for (int period = 7; period <= 9; ++period) best = std::max(best, blockiness_at(luma, horizontal, period));
  return best;
}

}  // namespace

std::string_view feature_name(std::size_t slot) noexcept {
  static constexpr std::string_view kNames[kFeatureDim] = {
      "mscn1_mean", "mscn1_var", "mscn1_skew", "mscn1_kurt", "mscn2_mean", "mscn2_var", "mscn2_skew", "mscn2_kurt",
      "grad_mean", "grad_var", "laplacian_var", "blockiness_h", "blockiness_v", "mean_r", "mean_g", "mean_b",
      "std_r", "std_g", "std_b", "sat_mean", "sat_std", "luma_p5", "luma_p50", "luma_p95", "rms_contrast",
      "colorfulness", "reserved0", "reserved1", "reserved2", "reserved3", "reserved4", "reserved5", "reserved6",
      "reserved7"};
  return slot < kFeatureDim ? kNames[slot] : std::string_view{};
}

FeatureVector extract_features(const PixelImage& img) {
  if (img.width() < kMinFeatureSide || img.height() < kMinFeatureSide) {
    fail(ErrorCode::ImageTooSmall, std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                       " is below the 32x32 minimum");
  }
  namespace fs = feature_slot;
  FeatureVector f{};
  const int w = img.width();
  const int h = img.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const auto px = img.pixels();

  Plane luma{w, h, std::vector<double>(n)};
  std::vector<double> chan[3], sat(n), rg(n), yb(n);
  for (auto& c : chan) c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
    luma.v[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    chan[0][i] = r / 255.0;
    chan[1][i] = g / 255.0;
    chan[2][i] = b / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    sat[i] = mx > 0.0 ? (mx - mn) / mx : 0.0;
    rg[i] = (r - g) / 255.0;
    yb[i] = (0.5 * (r + g) - b) / 255.0;
  }

  const Moments s1 = mscn_moments(luma);
  const Moments s2 = mscn_moments(downsample2(luma));
  const double ms[8] = {s1.mean, s1.var, s1.skew, s1.kurt, s2.mean, s2.var, s2.skew, s2.kurt};
  std::copy(std::begin(ms), std::end(ms), f.begin() + fs::kMscn);

  // Gradient and Laplacian energy on the half-resolution plane, where the
  // interpolation texture of small rescales has averaged out.
  const Plane half = downsample2(luma);
  const int hw = half.w, hh = half.h;
  std::vector<double> grad(static_cast<std::size_t>(hw) * hh), lap(grad.size());
  for (int y = 0; y < hh; ++y) {
    const int ym = reflect(y - 1, hh), yp = reflect(y + 1, hh);
    for (int x = 0; x < hw; ++x) {
      const int xm = reflect(x - 1, hw), xp = reflect(x + 1, hw);
      const double gx = (half.at(xp, ym) + 2 * half.at(xp, y) + half.at(xp, yp)) -
                        (half.at(xm, ym) + 2 * half.at(xm, y) + half.at(xm, yp));
      const double gy = (half.at(xm, yp) + 2 * half.at(x, yp) + half.at(xp, yp)) -
                        (half.at(xm, ym) + 2 * half.at(x, ym) + half.at(xp, ym));
      const std::size_t i = static_cast<std::size_t>(y) * hw + x;
      grad[i] = std::sqrt(gx * gx + gy * gy) / (4.0 * 255.0);
      lap[i] = (half.at(xm, y) + half.at(xp, y) + half.at(x, ym) + half.at(x, yp) - 4.0 * half.at(x, y)) / 255.0;
    }
  }
  double mean = 0.0, sd = 0.0;
  mean_std(grad, mean, sd);
  f[fs::kGradientMean] = mean;
  f[fs::kGradientVar] = sd * sd;
  mean_std(lap, mean, sd);
  f[fs::kLaplacianVar] = sd * sd;

  f[fs::kBlockinessH] = blockiness(luma, true);
  f[fs::kBlockinessV] = blockiness(luma, false);

  for (int c = 0; c < 3; ++c) {
    mean_std(chan[c], mean, sd);
    f[fs::kChannelMean + static_cast<std::size_t>(c)] = mean;
    f[fs::kChannelStd + static_cast<std::size_t>(c)] = sd;
  }
  mean_std(sat, mean, sd);
  f[fs::kSaturationMean] = mean;
  f[fs::kSaturationStd] = sd;

  std::vector<double> sorted(luma.v);
  for (double& x : sorted) x /= 255.0;
  mean_std(sorted, mean, sd);
  f[fs::kRmsContrast] = sd;
  std::sort(sorted.begin(), sorted.end());
  f[fs::kLumaP5] = percentile(sorted, 0.05);
  f[fs::kLumaP50] = percentile(sorted, 0.50);
  f[fs::kLumaP95] = percentile(sorted, 0.95);

  double mrg = 0.0, srg = 0.0, myb = 0.0, syb = 0.0;
  mean_std(rg, mrg, srg);
  mean_std(yb, myb, syb);
  f[fs::kColorfulness] = std::sqrt(srg * srg + syb * syb) + 0.3 * std::sqrt(mrg * mrg + myb * myb);
  return f;
}

}  // namespace iqaforge
