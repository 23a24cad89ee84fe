#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "iqaforge/checkpoint.hpp"
#include "iqaforge/error.hpp"

namespace iqaforge {

FeatureNormalizer FeatureNormalizer::fit(std::span<const FeatureVector> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyCorpus, "cannot fit a normalizer on zero samples");
  FeatureNormalizer n;
  const double count = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    double abs_sum = 0.0;
    for (const auto& s : samples) abs_sum += std::abs(s[k]);
    n.knee[k] = abs_sum > 1e-12 * count ? abs_sum / count : 1.0;
    double sum = 0.0;
    for (const auto& s : samples) sum += std::asinh(s[k] / n.knee[k]);
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& s : samples) {
      const double d = std::asinh(s[k] / n.knee[k]) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / count);
    n.mean[k] = mean;
    n.scale[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return n;
}

FeatureVector FeatureNormalizer::apply(const FeatureVector& f) const {
  FeatureVector out;
  for (std::size_t k = 0; k < kFeatureDim; ++k) out[k] = (std::asinh(f[k] / knee[k]) - mean[k]) * scale[k];
  return out;
}

double ModelCheckpoint::predict_features(const FeatureVector& raw) const {
  const FeatureVector x = normalizer.apply(raw);
  return target_mean + target_scale * model.forward(x, Mode::Eval);
}

namespace {

constexpr char kMagic[8] = {'I', 'Q', 'A', 'F', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : buf(b) {}
  void need(std::size_t n) const {
    if (pos + n > buf.size()) fail(ErrorCode::MalformedFile, "checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
  std::span<const std::uint8_t> buf;
  std::size_t pos = 0;
};

std::uint64_t checksum(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelCheckpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointFormatVersion);
  const auto& widths = ckpt.model.widths();
  w.u32(static_cast<std::uint32_t>(widths.size()));
  for (int v : widths) w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(ckpt.input_size));
  w.str(ckpt.extractor_version);
  w.str(ckpt.config_json);
  w.u32(static_cast<std::uint32_t>(kFeatureDim));
  for (double v : ckpt.normalizer.knee) w.f64(v);
  for (double v : ckpt.normalizer.mean) w.f64(v);
  for (double v : ckpt.normalizer.scale) w.f64(v);
  w.f64(ckpt.target_mean);
  w.f64(ckpt.target_scale);
  const auto params = ckpt.model.parameters();
  w.u64(params.size());
  for (double v : params) w.f64(v);
  w.u64(checksum(w.out));
  return std::move(w.out);
}

ModelCheckpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::MalformedFile, "not an iqaforge checkpoint (bad magic)");
  }
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  if (tail.u64() != checksum(body)) fail(ErrorCode::MalformedFile, "checkpoint checksum mismatch");

  Reader r(body);
  r.pos = sizeof(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointFormatVersion) {
    fail(ErrorCode::MalformedFile, "unsupported checkpoint format version " + std::to_string(version));
  }
  const std::uint32_t n_widths = r.u32();
  if (n_widths < 2 || n_widths > 64) fail(ErrorCode::MalformedFile, "implausible layer count");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < n_widths; ++i) widths.push_back(static_cast<int>(r.u32()));
  ModelCheckpoint ckpt;
  ckpt.input_size = static_cast<int>(r.u32());
  ckpt.extractor_version = r.str();
  ckpt.config_json = r.str();
  if (r.u32() != kFeatureDim) fail(ErrorCode::MalformedFile, "feature dimension mismatch");
  for (double& v : ckpt.normalizer.knee) v = r.f64();
  for (double& v : ckpt.normalizer.mean) v = r.f64();
  for (double& v : ckpt.normalizer.scale) v = r.f64();
  ckpt.target_mean = r.f64();
  ckpt.target_scale = r.f64();
  try {
    ckpt.model = MlpRegressor(widths);
  } catch (const Error& e) {
    fail(ErrorCode::MalformedFile, std::string("checkpoint widths: ") + e.what());
  }
  if (r.u64() != ckpt.model.parameter_count()) fail(ErrorCode::MalformedFile, "parameter count mismatch");
  for (double& v : ckpt.model.parameters()) v = r.f64();
  if (r.pos != body.size()) fail(ErrorCode::MalformedFile, "trailing bytes in checkpoint");
  if (ckpt.extractor_version != kFeatureExtractorVersion) {
    fail(ErrorCode::MalformedFile, "checkpoint built for feature extractor '" + ckpt.extractor_version + "'");
  }
  return ckpt;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace iqaforge
