#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "iqaforge/checkpoint.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/features.hpp"
#include "iqaforge/fixture.hpp"
#include "iqaforge/mlp.hpp"
#include "iqaforge/optim.hpp"
#include "support.hpp"

using namespace iqaforge;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
  return x;
}

std::vector<std::vector<double>> random_masks(const MlpRegressor& m, Rng& rng) {
  std::vector<std::vector<double>> masks;
  for (std::size_t l = 1; l + 1 < m.widths().size(); ++l) {
    std::vector<double> mask(static_cast<std::size_t>(m.widths()[l]));
    for (auto& v : mask) v = rng.bernoulli(0.5) ? 2.0 : 0.0;
    masks.push_back(mask);
  }
  return masks;
}

}  // namespace

TEST_CASE("zero network outputs zero") {
  const MlpRegressor m({34, 64, 16, 1});
  Rng rng(1);
  CHECK(m.forward(random_input(rng, 34), Mode::Eval) == 0.0);
  CHECK(m.parameter_count() == 34 * 64 + 64 + 64 * 16 + 16 + 16 + 1);
}

TEST_CASE("hand-set toy network") {
  MlpRegressor m({1, 2, 1, 1});
  m.weight(0, 0, 0) = 2.0;
  m.weight(0, 1, 0) = -1.0;
  m.bias(0, 0) = 0.5;
  m.weight(1, 0, 0) = 1.0;
  m.weight(1, 0, 1) = 4.0;
  m.bias(1, 0) = -1.0;
  m.weight(2, 0, 0) = 2.0;
  m.bias(2, 0) = 0.25;
  // h1 = relu(2*3 + 0.5, -3) = (6.5, 0); h2 = relu(6.5 - 1) = 5.5; out = 2*5.5 + 0.25
  const std::vector<double> x{3.0};
  CHECK(m.forward(x, Mode::Eval) == doctest::Approx(11.25));
  CHECK(m.forward(x, Mode::Eval) == m.forward(x, Mode::Eval));
}

TEST_CASE("glorot init is seeded and bounded") {
  Rng a(5), b(5);
  const auto m1 = MlpRegressor::initialized({34, 64, 16, 1}, a);
  const auto m2 = MlpRegressor::initialized({34, 64, 16, 1}, b);
  CHECK(m1 == m2);
  auto mm = m1;
  const double limit = std::sqrt(6.0 / (34 + 64));
  for (int o = 0; o < 64; ++o) {
    CHECK(std::abs(mm.weight(0, o, 0)) <= limit);
    CHECK(mm.bias(0, o) == 0.0);
  }
}

TEST_CASE("train-mode dropout scales kept units") {
  Rng init(3);
  auto m = MlpRegressor::initialized({4, 6, 3, 1}, init);
  Rng drop(9);
  ForwardTrace t;
  m.forward(std::vector<double>{0.1, 0.2, 0.3, 0.4}, Mode::Train, &drop, &t);
  REQUIRE(t.masks.size() == 2);
  for (const auto& mask : t.masks)
    for (double v : mask) CHECK((v == 0.0 || v == 2.0));
  CHECK_THROWS_AS(m.forward(std::vector<double>{0.1, 0.2, 0.3, 0.4}, Mode::Train), Error);
  CHECK_THROWS_AS(m.forward(std::vector<double>{0.1, 0.2}, Mode::Eval), Error);
}

TEST_CASE("backward matches central differences") {
  Rng rng(42);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto m = MlpRegressor::initialized({6, 5, 4, 1}, rng);
    for (auto& p : m.parameters()) p += 0.1 * (rng.uniform() - 0.5);
    const auto x = random_input(rng, 6);
    const auto masks = random_masks(m, rng);
    ForwardTrace t;
    m.forward_masked(x, masks, &t);
    std::vector<double> g(m.parameter_count(), 0.0);
    m.backward(t, 1.0, g);
    for (std::size_t i = 0; i < m.parameter_count(); ++i) {
      const double keep = m.parameters()[i];
      const double h = 1e-6;
      m.parameters()[i] = keep + h;
      const double up = m.forward_masked(x, masks, nullptr);
      m.parameters()[i] = keep - h;
      const double down = m.forward_masked(x, masks, nullptr);
      m.parameters()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(numeric - g[i]) / std::max(1e-6, std::abs(numeric) + std::abs(g[i]));
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("backward edge cases") {
  Rng rng(8);
  const auto m = MlpRegressor::initialized({5, 4, 3, 1}, rng);
  const auto x = random_input(rng, 5);
  ForwardTrace t;
  m.forward_masked(x, random_masks(m, rng), &t);
  std::vector<double> g(m.parameter_count(), 0.0);
  m.backward(t, 0.0, g);
  CHECK(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));

  // Layer 1 fully dropped: nothing reaches the weights feeding it.
  ForwardTrace blocked;
  m.forward_masked(x, {std::vector<double>(4, 2.0), std::vector<double>(3, 0.0)}, &blocked);
  std::fill(g.begin(), g.end(), 0.0);
  m.backward(blocked, 1.0, g);
  for (std::size_t i = m.weight_offset(1); i < m.bias_offset(1); ++i) CHECK(g[i] == 0.0);

  std::vector<double> empty(m.parameter_count());
  CHECK_THROWS_AS(m.backward(ForwardTrace{}, 1.0, empty), Error);
}

TEST_CASE("quality levels and class weights") {
  CHECK(quality_level(0.2) == 1);
  CHECK(quality_level(5.5) == 6);
  CHECK(quality_level(7.49) == 7);
  CHECK(quality_level(12.0) == 10);

  std::vector<int> uniform;
  for (int l = 1; l <= 10; ++l)
    for (int k = 0; k < 3; ++k) uniform.push_back(l);
  for (const auto& [l, w] : class_weights(uniform)) CHECK(w == doctest::Approx(1.0));

  const std::vector<int> small{5, 5, 5, 6};
  const auto w = class_weights(small);
  CHECK(w.at(5) == doctest::Approx(4.0 / 30.0));
  CHECK(w.at(6) == doctest::Approx(0.4));
  CHECK(w.size() == 2);

  CHECK(class_weights(std::vector<int>(7, 3)).at(3) == doctest::Approx(0.1));
  CHECK_THROWS_AS(class_weights(std::vector<int>{}), Error);
}

TEST_CASE("weighted loss") {
  const std::vector<double> p{1.0, 2.0, 4.0}, y{2.0, 2.0, 2.0}, ones{1.0, 1.0, 1.0};
  const auto plain = weighted_mse_loss(p, y, ones);
  CHECK(plain.loss == doctest::Approx(5.0 / 3.0));
  const auto perfect = weighted_mse_loss(y, y, ones);
  CHECK(perfect.loss == 0.0);
  for (double g : perfect.grad) CHECK(g == 0.0);
  const auto one = weighted_mse_loss(std::vector<double>{1.0}, std::vector<double>{3.0}, std::vector<double>{2.0});
  CHECK(one.loss == doctest::Approx(8.0));
  CHECK(one.grad[0] == doctest::Approx(-8.0));
  CHECK_THROWS_AS(weighted_mse_loss(p, std::vector<double>{1.0}, ones), Error);
}

TEST_CASE("adamw steps") {
  std::vector<double> p{1.0};
  AdamW still(1, {0.0});
  still.step(p, std::vector<double>{0.0}, 0.1);
  CHECK(p[0] == 1.0);

  AdamW opt(1, {0.0});
  opt.step(p, std::vector<double>{1.0}, 0.1);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(opt.step_count() == 1);

  std::vector<double> q{1.0};
  AdamW decay(1, {1e-5});
  decay.step(q, std::vector<double>{0.0}, 2e-4);
  CHECK(q[0] == doctest::Approx(1.0 - 2e-9).epsilon(1e-15));
  decay.step(q, std::vector<double>{0.0}, 2e-4);
  CHECK(q[0] == doctest::Approx((1.0 - 2e-9) * (1.0 - 2e-9)).epsilon(1e-15));
}

TEST_CASE("one-cycle schedule") {
  const long long total = 1000;
  CHECK(onecycle_lr(0, total) == doctest::Approx(8e-6).epsilon(1e-12));
  CHECK(onecycle_peak_step(total) == 300);
  CHECK(onecycle_lr(300, total) == 2e-4);
  CHECK(onecycle_lr(total - 1, total) <= 2.1e-8);
  // Rising then falling, with steps bounded by the cosine slope of each phase.
  const double warm_bound = 0.5 * std::numbers::pi * (2e-4 - 8e-6) / 300.0;
  const double anneal_bound = 0.5 * std::numbers::pi * (2e-4 - 2e-8) / 699.0;
  for (long long s = 1; s < total; ++s) {
    const double d = onecycle_lr(s, total) - onecycle_lr(s - 1, total);
    if (s <= 300) {
      CHECK(d > 0.0);
      CHECK(d <= warm_bound * (1 + 1e-9));
    } else {
      CHECK(d < 0.0);
      CHECK(-d <= anneal_bound * (1 + 1e-9));
    }
  }
  CHECK_THROWS_AS(onecycle_lr(total, total), Error);
  CHECK_THROWS_AS(onecycle_lr(-1, total), Error);
  CHECK(onecycle_lr(0, 1) == 2e-4);  // a single step is the peak
}

TEST_CASE("features on simple images") {
  PixelImage gray(64, 64);
  for (auto& v : gray.pixels()) v = 128;
  const auto f = extract_features(gray);
  namespace fs = feature_slot;
  for (std::size_t c = 0; c < 3; ++c) CHECK(f[fs::kChannelStd + c] == 0.0);
  CHECK(f[fs::kRmsContrast] == 0.0);
  CHECK(f[fs::kSaturationMean] == 0.0);
  for (std::size_t i = fs::kReserved; i < kFeatureDim; ++i) CHECK(f[i] == 0.0);
  CHECK_THROWS_AS(extract_features(PixelImage(31, 64)), Error);

  const auto img = texture_image(96, 3);
  const auto a = extract_features(img);
  const auto b = extract_features(hflip(img));
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    CHECK(std::isfinite(a[i]));
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }
  CHECK(extract_features(img) == a);
}

TEST_CASE("checkpoint round trip and corruption") {
  Rng rng(2);
  ModelCheckpoint ck;
  ck.model = MlpRegressor::initialized({34, 64, 16, 1}, rng);
  std::vector<FeatureVector> samples(5);
  for (auto& s : samples)
    for (std::size_t i = 0; i < 26; ++i) s[i] = rng.uniform() * (1.0 + static_cast<double>(i));
  ck.normalizer = FeatureNormalizer::fit(samples);
  ck.target_mean = 5.0;
  ck.target_scale = 2.0;
  ck.input_size = 128;
  ck.config_json = R"({"epochs":20})";
  const auto bytes = serialize_checkpoint(ck);
  const auto back = deserialize_checkpoint(bytes);
  CHECK(back == ck);
  CHECK(back.predict_features(samples[0]) == ck.predict_features(samples[0]));

  testsupport::TempDir dir("ckpt");
  save_checkpoint(ck, dir.path() / "m.iqacp");
  CHECK(load_checkpoint(dir.path() / "m.iqacp") == ck);

  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_AS(deserialize_checkpoint(truncated), Error);
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xFF;
  CHECK_THROWS_AS(deserialize_checkpoint(bad_magic), Error);
}

TEST_CASE("normalizer standardizes compressed features") {
  std::vector<FeatureVector> samples(4);
  const double xs[4] = {1.0, 2.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i) samples[i][0] = xs[i];
  const auto n = FeatureNormalizer::fit(samples);
  CHECK(n.knee[0] == doctest::Approx(2.5));
  double sum = 0.0, sq = 0.0;
  for (const auto& s : samples) {
    const double z = n.apply(s)[0];
    sum += z;
    sq += z * z;
  }
  CHECK(sum / 4.0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sq / 4.0 == doctest::Approx(1.0));
  CHECK(n.apply(samples[0])[5] == 0.0);  // constant slot
}
