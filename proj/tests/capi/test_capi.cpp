// Exercises the shared library through its C surface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "iqaforge/iqaforge.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path = fs::temp_directory_path() / ("iqaforge-capi-" + std::to_string(::getpid()));
  Scratch() {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run(const char* name, std::vector<std::pair<std::string, std::string>> kv, std::string* summary = nullptr) {
  iqa_options* o = nullptr;
  REQUIRE(iqa_options_create(&o) == IQA_OK);
  for (const auto& [k, v] : kv) REQUIRE(iqa_options_add(o, k.c_str(), v.c_str()) == IQA_OK);
  iqa_result* r = nullptr;
  iqa_command_run(name, o, &r);
  iqa_options_destroy(o);
  REQUIRE(r != nullptr);
  const int code = iqa_result_exit_code(r);
  if (summary) *summary = iqa_result_summary(r);
  iqa_result_destroy(r);
  return code;
}

std::vector<std::uint8_t> gradient_pixels(int w, int h) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<std::uint8_t>((x * 5 + y * 3 + c * 40) % 256);
  return px;
}

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(iqa_version()) > 0);
  iqa_image* img = nullptr;
  CHECK(iqa_image_create(0, 4, nullptr, &img) == IQA_ERR_VALIDATION);
  CHECK(img == nullptr);
  CHECK(std::strlen(iqa_last_error()) > 0);
  CHECK(iqa_image_load("/nonexistent/x.png", &img) == IQA_ERR_IO);
  CHECK(std::string(iqa_last_error_name()) == "IoError");
  CHECK(iqa_set_log_level("error") == IQA_OK);
  CHECK(iqa_set_log_level("loud") == IQA_ERR_VALIDATION);
}

TEST_CASE("image lifecycle, distortion and features") {
  Scratch s;
  const auto px = gradient_pixels(64, 48);
  iqa_image* img = nullptr;
  REQUIRE(iqa_image_create(64, 48, px.data(), &img) == IQA_OK);
  CHECK(iqa_image_width(img) == 64);
  CHECK(iqa_image_height(img) == 48);
  CHECK(std::memcmp(iqa_image_pixels(img), px.data(), px.size()) == 0);

  const auto file = (s.path / "a.png").string();
  REQUIRE(iqa_image_save(img, file.c_str(), 90) == IQA_OK);
  iqa_image* back = nullptr;
  REQUIRE(iqa_image_load(file.c_str(), &back) == IQA_OK);
  CHECK(std::memcmp(iqa_image_pixels(back), px.data(), px.size()) == 0);

  iqa_image* same = nullptr;
  REQUIRE(iqa_image_distort(img, "brightness", 1, 1.0, &same) == IQA_OK);
  CHECK(std::memcmp(iqa_image_pixels(same), px.data(), px.size()) == 0);
  iqa_image* bad = nullptr;
  CHECK(iqa_image_distort(img, "fog", 1, 1.0, &bad) == IQA_ERR_VALIDATION);

  REQUIRE(iqa_feature_dim() == 34);
  std::vector<double> f(34);
  CHECK(iqa_image_features(img, f.data(), f.size()) == IQA_OK);
  CHECK(iqa_image_features(img, f.data(), 10) == IQA_ERR_VALIDATION);

  const std::uint8_t junk[1] = {7};
  iqa_image* dec = nullptr;
  CHECK(iqa_image_decode(junk, 1, IQA_FORMAT_PNG, &dec) == IQA_ERR_VALIDATION);

  iqa_image_destroy(same);
  iqa_image_destroy(back);
  iqa_image_destroy(img);
  iqa_image_destroy(nullptr);
}

TEST_CASE("metrics") {
  const double x[4] = {1, 2, 3, 4}, y[4] = {1, 3, 2, 4};
  double v = 0.0;
  REQUIRE(iqa_plcc(x, y, 4, &v) == IQA_OK);
  CHECK(v == doctest::Approx(0.8));
  REQUIRE(iqa_srocc(x, y, 4, &v) == IQA_OK);
  CHECK(v == doctest::Approx(0.8));
  REQUIRE(iqa_mse(x, y, 4, &v) == IQA_OK);
  CHECK(v == doctest::Approx(0.5));
  const double flat[4] = {2, 2, 2, 2};
  CHECK(iqa_plcc(flat, y, 4, &v) == IQA_ERR_VALIDATION);
  CHECK(std::string(iqa_last_error_name()) == "DegenerateVector");
}

TEST_CASE("commands and model prediction") {
  Scratch s;
  const auto root = s.path.string();
  std::string summary;
  CHECK(run("distort", {{"pristine", root + "/none.csv"}, {"out", root + "/o"}}) == 2);
  REQUIRE(run("fixture", {{"out", root + "/fx"}, {"count", "6"}, {"size", "48"}, {"domains", "textures"}}) == 0);
  REQUIRE(run("distort", {{"pristine", root + "/fx/textures/pristine.csv"}, {"out", root + "/gen"}}) == 0);
  REQUIRE(run("rate", {{"manifest", root + "/gen/manifest.csv"}, {"out", root + "/rate"}}) == 0);
  REQUIRE(run("ingest", {{"manifest", root + "/gen/manifest.csv"},
                         {"ratings", root + "/rate/ratings.csv"},
                         {"name", "textures"},
                         {"type", "artificial"},
                         {"out", root + "/ds"}}) == 0);
  REQUIRE(run("split", {{"dataset", root + "/ds"}, {"out", root + "/corpus"}, {"repetitions", "1"}}) == 0);
  REQUIRE(run("train", {{"corpus", root + "/corpus"}, {"out", root + "/train"}, {"epochs", "1"}, {"input-size", "48"}},
              &summary) == 0);
  CHECK(summary.find("selected epoch 0") != std::string::npos);

  iqa_model* model = nullptr;
  REQUIRE(iqa_model_load((root + "/train/model.iqacp").c_str(), &model) == IQA_OK);
  CHECK(iqa_model_input_size(model) == 48);
  const auto px = gradient_pixels(80, 60);
  iqa_image* img = nullptr;
  REQUIRE(iqa_image_create(80, 60, px.data(), &img) == IQA_OK);
  double a = 0.0, b = 1.0;
  REQUIRE(iqa_model_predict(model, img, &a) == IQA_OK);
  REQUIRE(iqa_model_predict(model, img, &b) == IQA_OK);
  CHECK(a == b);
  iqa_image_destroy(img);
  iqa_model_destroy(model);
  CHECK(iqa_model_load((root + "/ds/manifest.csv").c_str(), &model) == IQA_ERR_VALIDATION);
}
