#include <algorithm>
#include <exception>
#include <memory>
#include <string>

#include "iqaforge/checkpoint.hpp"
#include "iqaforge/distort.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/features.hpp"
#include "iqaforge/iqaforge.h"
#include "iqaforge/log.hpp"
#include "iqaforge/metrics.hpp"
#include "iqaforge/pipeline.hpp"
#include "iqaforge/trainer.hpp"

struct iqa_image {
  iqaforge::PixelImage image;
};

struct iqa_model {
  iqaforge::ModelCheckpoint checkpoint;
};

struct iqa_options {
  iqaforge::CommandOptions options;
};

struct iqa_result {
  iqaforge::CommandResult result;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_name;

iqa_status record(iqa_status status, std::string_view name, std::string_view message) {
  g_name = name;
  g_message = message;
  return status;
}

iqa_status ok() { return record(IQA_OK, "", ""); }

iqa_status invalid(std::string_view message) { return record(IQA_ERR_VALIDATION, "InvalidArgument", message); }

// Runs fn, translating library errors into status codes.
template <typename Fn>
iqa_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return ok();
  } catch (const iqaforge::Error& e) {
    return record(static_cast<iqa_status>(iqaforge::exit_code_for(e.category())), iqaforge::error_code_name(e.code()),
                  e.what());
  } catch (const std::bad_alloc&) {
    return record(IQA_ERR_INTERNAL, "Internal", "out of memory");
  } catch (const std::exception& e) {
    return record(IQA_ERR_INTERNAL, "Internal", e.what());
  } catch (...) {
    return record(IQA_ERR_INTERNAL, "Internal", "unknown failure");
  }
}

iqa_status correlation(double (*f)(std::span<const double>, std::span<const double>), const double* x,
                       const double* y, size_t n, double* out) {
  if ((n && (!x || !y)) || !out) return invalid("null argument");
  return guarded([&] { *out = f({x, n}, {y, n}); });
}

}  // namespace

extern "C" {

const char* iqa_version(void) { return "1.0.0"; }

const char* iqa_last_error(void) { return g_message.c_str(); }

const char* iqa_last_error_name(void) { return g_name.c_str(); }

iqa_status iqa_image_create(int width, int height, const uint8_t* rgb, iqa_image** out) {
  if (!rgb || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    if (width < 1 || height < 1) iqaforge::fail(iqaforge::ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
    *out = new iqa_image{iqaforge::PixelImage(width, height, std::vector<std::uint8_t>(rgb, rgb + n))};
  });
}

iqa_status iqa_image_load(const char* path, iqa_image** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new iqa_image{iqaforge::read_image(path)}; });
}

iqa_status iqa_image_decode(const uint8_t* bytes, size_t size, iqa_format format, iqa_image** out) {
  if ((size && !bytes) || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    if (format != IQA_FORMAT_PNG && format != IQA_FORMAT_JPEG) {
      iqaforge::fail(iqaforge::ErrorCode::UnsupportedFormat, "unknown image format");
    }
    const auto fmt = format == IQA_FORMAT_PNG ? iqaforge::ImageFormat::Png : iqaforge::ImageFormat::Jpeg;
    *out = new iqa_image{iqaforge::decode({bytes, size}, fmt)};
  });
}

iqa_status iqa_image_save(const iqa_image* image, const char* path, int jpeg_quality) {
  if (!image || !path) return invalid("null argument");
  return guarded([&] { iqaforge::write_image(image->image, path, jpeg_quality); });
}

int iqa_image_width(const iqa_image* image) { return image ? image->image.width() : 0; }

int iqa_image_height(const iqa_image* image) { return image ? image->image.height() : 0; }

const uint8_t* iqa_image_pixels(const iqa_image* image) { return image ? image->image.pixels().data() : nullptr; }

void iqa_image_destroy(iqa_image* image) { delete image; }

iqa_status iqa_image_distort(const iqa_image* image, const char* family, int level, double parameter,
                             iqa_image** out) {
  if (!image || !family || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    const auto fam = iqaforge::parse_family(family);
    if (!fam) iqaforge::fail(iqaforge::ErrorCode::InvalidSpec, std::string("unknown distortion family '") + family + "'");
    *out = new iqa_image{iqaforge::apply(image->image, {*fam, level, parameter})};
  });
}

size_t iqa_feature_dim(void) { return iqaforge::kFeatureDim; }

iqa_status iqa_image_features(const iqa_image* image, double* out, size_t capacity) {
  if (!image || !out) return invalid("null argument");
  if (capacity < iqaforge::kFeatureDim) return invalid("feature buffer too small");
  return guarded([&] {
    const auto f = iqaforge::extract_features(image->image);
    std::copy(f.begin(), f.end(), out);
  });
}

iqa_status iqa_mse(const double* y, const double* yhat, size_t n, double* out) {
  return correlation(&iqaforge::mse, y, yhat, n, out);
}

iqa_status iqa_plcc(const double* x, const double* y, size_t n, double* out) {
  return correlation(&iqaforge::plcc, x, y, n, out);
}

iqa_status iqa_srocc(const double* x, const double* y, size_t n, double* out) {
  return correlation(&iqaforge::srocc, x, y, n, out);
}

iqa_status iqa_model_load(const char* path, iqa_model** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new iqa_model{iqaforge::load_checkpoint(path)}; });
}

int iqa_model_input_size(const iqa_model* model) { return model ? model->checkpoint.input_size : 0; }

iqa_status iqa_model_predict(const iqa_model* model, const iqa_image* image, double* out) {
  if (!model || !image || !out) return invalid("null argument");
  return guarded([&] {
    const auto& ck = model->checkpoint;
    *out = ck.predict_features(iqaforge::extract_features(iqaforge::eval_transform(image->image, ck.input_size)));
  });
}

void iqa_model_destroy(iqa_model* model) { delete model; }

iqa_status iqa_options_create(iqa_options** out) {
  if (!out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new iqa_options{}; });
}

iqa_status iqa_options_add(iqa_options* options, const char* key, const char* value) {
  if (!options || !key || !value) return invalid("null argument");
  return guarded([&] { options->options.add(key, value); });
}

void iqa_options_destroy(iqa_options* options) { delete options; }

iqa_status iqa_command_run(const char* name, const iqa_options* options, iqa_result** out) {
  if (!name || !out) return invalid("null argument");
  *out = nullptr;
  const iqaforge::CommandOptions empty;
  iqa_status status = IQA_OK;
  const iqa_status alloc = guarded([&] {
    auto result = std::make_unique<iqa_result>();
    result->result = iqaforge::run_command(name, options ? options->options : empty);
    status = static_cast<iqa_status>(result->result.exit_code);
    *out = result.release();
  });
  if (alloc != IQA_OK) return alloc;
  const auto& r = (*out)->result;
  if (status == IQA_OK) return ok();
  return record(status, "CommandFailed", r.errors.empty() ? r.summary : r.errors.front());
}

int iqa_result_exit_code(const iqa_result* result) { return result ? result->result.exit_code : IQA_ERR_INTERNAL; }

const char* iqa_result_summary(const iqa_result* result) { return result ? result->result.summary.c_str() : ""; }

const char* iqa_result_json_path(const iqa_result* result) { return result ? result->result.json_path.c_str() : ""; }

size_t iqa_result_error_count(const iqa_result* result) { return result ? result->result.errors.size() : 0; }

const char* iqa_result_error(const iqa_result* result, size_t index) {
  if (!result || index >= result->result.errors.size()) return "";
  return result->result.errors[index].c_str();
}

void iqa_result_destroy(iqa_result* result) { delete result; }

iqa_status iqa_set_log_level(const char* level) {
  if (!level) return invalid("null argument");
  const std::string l(level);
  if (l == "error") iqaforge::log::set_level(iqaforge::log::Level::Error);
  else if (l == "info") iqaforge::log::set_level(iqaforge::log::Level::Info);
  else if (l == "debug") iqaforge::log::set_level(iqaforge::log::Level::Debug);
  else return invalid("log level must be error|info|debug");
  return ok();
}

}  // extern "C"
