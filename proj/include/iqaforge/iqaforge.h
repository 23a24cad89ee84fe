/* C interface to the iqaforge toolkit. All handles are opaque; every
 * fallible call returns an iqa_status and records a message retrievable with
 * iqa_last_error() on the calling thread. */
#ifndef IQAFORGE_H
#define IQAFORGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(IQAFORGE_BUILDING_LIBRARY)
#define IQA_API __attribute__((visibility("default")))
#else
#define IQA_API
#endif

typedef enum iqa_status {
  IQA_OK = 0,
  IQA_ERR_VALIDATION = 1,
  IQA_ERR_IO = 2,
  IQA_ERR_INTERNAL = 3
} iqa_status;

typedef enum iqa_format { IQA_FORMAT_PNG = 0, IQA_FORMAT_JPEG = 1 } iqa_format;

typedef struct iqa_image iqa_image;
typedef struct iqa_model iqa_model;
typedef struct iqa_options iqa_options;
typedef struct iqa_result iqa_result;

IQA_API const char* iqa_version(void);

/* Message and error name ("MalformedFile", ...) of the last failure on this
 * thread; empty strings after a successful call. */
IQA_API const char* iqa_last_error(void);
IQA_API const char* iqa_last_error_name(void);

/* Images: 8-bit RGB, row-major, 3 interleaved channels. */
IQA_API iqa_status iqa_image_create(int width, int height, const uint8_t* rgb, iqa_image** out);
IQA_API iqa_status iqa_image_load(const char* path, iqa_image** out);
IQA_API iqa_status iqa_image_decode(const uint8_t* bytes, size_t size, iqa_format format, iqa_image** out);
IQA_API iqa_status iqa_image_save(const iqa_image* image, const char* path, int jpeg_quality);
IQA_API int iqa_image_width(const iqa_image* image);
IQA_API int iqa_image_height(const iqa_image* image);
IQA_API const uint8_t* iqa_image_pixels(const iqa_image* image);
IQA_API void iqa_image_destroy(iqa_image* image);

/* family: jpeg, blur, pixelate, sharpen, brightness, color, contrast. */
IQA_API iqa_status iqa_image_distort(const iqa_image* image, const char* family, int level, double parameter,
                                     iqa_image** out);

IQA_API size_t iqa_feature_dim(void);
/* Writes iqa_feature_dim() values; capacity is the length of out. */
IQA_API iqa_status iqa_image_features(const iqa_image* image, double* out, size_t capacity);

IQA_API iqa_status iqa_mse(const double* y, const double* yhat, size_t n, double* out);
IQA_API iqa_status iqa_plcc(const double* x, const double* y, size_t n, double* out);
IQA_API iqa_status iqa_srocc(const double* x, const double* y, size_t n, double* out);

/* Checkpoints. predict applies the evaluation transform first. */
IQA_API iqa_status iqa_model_load(const char* path, iqa_model** out);
IQA_API int iqa_model_input_size(const iqa_model* model);
IQA_API iqa_status iqa_model_predict(const iqa_model* model, const iqa_image* image, double* out);
IQA_API void iqa_model_destroy(iqa_model* model);

/* Pipeline commands: fixture, distort, rate, ingest, split, train, eval,
 * report, experiment. Option keys are flag names without leading dashes;
 * repeat a key to pass several values. */
IQA_API iqa_status iqa_options_create(iqa_options** out);
IQA_API iqa_status iqa_options_add(iqa_options* options, const char* key, const char* value);
IQA_API void iqa_options_destroy(iqa_options* options);

/* Returns the command's exit status; *out receives the result even when the
 * command fails (it is NULL only when arguments are invalid). */
IQA_API iqa_status iqa_command_run(const char* name, const iqa_options* options, iqa_result** out);
IQA_API int iqa_result_exit_code(const iqa_result* result);
IQA_API const char* iqa_result_summary(const iqa_result* result);
IQA_API const char* iqa_result_json_path(const iqa_result* result);
IQA_API size_t iqa_result_error_count(const iqa_result* result);
IQA_API const char* iqa_result_error(const iqa_result* result, size_t index);
IQA_API void iqa_result_destroy(iqa_result* result);

/* error, info or debug; overrides IQA_FORGE_LOG. */
IQA_API iqa_status iqa_set_log_level(const char* level);

#ifdef __cplusplus
}
#endif

#endif
