#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "iqaforge/checkpoint.hpp"
#include "iqaforge/datasets.hpp"
#include "iqaforge/image.hpp"
#include "iqaforge/metrics.hpp"

namespace iqaforge {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  int input_size = 224;
  double max_lr = 2e-4;
  double weight_decay = 1e-5;
  std::uint64_t seed = kDefaultSeed;
  std::vector<std::string> train_corpus = {"all"};
  int split_repetition = 0;
  double oversize_fraction = 0.125;
  std::vector<int> hidden_widths = {64, 16};
  int jobs = 1;

  void validate() const;
  bool trains_on_all() const;
  std::string corpus_label() const;  // "All" or names joined by '+'
  std::string model_name() const;
};

// JSON object; unknown keys are rejected. `jobs` never enters snapshots.
TrainConfig parse_train_config(std::string_view json_text);
std::string format_train_config(const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_plcc = 0.0;
  double lr = 0.0;  // learning rate at the epoch's last step
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int selected_epoch = 0;
};

std::string format_history_csv(const TrainHistory& history);

// Train: shorter side -> round((1 + oversize) * input_size), hflip with p=0.5,
// random crop to input_size^2. Eval: shorter side -> input_size, centre crop.
PixelImage train_transform(const PixelImage& img, int input_size, Rng& rng, double oversize_fraction = 0.125);
PixelImage eval_transform(const PixelImage& img, int input_size);

// Decoded images keyed by record id, loaded on demand from disk or seeded
// directly in memory. Thread safe.
class ImageStore {
 public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  void put(const std::string& id, PixelImage img);
  std::shared_ptr<const PixelImage> get(const ImageRecord& record);

 private:
  std::filesystem::path base_dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const PixelImage>> images_;
};

// Memoised features: eval features per (image, input size); train features
// per (image, input size, seed, epoch). Thread safe.
class FeatureCache {
 public:
  FeatureVector eval_features(ImageStore& store, const ImageRecord& record, int input_size);
  FeatureVector train_features(ImageStore& store, const ImageRecord& record, int input_size, std::uint64_t seed,
                               int epoch, double oversize_fraction);

 private:
  std::mutex mu_;
  std::map<std::string, FeatureVector> eval_;
  std::map<std::string, FeatureVector> train_;
};

// Called once per epoch with a single-line JSON event.
using EventSink = std::function<void(const std::string&)>;

struct TrainResult {
  ModelCheckpoint checkpoint;
  TrainHistory history;
};

// Records selected by the training corpus and repetition for one partition.
std::vector<const ImageRecord*> partition_records(std::span<const ImageRecord> records, const SplitPlan& plan,
                                                  int repetition, Partition partition,
                                                  const std::vector<std::string>& datasets);

TrainResult train(const TrainConfig& config, const SplitPlan& plan, std::span<const ImageRecord> records,
                  std::span<const DatasetDescriptor> descriptors, ImageStore& store, FeatureCache* cache = nullptr,
                  const EventSink& events = {});

using Predictor = std::function<double(const ImageRecord&, const FeatureVector&)>;

// One row per test dataset; failures (empty test set, degenerate
// predictions) are recorded in the row rather than thrown.
std::vector<EvalRow> evaluate_predictor(const Predictor& predictor, const std::string& model_name,
                                        const std::string& train_corpus, const SplitPlan& plan, int repetition,
                                        std::span<const ImageRecord> records,
                                        const std::vector<std::string>& test_datasets, int input_size,
                                        ImageStore& store, FeatureCache* cache = nullptr, int jobs = 1);

std::vector<EvalRow> evaluate(const ModelCheckpoint& checkpoint, const std::string& model_name,
                              const std::string& train_corpus, const SplitPlan& plan, int repetition,
                              std::span<const ImageRecord> records, const std::vector<std::string>& test_datasets,
                              ImageStore& store, FeatureCache* cache = nullptr, int jobs = 1);

// Datasets that may appear as training conditions / test columns.
std::vector<std::string> trainable_datasets(std::span<const DatasetDescriptor> descriptors);
std::vector<std::string> testable_datasets(std::span<const DatasetDescriptor> descriptors);

// Every repetition: one run per trainable dataset plus one on all of them,
// each evaluated on every testable dataset.
EvalReport run_experiment_matrix(const TrainConfig& base, const SplitPlan& plan, std::span<const ImageRecord> records,
                                 std::span<const DatasetDescriptor> descriptors, ImageStore& store,
                                 int n_repetitions = 5, const EventSink& events = {});

}  // namespace iqaforge
