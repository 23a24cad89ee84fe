#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/log.hpp"
#include "iqaforge/optim.hpp"
#include "iqaforge/parallel.hpp"
#include "iqaforge/trainer.hpp"

namespace iqaforge {

// --- config --------------------------------------------------------------

void TrainConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidArgument, "train config: " + m); };
  if (epochs < 1) bad("epochs must be >= 1");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (input_size < kMinFeatureSide) bad("input_size must be >= 32");
  if (!(max_lr > 0)) bad("max_lr must be > 0");
  if (!(weight_decay >= 0)) bad("weight_decay must be >= 0");
  if (!(oversize_fraction > 0)) bad("oversize_fraction must be > 0");
  if (split_repetition < 0) bad("split_repetition must be >= 0");
  if (train_corpus.empty()) bad("train_corpus must name at least one dataset or \"all\"");
  if (hidden_widths.empty()) bad("hidden_widths must not be empty");
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (hidden_widths[i] < 1) bad("hidden widths must be >= 1");
    if (i > 0 && hidden_widths[i] >= hidden_widths[i - 1]) bad("hidden widths must decrease");
  }
}

bool TrainConfig::trains_on_all() const {
  return std::any_of(train_corpus.begin(), train_corpus.end(), [](const std::string& s) {
    return s == "all" || s == "All";
  });
}

std::string TrainConfig::corpus_label() const {
  if (trains_on_all()) return "All";
  std::string out;
  for (const auto& s : train_corpus) out += (out.empty() ? "" : "+") + s;
  return out;
}

std::string TrainConfig::model_name() const {
  std::string out = "nss" + std::to_string(kFeatureDim) + "-mlp";
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) out += (i ? "x" : "") + std::to_string(hidden_widths[i]);
  return out + "@" + std::to_string(input_size);
}

TrainConfig parse_train_config(std::string_view json_text) {
  TrainConfig c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedFile, std::string("train config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::MalformedFile, "train config must be a JSON object");
  static const std::set<std::string> known = {"epochs",        "batch_size",       "input_size",
                                              "max_lr",        "weight_decay",     "seed",
                                              "train_corpus",  "split_repetition", "oversize_fraction",
                                              "hidden_widths", "jobs"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) fail(ErrorCode::InvalidArgument, "train config: unknown key '" + key + "'");
    }
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.input_size = j.value("input_size", c.input_size);
    c.max_lr = j.value("max_lr", c.max_lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    if (j.contains("train_corpus")) {
      if (j["train_corpus"].is_string()) c.train_corpus = {j["train_corpus"].get<std::string>()};
      else c.train_corpus = j["train_corpus"].get<std::vector<std::string>>();
    }
    c.split_repetition = j.value("split_repetition", c.split_repetition);
    c.oversize_fraction = j.value("oversize_fraction", c.oversize_fraction);
    c.hidden_widths = j.value("hidden_widths", c.hidden_widths);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string format_train_config(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["input_size"] = c.input_size;
  j["max_lr"] = c.max_lr;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["train_corpus"] = c.train_corpus;
  j["split_repetition"] = c.split_repetition;
  j["oversize_fraction"] = c.oversize_fraction;
  j["hidden_widths"] = c.hidden_widths;
  return j.dump();
}

std::string format_history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_plcc,lr,selected\n";
  for (const auto& e : h.epochs) {
    out += join_csv({std::to_string(e.epoch), format_double(e.train_loss), format_double(e.val_plcc),
                     format_double(e.lr), e.epoch == h.selected_epoch ? "1" : "0"});
    out.push_back('\n');
  }
  return out;
}

// --- transforms ----------------------------------------------------------

PixelImage train_transform(const PixelImage& img, int input_size, Rng& rng, double oversize_fraction) {
  const int pre = static_cast<int>(std::lround((1.0 + oversize_fraction) * input_size));
  PixelImage out = resize_shorter_side(img, pre);
  if (rng.bernoulli(0.5)) out = hflip(out);
  return random_crop(out, input_size, input_size, rng);
}

PixelImage eval_transform(const PixelImage& img, int input_size) {
  return center_crop(resize_shorter_side(img, input_size), input_size, input_size);
}

// --- stores --------------------------------------------------------------

void ImageStore::put(const std::string& id, PixelImage img) {
  std::lock_guard lock(mu_);
  images_[id] = std::make_shared<const PixelImage>(std::move(img));
}

std::shared_ptr<const PixelImage> ImageStore::get(const ImageRecord& record) {
  {
    std::lock_guard lock(mu_);
    if (auto it = images_.find(record.id); it != images_.end()) return it->second;
  }
  std::filesystem::path p(record.path);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  auto img = std::make_shared<const PixelImage>(read_image(p));
  std::lock_guard lock(mu_);
  return images_.emplace(record.id, std::move(img)).first->second;
}

FeatureVector FeatureCache::eval_features(ImageStore& store, const ImageRecord& record, int input_size) {
  const std::string key = record.id + "|" + std::to_string(input_size);
  {
    std::lock_guard lock(mu_);
    if (auto it = eval_.find(key); it != eval_.end()) return it->second;
  }
  const FeatureVector f = extract_features(eval_transform(*store.get(record), input_size));
  std::lock_guard lock(mu_);
  return eval_.emplace(key, f).first->second;
}

FeatureVector FeatureCache::train_features(ImageStore& store, const ImageRecord& record, int input_size,
                                           std::uint64_t seed, int epoch, double oversize_fraction) {
  const std::uint64_t stream = derive_seed(seed, static_cast<std::uint64_t>(epoch), fnv1a(record.id));
  const std::string key = record.id + "|" + std::to_string(input_size) + "|" + std::to_string(stream) + "|" +
                          format_double(oversize_fraction);
  {
    std::lock_guard lock(mu_);
    if (auto it = train_.find(key); it != train_.end()) return it->second;
  }
  Rng rng(stream);
  const FeatureVector f =
      extract_features(train_transform(*store.get(record), input_size, rng, oversize_fraction));
  std::lock_guard lock(mu_);
  return train_.emplace(key, f).first->second;
}

// --- training ------------------------------------------------------------

std::vector<std::string> trainable_datasets(std::span<const DatasetDescriptor> descriptors) {
  std::vector<std::string> out;
  for (const auto& d : descriptors) {
    if (d.split_policy != SplitPolicy::TestOnly) out.push_back(d.name);
  }
  return out;
}

std::vector<std::string> testable_datasets(std::span<const DatasetDescriptor> descriptors) {
  std::vector<std::string> out;
  for (const auto& d : descriptors) {
    if (d.split_policy != SplitPolicy::TrainValOnly) out.push_back(d.name);
  }
  return out;
}

std::vector<const ImageRecord*> partition_records(std::span<const ImageRecord> records, const SplitPlan& plan,
                                                  int repetition, Partition partition,
                                                  const std::vector<std::string>& datasets) {
  std::vector<const ImageRecord*> out;
  for (const auto& r : records) {
    if (std::find(datasets.begin(), datasets.end(), r.source) == datasets.end()) continue;
    const auto p = plan.partition_of(repetition, r.subject_id);
    if (p && *p == partition) out.push_back(&r);
  }
  return out;
}

namespace {

std::vector<std::string> resolve_corpus(const TrainConfig& config, std::span<const DatasetDescriptor> descriptors) {
  const auto trainable = trainable_datasets(descriptors);
  if (config.trains_on_all()) return trainable;
  for (const auto& name : config.train_corpus) {
    const bool known = std::any_of(descriptors.begin(), descriptors.end(),
                                   [&](const DatasetDescriptor& d) { return d.name == name; });
    if (!known) fail(ErrorCode::MissingDescriptor, "training dataset '" + name + "' has no descriptor");
    if (std::find(trainable.begin(), trainable.end(), name) == trainable.end()) {
      fail(ErrorCode::InfeasiblePolicy, "dataset '" + name + "' is test_only and cannot be trained on");
    }
  }
  return config.train_corpus;
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TrainResult train(const TrainConfig& config, const SplitPlan& plan, std::span<const ImageRecord> records,
                  std::span<const DatasetDescriptor> descriptors, ImageStore& store, FeatureCache* cache,
                  const EventSink& events) {
  config.validate();
  FeatureCache local_cache;
  FeatureCache& features = cache ? *cache : local_cache;
  const int rep = config.split_repetition;
  if (rep >= static_cast<int>(plan.assignments.size())) {
    fail(ErrorCode::InvalidArgument, "split plan has no repetition " + std::to_string(rep));
  }
  const auto corpus = resolve_corpus(config, descriptors);
  const auto train_recs = partition_records(records, plan, rep, Partition::Train, corpus);
  const auto val_recs = partition_records(records, plan, rep, Partition::Val, corpus);
  if (train_recs.empty()) fail(ErrorCode::EmptyPartition, "no training images for " + config.corpus_label());
  if (val_recs.size() < 2) fail(ErrorCode::EmptyPartition, "fewer than 2 validation images for " + config.corpus_label());

  const std::size_t n_train = train_recs.size();
  std::vector<double> targets(n_train), weights(n_train);
  std::vector<int> levels(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    if (!train_recs[i]->mos) fail(ErrorCode::InvalidArgument, "training image '" + train_recs[i]->id + "' has no MOS");
    targets[i] = *train_recs[i]->mos;
    levels[i] = quality_level(targets[i]);
  }
  const auto class_w = class_weights(levels);
  for (std::size_t i = 0; i < n_train; ++i) weights[i] = class_w.at(levels[i]);

  std::vector<double> val_targets(val_recs.size());
  for (std::size_t i = 0; i < val_recs.size(); ++i) {
    if (!val_recs[i]->mos) fail(ErrorCode::InvalidArgument, "validation image '" + val_recs[i]->id + "' has no MOS");
    val_targets[i] = *val_recs[i]->mos;
  }

  // Normaliser and target scaling come from the training partition only.
  std::vector<FeatureVector> train_eval_f(n_train);
  parallel_for(n_train, config.jobs, [&](std::size_t i) {
    train_eval_f[i] = features.eval_features(store, *train_recs[i], config.input_size);
  });
  ModelCheckpoint ckpt;
  ckpt.normalizer = FeatureNormalizer::fit(train_eval_f);
  ckpt.target_mean = mean_of(targets);
  {
    double ss = 0.0;
    for (double t : targets) ss += (t - ckpt.target_mean) * (t - ckpt.target_mean);
    const double sd = std::sqrt(ss / static_cast<double>(n_train));
    ckpt.target_scale = sd > 1e-12 ? sd : 1.0;
  }
  ckpt.input_size = config.input_size;
  ckpt.config_json = format_train_config(config);

  std::vector<FeatureVector> val_f(val_recs.size());
  parallel_for(val_recs.size(), config.jobs, [&](std::size_t i) {
    val_f[i] = ckpt.normalizer.apply(features.eval_features(store, *val_recs[i], config.input_size));
  });

  std::vector<int> widths{static_cast<int>(kFeatureDim)};
  widths.insert(widths.end(), config.hidden_widths.begin(), config.hidden_widths.end());
  widths.push_back(1);
  Rng init_rng(derive_seed(config.seed, static_cast<std::uint64_t>(rep), 1));
  MlpRegressor model = MlpRegressor::initialized(widths, init_rng);
  AdamW optimizer(model.parameter_count(), AdamWConfig{config.weight_decay});
  Rng dropout_rng(derive_seed(config.seed, static_cast<std::uint64_t>(rep), 2));

  const auto batch = static_cast<std::size_t>(config.batch_size);
  const long long steps_per_epoch = static_cast<long long>((n_train + batch - 1) / batch);
  const long long total_steps = steps_per_epoch * config.epochs;
  long long step = 0;

  TrainResult result;
  double best_plcc = -2.0;
  std::vector<double> best_params;
  std::vector<FeatureVector> epoch_f(n_train);
  std::vector<double> grads(model.parameter_count());
  std::vector<ForwardTrace> traces(batch);
  std::vector<double> preds, batch_targets, batch_weights;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    parallel_for(n_train, config.jobs, [&](std::size_t i) {
      epoch_f[i] = ckpt.normalizer.apply(features.train_features(store, *train_recs[i], config.input_size,
                                                                 config.seed, epoch, config.oversize_fraction));
    });
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng order_rng(derive_seed(config.seed, static_cast<std::uint64_t>(rep), 3, static_cast<std::uint64_t>(epoch)));
    order_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t end = std::min(start + batch, n_train);
      const std::size_t m = end - start;
      preds.resize(m);
      batch_targets.resize(m);
      batch_weights.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = order[start + k];
        preds[k] = ckpt.target_mean + ckpt.target_scale * model.forward(epoch_f[i], Mode::Train, &dropout_rng, &traces[k]);
        batch_targets[k] = targets[i];
        batch_weights[k] = weights[i];
      }
      const LossResult loss = weighted_mse_loss(preds, batch_targets, batch_weights);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t k = 0; k < m; ++k) model.backward(traces[k], ckpt.target_scale * loss.grad[k], grads);
      lr = onecycle_lr(step++, total_steps, config.max_lr);
      optimizer.step(model.parameters(), grads, lr);
      loss_sum += loss.loss * static_cast<double>(m);
    }

    std::vector<double> val_preds(val_f.size());
    for (std::size_t i = 0; i < val_f.size(); ++i) {
      val_preds[i] = ckpt.target_mean + ckpt.target_scale * model.forward(val_f[i], Mode::Eval);
    }
    double val_plcc = 0.0;
    try {
      val_plcc = plcc(val_preds, val_targets);
    } catch (const Error& e) {
      fail(e.code(), config.corpus_label() + " repetition " + std::to_string(rep) + " epoch " +
                         std::to_string(epoch) + ": validation predictions are degenerate (" + e.what() + ")");
    }
    const EpochStats stats{epoch, loss_sum / static_cast<double>(n_train), val_plcc, lr};
    result.history.epochs.push_back(stats);
    if (val_plcc > best_plcc) {
      best_plcc = val_plcc;
      best_params.assign(model.parameters().begin(), model.parameters().end());
      result.history.selected_epoch = epoch;
    }
    if (events) {
      nlohmann::ordered_json ev;
      ev["event"] = "epoch";
      ev["train_corpus"] = config.corpus_label();
      ev["repetition"] = rep;
      ev["epoch"] = epoch;
      ev["loss"] = stats.train_loss;
      ev["val_plcc"] = stats.val_plcc;
      ev["lr"] = stats.lr;
      events(ev.dump());
    }
  }

  std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
  ckpt.model = std::move(model);
  result.checkpoint = std::move(ckpt);
  return result;
}

// --- evaluation ----------------------------------------------------------

std::vector<EvalRow> evaluate_predictor(const Predictor& predictor, const std::string& model_name,
                                        const std::string& train_corpus, const SplitPlan& plan, int repetition,
                                        std::span<const ImageRecord> records,
                                        const std::vector<std::string>& test_datasets, int input_size,
                                        ImageStore& store, FeatureCache* cache, int jobs) {
  FeatureCache local_cache;
  FeatureCache& features = cache ? *cache : local_cache;
  std::vector<EvalRow> rows;
  for (const auto& name : test_datasets) {
    EvalRow row{model_name, train_corpus, name, repetition, std::nullopt, std::nullopt, {}};
    const auto recs = partition_records(records, plan, repetition, Partition::Test, {name});
    try {
      if (recs.empty()) fail(ErrorCode::EmptyTestSet, "no test images for '" + name + "'");
      std::vector<double> preds(recs.size()), truth(recs.size());
      parallel_for(recs.size(), jobs, [&](std::size_t i) {
        const FeatureVector f = features.eval_features(store, *recs[i], input_size);
        preds[i] = predictor(*recs[i], f);
      });
      for (std::size_t i = 0; i < recs.size(); ++i) {
        if (!recs[i]->mos) fail(ErrorCode::InvalidArgument, "test image '" + recs[i]->id + "' has no MOS");
        truth[i] = *recs[i]->mos;
      }
      row.plcc = plcc(preds, truth);
      row.srocc = srocc(preds, truth);
    } catch (const Error& e) {
      row.plcc.reset();
      row.srocc.reset();
      row.error = e.what();
      log::info("evaluation cell failed: " + train_corpus + " -> " + name + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EvalRow> evaluate(const ModelCheckpoint& checkpoint, const std::string& model_name,
                              const std::string& train_corpus, const SplitPlan& plan, int repetition,
                              std::span<const ImageRecord> records, const std::vector<std::string>& test_datasets,
                              ImageStore& store, FeatureCache* cache, int jobs) {
  const Predictor predictor = [&](const ImageRecord&, const FeatureVector& f) {
    return checkpoint.predict_features(f);
  };
  return evaluate_predictor(predictor, model_name, train_corpus, plan, repetition, records, test_datasets,
                            checkpoint.input_size, store, cache, jobs);
}

EvalReport run_experiment_matrix(const TrainConfig& base, const SplitPlan& plan, std::span<const ImageRecord> records,
                                 std::span<const DatasetDescriptor> descriptors, ImageStore& store, int n_repetitions,
                                 const EventSink& events) {
  if (n_repetitions < 1 || n_repetitions > static_cast<int>(plan.assignments.size())) {
    fail(ErrorCode::InvalidArgument, "split plan holds " + std::to_string(plan.assignments.size()) +
                                         " repetitions, " + std::to_string(n_repetitions) + " requested");
  }
  const auto trainable = trainable_datasets(descriptors);
  const auto testable = testable_datasets(descriptors);
  std::vector<std::vector<std::string>> conditions;
  for (const auto& name : trainable) conditions.push_back({name});
  conditions.push_back({"all"});

  FeatureCache cache;
  EvalReport report;
  for (int rep = 0; rep < n_repetitions; ++rep) {
    for (const auto& corpus : conditions) {
      TrainConfig config = base;
      config.train_corpus = corpus;
      config.split_repetition = rep;
      const std::string label = config.corpus_label();
      try {
        const TrainResult run = train(config, plan, records, descriptors, store, &cache, events);
        auto rows = evaluate(run.checkpoint, config.model_name(), label, plan, rep, records, testable, store, &cache,
                             config.jobs);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
        log::info("repetition " + std::to_string(rep) + " " + label + ": selected epoch " +
                  std::to_string(run.history.selected_epoch));
      } catch (const Error& e) {
        log::error("training " + label + " repetition " + std::to_string(rep) + " failed: " + e.what());
        for (const auto& name : testable) {
          report.rows.push_back({config.model_name(), label, name, rep, std::nullopt, std::nullopt, e.what()});
        }
      }
    }
  }
  report.aggregates = aggregate_rows(report.rows);
  return report;
}

}  // namespace iqaforge
