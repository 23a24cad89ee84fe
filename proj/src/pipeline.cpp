#include <algorithm>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "iqaforge/csv.hpp"
#include "iqaforge/datasets.hpp"
#include "iqaforge/distort.hpp"
#include "iqaforge/fixture.hpp"
#include "iqaforge/generate.hpp"
#include "iqaforge/log.hpp"
#include "iqaforge/pipeline.hpp"
#include "iqaforge/trainer.hpp"

namespace iqaforge {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void CommandOptions::add(std::string key, std::string value) { values_.emplace(std::move(key), std::move(value)); }

bool CommandOptions::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> CommandOptions::get(std::string_view key) const {
  auto [lo, hi] = values_.equal_range(key);
  if (lo == hi) return std::nullopt;
  return std::prev(hi)->second;
}

std::vector<std::string> CommandOptions::all(std::string_view key) const {
  std::vector<std::string> out;
  auto [lo, hi] = values_.equal_range(key);
  for (auto it = lo; it != hi; ++it) out.push_back(it->second);
  return out;
}

std::vector<std::string> CommandOptions::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

int exit_code_for(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Validation: return 1;
    case ErrorCategory::Io: return 2;
    case ErrorCategory::Internal: return 3;
  }
  return 3;
}

namespace {

// Accumulates one command's outcome.
struct Outcome {
  std::string summary;
  Json outputs = Json::object();
  std::vector<std::string> errors;
  int exit_code = 0;

  void error(int code, std::string message) {
    exit_code = std::max(exit_code, code);
    errors.push_back(std::move(message));
  }
};

class Args {
 public:
  Args(const CommandOptions& o, std::string_view cmd, std::set<std::string> allowed) : o_(o), cmd_(cmd) {
    allowed.insert({"seed", "jobs"});
    for (const auto& k : o.keys()) {
      if (!allowed.count(k)) fail(ErrorCode::InvalidArgument, cmd_ + ": unknown option --" + k);
    }
  }

  std::string required(std::string_view key) const {
    auto v = o_.get(key);
    if (!v || v->empty()) fail(ErrorCode::InvalidArgument, cmd_ + ": missing required option --" + std::string(key));
    return *v;
  }
  std::string text(std::string_view key, std::string def) const { return o_.get(key).value_or(std::move(def)); }
  std::optional<std::string> maybe(std::string_view key) const { return o_.get(key); }
  std::vector<std::string> all(std::string_view key) const { return o_.all(key); }
  bool has(std::string_view key) const { return o_.has(key); }

  long long integer(std::string_view key, long long def, long long min_value) const {
    auto v = o_.get(key);
    if (!v) return def;
    long long out = 0;
    if (!parse_int(*v, out)) fail(ErrorCode::InvalidArgument, cmd_ + ": --" + std::string(key) + " expects an integer");
    if (out < min_value) {
      fail(ErrorCode::InvalidArgument,
           cmd_ + ": --" + std::string(key) + " must be >= " + std::to_string(min_value));
    }
    return out;
  }

  double real(std::string_view key, double def) const {
    auto v = o_.get(key);
    if (!v) return def;
    double out = 0;
    if (!parse_double(*v, out)) fail(ErrorCode::InvalidArgument, cmd_ + ": --" + std::string(key) + " expects a number");
    return out;
  }

  std::uint64_t seed() const {
    auto v = o_.get("seed");
    if (!v) return kDefaultSeed;
    long long out = 0;
    if (!parse_int(*v, out) || out < 0) fail(ErrorCode::InvalidArgument, cmd_ + ": --seed expects a non-negative integer");
    return static_cast<std::uint64_t>(out);
  }

  int jobs() const { return static_cast<int>(integer("jobs", 1, 1)); }

 private:
  const CommandOptions& o_;
  std::string cmd_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t n, std::string_view what) {
  const auto parts = split_list(text);
  std::vector<double> out;
  for (const auto& p : parts) {
    double v = 0;
    if (!parse_double(p, v)) fail(ErrorCode::InvalidArgument, std::string(what) + ": '" + p + "' is not a number");
    out.push_back(v);
  }
  if (out.size() != n) {
    fail(ErrorCode::InvalidArgument, std::string(what) + " expects " + std::to_string(n) + " comma-separated numbers");
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory '" + dir.string() + "': " + ec.message());
}

// Re-expresses `path` (relative to from_dir unless absolute) relative to to_dir.
std::string rebase(const std::string& path, const fs::path& from_dir, const fs::path& to_dir) {
  fs::path p(path);
  if (p.is_relative()) p = from_dir / p;
  const fs::path abs = fs::weakly_canonical(fs::absolute(p));
  const fs::path base = fs::weakly_canonical(fs::absolute(to_dir));
  return abs.lexically_proximate(base).generic_string();
}

fs::path parent_of(const fs::path& file) {
  const fs::path parent = file.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

struct Corpus {
  fs::path dir;
  std::vector<ImageRecord> records;
  std::vector<DatasetDescriptor> descriptors;
  SplitPlan plan;
};

Corpus load_corpus(const fs::path& dir) {
  Corpus c;
  c.dir = dir;
  c.records = read_manifest(dir / "corpus.csv");
  c.descriptors = parse_descriptors(read_text_file(dir / "datasets.json"));
  c.plan = parse_split_plan(read_text_file(dir / "splits.csv"), (dir / "splits.csv").string());
  return c;
}

TrainConfig train_config_from(const Args& a) {
  TrainConfig cfg;
  if (auto path = a.maybe("config")) cfg = parse_train_config(read_text_file(*path));
  if (a.has("seed")) cfg.seed = a.seed();
  cfg.jobs = a.jobs();
  cfg.epochs = static_cast<int>(a.integer("epochs", cfg.epochs, 1));
  cfg.batch_size = static_cast<int>(a.integer("batch-size", cfg.batch_size, 1));
  cfg.input_size = static_cast<int>(a.integer("input-size", cfg.input_size, kMinFeatureSide));
  cfg.split_repetition = static_cast<int>(a.integer("repetition", cfg.split_repetition, 0));
  if (auto tc = a.maybe("train-corpus")) cfg.train_corpus = split_list(*tc);
  cfg.validate();
  return cfg;
}

std::string events_text(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string matrix_text(std::span<const AggregateRow> rows) {
  return format_matrix_table(rows, "plcc") + "\n" + format_matrix_table(rows, "srocc");
}

// --- commands ------------------------------------------------------------

void cmd_fixture(const Args& a, Outcome& out) {
  const fs::path dir = a.required("out");
  const int count = static_cast<int>(a.integer("count", 60, 1));
  const int size = static_cast<int>(a.integer("size", 128, kMinFeatureSide));
  const auto domains = split_list(a.text("domains", "textures,shapes"));
  if (domains.empty()) fail(ErrorCode::InvalidArgument, "fixture: --domains is empty");
  const std::uint64_t seed = a.seed();
  Json written = Json::array();
  for (const auto& name : domains) {
    const FixtureDomain domain = parse_fixture_domain(name);
    write_pristine_fixture(dir / name, name, domain, count, size, derive_seed(seed, fnv1a(name)));
    written.push_back((fs::path(name) / "pristine.csv").generic_string());
  }
  out.outputs["pristine_manifests"] = written;
  out.summary = "wrote " + std::to_string(domains.size()) + " fixture domain(s) of " + std::to_string(count) +
                " pristine images";
}

void cmd_distort(const Args& a, Outcome& out) {
  const fs::path manifest = a.required("pristine");
  const fs::path dir = a.required("out");
  const std::string ladder_arg = a.text("ladder", "default");
  const auto pristine = read_manifest(manifest);
  const DistortionLadder ladder = ladder_arg == "default" ? DistortionLadder::standard() : load_ladder(ladder_arg);
  const auto report = generate_dataset(pristine, parent_of(manifest), ladder, dir, a.jobs());
  for (const auto& f : report.failures) out.error(2, "IoError: " + f.path + ": " + f.message);
  out.outputs["manifest"] = "manifest.csv";
  out.outputs["rows"] = report.records.size();
  out.summary = "wrote " + std::to_string(report.records.size()) + " manifest rows from " +
                std::to_string(pristine.size()) + " pristine images";
}

void cmd_rate(const Args& a, Outcome& out) {
  const fs::path manifest = a.required("manifest");
  const fs::path dir = a.required("out");
  const int observers = static_cast<int>(a.integer("observers", 40, 1));
  const auto records = read_manifest(manifest);
  const auto ratings = synthesize_ratings(records, a.seed(), observers);
  write_text_file(dir / "ratings.csv", format_ratings(ratings));
  out.outputs["ratings"] = "ratings.csv";
  out.summary = "synthesized " + std::to_string(observers) + " ratings for " + std::to_string(records.size()) +
                " images";
}

void cmd_ingest(const Args& a, Outcome& out) {
  const fs::path manifest = a.required("manifest");
  const fs::path dir = a.required("out");
  DatasetDescriptor d;
  d.name = a.required("name");
  const auto range = parse_numbers(a.text("range", "1,10"), 2, "--range");
  d.native_min = range[0];
  d.native_max = range[1];
  d.distortion_type = parse_distortion_type(a.text("type", "authentic"));
  d.split_policy = parse_split_policy(a.text("policy", "full"));
  d.validate();

  auto records = read_manifest(manifest);
  for (auto& r : records) {
    r.path = rebase(r.path, parent_of(manifest), dir);
    r.source = d.name;
  }
  std::map<std::string, std::vector<int>> ratings;
  if (auto rp = a.maybe("ratings")) ratings = read_ratings(*rp);
  const auto harmonized = harmonize(std::move(records), d, ratings);
  write_manifest(dir / "manifest.csv", harmonized);
  const std::vector<DatasetDescriptor> descs{d};
  write_text_file(dir / "descriptor.json", format_descriptors(descs));
  out.outputs["manifest"] = "manifest.csv";
  out.outputs["descriptor"] = "descriptor.json";
  out.summary = "harmonized " + std::to_string(harmonized.size()) + " records of '" + d.name + "'";
}

void cmd_split(const Args& a, Outcome& out) {
  const auto dataset_dirs = a.all("dataset");
  if (dataset_dirs.empty()) fail(ErrorCode::InvalidArgument, "split: at least one --dataset is required");
  const fs::path dir = a.required("out");
  const auto r = parse_numbers(a.text("ratios", "0.7,0.15,0.15"), 3, "--ratios");
  const SplitRatios ratios{r[0], r[1], r[2]};
  const int reps = static_cast<int>(a.integer("repetitions", 5, 1));

  std::vector<std::pair<DatasetDescriptor, std::vector<ImageRecord>>> datasets;
  for (const auto& ds : dataset_dirs) {
    const fs::path ddir(ds);
    auto descs = parse_descriptors(read_text_file(ddir / "descriptor.json"));
    if (descs.size() != 1) fail(ErrorCode::MalformedFile, (ddir / "descriptor.json").string() + ": expected one descriptor");
    auto records = read_manifest(ddir / "manifest.csv");
    for (auto& rec : records) rec.path = rebase(rec.path, ddir, dir);
    datasets.emplace_back(descs.front(), std::move(records));
  }

  std::vector<ImageRecord> merged;
  try {
    merged = merge_domains(datasets);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DuplicateId) throw;
    // Keep going so the audit can name every duplicate.
    for (const auto& [d, recs] : datasets) {
      for (auto rec : recs) {
        rec.id = d.name + "/" + rec.id;
        rec.subject_id = d.name + "/" + rec.subject_id;
        merged.push_back(std::move(rec));
      }
    }
  }
  std::vector<DatasetDescriptor> descriptors;
  for (const auto& [d, recs] : datasets) descriptors.push_back(d);

  const SplitPlan plan = make_splits(merged, descriptors, reps, ratios, a.seed());
  const LeakageReport audit = verify_no_leakage(plan, merged, descriptors);

  ensure_dir(dir);
  write_manifest(dir / "corpus.csv", merged);
  write_text_file(dir / "datasets.json", format_descriptors(descriptors));
  write_text_file(dir / "splits.csv", format_split_plan(plan));
  write_text_file(dir / "audit.json", format_audit_json(audit));
  for (const auto& v : audit.violations) {
    out.error(1, std::string(to_string(v.kind)) + ": " + v.subject_or_id + (v.detail.empty() ? "" : " (" + v.detail + ")"));
  }
  out.outputs["corpus"] = "corpus.csv";
  out.outputs["datasets"] = "datasets.json";
  out.outputs["splits"] = "splits.csv";
  out.outputs["audit"] = "audit.json";
  out.outputs["violations"] = audit.violations.size();
  out.summary = std::to_string(merged.size()) + " records from " + std::to_string(datasets.size()) +
                " dataset(s) split over " + std::to_string(reps) + " repetitions; " +
                std::to_string(audit.violations.size()) + " audit violation(s)";
}

void cmd_train(const Args& a, Outcome& out) {
  const Corpus corpus = load_corpus(a.required("corpus"));
  const fs::path dir = a.required("out");
  const TrainConfig cfg = train_config_from(a);
  ImageStore store(corpus.dir);
  std::vector<std::string> events;
  const TrainResult result =
      train(cfg, corpus.plan, corpus.records, corpus.descriptors, store, nullptr,
            [&](const std::string& line) { events.push_back(line); });
  ensure_dir(dir);
  save_checkpoint(result.checkpoint, dir / "model.iqacp");
  write_text_file(dir / "history.csv", format_history_csv(result.history));
  write_text_file(dir / "events.jsonl", events_text(events));
  const auto& best = result.history.epochs[static_cast<std::size_t>(result.history.selected_epoch)];
  out.outputs["checkpoint"] = "model.iqacp";
  out.outputs["history"] = "history.csv";
  out.outputs["events"] = "events.jsonl";
  out.outputs["selected_epoch"] = result.history.selected_epoch;
  out.outputs["val_plcc"] = best.val_plcc;
  out.summary = "trained " + cfg.model_name() + " on " + cfg.corpus_label() + " (repetition " +
                std::to_string(cfg.split_repetition) + "), selected epoch " +
                std::to_string(result.history.selected_epoch) + " with validation PLCC " +
                format_fixed(best.val_plcc, 4);
}

void cmd_eval(const Args& a, Outcome& out) {
  const Corpus corpus = load_corpus(a.required("corpus"));
  const fs::path dir = a.required("out");
  const ModelCheckpoint ckpt = load_checkpoint(a.required("model"));
  const TrainConfig cfg = parse_train_config(ckpt.config_json);
  const int rep = static_cast<int>(a.integer("repetition", cfg.split_repetition, 0));
  std::vector<std::string> tests;
  if (auto t = a.maybe("test")) tests = split_list(*t);
  else tests = testable_datasets(corpus.descriptors);
  ImageStore store(corpus.dir);
  const auto rows = evaluate(ckpt, cfg.model_name(), cfg.corpus_label(), corpus.plan, rep, corpus.records, tests,
                             store, nullptr, a.jobs());
  ensure_dir(dir);
  write_text_file(dir / "eval.csv", format_eval_csv(rows));
  for (const auto& r : rows) {
    if (!r.error.empty()) out.error(1, r.train_corpus + " -> " + r.test_dataset + ": " + r.error);
  }
  out.outputs["eval"] = "eval.csv";
  out.outputs["rows"] = rows.size();
  out.summary = "evaluated " + cfg.corpus_label() + " on " + std::to_string(rows.size()) + " test set(s)";
}

void cmd_report(const Args& a, Outcome& out) {
  const auto files = a.all("eval");
  if (files.empty()) fail(ErrorCode::InvalidArgument, "report: at least one --eval is required");
  const fs::path dir = a.required("out");
  std::vector<EvalRow> rows;
  for (const auto& f : files) {
    auto part = parse_eval_csv(read_text_file(f), f);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) fail(ErrorCode::EmptyInput, "empty report: the evaluation files hold no rows");
  const auto aggregates = aggregate_rows(rows);
  ensure_dir(dir);
  write_text_file(dir / "aggregate.csv", format_aggregate_csv(aggregates));
  write_text_file(dir / "table.txt", matrix_text(aggregates));
  out.outputs["aggregate"] = "aggregate.csv";
  out.outputs["table"] = "table.txt";
  if (auto c = a.maybe("corpus")) {
    const auto records = read_manifest(fs::path(*c) / "corpus.csv");
    std::vector<MosSample> samples;
    for (const auto& r : records) {
      if (r.mos) samples.push_back({r.source, *r.mos});
    }
    write_text_file(dir / "mos_histograms.csv", format_mos_histograms(samples));
    out.outputs["mos_histograms"] = "mos_histograms.csv";
  }
  for (const auto& r : rows) {
    if (!r.error.empty()) out.error(1, r.train_corpus + " -> " + r.test_dataset + ": " + r.error);
  }
  std::set<std::string> corpora, tests;
  for (const auto& g : aggregates) {
    corpora.insert(g.train_corpus);
    tests.insert(g.test_dataset);
  }
  out.outputs["training_conditions"] = corpora.size();
  out.outputs["test_datasets"] = tests.size();
  out.summary = std::to_string(rows.size()) + " evaluation rows, " + std::to_string(corpora.size()) + "x" +
                std::to_string(tests.size()) + " training x test matrix\n" + matrix_text(aggregates);
}

void cmd_experiment(const Args& a, Outcome& out) {
  const Corpus corpus = load_corpus(a.required("corpus"));
  const fs::path dir = a.required("out");
  const TrainConfig cfg = train_config_from(a);
  const int reps = static_cast<int>(a.integer("repetitions", static_cast<long long>(corpus.plan.assignments.size()), 1));
  ImageStore store(corpus.dir);
  std::vector<std::string> events;
  const EvalReport report = run_experiment_matrix(cfg, corpus.plan, corpus.records, corpus.descriptors, store, reps,
                                                  [&](const std::string& line) { events.push_back(line); });
  ensure_dir(dir);
  write_text_file(dir / "eval.csv", format_eval_csv(report.rows));
  write_text_file(dir / "aggregate.csv", format_aggregate_csv(report.aggregates));
  write_text_file(dir / "table.txt", matrix_text(report.aggregates));
  write_text_file(dir / "events.jsonl", events_text(events));
  for (const auto& r : report.rows) {
    if (!r.error.empty()) out.error(1, r.train_corpus + " -> " + r.test_dataset + ": " + r.error);
  }
  out.outputs["eval"] = "eval.csv";
  out.outputs["aggregate"] = "aggregate.csv";
  out.outputs["table"] = "table.txt";
  out.outputs["events"] = "events.jsonl";
  out.summary = std::to_string(report.rows.size()) + " evaluation rows over " + std::to_string(reps) +
                " repetitions\n" + matrix_text(report.aggregates);
}

struct CommandSpec {
  std::string name;
  std::set<std::string> options;
  void (*run)(const Args&, Outcome&);
};

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> specs = {
      {"fixture", {"out", "count", "size", "domains"}, cmd_fixture},
      {"distort", {"pristine", "ladder", "out"}, cmd_distort},
      {"rate", {"manifest", "out", "observers"}, cmd_rate},
      {"ingest", {"manifest", "ratings", "name", "range", "type", "policy", "out"}, cmd_ingest},
      {"split", {"dataset", "out", "ratios", "repetitions"}, cmd_split},
      {"train",
       {"corpus", "config", "out", "epochs", "batch-size", "input-size", "repetition", "train-corpus"},
       cmd_train},
      {"eval", {"corpus", "model", "out", "repetition", "test"}, cmd_eval},
      {"report", {"eval", "corpus", "out"}, cmd_report},
      {"experiment",
       {"corpus", "config", "out", "epochs", "batch-size", "input-size", "repetitions"},
       cmd_experiment},
  };
  return specs;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : commands()) n.push_back(c.name);
    return n;
  }();
  return names;
}

CommandResult run_command(std::string_view name, const CommandOptions& options) {
  Outcome out;
  const auto& specs = commands();
  const auto it = std::find_if(specs.begin(), specs.end(), [&](const CommandSpec& c) { return c.name == name; });
  try {
    if (it == specs.end()) fail(ErrorCode::InvalidArgument, "unknown command '" + std::string(name) + "'");
    const Args args(options, name, it->options);
    if (args.has("out")) ensure_dir(args.required("out"));
    it->run(args, out);
  } catch (const Error& e) {
    out.error(exit_code_for(e.category()), e.what());
  } catch (const std::exception& e) {
    out.error(3, std::string("Internal: ") + e.what());
  }

  CommandResult result;
  result.exit_code = out.exit_code;
  result.errors = out.errors;
  result.summary = out.errors.empty() ? out.summary : out.errors.front();
  if (!out.errors.empty() && !out.summary.empty()) result.summary = out.summary + "\n" + out.errors.front();

  if (auto dir = options.get("out"); dir && out.exit_code != 2) {
    Json j;
    j["command"] = std::string(name);
    j["exit_code"] = out.exit_code;
    j["summary"] = out.summary;
    j["errors"] = out.errors;
    j["outputs"] = out.outputs;
    const fs::path path = fs::path(*dir) / "result.json";
    try {
      ensure_dir(*dir);
      write_text_file(path, j.dump(2) + "\n");
      result.json_path = path.string();
    } catch (const Error& e) {
      log::error(std::string("cannot write result file: ") + e.what());
    }
  }
  for (const auto& e : out.errors) log::error(e);
  return result;
}

}  // namespace iqaforge
