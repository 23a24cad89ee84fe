// Command-line front end; every stage is executed through the C interface.
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iqaforge/iqaforge.h"

namespace {

struct Flag {
  const char* name;
  const char* help;
  bool required = false;
  bool repeatable = false;
};

struct Command {
  const char* name;
  const char* help;
  std::vector<Flag> flags;
};

const std::vector<Command>& command_table() {
  static const std::vector<Command> table = {
      {"fixture",
       "write procedural pristine images for one or more synthetic domains",
       {{"out", "output directory", true},
        {"count", "pristine images per domain (default 60)"},
        {"size", "image side in pixels (default 128)"},
        {"domains", "comma-separated domains: textures, shapes (default both)"}}},
      {"distort",
       "expand a pristine manifest with the distortion ladder",
       {{"pristine", "pristine manifest CSV", true},
        {"ladder", "'default' or a ladder CSV file (default 'default')"},
        {"out", "output directory", true}}},
      {"rate",
       "synthesize severity-driven panel ratings for a manifest",
       {{"manifest", "manifest CSV", true},
        {"out", "output directory", true},
        {"observers", "ratings per image (default 40)"}}},
      {"ingest",
       "harmonize a manifest (and optional ratings) onto the [1, 10] scale",
       {{"manifest", "manifest CSV", true},
        {"ratings", "ratings CSV image_id,observer_id,rating"},
        {"name", "dataset name", true},
        {"range", "native score range 'min,max' (default 1,10)"},
        {"type", "authentic or artificial (default authentic)"},
        {"policy", "full, train_val_only or test_only (default full)"},
        {"out", "output directory", true}}},
      {"split",
       "merge ingested datasets and write subject-grouped splits with an audit",
       {{"dataset", "ingested dataset directory (repeatable)", true, true},
        {"out", "output directory", true},
        {"ratios", "train,val,test (default 0.7,0.15,0.15)"},
        {"repetitions", "number of repetitions (default 5)"}}},
      {"train",
       "train one regressor on a split corpus",
       {{"corpus", "split output directory", true},
        {"config", "training config JSON"},
        {"out", "output directory", true},
        {"epochs", "override epochs"},
        {"batch-size", "override batch size"},
        {"input-size", "override input size"},
        {"repetition", "split repetition index"},
        {"train-corpus", "comma-separated dataset names or 'all'"}}},
      {"eval",
       "evaluate a checkpoint on the test partitions",
       {{"corpus", "split output directory", true},
        {"model", "checkpoint file", true},
        {"out", "output directory", true},
        {"repetition", "split repetition index (default: the checkpoint's)"},
        {"test", "comma-separated test datasets (default: all eligible)"}}},
      {"report",
       "aggregate evaluation rows into the training x test matrix",
       {{"eval", "evaluation CSV (repeatable)", true, true},
        {"corpus", "split output directory, enables MOS histograms"},
        {"out", "output directory", true}}},
      {"experiment",
       "run the full single-domain and merged-domain experiment matrix",
       {{"corpus", "split output directory", true},
        {"config", "training config JSON"},
        {"out", "output directory", true},
        {"epochs", "override epochs"},
        {"batch-size", "override batch size"},
        {"input-size", "override input size"},
        {"repetitions", "repetitions to run (default: all in the plan)"}}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"No-reference image quality toolkit"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level, "error, info or debug (overrides IQA_FORGE_LOG)");

  std::map<std::string, std::map<std::string, std::vector<std::string>>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : command_table()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    auto& slots = values[cmd.name];
    for (const auto& f : cmd.flags) {
      auto* opt = sub->add_option(std::string("--") + f.name, slots[f.name], f.help);
      if (f.required) opt->required();
      if (f.repeatable) opt->take_all();
      else opt->expected(1);
    }
    sub->add_option("--seed", slots["seed"], "random seed (default 20240521)")->expected(1);
    sub->add_option("--jobs", slots["jobs"], "worker threads (default 1)")->expected(1);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  if (!log_level.empty() && iqa_set_log_level(log_level.c_str()) != IQA_OK) {
    std::fprintf(stderr, "error: %s\n", iqa_last_error());
    return 1;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    iqa_options* options = nullptr;
    if (iqa_options_create(&options) != IQA_OK) {
      std::fprintf(stderr, "error: %s\n", iqa_last_error());
      return 3;
    }
    for (const auto& [key, vals] : values[name]) {
      for (const auto& v : vals) iqa_options_add(options, key.c_str(), v.c_str());
    }
    iqa_result* result = nullptr;
    iqa_command_run(name.c_str(), options, &result);
    iqa_options_destroy(options);
    if (!result) {
      std::fprintf(stderr, "error: %s\n", iqa_last_error());
      return 3;
    }
    const int code = iqa_result_exit_code(result);
    std::printf("%s\n", iqa_result_summary(result));
    for (size_t i = 0; i < iqa_result_error_count(result); ++i) std::fprintf(stderr, "error: %s\n", iqa_result_error(result, i));
    if (*iqa_result_json_path(result)) std::printf("result: %s\n", iqa_result_json_path(result));
    iqa_result_destroy(result);
    return code;
  }
  return 1;
}
