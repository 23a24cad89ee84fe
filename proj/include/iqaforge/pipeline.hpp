#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqaforge/error.hpp"

namespace iqaforge {

// Flag values keyed by long name without dashes; repeatable flags keep
// every value in insertion order.
class CommandOptions {
 public:
  void add(std::string key, std::string value);
  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;  // last value
  std::vector<std::string> all(std::string_view key) const;
  std::vector<std::string> keys() const;

 private:
  std::multimap<std::string, std::string, std::less<>> values_;
};

struct CommandResult {
  int exit_code = 0;  // 0 ok, 1 validation, 2 I/O, 3 internal
  std::string summary;
  std::string json_path;  // result.json inside the output directory, when written
  std::vector<std::string> errors;
};

int exit_code_for(ErrorCategory category) noexcept;

// fixture, distort, rate, ingest, split, train, eval, report, experiment.
const std::vector<std::string>& command_names();

// Runs one pipeline stage. Never throws; failures map to exit codes.
CommandResult run_command(std::string_view name, const CommandOptions& options);

}  // namespace iqaforge
