#pragma once

#include <string_view>

namespace iqaforge::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

// Reads IQA_FORGE_LOG={error,info,debug}; defaults to info.
Level level_from_env();
void set_level(Level level);

void error(std::string_view message);
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace iqaforge::log
