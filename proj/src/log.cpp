#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "iqaforge/log.hpp"

namespace iqaforge::log {

namespace {

spdlog::logger& logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_logger_mt("iqaforge");
    l->set_pattern("[%l] %v");
    switch (level_from_env()) {
      case Level::Error: l->set_level(spdlog::level::err); break;
      case Level::Info: l->set_level(spdlog::level::info); break;
      case Level::Debug: l->set_level(spdlog::level::debug); break;
    }
    return l;
  }();
  return *instance;
}

}  // namespace

Level level_from_env() {
  const char* v = std::getenv("IQA_FORGE_LOG");
  if (!v) return Level::Info;
  const std::string s = v;
  if (s == "error") return Level::Error;
  if (s == "debug") return Level::Debug;
  return Level::Info;
}

void set_level(Level level) {
  switch (level) {
    case Level::Error: logger().set_level(spdlog::level::err); break;
    case Level::Info: logger().set_level(spdlog::level::info); break;
    case Level::Debug: logger().set_level(spdlog::level::debug); break;
  }
}

void error(std::string_view message) { logger().error("{}", message); }
void info(std::string_view message) { logger().info("{}", message); }
void debug(std::string_view message) { logger().debug("{}", message); }

}  // namespace iqaforge::log
