#include "roadozone/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

namespace roadozone::log {
namespace {

Level from_env() {
  const char* env = std::getenv("ROADOZONE_LOG");
  if (env == nullptr) return Level::warn;
  const std::string v(env);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "error") return Level::error;
  if (v == "off") return Level::off;
  return Level::warn;
}

std::atomic<Level>& current() {
  static std::atomic<Level> level{from_env()};
  return level;
}

constexpr const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "";
  }
}

}  // namespace

Level threshold() { return current().load(); }
void set_threshold(Level level) { current().store(level); }

void write(Level level, std::string_view message) {
  if (level < threshold() || level == Level::off) return;
  std::cerr << "roadozone[" << tag(level) << "] " << message << '\n';
}

}  // namespace roadozone::log
