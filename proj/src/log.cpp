#include "dgr/log.hpp"

#include <atomic>
#include <iostream>

namespace dgr::log {

namespace {
std::atomic<Level> g_level{Level::kWarn};
}

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void warn(std::string_view message) {
  if (g_level >= Level::kWarn) std::cerr << "warning: " << message << '\n';
}

void info(std::string_view message) {
  if (g_level >= Level::kInfo) std::cerr << message << '\n';
}

}  // namespace dgr::log
