#include "mcsql/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace mcsql {

namespace {

LogLevel g_level = [] {
  const char* env = std::getenv("MCSQL_LOG_LEVEL");
  if (!env) return LogLevel::Warn;
  const std::string s(env);
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}();

std::mutex g_mutex;

const char* prefix(LogLevel l) {
  switch (l) {
    case LogLevel::Error: return "[error] ";
    case LogLevel::Warn: return "[warn]  ";
    case LogLevel::Info: return "[info]  ";
    case LogLevel::Debug: return "[debug] ";
  }
  return "";
}

}  // namespace

LogLevel log_level() { return g_level; }
void set_log_level(LogLevel level) { g_level = level; }

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(g_level)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << prefix(level) << msg << "\n";
}

}  // namespace mcsql
