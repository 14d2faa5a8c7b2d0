#pragma once

#include <string>

namespace mcsql {

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level comes from MCSQL_LOG_LEVEL (error|warn|info|debug), default warn.
LogLevel log_level();
void set_log_level(LogLevel level);
void log_message(LogLevel level, const std::string& msg);

}  // namespace mcsql

#define MCSQL_ERROR(msg) ::mcsql::log_message(::mcsql::LogLevel::Error, (msg))
#define MCSQL_WARN(msg) ::mcsql::log_message(::mcsql::LogLevel::Warn, (msg))
#define MCSQL_INFO(msg) ::mcsql::log_message(::mcsql::LogLevel::Info, (msg))
#define MCSQL_DEBUG(msg) ::mcsql::log_message(::mcsql::LogLevel::Debug, (msg))
