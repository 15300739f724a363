#pragma once

#include <string>

namespace wavelocate {

// Verbosity is read once from the WAVELOCATE_LOG environment variable
// (error, info, debug; default info). All log output goes to stderr so that
// stdout stays free for the caller.
enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace wavelocate
