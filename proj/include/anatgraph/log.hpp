#pragma once

#include <string>

namespace anatgraph {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

/// From ANATGRAPH_LOG (quiet|info|debug, default info), read once.
LogLevel log_level();
void set_log_level(LogLevel level);
/// Thread-safe line to stderr when `level` is enabled.
void log_line(LogLevel level, const std::string& message);

}  // namespace anatgraph
