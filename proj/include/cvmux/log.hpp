#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace cvmux {

enum class LogLevel { Quiet = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

// Verbosity comes from the CVMUX_LOG environment variable
// (quiet|error|warn|info|debug); default warn.
inline LogLevel& log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("CVMUX_LOG");
        if (!env) return LogLevel::Warn;
        const std::string v(env);
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "error") return LogLevel::Error;
        if (v == "warn") return LogLevel::Warn;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log_msg(LogLevel lvl, const std::string& tag, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
        std::cerr << "[cvmux " << tag << "] " << msg << '\n';
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::Error, "error", msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, "warn", msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, "info", msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, "debug", msg); }

}  // namespace cvmux
