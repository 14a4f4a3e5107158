#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace herald {

enum class LogLevel : int { error = 0, info = 1, debug = 2 };

namespace detail {

inline LogLevel parse_log_level() {
    const char* env = std::getenv("HERALD_LOG");
    if (env == nullptr) return LogLevel::error;
    const std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::error;
}

}  // namespace detail

inline LogLevel log_level() {
    static const LogLevel level = detail::parse_log_level();
    return level;
}

inline void log_error(const std::string& msg) {
    std::fprintf(stderr, "[herald:error] %s\n", msg.c_str());
}

inline void log_info(const std::string& msg) {
    if (static_cast<int>(log_level()) >= static_cast<int>(LogLevel::info)) {
        std::fprintf(stderr, "[herald:info] %s\n", msg.c_str());
    }
}

inline void log_debug(const std::string& msg) {
    if (static_cast<int>(log_level()) >= static_cast<int>(LogLevel::debug)) {
        std::fprintf(stderr, "[herald:debug] %s\n", msg.c_str());
    }
}

}  // namespace herald
