#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include <fmt/core.h>

namespace towerforge::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Verbosity from TOWERFORGE_LOG (error|warn|info|debug or 0..3); default warn.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("TOWERFORGE_LOG");
        if (!env) return Level::Warn;
        if (!std::strcmp(env, "error") || !std::strcmp(env, "0")) return Level::Error;
        if (!std::strcmp(env, "warn") || !std::strcmp(env, "1")) return Level::Warn;
        if (!std::strcmp(env, "info") || !std::strcmp(env, "2")) return Level::Info;
        if (!std::strcmp(env, "debug") || !std::strcmp(env, "3")) return Level::Debug;
        return Level::Warn;
    }();
    return level;
}

template <typename... Args>
void emit(Level level, const char* tag, fmt::format_string<Args...> format,
          Args&&... args) {
    if (level > threshold()) return;
    std::fputs(fmt::format("towerforge [{}] {}\n", tag,
                           fmt::format(format, std::forward<Args>(args)...))
                   .c_str(),
               stderr);
}

template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... a) {
    emit(Level::Error, "error", f, std::forward<Args>(a)...);
}
template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... a) {
    emit(Level::Warn, "warn", f, std::forward<Args>(a)...);
}
template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... a) {
    emit(Level::Info, "info", f, std::forward<Args>(a)...);
}
template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... a) {
    emit(Level::Debug, "debug", f, std::forward<Args>(a)...);
}

}  // namespace towerforge::log
