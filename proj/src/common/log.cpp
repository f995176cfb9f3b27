#include "cmarl/common/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace cmarl {

namespace {

std::atomic<LogLevel> level{LogLevel::info};
std::mutex mutex;
std::string tag;

const char* label(LogLevel l)
{
    switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    case LogLevel::off: break;
    }
    return "";
}

}  // namespace

void set_log_level(LogLevel l) noexcept
{
    level.store(l);
}

LogLevel log_level() noexcept
{
    return level.load();
}

void set_log_tag(std::string_view t)
{
    std::lock_guard lock{mutex};
    tag = t;
}

void log(LogLevel l, std::string_view message)
{
    if (l < level.load()) {
        return;
    }
    std::lock_guard lock{mutex};
    std::cerr << label(l) << ": ";
    if (!tag.empty()) {
        std::cerr << '[' << tag << "] ";
    }
    std::cerr << message << '\n';
}

}  // namespace cmarl
