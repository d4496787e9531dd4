#include "mildgirsanov/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mg {

namespace {
std::atomic<bool> g_enabled{true};
std::mutex g_mutex;
}  // namespace

void warn(std::string_view message) {
    if (!g_enabled.load(std::memory_order_relaxed)) return;
    std::lock_guard lock(g_mutex);
    std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) noexcept { g_enabled.store(enabled, std::memory_order_relaxed); }

bool warnings_enabled() noexcept { return g_enabled.load(std::memory_order_relaxed); }

}  // namespace mg
