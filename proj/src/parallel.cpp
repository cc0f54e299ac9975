#include "antman/parallel.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <cstring>

namespace antman {

namespace {

int initial_threads() {
    const int parsed = parse_thread_count(std::getenv("ANTMAN_THREADS"));
    return parsed > 0 ? parsed : 1;
}

std::atomic<int>& thread_setting() {
    static std::atomic<int> threads{initial_threads()};
    return threads;
}

}  // namespace

int parse_thread_count(const char* text) {
    if (text == nullptr || *text == '\0') return 0;
    int value = 0;
    const char* end = text + std::strlen(text);
    auto [ptr, ec] = std::from_chars(text, end, value);
    if (ec != std::errc{} || ptr != end || value < 1) return 0;
    return value;
}

int num_threads() { return thread_setting().load(std::memory_order_relaxed); }

void set_num_threads(int threads) {
    thread_setting().store(threads < 1 ? 1 : threads, std::memory_order_relaxed);
}

}  // namespace antman
