#include "compforge/log.hpp"

#include <iostream>
#include <mutex>

namespace compforge::log {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

void default_sink(Level level, std::string_view message) {
    const char* tag = level == Level::Info ? "info" : level == Level::Warn ? "warning" : "error";
    std::cerr << tag << ": " << message << '\n';
}

Sink& current() {
    static Sink sink = default_sink;
    return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
    std::lock_guard lock(sink_mutex());
    Sink old = std::move(current());
    current() = sink ? std::move(sink) : Sink(default_sink);
    return old;
}

void write(Level level, std::string_view message) {
    std::lock_guard lock(sink_mutex());
    current()(level, message);
}

}  // namespace compforge::log
