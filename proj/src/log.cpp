#include "bwsq/log.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <iostream>
#include <mutex>
#include <sstream>

namespace bwsq::log {

namespace {

std::atomic<Level> min_level{Level::Info};
std::mutex sink_mutex;

const char* name(Level level) {
    switch (level) {
        case Level::Debug: return "debug";
        case Level::Info: return "info";
        case Level::Warn: return "warn";
        case Level::Error: return "error";
    }
    return "?";
}

void append_value(std::ostringstream& out, const std::string& value) {
    if (!value.empty() && value.find_first_of(" \"=\n") == std::string::npos) {
        out << value;
        return;
    }
    out << '"';
    for (char c : value) {
        if (c == '"' || c == '\\') out << '\\';
        if (c == '\n') {
            out << "\\n";
            continue;
        }
        out << c;
    }
    out << '"';
}

}  // namespace

void set_min_level(Level level) { min_level = level; }

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write(Level level, std::string_view event, std::initializer_list<Field> fields) {
    if (level < min_level.load()) return;
    std::ostringstream line;
    line << utc_now() << " level=" << name(level) << " event=" << event;
    for (const auto& [key, value] : fields) {
        line << ' ' << key << '=';
        append_value(line, value);
    }
    line << '\n';
    std::lock_guard lock(sink_mutex);
    std::cerr << line.str();
}

}  // namespace bwsq::log
