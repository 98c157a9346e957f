#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace bwsq::log {

enum class Level { Debug, Info, Warn, Error };

using Field = std::pair<std::string_view, std::string>;

// Structured single-line records on stderr:
//   2026-01-01T00:00:00Z level=warn event=design.truncate dropped=3
void write(Level level, std::string_view event, std::initializer_list<Field> fields = {});

void set_min_level(Level level);

inline void debug(std::string_view event, std::initializer_list<Field> fields = {}) { write(Level::Debug, event, fields); }
inline void info(std::string_view event, std::initializer_list<Field> fields = {}) { write(Level::Info, event, fields); }
inline void warn(std::string_view event, std::initializer_list<Field> fields = {}) { write(Level::Warn, event, fields); }
inline void error(std::string_view event, std::initializer_list<Field> fields = {}) { write(Level::Error, event, fields); }

// UTC timestamp, second resolution, ISO 8601.
std::string utc_now();

}  // namespace bwsq::log
