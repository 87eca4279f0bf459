#pragma once

// Private helpers shared by the JSON readers and writers.

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "caos/errors.hpp"

namespace caos::detail {

using Json = nlohmann::json;

inline int line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(e.what(), line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0));
    }
}

/// Line of the first occurrence of "key": in text, 0 if absent.
inline int line_of_key(std::string_view text, std::string_view key) {
    const std::string quoted = "\"" + std::string(key) + "\"";
    const auto pos = text.find(quoted);
    return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

inline void reject_unknown(const Json& object, std::initializer_list<std::string_view> known, std::string_view where,
                           std::string_view text) {
    if (!object.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, _] : object.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown field '" + key + "' in " + std::string(where), line_of_key(text, key));
        }
    }
}

template <typename T>
T get_field(const Json& object, std::string_view key, std::string_view text) {
    const auto it = object.find(std::string(key));
    if (it == object.end()) throw ConfigError("missing field '" + std::string(key) + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("field '" + std::string(key) + "': " + e.what(), line_of_key(text, key));
    }
}

template <typename T>
T get_or(const Json& object, std::string_view key, T fallback, std::string_view text) {
    if (!object.contains(std::string(key)) || object.at(std::string(key)).is_null()) return fallback;
    return get_field<T>(object, key, text);
}

}  // namespace caos::detail
