// Typed field access for JSON documents with path-qualified SchemaError messages.
#pragma once

#include "blimp/types.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace blimp::detail {

using nlohmann::json;

inline std::string at(const std::string& path, const std::string& key) { return path + "." + key; }

inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(at(path, key), "missing required field");
    return *it;
}

inline double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    return v.get<double>();
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
    return number(require(obj, key, path), at(path, key));
}

inline double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : number(*it, at(path, key));
}

inline std::string text(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaError(at(path, key), "expected a string");
    return v.get<std::string>();
}

inline bool flag_or(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_boolean()) throw SchemaError(at(path, key), "expected a boolean");
    return it->get<bool>();
}

inline Vec3 vec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) throw SchemaError(path, "expected an array of 3 numbers");
    return {number(v[0], at(path, 0)), number(v[1], at(path, 1)), number(v[2], at(path, 2))};
}

inline Vec3 vec3_or(const json& obj, const std::string& key, const std::string& path, const Vec3& fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : vec3(*it, at(path, key));
}

inline const json& array(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_array()) throw SchemaError(at(path, key), "expected an array");
    return v;
}
inline json to_array(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace blimp::detail
