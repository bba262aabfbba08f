#pragma once

#include "adc/error.hpp"

#include "json.hpp"

#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

namespace adcinv {

using nlohmann::json;

/// Strict view of a JSON object: every key read is recorded, and done()
/// rejects keys that were never read. Errors carry the dotted key path.
class Config {
public:
    Config(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object()) throw adc::InputError("config: '" + where() + "' must be an object");
    }

    bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

    template <class T>
    T get(const std::string& key) {
        used_.insert(key);
        if (!j_->contains(key)) throw adc::InputError("config: missing key '" + full(key) + "'");
        return convert<T>(key);
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        used_.insert(key);
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    Config child(const std::string& key) {
        used_.insert(key);
        if (!j_->contains(key)) throw adc::InputError("config: missing key '" + full(key) + "'");
        return Config((*j_)[key], full(key));
    }

    std::optional<Config> child_opt(const std::string& key) {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        return Config((*j_)[key], full(key));
    }

    void done() const {
        for (const auto& [k, v] : j_->items())
            if (!used_.count(k)) throw adc::InputError("config: unknown key '" + full(k) + "'");
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    template <class T>
    T convert(const std::string& key) const {
        const json& v = (*j_)[key];
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>)
            if (!v.is_number_integer()) throw adc::InputError("config: key '" + full(key) + "' must be an integer");
        if constexpr (std::is_floating_point_v<T>)
            if (!v.is_number()) throw adc::InputError("config: key '" + full(key) + "' must be a number");
        try {
            return v.template get<T>();
        } catch (const nlohmann::json::exception&) {
            throw adc::InputError("config: key '" + full(key) + "' has the wrong type");
        }
    }

    const json* j_;
    std::string path_;
    std::set<std::string> used_;
};

} // namespace adcinv
