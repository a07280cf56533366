#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "vmi/error.hpp"

namespace vmi::harness {

// Typed access to one JSON object of a config file. Every failure raises
// ConfigError naming the dotted key; finish() rejects keys nobody read.
class ConfigSection {
public:
    ConfigSection(const nlohmann::json& j, std::string path);

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    T get(const std::string& key, T fallback)
    {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return fallback;
        }
        return convert<T>(key);
    }

    template <class T>
    T require(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) {
            throw ConfigError(dotted(key), "required key missing");
        }
        return convert<T>(key);
    }

    // Missing sections read as empty objects.
    ConfigSection section(const std::string& key);
    std::string dotted(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void finish() const;

private:
    template <class T>
    T convert(const std::string& key) const
    {
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(dotted(key), "wrong type");
        }
    }

    nlohmann::json j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace vmi::harness
