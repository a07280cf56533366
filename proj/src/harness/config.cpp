#include "vmi/harness/config.hpp"

namespace vmi::harness {

ConfigSection::ConfigSection(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path))
{
    if (j_.is_null()) {
        j_ = nlohmann::json::object();
    }
    if (!j_.is_object()) {
        throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }
}

ConfigSection ConfigSection::section(const std::string& key)
{
    seen_.insert(key);
    return ConfigSection(j_.contains(key) ? j_.at(key) : nlohmann::json::object(), dotted(key));
}

void ConfigSection::finish() const
{
    for (const auto& [key, value] : j_.items()) {
        if (!seen_.count(key)) {
            throw ConfigError(dotted(key), "unknown key");
        }
    }
}

}  // namespace vmi::harness
