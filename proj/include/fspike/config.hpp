#pragma once

// INI-style run configuration: `[section]` headers and `key = value` lines,
// `#` or `;` comments. Keys are addressed as section.key. Only keys in the
// schema are accepted. Precedence: schema default < config file < --set.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fspike {

struct ConfigKey {
    std::string name; // section.key
    std::string default_value;
    std::string help;
};

const std::vector<ConfigKey>& config_schema();

class Config {
public:
    // Every schema key at its default.
    Config();

    static Config parse(std::string_view text, std::string_view origin = "<config>");
    static Config load(const std::filesystem::path& path);

    // Throws Error(usage) naming the field path for unknown keys.
    void set(const std::string& name, const std::string& value);
    // "section.key=value".
    void apply_override(std::string_view assignment);
    // Layer `other`'s explicitly set keys over this one.
    void merge(const Config& other);

    const std::string& get(const std::string& name) const;
    double get_double(const std::string& name) const;
    long long get_int(const std::string& name) const;
    std::uint64_t get_u64(const std::string& name) const;
    bool get_bool(const std::string& name) const;
    std::vector<double> get_doubles(const std::string& name) const;
    std::vector<std::size_t> get_sizes(const std::string& name) const;
    bool is_set(const std::string& name) const { return explicit_.count(name) != 0; }

    // Effective configuration in INI form, grouped by section.
    std::string to_ini() const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

} // namespace fspike
