#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace avemo {

// Flat `key = value` configuration text. `#` starts a comment; blank lines
// are ignored; repeated keys are an error.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    std::optional<std::string> get(const std::string& key) const;

    // Throws ConfigError listing every key that is not in `known`.
    void reject_unknown(const std::set<std::string>& known) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    const std::string& source() const { return source_; }

private:
    std::map<std::string, std::string> values_;
    std::string source_;
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);
std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace avemo
