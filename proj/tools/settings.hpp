#pragma once

// Typed key/value settings for one subcommand: defaults from a schema,
// overridden by an optional JSON config file, then by command-line flags.

#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace pinr::cli {

using nlohmann::json;

struct Key {
    std::string name;
    json fallback;  // default value; its JSON type is the key's type
    std::string help;
};

class Settings {
public:
    Settings(std::string command, std::vector<Key> schema);

    /// Adds one --flag per key to `sub` (underscores become dashes). Bools
    /// get --name / --no-name, arrays take comma-separated numbers.
    void bind(CLI::App& sub);

    /// Applies a config file (if any) and then the flags that were given.
    /// Throws ConfigError on unknown keys or type mismatches.
    void resolve(const std::string& config_path);
    void apply_json(const json& config);

    const json& values() const { return values_; }
    const std::string& command() const { return command_; }

    bool flag(const std::string& key) const { return at(key).get<bool>(); }
    int integer(const std::string& key) const { return at(key).get<int>(); }
    double number(const std::string& key) const { return at(key).get<double>(); }
    std::string text(const std::string& key) const { return at(key).get<std::string>(); }
    std::vector<double> numbers(const std::string& key) const { return at(key).get<std::vector<double>>(); }

    /// Every resolved value, defaults included, plus "command".
    json snapshot() const;

private:
    const json& at(const std::string& key) const;
    void set(const std::string& key, const json& value, const std::string& origin);

    std::string command_;
    std::vector<Key> schema_;
    json values_ = json::object();
    std::map<std::string, std::string> raw_;
    std::map<std::string, bool> raw_flags_;
    std::map<std::string, CLI::Option*> options_;
};

/// Parses "1,2.5,3" into numbers. Throws ConfigError on a malformed entry.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace pinr::cli
