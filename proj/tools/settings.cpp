#include "settings.hpp"

#include <fstream>
#include <sstream>

#include "pinr/error.hpp"

namespace pinr::cli {

namespace {

std::string dashed(std::string s) {
    for (char& c : s)
        if (c == '_') c = '-';
    return s;
}

bool same_kind(const json& want, const json& got) {
    if (want.is_boolean()) return got.is_boolean();
    if (want.is_number_integer()) return got.is_number_integer();
    if (want.is_number()) return got.is_number();
    if (want.is_string()) return got.is_string();
    if (want.is_array()) {
        if (!got.is_array()) return false;
        for (const auto& v : got)
            if (!v.is_number()) return false;
        return true;
    }
    return false;
}

const char* kind_name(const json& v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "list of numbers";
    return "value";
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + item + "'");
        }
        if (used != item.size()) throw ConfigError("not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

Settings::Settings(std::string command, std::vector<Key> schema)
    : command_(std::move(command)), schema_(std::move(schema)) {
    for (const auto& k : schema_) values_[k.name] = k.fallback;
}

void Settings::bind(CLI::App& sub) {
    for (const auto& k : schema_) {
        const std::string flag = "--" + dashed(k.name);
        if (k.fallback.is_boolean()) {
            raw_flags_[k.name] = k.fallback.get<bool>();
            options_[k.name] = sub.add_flag(flag + ",!--no-" + dashed(k.name), raw_flags_[k.name],
                                            k.help + " (default " + k.fallback.dump() + ")");
        } else {
            options_[k.name] = sub.add_option(flag, raw_[k.name], k.help + " (default " + k.fallback.dump() + ")")
                                   ->type_name(k.fallback.is_number_integer() ? "INT"
                                               : k.fallback.is_number()       ? "FLOAT"
                                               : k.fallback.is_array()        ? "LIST"
                                                                              : "TEXT");
        }
    }
}

void Settings::set(const std::string& key, const json& value, const std::string& origin) {
    auto it = std::find_if(schema_.begin(), schema_.end(), [&](const Key& k) { return k.name == key; });
    if (it == schema_.end()) throw ConfigError(origin + ": unknown key '" + key + "' for " + command_);
    if (!same_kind(it->fallback, value))
        throw ConfigError(origin + ": key '" + key + "' must be a " + kind_name(it->fallback));
    values_[key] = it->fallback.is_number_float() ? json(value.get<double>()) : value;
}

void Settings::apply_json(const json& config) {
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : config.items()) {
        if (key == "command") {
            if (value != command_) throw ConfigError("config is for '" + value.dump() + "', not " + command_);
            continue;
        }
        if (key == "seed" || key == "threads") continue;  // global flags, read by the caller
        set(key, value, "config");
    }
}

void Settings::resolve(const std::string& config_path) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw IoError("cannot open config " + config_path);
        json config;
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(config_path + ": " + e.what());
        }
        apply_json(config);
    }
    for (const auto& k : schema_) {
        const CLI::Option* opt = options_.count(k.name) ? options_.at(k.name) : nullptr;
        if (opt == nullptr || opt->count() == 0) continue;
        const std::string origin = "--" + dashed(k.name);
        const json& want = k.fallback;
        if (want.is_boolean()) {
            set(k.name, raw_flags_.at(k.name), origin);
        } else if (want.is_number_integer()) {
            std::size_t used = 0;
            long long v = 0;
            const std::string& s = raw_.at(k.name);
            try {
                v = std::stoll(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != s.size()) throw ConfigError(origin + " expects an integer, got '" + s + "'");
            set(k.name, v, origin);
        } else if (want.is_number()) {
            const auto list = parse_number_list(raw_.at(k.name));
            if (list.size() != 1) throw ConfigError(origin + " expects one number");
            set(k.name, list.front(), origin);
        } else if (want.is_array()) {
            set(k.name, raw_.at(k.name).empty() ? json::array() : json(parse_number_list(raw_.at(k.name))), origin);
        } else {
            set(k.name, raw_.at(k.name), origin);
        }
    }
}

const json& Settings::at(const std::string& key) const {
    if (!values_.contains(key)) throw UsageError("no setting '" + key + "'");
    return values_.at(key);
}

json Settings::snapshot() const {
    json s = values_;
    s["command"] = command_;
    return s;
}

}  // namespace pinr::cli
