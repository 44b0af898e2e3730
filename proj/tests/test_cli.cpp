#include "doctest.h"
#include "pinr/error.hpp"
#include "settings.hpp"

using namespace pinr;
using namespace pinr::cli;

namespace {

std::vector<Key> schema() {
    return {{"steps", 300, "steps"},
            {"lr", 1e-4, "rate"},
            {"rule", "none", "rule"},
            {"gray", false, "grayscale"},
            {"alpha", json::array({1e-5}), "inner rates"}};
}

// Parses argv into a "run" subcommand bound to the schema and resolves it.
Settings parse(std::vector<std::string> args, const json& config = nullptr) {
    Settings s("run", schema());
    CLI::App app;
    auto* sub = app.add_subcommand("run");
    s.bind(*sub);
    args.insert(args.begin(), {"prog", "run"});
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(int(argv.size()), argv.data());
    if (!config.is_null()) s.apply_json(config);
    s.resolve("");
    return s;
}

}  // namespace

TEST_CASE("defaults appear in the snapshot") {
    const Settings s = parse({});
    CHECK(s.integer("steps") == 300);
    CHECK(s.number("lr") == 1e-4);
    CHECK(s.text("rule") == "none");
    CHECK_FALSE(s.flag("gray"));
    CHECK(s.numbers("alpha") == std::vector<double>{1e-5});
    const json snap = s.snapshot();
    CHECK(snap.at("command") == "run");
    CHECK(snap.size() == schema().size() + 1);
}

TEST_CASE("flags override config which overrides defaults") {
    const Settings s = parse({"--steps", "50", "--no-gray", "--alpha", "1e-3,2e-3,3e-3"},
                             json{{"steps", 10}, {"lr", 0.5}, {"gray", true}});
    CHECK(s.integer("steps") == 50);
    CHECK(s.number("lr") == 0.5);
    CHECK_FALSE(s.flag("gray"));
    CHECK(s.numbers("alpha") == std::vector<double>{1e-3, 2e-3, 3e-3});
}

TEST_CASE("integer-valued config accepted for a float key") {
    const Settings s = parse({}, json{{"lr", 1}});
    CHECK(s.number("lr") == 1.0);
    CHECK(s.snapshot().at("lr").is_number_float());
}

TEST_CASE("bad settings are config errors") {
    CHECK_THROWS_AS(parse({}, json{{"stepz", 1}}), ConfigError);
    CHECK_THROWS_AS(parse({}, json{{"steps", 1.5}}), ConfigError);
    CHECK_THROWS_AS(parse({}, json{{"rule", 3}}), ConfigError);
    CHECK_THROWS_AS(parse({}, json{{"alpha", json::array({"x"})}}), ConfigError);
    CHECK_THROWS_AS(parse({}, json{{"command", "other"}}), ConfigError);
    CHECK_THROWS_AS(parse({"--steps", "12x"}), ConfigError);
    CHECK_THROWS_AS(parse({"--lr", "1,2"}), ConfigError);
    CHECK_THROWS_AS(parse({}, json::array()), ConfigError);
}

TEST_CASE("globals and command tag are tolerated in config files") {
    const Settings s = parse({}, json{{"seed", 4}, {"threads", 2}, {"command", "run"}});
    CHECK(s.integer("steps") == 300);
}

TEST_CASE("number lists") {
    CHECK(parse_number_list("1,2.5,-3e-2") == std::vector<double>{1.0, 2.5, -3e-2});
    CHECK(parse_number_list("").empty());
    CHECK_THROWS_AS(parse_number_list("1,,2"), ConfigError);
    CHECK_THROWS_AS(parse_number_list("1;2"), ConfigError);
}

TEST_CASE("unknown flags are rejected by the parser") {
    CHECK_THROWS_AS(parse({"--bogus", "1"}), CLI::ParseError);
}
