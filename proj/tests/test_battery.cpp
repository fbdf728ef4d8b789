#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "mindprint/battery.hpp"
#include "mindprint/perturb.hpp"
#include "mindprint/rng.hpp"

using namespace mindprint;
using nlohmann::json;

namespace {

const std::string kDemoPath = std::string(MINDPRINT_DATA_DIR) + "/batteries/demo_battery.json";

json minimal_battery_json() {
    return json::parse(R"({
      "format": "mindprint-battery/1",
      "battery_id": "t",
      "version": "1",
      "created": "2026-01-01",
      "description": "one calibration item",
      "items": [{
        "item_id": "i1",
        "family": "calibration",
        "prompt_turns": [{"role": "user", "text": "What is 2+2?"}],
        "answerable": true,
        "correct_class": "four",
        "irt_a": 1.0,
        "irt_b": 0.0,
        "domain_tag": "general"
      }]
    })");
}

std::string write_temp(const json& j) {
    static int counter = 0;
    std::string path = "battery_test_" + std::to_string(counter++) + ".json";
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

ProbeItem make_item(const std::string& id) {
    ProbeItem it;
    it.item_id = id;
    it.family = Family::calibration;
    it.prompt_turns = {{Role::user, "What is the capital of France? The answer matters."}};
    it.answerable = true;
    it.correct_class = "paris";
    it.irt_a = 1.0;
    it.irt_b = 0.0;
    return it;
}

} // namespace

TEST_CASE("load_battery accepts the smallest valid battery") {
    auto path = write_temp(minimal_battery_json());
    auto b = load_battery(path);
    CHECK(b.items.size() == 1);
    CHECK(b.items[0].item_id == "i1");
    std::remove(path.c_str());
}

TEST_CASE("load_battery rejects duplicate item ids naming the id") {
    auto j = minimal_battery_json();
    j["items"].push_back(j["items"][0]);
    auto path = write_temp(j);
    CHECK_THROWS_WITH(load_battery(path), Catch::Matchers::ContainsSubstring("i1"));
    std::remove(path.c_str());
}

TEST_CASE("load_battery rejects a singleton perturbation group") {
    auto j = minimal_battery_json();
    j["items"][0]["perturbation_group"] = "lonely";
    auto path = write_temp(j);
    CHECK_THROWS_AS(load_battery(path), ValidationError);
    std::remove(path.c_str());
}

TEST_CASE("unknown keys are rejected") {
    auto j = minimal_battery_json();
    j["items"][0]["surprise"] = 1;
    auto path = write_temp(j);
    CHECK_THROWS_WITH(load_battery(path), Catch::Matchers::ContainsSubstring("surprise"));
    std::remove(path.c_str());

    auto j2 = minimal_battery_json();
    j2["extra_top"] = true;
    auto path2 = write_temp(j2);
    CHECK_THROWS_AS(load_battery(path2), ParseError);
    std::remove(path2.c_str());
}

TEST_CASE("malformed JSON raises a parse error") {
    std::string path = "battery_malformed.json";
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_battery(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("validate_battery returns findings instead of failing") {
    ProbeBattery b;
    b.battery_id = "t";
    b.version = "1";

    SECTION("valid battery yields no findings") {
        b.items = {make_item("a")};
        CHECK(validate_battery(b).empty());
    }

    SECTION("missing pressure twin is one error") {
        auto it = make_item("p1");
        it.pressure_condition = PressureSpec{PressureKind::user_disagreement, 2, "ghost"};
        b.items = {it};
        auto findings = validate_battery(b);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].severity == Severity::error);
        CHECK(findings[0].item_id == "p1");
    }

    SECTION("irt_a = 0 is one error") {
        auto it = make_item("z");
        it.irt_a = 0.0;
        b.items = {it};
        auto findings = validate_battery(b);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].message.find("irt_a") != std::string::npos);
    }

    SECTION("answerable=false with correct_class is an error") {
        auto it = make_item("u");
        it.answerable = false;  // correct_class still set
        b.items = {it};
        CHECK(has_errors(validate_battery(b)));
    }

    SECTION("marker overlap is an error") {
        auto it = make_item("r");
        it.expected_behavior = RubricSpec{RequiredClass::abstain, {"oops"}, {"oops"}};
        b.items = {it};
        CHECK(has_errors(validate_battery(b)));
    }
}

TEST_CASE("battery round-trips through serialization") {
    auto b = load_battery(kDemoPath);
    auto text = serialize_battery(b);
    auto reparsed = battery_from_json(json::parse(text));
    CHECK(reparsed == b);
}

TEST_CASE("demo battery is valid") {
    auto b = load_battery(kDemoPath);
    CHECK(b.items.size() >= 16);
    CHECK(validate_battery(b).empty());
}

TEST_CASE("expand_perturbations counts and grouping") {
    ProbeBattery b;
    b.battery_id = "t";
    b.version = "1";
    b.items = {make_item("solo")};

    auto result = expand_perturbations(b, {PerturbationRule::politeness_wrapper}, 3, 5);
    CHECK(result.findings.empty());
    CHECK(result.battery.items.size() == 4);
    std::size_t in_group = 0;
    for (const auto& it : result.battery.items) {
        if (it.perturbation_group == std::optional<std::string>("solo")) ++in_group;
    }
    CHECK(in_group == 4);
    CHECK(b.items.size() == 1);  // input untouched
    CHECK(validate_battery(result.battery).empty());
}

TEST_CASE("expand_perturbations with no rules is the identity") {
    ProbeBattery b;
    b.battery_id = "t";
    b.version = "1";
    b.items = {make_item("solo")};
    auto result = expand_perturbations(b, {}, 4, 5);
    CHECK(result.battery == b);
}

TEST_CASE("expansion is deterministic and idempotent in group structure") {
    auto b = load_battery(kDemoPath);
    std::vector<PerturbationRule> rules = {PerturbationRule::lexical_paraphrase,
                                           PerturbationRule::politeness_wrapper,
                                           PerturbationRule::authority_prefix};
    auto once = expand_perturbations(b, rules, 2, 99);
    auto twice = expand_perturbations(b, rules, 2, 99);
    CHECK(serialize_battery(once.battery) == serialize_battery(twice.battery));

    auto re = expand_perturbations(once.battery, rules, 2, 99);
    CHECK(re.battery.items.size() == once.battery.items.size());

    std::set<std::string> ids;
    for (const auto& it : re.battery.items) CHECK(ids.insert(it.item_id).second);
}

TEST_CASE("rule application failure leaves the item unexpanded with a finding") {
    ProbeBattery b;
    b.battery_id = "t";
    b.version = "1";
    ProbeItem it;
    it.item_id = "sys-only";
    it.family = Family::calibration;
    it.prompt_turns = {{Role::system, "configuration preamble"}};
    it.answerable = true;
    it.correct_class = "x";
    b.items = {it};

    auto result = expand_perturbations(b, {PerturbationRule::politeness_wrapper}, 2, 1);
    CHECK(result.battery.items.size() == 1);
    REQUIRE(result.findings.size() == 1);
    CHECK(result.findings[0].item_id == "sys-only");
}

TEST_CASE("validation is total over arbitrary parseable batteries") {
    Rng rng(314);
    for (int trial = 0; trial < 50; ++trial) {
        ProbeBattery b;
        b.battery_id = trial % 5 == 0 ? "" : "b";
        b.version = "1";
        const std::size_t n = static_cast<std::size_t>(rng.uniform() * 6);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = make_item("i" + std::to_string(rng.uniform_int(0, 3)));
            it.irt_a = rng.uniform() < 0.2 ? 0.0 : 1.0;
            if (rng.uniform() < 0.3) it.answerable = false;
            if (rng.uniform() < 0.3) {
                it.pressure_condition =
                    PressureSpec{PressureKind::false_premise,
                                 static_cast<int>(rng.uniform_int(0, 4)), "i0"};
            }
            if (rng.uniform() < 0.3) it.perturbation_group = "g";
            b.items.push_back(std::move(it));
        }
        CHECK_NOTHROW(validate_battery(b));
    }
}
