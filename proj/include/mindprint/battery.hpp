#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindprint/errors.hpp"

namespace mindprint {

inline constexpr const char* kBatteryFormat = "mindprint-battery/1";

enum class Family {
    calibration,
    source_monitoring,
    suggestibility,
    perturbation,
    expressive_alignment,
    domain_specific,
    tool_integrity,
};

enum class Role { user, system, evidence, tool_return };

enum class PressureKind {
    user_disagreement,
    authority_cue,
    emotional_urgency,
    repeated_insistence,
    false_premise,
    implied_reward,
    implied_punishment,
};

// Response classes that signal uncertainty rather than commit to content.
enum class RequiredClass { assert_claim, abstain, hedge, escalate, refuse };

inline bool is_special_class(const std::string& cls) {
    return cls == "abstain" || cls == "hedge" || cls == "escalate" || cls == "refuse";
}

// A substantive answer commits to content; "unparseable" is an error class
// produced by the remote adapter and never counts as substantive.
inline bool is_substantive(const std::string& cls) {
    return !cls.empty() && !is_special_class(cls) && cls != "unparseable";
}

namespace detail {

template <typename E>
struct EnumNames;

template <> struct EnumNames<Family> {
    static const std::vector<std::pair<Family, std::string>>& table() {
        static const std::vector<std::pair<Family, std::string>> t = {
            {Family::calibration, "calibration"},
            {Family::source_monitoring, "source_monitoring"},
            {Family::suggestibility, "suggestibility"},
            {Family::perturbation, "perturbation"},
            {Family::expressive_alignment, "expressive_alignment"},
            {Family::domain_specific, "domain_specific"},
            {Family::tool_integrity, "tool_integrity"},
        };
        return t;
    }
    static constexpr const char* kind = "family";
};

template <> struct EnumNames<Role> {
    static const std::vector<std::pair<Role, std::string>>& table() {
        static const std::vector<std::pair<Role, std::string>> t = {
            {Role::user, "user"},
            {Role::system, "system"},
            {Role::evidence, "evidence"},
            {Role::tool_return, "tool_return"},
        };
        return t;
    }
    static constexpr const char* kind = "role";
};

template <> struct EnumNames<PressureKind> {
    static const std::vector<std::pair<PressureKind, std::string>>& table() {
        static const std::vector<std::pair<PressureKind, std::string>> t = {
            {PressureKind::user_disagreement, "user_disagreement"},
            {PressureKind::authority_cue, "authority_cue"},
            {PressureKind::emotional_urgency, "emotional_urgency"},
            {PressureKind::repeated_insistence, "repeated_insistence"},
            {PressureKind::false_premise, "false_premise"},
            {PressureKind::implied_reward, "implied_reward"},
            {PressureKind::implied_punishment, "implied_punishment"},
        };
        return t;
    }
    static constexpr const char* kind = "pressure kind";
};

template <> struct EnumNames<RequiredClass> {
    static const std::vector<std::pair<RequiredClass, std::string>>& table() {
        static const std::vector<std::pair<RequiredClass, std::string>> t = {
            {RequiredClass::assert_claim, "assert"},
            {RequiredClass::abstain, "abstain"},
            {RequiredClass::hedge, "hedge"},
            {RequiredClass::escalate, "escalate"},
            {RequiredClass::refuse, "refuse"},
        };
        return t;
    }
    static constexpr const char* kind = "required class";
};

} // namespace detail

template <typename E>
inline std::string enum_to_string(E value) {
    for (const auto& [v, name] : detail::EnumNames<E>::table()) {
        if (v == value) return name;
    }
    throw ValidationError("unknown enum value");
}

template <typename E>
inline E enum_from_string(const std::string& name) {
    for (const auto& [v, n] : detail::EnumNames<E>::table()) {
        if (n == name) return v;
    }
    throw ParseError(std::string("unknown ") + detail::EnumNames<E>::kind + ": '" + name + "'");
}

struct PromptTurn {
    Role role = Role::user;
    std::string text;

    bool operator==(const PromptTurn&) const = default;
};

struct PressureSpec {
    PressureKind kind = PressureKind::user_disagreement;
    int intensity = 1;  // 1..3
    std::string paired_neutral_id;

    bool operator==(const PressureSpec&) const = default;
};

struct RubricSpec {
    RequiredClass required_class = RequiredClass::abstain;
    std::vector<std::string> forbidden_markers;
    std::vector<std::string> required_markers;

    bool operator==(const RubricSpec&) const = default;
};

struct ScriptedReturn {
    enum class Kind { value, failure, ambiguous };
    Kind kind = Kind::value;
    std::string value;  // payload for Kind::value only

    bool operator==(const ScriptedReturn&) const = default;

    // The string the scripted environment actually hands back for this tool.
    std::string environment_return() const {
        switch (kind) {
            case Kind::value: return value;
            case Kind::failure: return "<tool-failure>";
            case Kind::ambiguous: return "<tool-ambiguous>";
        }
        return {};
    }
};

struct ToolArgField {
    std::string field;
    std::string type;

    bool operator==(const ToolArgField&) const = default;
};

struct ToolSpec {
    std::string name;
    std::vector<ToolArgField> arg_schema;
    ScriptedReturn scripted_return;

    bool operator==(const ToolSpec&) const = default;
};

struct ToolEnvSpec {
    std::vector<ToolSpec> tools;
    std::optional<std::string> correct_tool;
    std::optional<std::map<std::string, std::string>> correct_args;

    bool operator==(const ToolEnvSpec&) const = default;

    const ToolSpec* find_tool(const std::string& name) const {
        for (const auto& t : tools) {
            if (t.name == name) return &t;
        }
        return nullptr;
    }
};

struct ProbeItem {
    std::string item_id;
    Family family = Family::calibration;
    std::vector<PromptTurn> prompt_turns;
    bool answerable = true;
    std::optional<std::string> correct_class;
    double irt_a = 1.0;
    double irt_b = 0.0;
    std::optional<PressureSpec> pressure_condition;
    std::optional<std::string> perturbation_group;
    std::optional<RubricSpec> expected_behavior;
    std::optional<ToolEnvSpec> tool_env;
    std::string domain_tag = "general";

    bool operator==(const ProbeItem&) const = default;
};

struct ProbeBattery {
    std::string battery_id;
    std::string version;
    std::vector<ProbeItem> items;
    std::string created;  // ISO date
    std::string description;

    bool operator==(const ProbeBattery&) const = default;

    const ProbeItem* find_item(const std::string& id) const {
        for (const auto& it : items) {
            if (it.item_id == id) return &it;
        }
        return nullptr;
    }
};

enum class Severity { error, warning };

struct Finding {
    Severity severity = Severity::error;
    std::string item_id;  // empty for battery-level findings
    std::string message;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// Total: never throws on any parseable battery; returns findings instead.
inline std::vector<Finding> validate_battery(const ProbeBattery& b) {
    std::vector<Finding> findings;
    auto err = [&](const std::string& id, const std::string& msg) {
        findings.push_back({Severity::error, id, msg});
    };
    auto warn = [&](const std::string& id, const std::string& msg) {
        findings.push_back({Severity::warning, id, msg});
    };

    if (b.battery_id.empty()) err("", "battery_id must be nonempty");
    if (b.version.empty()) err("", "version must be nonempty");

    std::set<std::string> seen_ids;
    for (const auto& item : b.items) {
        if (!seen_ids.insert(item.item_id).second) {
            err(item.item_id, "duplicate item_id '" + item.item_id + "'");
        }
    }

    std::map<std::string, std::vector<const ProbeItem*>> groups;
    for (const auto& item : b.items) {
        if (item.item_id.empty()) err(item.item_id, "item_id must be nonempty");
        if (!(item.irt_a > 0.0)) err(item.item_id, "irt_a must be > 0");
        if (!item.answerable && item.correct_class.has_value()) {
            err(item.item_id, "answerable=false implies correct_class is absent");
        }
        if (item.prompt_turns.empty()) warn(item.item_id, "item has no prompt turns");
        if (item.pressure_condition) {
            const auto& pc = *item.pressure_condition;
            if (pc.intensity < 1 || pc.intensity > 3) {
                err(item.item_id, "pressure intensity must lie in 1..3");
            }
            const ProbeItem* twin = b.find_item(pc.paired_neutral_id);
            if (twin == nullptr) {
                err(item.item_id, "paired_neutral_id '" + pc.paired_neutral_id + "' does not resolve");
            } else if (twin->pressure_condition.has_value()) {
                err(item.item_id, "paired_neutral_id must name an item without a pressure_condition");
            } else if (twin->answerable != item.answerable || twin->correct_class != item.correct_class) {
                warn(item.item_id, "pressure item differs from its neutral twin in answerable/correct_class");
            }
        }
        if (item.expected_behavior) {
            for (const auto& m : item.expected_behavior->required_markers) {
                const auto& fb = item.expected_behavior->forbidden_markers;
                if (std::find(fb.begin(), fb.end(), m) != fb.end()) {
                    err(item.item_id, "required_markers and forbidden_markers overlap on '" + m + "'");
                }
            }
        }
        if (item.tool_env) {
            if (item.tool_env->tools.empty()) err(item.item_id, "tool_env.tools must be nonempty");
            if (item.tool_env->correct_tool &&
                item.tool_env->find_tool(*item.tool_env->correct_tool) == nullptr) {
                err(item.item_id, "correct_tool '" + *item.tool_env->correct_tool +
                                      "' names no tool in tools");
            }
        }
        if (item.perturbation_group) groups[*item.perturbation_group].push_back(&item);
    }

    for (const auto& [gname, members] : groups) {
        if (members.size() < 2) {
            err(members.front()->item_id,
                "perturbation_group '" + gname + "' has fewer than 2 members");
        }
        for (const auto* m : members) {
            if (m->answerable != members.front()->answerable ||
                m->correct_class != members.front()->correct_class) {
                err(m->item_id, "perturbation_group '" + gname +
                                    "' members differ in answerable/correct_class");
            }
        }
    }
    return findings;
}

inline bool has_errors(const std::vector<Finding>& findings) {
    for (const auto& f : findings) {
        if (f.severity == Severity::error) return true;
    }
    return false;
}

inline std::string first_error(const std::vector<Finding>& findings) {
    for (const auto& f : findings) {
        if (f.severity == Severity::error) {
            return f.item_id.empty() ? f.message : (f.item_id + ": " + f.message);
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// JSON (schema mindprint-battery/1; unknown keys rejected)
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.count(it.key()) == 0) {
            throw ParseError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

inline const nlohmann::json& require_key(const nlohmann::json& obj, const std::string& key,
                                         const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing key '" + key + "' in " + where);
    return *it;
}

} // namespace detail

inline nlohmann::json to_json(const ScriptedReturn& r) {
    switch (r.kind) {
        case ScriptedReturn::Kind::value:
            return {{"kind", "value"}, {"value", r.value}};
        case ScriptedReturn::Kind::failure:
            return {{"kind", "failure"}};
        case ScriptedReturn::Kind::ambiguous:
            return {{"kind", "ambiguous"}};
    }
    return {};
}

inline ScriptedReturn scripted_return_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError("scripted_return must be an object in " + where);
    detail::reject_unknown_keys(j, {"kind", "value"}, where + ".scripted_return");
    ScriptedReturn r;
    std::string kind = detail::require_key(j, "kind", where).get<std::string>();
    if (kind == "value") {
        r.kind = ScriptedReturn::Kind::value;
        r.value = detail::require_key(j, "value", where).get<std::string>();
    } else if (kind == "failure") {
        r.kind = ScriptedReturn::Kind::failure;
    } else if (kind == "ambiguous") {
        r.kind = ScriptedReturn::Kind::ambiguous;
    } else {
        throw ParseError("unknown scripted_return kind '" + kind + "' in " + where);
    }
    return r;
}

inline nlohmann::json to_json(const ProbeItem& item) {
    nlohmann::json j;
    j["item_id"] = item.item_id;
    j["family"] = enum_to_string(item.family);
    j["prompt_turns"] = nlohmann::json::array();
    for (const auto& t : item.prompt_turns) {
        j["prompt_turns"].push_back({{"role", enum_to_string(t.role)}, {"text", t.text}});
    }
    j["answerable"] = item.answerable;
    if (item.correct_class) j["correct_class"] = *item.correct_class;
    j["irt_a"] = item.irt_a;
    j["irt_b"] = item.irt_b;
    if (item.pressure_condition) {
        j["pressure_condition"] = {{"kind", enum_to_string(item.pressure_condition->kind)},
                                   {"intensity", item.pressure_condition->intensity},
                                   {"paired_neutral_id", item.pressure_condition->paired_neutral_id}};
    }
    if (item.perturbation_group) j["perturbation_group"] = *item.perturbation_group;
    if (item.expected_behavior) {
        j["expected_behavior"] = {
            {"required_class", enum_to_string(item.expected_behavior->required_class)},
            {"forbidden_markers", item.expected_behavior->forbidden_markers},
            {"required_markers", item.expected_behavior->required_markers}};
    }
    if (item.tool_env) {
        nlohmann::json tools = nlohmann::json::array();
        for (const auto& t : item.tool_env->tools) {
            nlohmann::json schema = nlohmann::json::array();
            for (const auto& f : t.arg_schema) {
                schema.push_back({{"field", f.field}, {"type", f.type}});
            }
            tools.push_back({{"name", t.name},
                             {"arg_schema", schema},
                             {"scripted_return", to_json(t.scripted_return)}});
        }
        nlohmann::json env = {{"tools", tools}};
        if (item.tool_env->correct_tool) env["correct_tool"] = *item.tool_env->correct_tool;
        if (item.tool_env->correct_args) env["correct_args"] = *item.tool_env->correct_args;
        j["tool_env"] = env;
    }
    j["domain_tag"] = item.domain_tag;
    return j;
}

inline ProbeItem item_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("battery item must be an object");
    std::string where = "item";
    if (j.contains("item_id") && j["item_id"].is_string()) {
        where = "item '" + j["item_id"].get<std::string>() + "'";
    }
    detail::reject_unknown_keys(
        j,
        {"item_id", "family", "prompt_turns", "answerable", "correct_class", "irt_a", "irt_b",
         "pressure_condition", "perturbation_group", "expected_behavior", "tool_env", "domain_tag"},
        where);

    ProbeItem item;
    item.item_id = detail::require_key(j, "item_id", where).get<std::string>();
    item.family = enum_from_string<Family>(detail::require_key(j, "family", where).get<std::string>());
    for (const auto& tj : detail::require_key(j, "prompt_turns", where)) {
        detail::reject_unknown_keys(tj, {"role", "text"}, where + ".prompt_turns");
        PromptTurn t;
        t.role = enum_from_string<Role>(detail::require_key(tj, "role", where).get<std::string>());
        t.text = detail::require_key(tj, "text", where).get<std::string>();
        item.prompt_turns.push_back(std::move(t));
    }
    item.answerable = detail::require_key(j, "answerable", where).get<bool>();
    if (j.contains("correct_class")) item.correct_class = j["correct_class"].get<std::string>();
    item.irt_a = detail::require_key(j, "irt_a", where).get<double>();
    item.irt_b = detail::require_key(j, "irt_b", where).get<double>();
    if (j.contains("pressure_condition")) {
        const auto& pj = j["pressure_condition"];
        detail::reject_unknown_keys(pj, {"kind", "intensity", "paired_neutral_id"},
                                    where + ".pressure_condition");
        PressureSpec p;
        p.kind = enum_from_string<PressureKind>(
            detail::require_key(pj, "kind", where).get<std::string>());
        p.intensity = detail::require_key(pj, "intensity", where).get<int>();
        p.paired_neutral_id = detail::require_key(pj, "paired_neutral_id", where).get<std::string>();
        item.pressure_condition = std::move(p);
    }
    if (j.contains("perturbation_group")) {
        item.perturbation_group = j["perturbation_group"].get<std::string>();
    }
    if (j.contains("expected_behavior")) {
        const auto& rj = j["expected_behavior"];
        detail::reject_unknown_keys(rj, {"required_class", "forbidden_markers", "required_markers"},
                                    where + ".expected_behavior");
        RubricSpec r;
        r.required_class = enum_from_string<RequiredClass>(
            detail::require_key(rj, "required_class", where).get<std::string>());
        if (rj.contains("forbidden_markers")) {
            r.forbidden_markers = rj["forbidden_markers"].get<std::vector<std::string>>();
        }
        if (rj.contains("required_markers")) {
            r.required_markers = rj["required_markers"].get<std::vector<std::string>>();
        }
        item.expected_behavior = std::move(r);
    }
    if (j.contains("tool_env")) {
        const auto& ej = j["tool_env"];
        detail::reject_unknown_keys(ej, {"tools", "correct_tool", "correct_args"}, where + ".tool_env");
        ToolEnvSpec env;
        for (const auto& tj : detail::require_key(ej, "tools", where)) {
            detail::reject_unknown_keys(tj, {"name", "arg_schema", "scripted_return"},
                                        where + ".tool_env.tools");
            ToolSpec t;
            t.name = detail::require_key(tj, "name", where).get<std::string>();
            if (tj.contains("arg_schema")) {
                for (const auto& fj : tj["arg_schema"]) {
                    detail::reject_unknown_keys(fj, {"field", "type"}, where + ".arg_schema");
                    t.arg_schema.push_back({detail::require_key(fj, "field", where).get<std::string>(),
                                            detail::require_key(fj, "type", where).get<std::string>()});
                }
            }
            t.scripted_return =
                scripted_return_from_json(detail::require_key(tj, "scripted_return", where), where);
            env.tools.push_back(std::move(t));
        }
        if (ej.contains("correct_tool")) env.correct_tool = ej["correct_tool"].get<std::string>();
        if (ej.contains("correct_args")) {
            env.correct_args = ej["correct_args"].get<std::map<std::string, std::string>>();
        }
        item.tool_env = std::move(env);
    }
    item.domain_tag = detail::require_key(j, "domain_tag", where).get<std::string>();
    return item;
}

inline nlohmann::json to_json(const ProbeBattery& b) {
    nlohmann::json j;
    j["format"] = kBatteryFormat;
    j["battery_id"] = b.battery_id;
    j["version"] = b.version;
    j["created"] = b.created;
    j["description"] = b.description;
    j["items"] = nlohmann::json::array();
    for (const auto& item : b.items) j["items"].push_back(to_json(item));
    return j;
}

inline ProbeBattery battery_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("battery file must contain a JSON object");
    detail::reject_unknown_keys(
        j, {"format", "battery_id", "version", "created", "description", "items"}, "battery");
    std::string format = detail::require_key(j, "format", "battery").get<std::string>();
    if (format != kBatteryFormat) {
        throw ParseError("unsupported battery format '" + format + "' (expected " +
                         kBatteryFormat + ")");
    }
    ProbeBattery b;
    b.battery_id = detail::require_key(j, "battery_id", "battery").get<std::string>();
    b.version = detail::require_key(j, "version", "battery").get<std::string>();
    b.created = detail::require_key(j, "created", "battery").get<std::string>();
    b.description = detail::require_key(j, "description", "battery").get<std::string>();
    for (const auto& ij : detail::require_key(j, "items", "battery")) {
        b.items.push_back(item_from_json(ij));
    }
    return b;
}

inline std::string serialize_battery(const ProbeBattery& b) { return to_json(b).dump(2) + "\n"; }

// Loads, parses and validates. Throws ParseError on malformed JSON and
// ValidationError naming the first violated invariant.
inline ProbeBattery load_battery(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open battery file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("battery parse error: ") + e.what());
    }
    ProbeBattery b;
    try {
        b = battery_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("battery schema error: ") + e.what());
    }
    auto findings = validate_battery(b);
    if (has_errors(findings)) {
        throw ValidationError("battery validation failed: " + first_error(findings));
    }
    return b;
}

} // namespace mindprint
