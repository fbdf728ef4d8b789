#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindprint/errors.hpp"

namespace mindprint {

inline constexpr const char* kRunlogFormat = "mindprint-runlog/1";

struct ToolCall {
    std::string tool_name;
    std::map<std::string, std::string> args;
    std::string reported_return;

    bool operator==(const ToolCall&) const = default;
};

struct AgentResponse {
    std::string item_id;
    std::string answer_class;
    double declared_confidence = 0.5;
    std::string raw_text;
    std::vector<ToolCall> tool_calls;
    std::int64_t latency_ms = 0;

    bool operator==(const AgentResponse&) const = default;
};

// One administered probe outcome: either a response or a recorded
// administration error. Errors are data, never dropped.
struct ResponseRecord {
    std::string item_id;
    std::optional<AgentResponse> response;
    std::optional<std::string> error;

    bool ok() const { return response.has_value(); }

    bool operator==(const ResponseRecord&) const = default;
};

// The measurement-conditions header written in front of every runlog.
struct RunConditions {
    std::string agent_id;
    std::string agent_version;
    std::string endpoint_config_hash;  // "synthetic" for simulated agents
    std::string battery_id;
    std::string battery_version;
    std::string timestamp;
    std::uint64_t seed = 0;
    std::size_t parallelism = 1;
    // Perturbation expansion applied before administration, if any. Recording
    // it lets fitting re-derive the identical expanded battery from the
    // original battery file.
    std::size_t perturb_k = 0;
    std::vector<std::string> perturb_rules;
};

struct RunLog {
    RunConditions conditions;
    std::vector<ResponseRecord> records;
};

inline nlohmann::json to_json(const ToolCall& c) {
    return {{"tool_name", c.tool_name}, {"args", c.args}, {"reported_return", c.reported_return}};
}

inline nlohmann::json to_json(const AgentResponse& r) {
    nlohmann::json calls = nlohmann::json::array();
    for (const auto& c : r.tool_calls) calls.push_back(to_json(c));
    return {{"item_id", r.item_id},
            {"answer_class", r.answer_class},
            {"declared_confidence", r.declared_confidence},
            {"raw_text", r.raw_text},
            {"tool_calls", calls},
            {"latency_ms", r.latency_ms}};
}

inline nlohmann::json to_json(const ResponseRecord& rec) {
    if (rec.response) return to_json(*rec.response);
    return {{"item_id", rec.item_id}, {"error", rec.error.value_or("unknown administration error")}};
}

inline nlohmann::json to_json(const RunConditions& c) {
    return {{"agent_id", c.agent_id},
            {"agent_version", c.agent_version},
            {"endpoint_config_hash", c.endpoint_config_hash},
            {"battery_id", c.battery_id},
            {"battery_version", c.battery_version},
            {"timestamp", c.timestamp},
            {"seed", c.seed},
            {"parallelism", c.parallelism},
            {"perturb_k", c.perturb_k},
            {"perturb_rules", c.perturb_rules}};
}

inline std::string runlog_to_jsonl(const RunLog& log) {
    std::string out;
    nlohmann::json header = {{"format", kRunlogFormat}, {"conditions", to_json(log.conditions)}};
    out += header.dump();
    out += '\n';
    for (const auto& rec : log.records) {
        out += to_json(rec).dump();
        out += '\n';
    }
    return out;
}

inline void write_runlog(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write runlog: " + path);
    out << runlog_to_jsonl(log);
}

inline RunLog parse_runlog(std::istream& in) {
    RunLog log;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("runlog is empty");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("runlog header parse error: ") + e.what());
    }
    if (!header.contains("format") || header["format"] != kRunlogFormat) {
        throw ParseError("runlog missing format tag " + std::string(kRunlogFormat));
    }
    const auto& cj = header.at("conditions");
    log.conditions.agent_id = cj.value("agent_id", "");
    log.conditions.agent_version = cj.value("agent_version", "");
    log.conditions.endpoint_config_hash = cj.value("endpoint_config_hash", "");
    log.conditions.battery_id = cj.value("battery_id", "");
    log.conditions.battery_version = cj.value("battery_version", "");
    log.conditions.timestamp = cj.value("timestamp", "");
    log.conditions.seed = cj.value("seed", std::uint64_t{0});
    log.conditions.parallelism = cj.value("parallelism", std::size_t{1});
    log.conditions.perturb_k = cj.value("perturb_k", std::size_t{0});
    if (cj.contains("perturb_rules")) {
        log.conditions.perturb_rules = cj["perturb_rules"].get<std::vector<std::string>>();
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("runlog line " + std::to_string(line_no) + ": " + e.what());
        }
        ResponseRecord rec;
        rec.item_id = j.at("item_id").get<std::string>();
        if (j.contains("error")) {
            rec.error = j["error"].get<std::string>();
        } else {
            AgentResponse r;
            r.item_id = rec.item_id;
            r.answer_class = j.at("answer_class").get<std::string>();
            r.declared_confidence = j.at("declared_confidence").get<double>();
            r.raw_text = j.value("raw_text", "");
            r.latency_ms = j.value("latency_ms", std::int64_t{0});
            if (j.contains("tool_calls")) {
                for (const auto& cj2 : j["tool_calls"]) {
                    ToolCall c;
                    c.tool_name = cj2.at("tool_name").get<std::string>();
                    if (cj2.contains("args")) {
                        c.args = cj2["args"].get<std::map<std::string, std::string>>();
                    }
                    c.reported_return = cj2.value("reported_return", "");
                    r.tool_calls.push_back(std::move(c));
                }
            }
            rec.response = std::move(r);
        }
        log.records.push_back(std::move(rec));
    }
    return log;
}

inline RunLog load_runlog(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open runlog: " + path);
    return parse_runlog(in);
}

} // namespace mindprint
