#pragma once

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "mindprint/agent.hpp"
#include "mindprint/canonical_json.hpp"
#include "mindprint/errors.hpp"
#include "mindprint/sha256.hpp"

namespace mindprint {

struct AnswerExtraction {
    enum class Kind { first_line_label, json_field, regex };
    Kind kind = Kind::first_line_label;
    std::string name;     // json_field: field holding the answer
    std::string pattern;  // regex: first capture group is the answer
};

struct EndpointConfig {
    std::string url;
    std::map<std::string, std::string> headers;
    int timeout_ms = 10000;
    int max_retries = 2;
    std::size_t parallelism = 1;
    std::string prompt_template_id = "plain/1";
    AnswerExtraction answer_extraction;
    std::string agent_id = "remote";
    std::string agent_version = "unknown";

    void validate() const {
        if (url.empty()) throw ValidationError("endpoint url must be nonempty");
        if (timeout_ms <= 0) throw ValidationError("timeout_ms must be > 0");
        if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    }
};

inline nlohmann::json to_json(const AnswerExtraction& e) {
    switch (e.kind) {
        case AnswerExtraction::Kind::first_line_label: return {{"kind", "first_line_label"}};
        case AnswerExtraction::Kind::json_field: return {{"kind", "json_field"}, {"name", e.name}};
        case AnswerExtraction::Kind::regex: return {{"kind", "regex"}, {"pattern", e.pattern}};
    }
    return {};
}

inline nlohmann::json to_json(const EndpointConfig& c) {
    return {{"url", c.url},
            {"headers", c.headers},
            {"timeout_ms", c.timeout_ms},
            {"max_retries", c.max_retries},
            {"parallelism", c.parallelism},
            {"prompt_template_id", c.prompt_template_id},
            {"answer_extraction", to_json(c.answer_extraction)},
            {"agent_id", c.agent_id},
            {"agent_version", c.agent_version}};
}

inline EndpointConfig endpoint_config_from_json(const nlohmann::json& j) {
    EndpointConfig c;
    if (j.contains("format") && j["format"] != "mindprint-endpoint/1") {
        throw ParseError("unsupported endpoint config format");
    }
    c.url = j.at("url").get<std::string>();
    if (j.contains("headers")) c.headers = j["headers"].get<std::map<std::string, std::string>>();
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.prompt_template_id = j.value("prompt_template_id", c.prompt_template_id);
    c.agent_id = j.value("agent_id", c.agent_id);
    c.agent_version = j.value("agent_version", c.agent_version);
    if (j.contains("answer_extraction")) {
        const auto& ej = j["answer_extraction"];
        const std::string kind = ej.at("kind").get<std::string>();
        if (kind == "first_line_label") {
            c.answer_extraction.kind = AnswerExtraction::Kind::first_line_label;
        } else if (kind == "json_field") {
            c.answer_extraction.kind = AnswerExtraction::Kind::json_field;
            c.answer_extraction.name = ej.at("name").get<std::string>();
        } else if (kind == "regex") {
            c.answer_extraction.kind = AnswerExtraction::Kind::regex;
            c.answer_extraction.pattern = ej.at("pattern").get<std::string>();
        } else {
            throw ParseError("unknown answer_extraction kind '" + kind + "'");
        }
    }
    c.validate();
    return c;
}

inline EndpointConfig load_endpoint_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open endpoint config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("endpoint config parse error: ") + e.what());
    }
    try {
        return endpoint_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("endpoint config schema error: ") + e.what());
    }
}

// Recorded in runlog conditions so a passport can always be traced back to
// the exact deployment wrapper it measured.
inline std::string endpoint_config_hash(const EndpointConfig& c) {
    return sha256_hex(canonical_dump(to_json(c)));
}

namespace detail {

struct ParsedUrl {
    std::string base;  // scheme://host:port
    std::string path;  // leading slash
};

inline ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl p;
    if (path_start == std::string::npos) {
        p.base = url;
        p.path = "/";
    } else {
        p.base = url.substr(0, path_start);
        p.path = url.substr(path_start);
    }
    return p;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace detail

// Parses a response body according to the configured extraction rule.
// Unparseable bodies map to answer_class "unparseable" so they are scored as
// errors downstream, never silently dropped.
inline AgentResponse extract_answer(const AnswerExtraction& rule, const std::string& body,
                                    const std::string& item_id) {
    AgentResponse r;
    r.item_id = item_id;
    r.raw_text = body;
    r.answer_class = "unparseable";
    r.declared_confidence = 0.5;

    switch (rule.kind) {
        case AnswerExtraction::Kind::first_line_label: {
            std::string first_line = body.substr(0, body.find('\n'));
            std::istringstream iss(detail::trim(first_line));
            std::string label, conf;
            if (iss >> label && !label.empty()) {
                r.answer_class = label;
                if (iss >> conf) {
                    try {
                        double v = std::stod(conf);
                        if (v >= 0.0 && v <= 1.0) r.declared_confidence = v;
                    } catch (...) {
                    }
                }
            }
            break;
        }
        case AnswerExtraction::Kind::json_field: {
            try {
                auto j = nlohmann::json::parse(body);
                if (j.contains(rule.name)) {
                    r.answer_class = j[rule.name].is_string()
                                         ? j[rule.name].get<std::string>()
                                         : j[rule.name].dump();
                    if (j.contains("confidence") && j["confidence"].is_number()) {
                        double v = j["confidence"].get<double>();
                        if (v >= 0.0 && v <= 1.0) r.declared_confidence = v;
                    }
                    if (j.contains("tool_calls") && j["tool_calls"].is_array()) {
                        for (const auto& cj : j["tool_calls"]) {
                            ToolCall c;
                            c.tool_name = cj.value("tool_name", "");
                            if (cj.contains("args") && cj["args"].is_object()) {
                                for (auto it = cj["args"].begin(); it != cj["args"].end(); ++it) {
                                    c.args[it.key()] = it.value().is_string()
                                                           ? it.value().get<std::string>()
                                                           : it.value().dump();
                                }
                            }
                            c.reported_return = cj.value("reported_return", "");
                            r.tool_calls.push_back(std::move(c));
                        }
                    }
                }
            } catch (const nlohmann::json::exception&) {
                // stays unparseable
            }
            break;
        }
        case AnswerExtraction::Kind::regex: {
            try {
                std::regex re(rule.pattern);
                std::smatch m;
                if (std::regex_search(body, m, re) && m.size() > 1) {
                    r.answer_class = m[1].str();
                }
            } catch (const std::regex_error&) {
                // bad pattern: stays unparseable
            }
            break;
        }
    }
    if (r.answer_class.empty()) r.answer_class = "unparseable";
    return r;
}

// HTTP client for a remote agent endpoint. One POST per probe:
//   {"item_id": ..., "prompt_template_id": ..., "prompt_turns":[{role,text}...]}
// The body is parsed per the configured answer_extraction rule. Transport
// failures are retried up to max_retries; persistent failure raises, which
// administer() records as a per-item error.
class RemoteAgent : public AgentUnderTest {
public:
    explicit RemoteAgent(EndpointConfig config) : config_(std::move(config)) {
        config_.validate();
        parsed_ = detail::parse_url(config_.url);
    }

    std::string agent_id() const override { return config_.agent_id; }
    std::string agent_version() const override { return config_.agent_version; }
    std::string config_hash() const override { return endpoint_config_hash(config_); }

    ResponseRecord respond(const ProbeItem& item, std::uint64_t /*run_seed*/) const override {
        nlohmann::json turns = nlohmann::json::array();
        for (const auto& t : item.prompt_turns) {
            turns.push_back({{"role", enum_to_string(t.role)}, {"text", t.text}});
        }
        const std::string payload = nlohmann::json{{"item_id", item.item_id},
                                                   {"prompt_template_id", config_.prompt_template_id},
                                                   {"prompt_turns", turns}}
                                        .dump();

        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            httplib::Client client(parsed_.base);
            client.set_connection_timeout(0, config_.timeout_ms * 1000);
            client.set_read_timeout(0, config_.timeout_ms * 1000);
            client.set_write_timeout(0, config_.timeout_ms * 1000);

            httplib::Headers headers;
            for (const auto& [k, v] : config_.headers) headers.emplace(k, v);
            if (const char* key = std::getenv("MINDPRINT_API_KEY")) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }

            const auto started = std::chrono::steady_clock::now();
            auto res = client.Post(parsed_.path, headers, payload, "application/json");
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - started)
                                     .count();
            if (res && res->status >= 200 && res->status < 300) {
                AgentResponse r = extract_answer(config_.answer_extraction, res->body, item.item_id);
                r.latency_ms = elapsed;
                ResponseRecord rec;
                rec.item_id = item.item_id;
                rec.response = std::move(r);
                return rec;
            }
            if (res) {
                last_error = "HTTP " + std::to_string(res->status);
            } else {
                last_error = "transport error: " + httplib::to_string(res.error());
            }
        }
        throw Error("administration failed for item '" + item.item_id + "' after " +
                    std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
    }

    const EndpointConfig& config() const { return config_; }

private:
    EndpointConfig config_;
    detail::ParsedUrl parsed_;
};

} // namespace mindprint
