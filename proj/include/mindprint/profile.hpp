#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindprint/canonical_json.hpp"
#include "mindprint/errors.hpp"
#include "mindprint/estimates.hpp"

namespace mindprint {

inline constexpr const char* kPassportFormat = "mindprint-passport/1";

// The eight Mindprint dimensions, in canonical order.
inline const std::array<std::string, 8>& dimension_keys() {
    static const std::array<std::string, 8> keys = {
        "calibration",         "source_integrity", "suggestibility_resistance",
        "context_stability",   "expressive_alignment", "tool_integrity",
        "drift_status",        "distributional_grounding"};
    return keys;
}

enum class DimensionStatus { measured, not_measured, baseline };

// "Not measured" is a first-class state: a dimension with no items has no
// score at all, which is different from a score of zero.
struct DimensionEstimate {
    DimensionStatus status = DimensionStatus::not_measured;
    std::optional<double> score;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    std::size_t n_items = 0;
    std::string reliability_note;
};

struct Mindprint {
    std::map<std::string, DimensionEstimate> dimensions;  // exactly the eight keys
    std::string battery_version;
    std::string measured_at;
    std::string domain_scope;
};

struct DriftPolicy {
    double threshold = 0.10;  // absolute-delta floor
};

enum class DriftDirection { up, down, none };

struct DimensionDrift {
    double delta = 0.0;
    Interval prior_ci;
    Interval current_ci;
    bool drift_flag = false;
    DriftDirection direction = DriftDirection::none;
};

struct DriftReport {
    std::map<std::string, DimensionDrift> per_dimension;
    bool overall_flag = false;
};

// Measurement-conditions envelope. Every reporting-standard field must be
// supplied; "unknown" is an acceptable value where the information is
// genuinely unavailable (e.g. system prompts of closed endpoints).
struct PassportConditions {
    std::string model_version;
    std::string deployment_context;
    std::string system_prompt_conditions;
    std::string tool_access_config;
    nlohmann::json sampling_settings = nlohmann::json::object();
    std::string measurement_date;  // YYYY-MM-DD
    std::string domain_scope;
    std::optional<std::string> expiry;  // default: measurement_date + 90 days
};

struct ValidityPassport {
    std::string model_version;
    std::string deployment_context;
    std::string system_prompt_conditions;
    std::string tool_access_config;
    nlohmann::json sampling_settings;
    std::string battery_version;
    std::string measurement_date;
    std::string domain_scope;
    Mindprint scores;
    nlohmann::json reliability = nlohmann::json::object();
    std::vector<std::string> validity_notes;
    std::optional<DriftReport> drift_comparison;
    std::string expiry;
};

// Time-indexed profile series M_t.
struct MindprintSeries {
    std::vector<std::pair<std::string, Mindprint>> entries;  // (timestamp, profile)

    void append(const std::string& timestamp, Mindprint profile) {
        if (!entries.empty() && timestamp <= entries.back().first) {
            throw ValidationError("MindprintSeries timestamps must be strictly increasing");
        }
        entries.emplace_back(timestamp, std::move(profile));
    }
};

// ---------------------------------------------------------------------------
// Civil-date helpers (for passport expiry)
// ---------------------------------------------------------------------------

namespace detail {

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

inline void parse_date(const std::string& s, int& y, int& m, int& d) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw ParseError("date must be YYYY-MM-DD, got '" + s + "'");
    }
    y = std::stoi(s.substr(0, 4));
    m = std::stoi(s.substr(5, 2));
    d = std::stoi(s.substr(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > 31) throw ParseError("invalid date '" + s + "'");
}

} // namespace detail

inline std::string add_days(const std::string& date, int days) {
    int y, m, d;
    detail::parse_date(date, y, m, d);
    std::int64_t z = detail::days_from_civil(y, m, d) + days;
    detail::civil_from_days(z, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

inline constexpr int kDefaultExpiryDays = 90;

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

struct AssembleConfig {
    std::string measured_at;   // timestamp or date of the measurement
    std::string domain_scope = "general";
};

namespace detail {

inline DimensionEstimate measured_dim(double score, Interval ci, std::size_t n,
                                      const std::string& rel_note) {
    DimensionEstimate d;
    d.status = DimensionStatus::measured;
    d.score = std::clamp(score, 0.0, 1.0);
    d.ci_lo = std::clamp(std::min(ci.lo, *d.score), 0.0, 1.0);
    d.ci_hi = std::clamp(std::max(ci.hi, *d.score), 0.0, 1.0);
    d.n_items = n;
    d.reliability_note = rel_note;
    return d;
}

inline std::string reliability_note_for(const DispositionEstimates& est, const std::string& dim) {
    auto it = est.reliability.find(dim);
    if (it == est.reliability.end()) return "reliability: not estimable";
    if (!it->second) return "reliability: not estimable";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "split-half |diff| = %.4f", it->second->abs_difference);
    return buf;
}

} // namespace detail

// Builds the eight-dimension profile from fitted estimates. Dimensions the
// battery never probed stay "not measured"; nothing is invented. The drift
// dimension starts as "baseline" and is resolved when a passport is emitted
// against a prior profile.
inline Mindprint assemble_mindprint(const DispositionEstimates& est, const AssembleConfig& cfg) {
    Mindprint mp;
    mp.battery_version = est.battery_version;
    mp.measured_at = cfg.measured_at;
    mp.domain_scope = cfg.domain_scope;

    for (const auto& key : dimension_keys()) mp.dimensions[key] = DimensionEstimate{};

    if (est.calibration) {
        mp.dimensions["calibration"] = detail::measured_dim(
            est.calibration->score, est.calibration->ci, est.calibration->fit.n,
            detail::reliability_note_for(est, "calibration"));
    }
    if (est.source_integrity) {
        mp.dimensions["source_integrity"] = detail::measured_dim(
            est.source_integrity->score, est.source_integrity->ci, est.source_integrity->n_units,
            detail::reliability_note_for(est, "source_integrity"));
    }
    if (est.suggestibility) {
        mp.dimensions["suggestibility_resistance"] = detail::measured_dim(
            est.suggestibility->score, est.suggestibility->ci, est.suggestibility->n_pairs,
            detail::reliability_note_for(est, "suggestibility_resistance"));
    }
    if (est.stability) {
        mp.dimensions["context_stability"] = detail::measured_dim(
            est.stability->score, est.stability->ci, est.stability->n_units,
            detail::reliability_note_for(est, "context_stability"));
    }
    if (est.expressive_alignment) {
        mp.dimensions["expressive_alignment"] = detail::measured_dim(
            est.expressive_alignment->score, est.expressive_alignment->ci,
            est.expressive_alignment->n_units,
            detail::reliability_note_for(est, "expressive_alignment"));
    }
    if (est.tool_integrity) {
        mp.dimensions["tool_integrity"] = detail::measured_dim(
            est.tool_integrity->score, est.tool_integrity->ci, est.tool_integrity->n_units,
            detail::reliability_note_for(est, "tool_integrity"));
    }
    if (est.grounding) {
        DimensionEstimate d = detail::measured_dim(
            est.grounding->grounding_score,
            {est.grounding->grounding_score, est.grounding->grounding_score}, 0,
            "token-level point estimate (no CI)");
        mp.dimensions["distributional_grounding"] = d;
    }
    mp.dimensions["drift_status"].status = DimensionStatus::baseline;
    mp.dimensions["drift_status"].reliability_note = "no prior profile";
    return mp;
}

// ---------------------------------------------------------------------------
// Drift comparison
// ---------------------------------------------------------------------------

// Compares two profiles from the same battery version. A dimension drifts
// when the CIs are disjoint or |delta| exceeds the policy threshold; the
// CI rule alone misses drift under wide intervals, the delta rule alone
// ignores precision, so both apply. drift_status itself is derived from a
// comparison and is not compared.
inline DriftReport compare_drift(const Mindprint& prior, const Mindprint& current,
                                 const DriftPolicy& policy = {}) {
    if (prior.battery_version != current.battery_version) {
        throw IncomparableProfilesError(
            "profiles measured with different battery versions ('" + prior.battery_version +
            "' vs '" + current.battery_version +
            "') are not comparable: measurement invariance would be violated");
    }
    DriftReport report;
    for (const auto& key : dimension_keys()) {
        if (key == "drift_status") continue;
        auto pit = prior.dimensions.find(key);
        auto cit = current.dimensions.find(key);
        if (pit == prior.dimensions.end() || cit == current.dimensions.end()) continue;
        const auto& p = pit->second;
        const auto& c = cit->second;
        if (p.status != DimensionStatus::measured || c.status != DimensionStatus::measured) continue;

        DimensionDrift d;
        d.delta = *c.score - *p.score;
        d.prior_ci = {*p.ci_lo, *p.ci_hi};
        d.current_ci = {*c.ci_lo, *c.ci_hi};
        const bool disjoint = d.prior_ci.hi < d.current_ci.lo || d.current_ci.hi < d.prior_ci.lo;
        d.drift_flag = disjoint || std::fabs(d.delta) > policy.threshold;
        d.direction = !d.drift_flag ? DriftDirection::none
                      : (d.delta > 0.0 ? DriftDirection::up : DriftDirection::down);
        report.overall_flag = report.overall_flag || d.drift_flag;
        report.per_dimension[key] = d;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Passport emission
// ---------------------------------------------------------------------------

namespace detail {

inline void require_condition(const std::string& value, const char* field) {
    if (value.empty()) {
        throw ValidationError(std::string("passport conditions missing field '") + field +
                              "' (use \"unknown\" if genuinely unavailable)");
    }
}

} // namespace detail

// Wraps a Mindprint in its measurement-conditions envelope. Every reporting
// field must be present (an explicit "unknown" is allowed); validity notes
// are generated automatically for unmeasured dimensions, boundary IRT
// estimates, the expressive-alignment rubric reduction, and the grounding
// mapping constants.
inline ValidityPassport emit_passport(const Mindprint& mp, const PassportConditions& cond,
                                      const DispositionEstimates& est,
                                      const std::optional<Mindprint>& prior = std::nullopt,
                                      const DriftPolicy& drift_policy = {}) {
    detail::require_condition(cond.model_version, "model_version");
    detail::require_condition(cond.deployment_context, "deployment_context");
    detail::require_condition(cond.system_prompt_conditions, "system_prompt_conditions");
    detail::require_condition(cond.tool_access_config, "tool_access_config");
    if (!cond.sampling_settings.is_object() || cond.sampling_settings.empty()) {
        throw ValidationError(
            "passport conditions missing field 'sampling_settings' (use {\"note\":\"unknown\"})");
    }
    detail::require_condition(cond.measurement_date, "measurement_date");
    detail::require_condition(cond.domain_scope, "domain_scope");

    ValidityPassport pass;
    pass.model_version = cond.model_version;
    pass.deployment_context = cond.deployment_context;
    pass.system_prompt_conditions = cond.system_prompt_conditions;
    pass.tool_access_config = cond.tool_access_config;
    pass.sampling_settings = cond.sampling_settings;
    pass.battery_version = mp.battery_version;
    pass.measurement_date = cond.measurement_date;
    pass.domain_scope = cond.domain_scope;
    pass.scores = mp;
    pass.expiry = cond.expiry.value_or(add_days(cond.measurement_date, kDefaultExpiryDays));
    if (pass.expiry <= pass.measurement_date) {
        throw ValidationError("passport expiry must postdate the measurement date");
    }

    for (const auto& [dim, res] : est.reliability) {
        if (res) {
            pass.reliability[dim] = {{"half_a", res->half_a},
                                     {"half_b", res->half_b},
                                     {"abs_difference", res->abs_difference}};
        } else {
            pass.reliability[dim] = "not estimable";
        }
    }

    for (const auto& key : dimension_keys()) {
        const auto& d = pass.scores.dimensions.at(key);
        if (key == "drift_status") continue;
        if (d.status == DimensionStatus::not_measured) {
            pass.validity_notes.push_back("dimension '" + key + "' not measured by this battery");
        }
    }
    if (est.irt && !est.irt->converged) {
        pass.validity_notes.push_back(
            "IRT ability estimate sits at the +/-8 boundary; treat theta as censored");
    }
    pass.validity_notes.push_back(
        "expressive_alignment is scored by deterministic rubric checks "
        "(required class + marker substrings), not free-text affect judging");
    if (est.grounding) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "distributional_grounding uses logistic mapping constants tau=%.2f kappa=%.2f "
                      "(engineering calibration, not a literature value)",
                      est.grounding->mapping.tau, est.grounding->mapping.kappa);
        pass.validity_notes.push_back(buf);
    }

    if (prior) {
        pass.drift_comparison = compare_drift(*prior, mp, drift_policy);
        const auto& rep = *pass.drift_comparison;
        std::size_t flagged = 0;
        for (const auto& [k, d] : rep.per_dimension) flagged += d.drift_flag ? 1 : 0;
        auto& dim = pass.scores.dimensions["drift_status"];
        dim.status = DimensionStatus::measured;
        const double total = rep.per_dimension.empty() ? 1.0 : double(rep.per_dimension.size());
        dim.score = 1.0 - double(flagged) / total;
        dim.ci_lo = dim.score;
        dim.ci_hi = dim.score;
        dim.n_items = rep.per_dimension.size();
        dim.reliability_note = "fraction of comparable dimensions without drift";
    }
    return pass;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const DimensionEstimate& d) {
    nlohmann::json j;
    switch (d.status) {
        case DimensionStatus::measured: j["status"] = "measured"; break;
        case DimensionStatus::not_measured: j["status"] = "not_measured"; break;
        case DimensionStatus::baseline: j["status"] = "baseline"; break;
    }
    if (d.score) j["score"] = *d.score;
    if (d.ci_lo) j["ci_lo"] = *d.ci_lo;
    if (d.ci_hi) j["ci_hi"] = *d.ci_hi;
    j["n_items"] = d.n_items;
    j["reliability_note"] = d.reliability_note;
    return j;
}

inline DimensionEstimate dimension_from_json(const nlohmann::json& j) {
    DimensionEstimate d;
    const std::string status = j.at("status").get<std::string>();
    if (status == "measured") d.status = DimensionStatus::measured;
    else if (status == "not_measured") d.status = DimensionStatus::not_measured;
    else if (status == "baseline") d.status = DimensionStatus::baseline;
    else throw ParseError("unknown dimension status '" + status + "'");
    if (j.contains("score")) d.score = j["score"].get<double>();
    if (j.contains("ci_lo")) d.ci_lo = j["ci_lo"].get<double>();
    if (j.contains("ci_hi")) d.ci_hi = j["ci_hi"].get<double>();
    d.n_items = j.value("n_items", std::size_t{0});
    d.reliability_note = j.value("reliability_note", "");
    return d;
}

inline nlohmann::json to_json(const Mindprint& mp) {
    nlohmann::json dims = nlohmann::json::object();
    for (const auto& key : dimension_keys()) dims[key] = to_json(mp.dimensions.at(key));
    return {{"dimensions", dims},
            {"battery_version", mp.battery_version},
            {"measured_at", mp.measured_at},
            {"domain_scope", mp.domain_scope}};
}

inline Mindprint mindprint_from_json(const nlohmann::json& j) {
    Mindprint mp;
    const auto& dims = j.at("dimensions");
    for (const auto& key : dimension_keys()) {
        if (!dims.contains(key)) throw ParseError("mindprint missing dimension '" + key + "'");
        mp.dimensions[key] = dimension_from_json(dims[key]);
    }
    mp.battery_version = j.at("battery_version").get<std::string>();
    mp.measured_at = j.at("measured_at").get<std::string>();
    mp.domain_scope = j.at("domain_scope").get<std::string>();
    return mp;
}

inline const char* to_string(DriftDirection d) {
    switch (d) {
        case DriftDirection::up: return "up";
        case DriftDirection::down: return "down";
        case DriftDirection::none: return "none";
    }
    return "none";
}

inline nlohmann::json to_json(const DriftReport& r) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [key, d] : r.per_dimension) {
        per[key] = {{"delta", d.delta},
                    {"prior_ci_lo", d.prior_ci.lo},
                    {"prior_ci_hi", d.prior_ci.hi},
                    {"current_ci_lo", d.current_ci.lo},
                    {"current_ci_hi", d.current_ci.hi},
                    {"drift_flag", d.drift_flag},
                    {"direction", to_string(d.direction)}};
    }
    return {{"per_dimension", per}, {"overall_flag", r.overall_flag}};
}

inline DriftReport drift_report_from_json(const nlohmann::json& j) {
    DriftReport r;
    r.overall_flag = j.at("overall_flag").get<bool>();
    for (auto it = j.at("per_dimension").begin(); it != j.at("per_dimension").end(); ++it) {
        DimensionDrift d;
        d.delta = it.value().at("delta").get<double>();
        d.prior_ci = {it.value().at("prior_ci_lo").get<double>(),
                      it.value().at("prior_ci_hi").get<double>()};
        d.current_ci = {it.value().at("current_ci_lo").get<double>(),
                        it.value().at("current_ci_hi").get<double>()};
        d.drift_flag = it.value().at("drift_flag").get<bool>();
        const std::string dir = it.value().at("direction").get<std::string>();
        d.direction = dir == "up" ? DriftDirection::up
                     : dir == "down" ? DriftDirection::down : DriftDirection::none;
        r.per_dimension[it.key()] = d;
    }
    return r;
}

inline nlohmann::json to_json(const ValidityPassport& p) {
    nlohmann::json j;
    j["format"] = kPassportFormat;
    j["model_version"] = p.model_version;
    j["deployment_context"] = p.deployment_context;
    j["system_prompt_conditions"] = p.system_prompt_conditions;
    j["tool_access_config"] = p.tool_access_config;
    j["sampling_settings"] = p.sampling_settings;
    j["battery_version"] = p.battery_version;
    j["measurement_date"] = p.measurement_date;
    j["domain_scope"] = p.domain_scope;
    j["scores"] = to_json(p.scores);
    j["reliability"] = p.reliability;
    j["validity_notes"] = p.validity_notes;
    if (p.drift_comparison) j["drift_comparison"] = to_json(*p.drift_comparison);
    j["expiry"] = p.expiry;
    return j;
}

inline ValidityPassport passport_from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != kPassportFormat) {
        throw ParseError("passport missing format tag " + std::string(kPassportFormat));
    }
    ValidityPassport p;
    p.model_version = j.at("model_version").get<std::string>();
    p.deployment_context = j.at("deployment_context").get<std::string>();
    p.system_prompt_conditions = j.at("system_prompt_conditions").get<std::string>();
    p.tool_access_config = j.at("tool_access_config").get<std::string>();
    p.sampling_settings = j.at("sampling_settings");
    p.battery_version = j.at("battery_version").get<std::string>();
    p.measurement_date = j.at("measurement_date").get<std::string>();
    p.domain_scope = j.at("domain_scope").get<std::string>();
    p.scores = mindprint_from_json(j.at("scores"));
    p.reliability = j.at("reliability");
    p.validity_notes = j.at("validity_notes").get<std::vector<std::string>>();
    if (j.contains("drift_comparison")) {
        p.drift_comparison = drift_report_from_json(j["drift_comparison"]);
    }
    p.expiry = j.at("expiry").get<std::string>();
    return p;
}

// Canonical bytes: sorted keys, floats fixed to 6 decimals. This is what
// gets hashed, diffed and committed as golden files.
inline std::string passport_to_canonical_json(const ValidityPassport& p) {
    return canonical_dump(to_json(p)) + "\n";
}

inline ValidityPassport load_passport(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open passport: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("passport parse error: ") + e.what());
    }
    try {
        return passport_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("passport schema error: ") + e.what());
    }
}

// Radar export: one row per dimension in canonical order; unmeasured
// dimensions keep empty numeric cells.
inline std::string radar_csv(const Mindprint& mp) {
    std::string out = "dimension,score,ci_lo,ci_hi\n";
    char buf[128];
    for (const auto& key : dimension_keys()) {
        const auto& d = mp.dimensions.at(key);
        if (d.status == DimensionStatus::measured) {
            std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", key.c_str(), *d.score,
                          *d.ci_lo, *d.ci_hi);
            out += buf;
        } else {
            out += key + ",,,\n";
        }
    }
    return out;
}

} // namespace mindprint
