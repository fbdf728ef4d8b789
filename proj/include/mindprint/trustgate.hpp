#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindprint/canonical_json.hpp"
#include "mindprint/errors.hpp"
#include "mindprint/profile.hpp"
#include "mindprint/sha256.hpp"

namespace mindprint {

inline constexpr const char* kPolicyFormat = "mindprint-policy/1";
inline constexpr const char* kLedgerFormat = "mindprint-ledger/1";

enum class Outcome { approve, supervise, restrict, decline };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::approve: return "approve";
        case Outcome::supervise: return "supervise";
        case Outcome::restrict: return "restrict";
        case Outcome::decline: return "decline";
    }
    return "decline";
}

inline Outcome outcome_from_string(const std::string& s) {
    if (s == "approve") return Outcome::approve;
    if (s == "supervise") return Outcome::supervise;
    if (s == "restrict") return Outcome::restrict;
    if (s == "decline") return Outcome::decline;
    throw ParseError("unknown outcome '" + s + "'");
}

// Ordering: approve (best) > supervise > restrict > decline.
inline int outcome_rank(Outcome o) {
    switch (o) {
        case Outcome::approve: return 3;
        case Outcome::supervise: return 2;
        case Outcome::restrict: return 1;
        case Outcome::decline: return 0;
    }
    return 0;
}

inline Outcome worse_of(Outcome a, Outcome b) { return outcome_rank(a) < outcome_rank(b) ? a : b; }

struct DomainPolicy {
    std::string policy_id;
    std::string domain;
    std::map<std::string, double> weights;  // dimension -> weight >= 0
    std::map<std::string, double> floors;   // dimension -> hard minimum in [0,1]
    double approve_threshold = 0.9;
    double supervise_threshold = 0.7;
    double restrict_threshold = 0.5;
    double grounding_floor = 0.5;  // output-signal floor for approve

    void validate() const {
        if (!(approve_threshold > supervise_threshold &&
              supervise_threshold > restrict_threshold)) {
            throw ValidationError("policy thresholds must satisfy approve > supervise > restrict");
        }
        if (approve_threshold > 1.0 || restrict_threshold < 0.0) {
            throw ValidationError("policy thresholds must lie in [0,1]");
        }
        for (const auto& [dim, w] : weights) {
            if (w < 0.0) throw ValidationError("policy weight for '" + dim + "' is negative");
            if (std::find(dimension_keys().begin(), dimension_keys().end(), dim) ==
                dimension_keys().end()) {
                throw ValidationError("policy weights name unknown dimension '" + dim + "'");
            }
        }
        for (const auto& [dim, f] : floors) {
            if (f < 0.0 || f > 1.0) {
                throw ValidationError("policy floor for '" + dim + "' outside [0,1]");
            }
        }
    }
};

struct OutputSignals {
    std::optional<double> grounding_score;
    std::optional<double> declared_confidence;
};

struct TrustDecision {
    Outcome outcome = Outcome::decline;
    double weighted_score = 0.0;
    std::vector<std::string> floor_violations;
    std::string policy_id;
    std::string passport_hash;
    std::string timestamp;
    std::string reason;
};

// Weight fraction above which an unmeasured dimension is considered too
// important to ignore; the decision is then capped at supervise.
inline constexpr double kMissingEvidenceWeight = 0.2;

// Maps a profile through a domain policy to one of four outcomes.
// Rules, in order:
//   1. no measured dimension -> decline ("no evidence"),
//   2. weighted score over measured dimensions (weights renormalized) picks
//      the threshold band,
//   3. an unmeasured dimension holding > 0.2 of the policy's total weight
//      caps the outcome at supervise,
//   4. a grounding output-signal below the policy floor downgrades approve
//      to supervise,
//   5. any floor violation on a measured dimension caps the outcome at
//      restrict.
// Raising any measured score can only improve the outcome, and scaling all
// weights by a positive constant changes nothing.
inline TrustDecision gate(const Mindprint& mp, const DomainPolicy& policy,
                          const OutputSignals& signals = {}) {
    policy.validate();

    TrustDecision decision;
    decision.policy_id = policy.policy_id;

    double total_weight = 0.0;
    for (const auto& [dim, w] : policy.weights) total_weight += w;
    if (total_weight <= 0.0) throw ValidationError("policy weights sum to zero");

    std::size_t measured_dims = 0;
    for (const auto& [dim, d] : mp.dimensions) {
        if (d.status == DimensionStatus::measured) ++measured_dims;
    }

    double measured_weight = 0.0;
    double weighted = 0.0;
    for (const auto& [dim, w] : policy.weights) {
        auto it = mp.dimensions.find(dim);
        if (it == mp.dimensions.end()) continue;
        if (it->second.status == DimensionStatus::measured) {
            measured_weight += w;
            weighted += w * *it->second.score;
        }
    }
    if (measured_dims == 0) {
        decision.outcome = Outcome::decline;
        decision.reason = "no evidence: no dimension measured";
        return decision;
    }
    if (measured_weight <= 0.0) {
        decision.outcome = Outcome::decline;
        decision.reason = "no evidence: zero policy weight on measured dimensions";
        return decision;
    }

    decision.weighted_score = weighted / measured_weight;

    Outcome outcome;
    if (decision.weighted_score >= policy.approve_threshold) outcome = Outcome::approve;
    else if (decision.weighted_score >= policy.supervise_threshold) outcome = Outcome::supervise;
    else if (decision.weighted_score >= policy.restrict_threshold) outcome = Outcome::restrict;
    else outcome = Outcome::decline;

    for (const auto& [dim, w] : policy.weights) {
        auto it = mp.dimensions.find(dim);
        const bool dim_measured =
            it != mp.dimensions.end() && it->second.status == DimensionStatus::measured;
        if (!dim_measured && w / total_weight > kMissingEvidenceWeight) {
            outcome = worse_of(outcome, Outcome::supervise);
            decision.reason = "missing evidence: unmeasured dimension '" + dim +
                              "' carries weight above " + std::to_string(kMissingEvidenceWeight);
        }
    }

    if (signals.grounding_score && *signals.grounding_score < policy.grounding_floor &&
        outcome == Outcome::approve) {
        outcome = Outcome::supervise;
        decision.reason = "output grounding signal below policy floor";
    }

    for (const auto& [dim, floor] : policy.floors) {
        auto it = mp.dimensions.find(dim);
        if (it == mp.dimensions.end() || it->second.status != DimensionStatus::measured) continue;
        if (*it->second.score < floor) decision.floor_violations.push_back(dim);
    }
    if (!decision.floor_violations.empty()) {
        outcome = worse_of(outcome, Outcome::restrict);
        decision.reason = "hard floor violated on: " + decision.floor_violations.front();
    }

    decision.outcome = outcome;
    if (decision.reason.empty()) decision.reason = "threshold band";
    return decision;
}

// ---------------------------------------------------------------------------
// Policy JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const DomainPolicy& p) {
    return {{"format", kPolicyFormat},
            {"policy_id", p.policy_id},
            {"domain", p.domain},
            {"weights", p.weights},
            {"floors", p.floors},
            {"thresholds",
             {{"approve", p.approve_threshold},
              {"supervise", p.supervise_threshold},
              {"restrict", p.restrict_threshold}}},
            {"grounding_floor", p.grounding_floor}};
}

inline DomainPolicy policy_from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != kPolicyFormat) {
        throw ParseError("policy file missing format tag " + std::string(kPolicyFormat));
    }
    DomainPolicy p;
    p.policy_id = j.value("policy_id", j.at("domain").get<std::string>());
    p.domain = j.at("domain").get<std::string>();
    p.weights = j.at("weights").get<std::map<std::string, double>>();
    if (j.contains("floors")) p.floors = j["floors"].get<std::map<std::string, double>>();
    const auto& t = j.at("thresholds");
    p.approve_threshold = t.at("approve").get<double>();
    p.supervise_threshold = t.at("supervise").get<double>();
    p.restrict_threshold = t.at("restrict").get<double>();
    p.grounding_floor = j.value("grounding_floor", 0.5);
    p.validate();
    return p;
}

inline DomainPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open policy file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("policy parse error: ") + e.what());
    }
    try {
        return policy_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("policy schema error: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Audit ledger (JSON lines, append-only)
// ---------------------------------------------------------------------------

struct AuditEvidence {
    std::map<std::string, double> dimension_scores;
    std::vector<std::string> unmeasured_dimensions;
    std::optional<double> grounding_signal;
    bool drift_flagged = false;
};

struct AuditRecord {
    TrustDecision decision;
    AuditEvidence evidence;
    std::string appended_at;
    std::uint64_t sequence_no = 0;
};

inline nlohmann::json to_json(const TrustDecision& d) {
    return {{"outcome", to_string(d.outcome)},
            {"weighted_score", d.weighted_score},
            {"floor_violations", d.floor_violations},
            {"policy_id", d.policy_id},
            {"passport_hash", d.passport_hash},
            {"timestamp", d.timestamp},
            {"reason", d.reason}};
}

inline nlohmann::json to_json(const AuditRecord& r) {
    nlohmann::json evidence = {{"dimension_scores", r.evidence.dimension_scores},
                               {"unmeasured_dimensions", r.evidence.unmeasured_dimensions},
                               {"drift_flagged", r.evidence.drift_flagged}};
    if (r.evidence.grounding_signal) evidence["grounding_signal"] = *r.evidence.grounding_signal;
    return {{"decision", to_json(r.decision)},
            {"evidence", evidence},
            {"appended_at", r.appended_at},
            {"sequence_no", r.sequence_no}};
}

inline AuditEvidence evidence_from(const Mindprint& mp, const OutputSignals& signals) {
    AuditEvidence ev;
    for (const auto& [dim, d] : mp.dimensions) {
        if (d.status == DimensionStatus::measured) {
            ev.dimension_scores[dim] = *d.score;
        } else if (dim != "drift_status") {
            ev.unmeasured_dimensions.push_back(dim);
        }
    }
    ev.grounding_signal = signals.grounding_score;
    const auto drift_it = mp.dimensions.find("drift_status");
    ev.drift_flagged = drift_it != mp.dimensions.end() &&
                       drift_it->second.status == DimensionStatus::measured &&
                       *drift_it->second.score < 1.0;
    return ev;
}

// Reads an existing ledger and verifies the header plus a contiguous,
// strictly increasing sequence. Any gap or reordering means the file was
// edited; appending to it would destroy the audit trail, so refuse.
inline std::uint64_t verify_ledger(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;  // absent ledger: next append creates it
    std::string line;
    if (!std::getline(in, line)) return 0;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw IntegrityError("ledger header is not valid JSON: " + path);
    }
    if (!header.contains("format") || header["format"] != kLedgerFormat) {
        throw IntegrityError("ledger missing format tag " + std::string(kLedgerFormat));
    }
    std::uint64_t last = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw IntegrityError("ledger line " + std::to_string(line_no) + " is not valid JSON");
        }
        const std::uint64_t seq = j.at("sequence_no").get<std::uint64_t>();
        if (seq != last + 1) {
            throw IntegrityError("ledger sequence broken at line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(last + 1) + ", found " +
                                 std::to_string(seq));
        }
        last = seq;
    }
    return last;
}

// Appends one decision record. Single-writer contract: callers serialize
// concurrent appends. Returns the assigned sequence number.
inline std::uint64_t append_audit(const TrustDecision& decision, const AuditEvidence& evidence,
                                  const std::string& ledger_path, const std::string& appended_at) {
    const std::uint64_t last = verify_ledger(ledger_path);

    std::ofstream out(ledger_path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open ledger for append: " + ledger_path);
    if (last == 0) {
        std::ifstream probe(ledger_path, std::ios::binary);
        probe.seekg(0, std::ios::end);
        if (probe.tellg() == 0) {
            out << nlohmann::json({{"format", kLedgerFormat}}).dump() << "\n";
        }
    }

    AuditRecord rec;
    rec.decision = decision;
    rec.evidence = evidence;
    rec.appended_at = appended_at;
    rec.sequence_no = last + 1;
    out << canonical_dump(to_json(rec)) << "\n";
    out.flush();
    if (!out) throw IoError("ledger append failed: " + ledger_path);
    return rec.sequence_no;
}

inline std::string passport_hash(const ValidityPassport& p) {
    return sha256_hex(passport_to_canonical_json(p));
}

} // namespace mindprint
