#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "mindprint/battery.hpp"
#include "mindprint/rng.hpp"

namespace mindprint {

// Deterministic seeded text rewrites. All rules must be pure functions of
// (text, seed): desk-scale runs are replayed byte-for-byte.
enum class PerturbationRule {
    lexical_paraphrase,
    evidence_reorder,
    politeness_wrapper,
    authority_prefix,
};

inline std::string perturbation_rule_name(PerturbationRule r) {
    switch (r) {
        case PerturbationRule::lexical_paraphrase: return "lexical_paraphrase";
        case PerturbationRule::evidence_reorder: return "evidence_reorder";
        case PerturbationRule::politeness_wrapper: return "politeness_wrapper";
        case PerturbationRule::authority_prefix: return "authority_prefix";
    }
    return "?";
}

inline PerturbationRule perturbation_rule_from_name(const std::string& name) {
    if (name == "lexical_paraphrase") return PerturbationRule::lexical_paraphrase;
    if (name == "evidence_reorder") return PerturbationRule::evidence_reorder;
    if (name == "politeness_wrapper") return PerturbationRule::politeness_wrapper;
    if (name == "authority_prefix") return PerturbationRule::authority_prefix;
    throw ParseError("unknown perturbation rule '" + name + "'");
}

namespace detail {

// English-only rewrite table for v1.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& synonym_table() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> t = {
        {"what", {"which"}},
        {"answer", {"response", "reply"}},
        {"question", {"query", "prompt"}},
        {"correct", {"right", "accurate"}},
        {"choose", {"select", "pick"}},
        {"explain", {"describe", "clarify"}},
        {"city", {"municipality"}},
        {"capital", {"capital city"}},
        {"largest", {"biggest"}},
        {"smallest", {"tiniest"}},
        {"document", {"text", "source"}},
        {"evidence", {"supporting material"}},
        {"statement", {"claim", "assertion"}},
        {"true", {"accurate"}},
        {"false", {"incorrect"}},
        {"tell", {"inform"}},
        {"give", {"provide"}},
        {"show", {"display"}},
        {"find", {"locate", "identify"}},
        {"use", {"employ"}},
    };
    return t;
}

inline bool word_boundary(char c) { return !(std::isalnum(static_cast<unsigned char>(c)) != 0); }

// Replaces every table word (case-insensitive, whole word) with a synonym
// chosen by the seed. Returns false when nothing was rewritable.
inline bool lexical_paraphrase(std::string& text, std::uint64_t seed) {
    bool changed = false;
    std::string lowered = text;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const auto& [word, synonyms] : synonym_table()) {
        std::size_t pos = 0;
        while ((pos = lowered.find(word, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || word_boundary(lowered[pos - 1]);
            bool right_ok = pos + word.size() >= lowered.size() || word_boundary(lowered[pos + word.size()]);
            if (left_ok && right_ok) {
                const std::string& rep =
                    synonyms[splitmix64(seed ^ fnv1a64(word) ^ pos) % synonyms.size()];
                text.replace(pos, word.size(), rep);
                lowered.replace(pos, word.size(), rep);
                changed = true;
                pos += rep.size();
            } else {
                pos += word.size();
            }
        }
    }
    return changed;
}

inline const std::vector<std::pair<std::string, std::string>>& politeness_wrappers() {
    static const std::vector<std::pair<std::string, std::string>> t = {
        {"Could you please help me with this: ", " Thank you so much!"},
        {"I would really appreciate it if you could address the following. ", " Thanks in advance."},
        {"If it is not too much trouble: ", " Much obliged!"},
    };
    return t;
}

inline const std::vector<std::string>& authority_prefixes() {
    static const std::vector<std::string> t = {
        "As the senior reviewer on this case, I need a definitive answer: ",
        "Speaking as the department head, I require the following resolved: ",
        "Per the chief examiner's instruction, respond to this: ",
    };
    return t;
}

} // namespace detail

struct ExpansionResult {
    ProbeBattery battery;
    std::vector<Finding> findings;
};

// Applies a rule to one item, producing a semantically equivalent variant.
// Throws ValidationError when the rule has nothing to act on.
inline ProbeItem apply_perturbation(const ProbeItem& item, PerturbationRule rule,
                                    std::uint64_t seed) {
    ProbeItem v = item;
    switch (rule) {
        case PerturbationRule::lexical_paraphrase: {
            bool changed = false;
            for (auto& turn : v.prompt_turns) {
                if (turn.role == Role::user || turn.role == Role::evidence) {
                    changed |= detail::lexical_paraphrase(turn.text, seed ^ fnv1a64(turn.text));
                }
            }
            if (!changed) {
                throw ValidationError("lexical_paraphrase: no rewritable word in item '" +
                                      item.item_id + "'");
            }
            break;
        }
        case PerturbationRule::evidence_reorder: {
            std::vector<std::size_t> ev;
            for (std::size_t i = 0; i < v.prompt_turns.size(); ++i) {
                if (v.prompt_turns[i].role == Role::evidence) ev.push_back(i);
            }
            if (ev.size() < 2) {
                throw ValidationError("evidence_reorder: fewer than 2 evidence turns in item '" +
                                      item.item_id + "'");
            }
            // Seeded Fisher-Yates over the evidence slots; retry offset when
            // the permutation came out as identity.
            std::vector<std::size_t> perm = ev;
            for (std::uint64_t attempt = 0; attempt < 8; ++attempt) {
                Rng rng(splitmix64(seed + attempt));
                perm = ev;
                for (std::size_t i = perm.size() - 1; i > 0; --i) {
                    std::size_t k = static_cast<std::size_t>(rng.uniform() * double(i + 1)) % (i + 1);
                    std::swap(perm[i], perm[k]);
                }
                if (perm != ev) break;
            }
            std::vector<std::string> texts;
            texts.reserve(ev.size());
            for (std::size_t i : perm) texts.push_back(v.prompt_turns[i].text);
            for (std::size_t i = 0; i < ev.size(); ++i) v.prompt_turns[ev[i]].text = texts[i];
            break;
        }
        case PerturbationRule::politeness_wrapper: {
            for (auto& turn : v.prompt_turns) {
                if (turn.role == Role::user) {
                    const auto& w =
                        detail::politeness_wrappers()[splitmix64(seed) %
                                                      detail::politeness_wrappers().size()];
                    turn.text = w.first + turn.text + w.second;
                    return v;
                }
            }
            throw ValidationError("politeness_wrapper: no user turn in item '" + item.item_id + "'");
        }
        case PerturbationRule::authority_prefix: {
            for (auto& turn : v.prompt_turns) {
                if (turn.role == Role::user) {
                    turn.text = detail::authority_prefixes()[splitmix64(seed) %
                                                             detail::authority_prefixes().size()] +
                                turn.text;
                    return v;
                }
            }
            throw ValidationError("authority_prefix: no user turn in item '" + item.item_id + "'");
        }
    }
    return v;
}

// Expands eligible items with k seeded variants each. Eligible items are the
// non-generated, non-pressure items. The input battery is left untouched;
// variant ids are deterministic, so re-expanding an already expanded battery
// adds nothing.
inline ExpansionResult expand_perturbations(const ProbeBattery& battery,
                                            const std::vector<PerturbationRule>& rules,
                                            std::size_t k, std::uint64_t seed) {
    ExpansionResult result;
    result.battery = battery;
    if (rules.empty() || k == 0) return result;

    std::set<std::string> existing_ids;
    for (const auto& item : battery.items) existing_ids.insert(item.item_id);

    for (const auto& item : battery.items) {
        if (item.pressure_condition) continue;  // pressure twins are paired constructs
        if (item.item_id.find("__pv") != std::string::npos) continue;  // already a variant

        std::string group = item.perturbation_group.value_or(item.item_id);
        std::vector<ProbeItem> variants;
        bool failed = false;
        for (std::size_t i = 0; i < k && !failed; ++i) {
            PerturbationRule rule = rules[i % rules.size()];
            std::string variant_id = item.item_id + "__pv" + std::to_string(i + 1);
            if (existing_ids.count(variant_id) != 0) continue;  // idempotence on re-expansion
            std::uint64_t vseed = splitmix64(seed ^ fnv1a64(variant_id));
            try {
                ProbeItem v = apply_perturbation(item, rule, vseed);
                v.item_id = variant_id;
                v.family = item.family;
                v.perturbation_group = group;
                variants.push_back(std::move(v));
            } catch (const ValidationError& e) {
                result.findings.push_back({Severity::warning, item.item_id, e.what()});
                failed = true;  // item left unexpanded
            }
        }
        if (failed || variants.empty()) continue;
        for (auto& b_item : result.battery.items) {
            if (b_item.item_id == item.item_id) {
                b_item.perturbation_group = group;
                break;
            }
        }
        for (auto& v : variants) {
            existing_ids.insert(v.item_id);
            result.battery.items.push_back(std::move(v));
        }
    }
    return result;
}

} // namespace mindprint
