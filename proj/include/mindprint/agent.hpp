#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindprint/battery.hpp"
#include "mindprint/errors.hpp"
#include "mindprint/rng.hpp"
#include "mindprint/runlog.hpp"

namespace mindprint {

// Uniform interface for anything a battery can be administered to.
// respond() must produce exactly one record per call and be safe to invoke
// concurrently for distinct items.
class AgentUnderTest {
public:
    virtual ~AgentUnderTest() = default;
    virtual std::string agent_id() const = 0;
    virtual std::string agent_version() const = 0;
    virtual std::string config_hash() const = 0;
    virtual ResponseRecord respond(const ProbeItem& item, std::uint64_t run_seed) const = 0;
};

// Latent parameters of the oracle population. Every knob maps to a quantity
// the estimators are later asked to recover.
struct SyntheticAgentConfig {
    std::string agent_id = "synthetic";
    std::string agent_version = "1";
    double theta_true = 0.0;          // 2PL latent ability, logit units
    double d_prime_true = 1.0;        // SDT sensitivity, >= 0
    double criterion_true = 0.0;      // SDT response criterion
    double sycophancy_rate = 0.0;     // flip probability scale, [0,1]
    double miscalibration_gamma = 1.0;  // confidence warp exponent, > 0
    double zm_s_true = 1.2;           // Zipf-Mandelbrot exponent, > 1
    double zm_q_true = 2.0;           // Zipf-Mandelbrot offset, >= 0
    double corruption_mix = 0.0;      // uniform-token mixture weight, [0,1]
    std::uint64_t seed = 1;

    void validate() const {
        if (d_prime_true < 0.0) throw ValidationError("d_prime_true must be >= 0");
        if (sycophancy_rate < 0.0 || sycophancy_rate > 1.0) {
            throw ValidationError("sycophancy_rate must lie in [0,1]");
        }
        if (!(miscalibration_gamma > 0.0)) throw ValidationError("miscalibration_gamma must be > 0");
        if (!(zm_s_true > 1.0)) throw ValidationError("zm_s_true must be > 1");
        if (zm_q_true < 0.0) throw ValidationError("zm_q_true must be >= 0");
        if (corruption_mix < 0.0 || corruption_mix > 1.0) {
            throw ValidationError("corruption_mix must lie in [0,1]");
        }
    }
};

inline SyntheticAgentConfig synthetic_config_from_json(const nlohmann::json& j) {
    SyntheticAgentConfig c;
    if (j.contains("format") && j["format"] != "mindprint-agent/1") {
        throw ParseError("unsupported agent config format");
    }
    c.agent_id = j.value("agent_id", c.agent_id);
    c.agent_version = j.value("agent_version", c.agent_version);
    c.theta_true = j.value("theta_true", c.theta_true);
    c.d_prime_true = j.value("d_prime_true", c.d_prime_true);
    c.criterion_true = j.value("criterion_true", c.criterion_true);
    c.sycophancy_rate = j.value("sycophancy_rate", c.sycophancy_rate);
    c.miscalibration_gamma = j.value("miscalibration_gamma", c.miscalibration_gamma);
    c.zm_s_true = j.value("zm_s_true", c.zm_s_true);
    c.zm_q_true = j.value("zm_q_true", c.zm_q_true);
    c.corruption_mix = j.value("corruption_mix", c.corruption_mix);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

inline SyntheticAgentConfig load_synthetic_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open agent config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("agent config parse error: ") + e.what());
    }
    return synthetic_config_from_json(j);
}

// Symmetric logistic-power warp. gamma = 1 is the identity; gamma > 1
// exaggerates confidence away from 0.5 (overconfidence), gamma < 1 compresses
// it toward 0.5.
inline double confidence_warp(double p, double gamma) {
    double pg = std::pow(p, gamma);
    double qg = std::pow(1.0 - p, gamma);
    if (pg + qg == 0.0) return 0.5;
    return pg / (pg + qg);
}

namespace detail {

inline double two_pl(double theta, double a, double b) {
    return 1.0 / (1.0 + std::exp(-a * (theta - b)));
}

// Cycle through origin labels so a wrong source answer is a *different*
// origin, deterministically.
inline std::string next_origin_label(const std::string& correct) {
    if (correct == "supplied") return "inferred";
    if (correct == "inferred") return "unsupported";
    if (correct == "unsupported") return "supplied";
    return "distractor";
}

} // namespace detail

// Generative model of the agent under test, used as the oracle population:
//   - assert/abstain follows an equal-variance Gaussian SDT observer with
//     (d_prime_true, criterion_true); evidence ~ N(+d'/2,1) on answerable
//     items and N(-d'/2,1) on unanswerable ones,
//   - given an assertion on an answerable item, correctness is Bernoulli with
//     the 2PL probability at (theta_true, irt_a, irt_b),
//   - declared confidence is the gamma-warped generative probability,
//   - pressure items flip an initially correct answer to a conforming class
//     with probability sycophancy_rate * intensity / 3.
// Every response is a pure function of (config, item, per-item seed), so
// administration order and parallelism cannot change outcomes.
class SyntheticAgent : public AgentUnderTest {
public:
    explicit SyntheticAgent(SyntheticAgentConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    const SyntheticAgentConfig& config() const { return config_; }

    std::string agent_id() const override { return config_.agent_id; }
    std::string agent_version() const override { return config_.agent_version; }
    std::string config_hash() const override { return "synthetic"; }

    ResponseRecord respond(const ProbeItem& item, std::uint64_t run_seed) const override {
        AgentResponse r;
        r.item_id = item.item_id;
        r.latency_ms = 0;

        if (item.tool_env) {
            respond_tool(item, run_seed, r);
        } else if (item.expected_behavior) {
            respond_rubric(item, run_seed, r);
        } else if (item.pressure_condition) {
            respond_pressured(item, run_seed, r);
        } else {
            Rng rng(derive_item_seed(run_seed, item.item_id));
            substantive_phase(item, rng, r);
        }

        if (r.raw_text.empty()) r.raw_text = "class=" + r.answer_class + " item=" + item.item_id;
        ResponseRecord rec;
        rec.item_id = item.item_id;
        rec.response = std::move(r);
        return rec;
    }

private:
    // Draw order is part of the contract: evidence draw first, then the
    // correctness draw. Pressure items replay this phase under the neutral
    // twin's seed to recover the exact neutral answer.
    void substantive_phase(const ProbeItem& item, Rng& rng, AgentResponse& r) const {
        const double evidence_mean = item.answerable ? config_.d_prime_true / 2.0
                                                     : -config_.d_prime_true / 2.0;
        const bool asserts = evidence_mean + rng.normal() > config_.criterion_true;
        if (!asserts) {
            r.answer_class = "abstain";
            r.declared_confidence = 0.5;
            rng.uniform();  // keep the draw count fixed across branches
            return;
        }
        if (!item.answerable) {
            r.answer_class = "fabrication";
            r.declared_confidence = confidence_warp(0.6, config_.miscalibration_gamma);
            rng.uniform();
            return;
        }
        const double p = detail::two_pl(config_.theta_true, item.irt_a, item.irt_b);
        const bool correct = rng.uniform() < p;
        if (correct) {
            r.answer_class = item.correct_class.value_or("yes");
        } else if (item.family == Family::source_monitoring && item.correct_class) {
            r.answer_class = detail::next_origin_label(*item.correct_class);
        } else {
            r.answer_class = "distractor";
        }
        r.declared_confidence = confidence_warp(p, config_.miscalibration_gamma);
    }

    void respond_pressured(const ProbeItem& item, std::uint64_t run_seed, AgentResponse& r) const {
        const PressureSpec& pc = *item.pressure_condition;
        Rng neutral_rng(derive_item_seed(run_seed, pc.paired_neutral_id));
        substantive_phase(item, neutral_rng, r);

        const bool initially_correct =
            item.correct_class && r.answer_class == *item.correct_class;
        if (!initially_correct) return;

        Rng own_rng(derive_item_seed(run_seed, item.item_id));
        const double flip_p = config_.sycophancy_rate * static_cast<double>(pc.intensity) / 3.0;
        if (own_rng.uniform() < flip_p) {
            r.answer_class = "conform";
            r.raw_text = "class=conform pressure=" + enum_to_string(pc.kind);
        }
    }

    void respond_tool(const ProbeItem& item, std::uint64_t run_seed, AgentResponse& r) const {
        const ToolEnvSpec& env = *item.tool_env;
        Rng rng(derive_item_seed(run_seed, item.item_id));

        const double p = detail::two_pl(config_.theta_true, item.irt_a, item.irt_b);
        const bool picks_correct = rng.uniform() < p;

        const ToolSpec* chosen = nullptr;
        if (env.correct_tool) {
            const ToolSpec* correct = env.find_tool(*env.correct_tool);
            if (picks_correct || env.tools.size() == 1) {
                chosen = correct;
            } else {
                for (const auto& t : env.tools) {
                    if (t.name != *env.correct_tool) { chosen = &t; break; }
                }
            }
        } else {
            chosen = &env.tools.front();
        }

        ToolCall call;
        call.tool_name = chosen->name;
        if (picks_correct && env.correct_args && env.correct_tool &&
            chosen->name == *env.correct_tool) {
            call.args = *env.correct_args;
        } else {
            for (const auto& f : chosen->arg_schema) call.args[f.field] = "guess";
        }

        const std::string env_return = chosen->scripted_return.environment_return();
        if (chosen->scripted_return.kind == ScriptedReturn::Kind::value) {
            call.reported_return = env_return;
            r.answer_class = picks_correct ? item.correct_class.value_or("done") : "distractor";
            r.declared_confidence = confidence_warp(p, config_.miscalibration_gamma);
        } else {
            // Failed or ambiguous return: a fabrication here is an assertion
            // with no signal, so it follows the SDT false-alarm rate.
            const bool fabricates = -config_.d_prime_true / 2.0 + rng.normal() > config_.criterion_true;
            if (fabricates) {
                call.reported_return = "fabricated-value-42";
                r.answer_class = item.correct_class.value_or("fabrication");
                r.declared_confidence = confidence_warp(0.6, config_.miscalibration_gamma);
            } else {
                call.reported_return = env_return;
                r.answer_class = "abstain";
                r.declared_confidence = 0.5;
            }
        }
        r.tool_calls.push_back(std::move(call));
    }

    void respond_rubric(const ProbeItem& item, std::uint64_t run_seed, AgentResponse& r) const {
        const RubricSpec& rubric = *item.expected_behavior;
        Rng rng(derive_item_seed(run_seed, item.item_id));
        const double p = detail::two_pl(config_.theta_true, item.irt_a, item.irt_b);
        const bool complies = rng.uniform() < p;
        if (complies) {
            r.answer_class = enum_to_string(rubric.required_class);
            std::string text = "acknowledged";
            for (const auto& m : rubric.required_markers) text += " " + m;
            r.raw_text = text;
            r.declared_confidence = confidence_warp(p, config_.miscalibration_gamma);
        } else {
            r.answer_class =
                rubric.required_class == RequiredClass::assert_claim ? "abstain" : "assert";
            std::string text = "unbounded reply";
            if (!rubric.forbidden_markers.empty()) text += " " + rubric.forbidden_markers.front();
            r.raw_text = text;
            r.declared_confidence = confidence_warp(p, config_.miscalibration_gamma);
        }
    }

    SyntheticAgentConfig config_;
};

// Vocabulary size for synthetic token generation.
inline constexpr std::size_t kSyntheticVocab = 5000;

// Draws n token ranks i.i.d. from the mixture
//   (1 - corruption_mix) * ZipfMandelbrot(s, q)  +  corruption_mix * Uniform(1..V)
// over ranks 1..kSyntheticVocab. Deterministic given config.seed.
inline std::vector<std::uint32_t> synthesize_tokens(const SyntheticAgentConfig& config,
                                                    std::size_t n) {
    if (n < 1) throw ValidationError("synthesize_tokens: n must be >= 1");
    config.validate();

    const std::size_t V = kSyntheticVocab;
    std::vector<double> cdf(V);
    double z = 0.0;
    for (std::size_t r = 0; r < V; ++r) {
        z += std::pow(static_cast<double>(r + 1) + config.zm_q_true, -config.zm_s_true);
        cdf[r] = z;
    }
    for (double& c : cdf) c /= z;

    Rng rng(splitmix64(config.seed ^ 0x746f6b656e735f31ull));
    std::vector<std::uint32_t> tokens;
    tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double mix = rng.uniform();
        const double u = rng.uniform();
        if (mix < config.corruption_mix) {
            tokens.push_back(static_cast<std::uint32_t>(
                std::min<std::size_t>(V - 1, static_cast<std::size_t>(u * double(V)))) + 1u);
        } else {
            auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            tokens.push_back(static_cast<std::uint32_t>(it - cdf.begin()) + 1u);
        }
    }
    return tokens;
}

} // namespace mindprint
