// mindprint — administer probe batteries, fit disposition estimates, emit
// validity passports, compare profiles for drift, and gate trust decisions.
//
// Exit codes (stable, for shell pipelines):
//   0  success / no drift / approve
//   2  invalid configuration or input
//   3  total transport failure (every probe failed)
//   4  drift flagged
//   10 supervise   11 restrict   12 decline
//   1  unexpected internal error

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mindprint/mindprint.hpp"
#include "mindprint/remote.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitTransport = 3;
constexpr int kExitDrift = 4;
constexpr int kExitSupervise = 10;
constexpr int kExitRestrict = 11;
constexpr int kExitDecline = 12;

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::size_t parallelism = 1;
    std::string out;
};

std::vector<mindprint::PerturbationRule> parse_rules(const std::vector<std::string>& names) {
    std::vector<mindprint::PerturbationRule> rules;
    for (const auto& n : names) rules.push_back(mindprint::perturbation_rule_from_name(n));
    return rules;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mindprint::IoError("cannot write " + path);
    out << content;
}

mindprint::ProbeBattery expanded_battery(const mindprint::ProbeBattery& base, std::size_t k,
                                         const std::vector<std::string>& rule_names,
                                         std::uint64_t seed) {
    if (k == 0 || rule_names.empty()) return base;
    auto expansion = mindprint::expand_perturbations(base, parse_rules(rule_names), k, seed);
    for (const auto& f : expansion.findings) {
        std::cerr << "perturbation: " << f.item_id << ": " << f.message << "\n";
    }
    return expansion.battery;
}

mindprint::PassportConditions load_conditions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mindprint::IoError("cannot open conditions file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw mindprint::ParseError(std::string("conditions parse error: ") + e.what());
    }
    mindprint::PassportConditions c;
    c.model_version = j.value("model_version", "");
    c.deployment_context = j.value("deployment_context", "");
    c.system_prompt_conditions = j.value("system_prompt_conditions", "");
    c.tool_access_config = j.value("tool_access_config", "");
    if (j.contains("sampling_settings")) c.sampling_settings = j["sampling_settings"];
    c.measurement_date = j.value("measurement_date", "");
    c.domain_scope = j.value("domain_scope", "");
    if (j.contains("expiry")) c.expiry = j["expiry"].get<std::string>();
    return c;
}

int run_pipeline(const mindprint::AgentUnderTest& agent, const mindprint::ProbeBattery& battery,
                 const mindprint::RunOptions& opts, std::size_t perturb_k,
                 const std::vector<std::string>& rule_names, const std::string& out_path,
                 bool fail_on_total_loss) {
    mindprint::RunLog log = mindprint::administer(agent, battery, opts);
    log.conditions.perturb_k = perturb_k;
    log.conditions.perturb_rules = rule_names;

    std::size_t errors = 0;
    for (const auto& rec : log.records) {
        if (!rec.ok()) {
            ++errors;
            std::cerr << "item " << rec.item_id << ": " << *rec.error << "\n";
        }
    }
    if (fail_on_total_loss && !log.records.empty() && errors == log.records.size()) {
        std::cerr << "error: every probe administration failed\n";
        return kExitTransport;
    }
    mindprint::write_runlog(log, out_path);
    std::cout << "wrote " << out_path << " (" << log.records.size() << " records, " << errors
              << " errors)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mindprint: psychometric measurement engine for artificial agents"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML-style config file (flags take precedence)");

    GlobalFlags flags;
    app.add_option("--seed", flags.seed, "run seed (overrides config-file and agent seeds)");
    auto* parallelism_opt =
        app.add_option("--parallelism", flags.parallelism, "concurrent probe administrations")
            ->check(CLI::PositiveNumber);

    // --- simulate -----------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "administer a battery to a synthetic agent");
    std::string sim_agent_path, sim_battery_path, sim_out = "runlog.jsonl", sim_tokens_out;
    std::size_t sim_perturb_k = 0;
    std::size_t sim_emit_tokens = 0;
    std::vector<std::string> sim_rules = {"lexical_paraphrase", "politeness_wrapper",
                                          "authority_prefix"};
    simulate->add_option("--agent", sim_agent_path, "synthetic agent config JSON")->required();
    simulate->add_option("--battery", sim_battery_path, "battery JSON")->required();
    simulate->add_option("--out", sim_out, "runlog output path");
    simulate->add_option("--perturb-k", sim_perturb_k, "variants per eligible item");
    simulate->add_option("--perturb-rules", sim_rules, "perturbation rules to cycle through");
    simulate->add_option("--emit-tokens", sim_emit_tokens,
                         "also synthesize this many tokens for grounding analysis");
    simulate->add_option("--tokens-out", sim_tokens_out, "rank-count JSON output path");

    // --- run ----------------------------------------------------------------
    auto* run = app.add_subcommand("run", "administer a battery to a remote endpoint");
    std::string run_endpoint_path, run_battery_path, run_out = "runlog.jsonl";
    std::size_t run_perturb_k = 0;
    std::vector<std::string> run_rules = {"lexical_paraphrase", "politeness_wrapper",
                                          "authority_prefix"};
    run->add_option("--endpoint", run_endpoint_path, "endpoint config JSON")->required();
    run->add_option("--battery", run_battery_path, "battery JSON")->required();
    run->add_option("--out", run_out, "runlog output path");
    run->add_option("--perturb-k", run_perturb_k, "variants per eligible item");
    run->add_option("--perturb-rules", run_rules, "perturbation rules to cycle through");

    // --- fit ----------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "fit disposition estimates from a runlog");
    std::string fit_runlog_path, fit_battery_path, fit_out = "estimates.json";
    std::string fit_ranks_path, fit_text_path;
    std::size_t fit_resamples = 1000;
    double fit_tau = 1.5, fit_kappa = 3.0;
    fit->add_option("--runlog", fit_runlog_path, "runlog JSONL")->required();
    fit->add_option("--battery", fit_battery_path, "battery JSON the runlog was produced from")
        ->required();
    fit->add_option("--out", fit_out, "estimates output path");
    fit->add_option("--ranks", fit_ranks_path, "precomputed rank-count JSON for grounding");
    fit->add_option("--text", fit_text_path, "raw text file for grounding (tokenized internally)");
    bool fit_text_from_runlog = false;
    fit->add_flag("--grounding-from-runlog", fit_text_from_runlog,
                  "fit grounding from the runlog's own raw_text");
    fit->add_option("--bootstrap-resamples", fit_resamples, "bootstrap resamples for CIs");
    fit->add_option("--grounding-tau", fit_tau, "grounding logistic midpoint");
    fit->add_option("--grounding-kappa", fit_kappa, "grounding logistic steepness");

    // --- report -------------------------------------------------------------
    auto* report = app.add_subcommand("report", "assemble a Mindprint and emit a passport");
    std::string rep_estimates_path, rep_conditions_path, rep_out = "passport.json";
    std::string rep_prior_path, rep_radar_path;
    double rep_threshold = 0.10;
    report->add_option("--estimates", rep_estimates_path, "estimates JSON")->required();
    report->add_option("--conditions", rep_conditions_path, "measurement conditions JSON")
        ->required();
    report->add_option("--out", rep_out, "passport output path");
    report->add_option("--prior", rep_prior_path, "prior passport for drift comparison");
    report->add_option("--radar", rep_radar_path, "radar CSV output path");
    report->add_option("--drift-threshold", rep_threshold, "absolute-delta drift floor");

    // --- diff ---------------------------------------------------------------
    auto* diff = app.add_subcommand("diff", "compare two passports for drift");
    std::string diff_prior_path, diff_current_path;
    double diff_threshold = 0.10;
    diff->add_option("--prior", diff_prior_path, "prior passport")->required();
    diff->add_option("--current", diff_current_path, "current passport")->required();
    diff->add_option("--threshold", diff_threshold, "absolute-delta drift floor");

    // --- gate ---------------------------------------------------------------
    auto* gate_cmd = app.add_subcommand("gate", "map a passport through a policy to a decision");
    std::string gate_passport_path, gate_policy_path, gate_ledger_path, gate_timestamp;
    double gate_grounding = -1.0, gate_confidence = -1.0;
    gate_cmd->add_option("--passport", gate_passport_path, "validity passport JSON")->required();
    gate_cmd->add_option("--policy", gate_policy_path, "domain policy JSON")->required();
    gate_cmd->add_option("--ledger", gate_ledger_path, "append decision to this audit ledger");
    gate_cmd->add_option("--grounding", gate_grounding, "output-level grounding signal in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    gate_cmd->add_option("--confidence", gate_confidence, "output-level declared confidence")
        ->check(CLI::Range(0.0, 1.0));
    gate_cmd->add_option("--timestamp", gate_timestamp, "decision timestamp (default: now)");

    // --- validate -------------------------------------------------------------
    auto* validate = app.add_subcommand("validate", "check a battery file against its invariants");
    std::string val_battery_path;
    validate->add_option("--battery", val_battery_path, "battery JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            auto config = mindprint::load_synthetic_config(sim_agent_path);
            if (flags.seed) config.seed = *flags.seed;
            auto battery = mindprint::load_battery(sim_battery_path);
            battery = expanded_battery(battery, sim_perturb_k, sim_rules, config.seed);
            mindprint::SyntheticAgent agent(config);
            mindprint::RunOptions opts{config.seed, flags.parallelism};
            int rc = run_pipeline(agent, battery, opts, sim_perturb_k, sim_rules, sim_out, false);
            if (rc != kExitOk) return rc;
            if (sim_emit_tokens > 0) {
                auto tokens = mindprint::synthesize_tokens(config, sim_emit_tokens);
                auto rf = mindprint::tally_ranks(tokens, mindprint::kSyntheticVocab);
                const std::string path =
                    sim_tokens_out.empty() ? sim_out + ".ranks.json" : sim_tokens_out;
                write_file(path, mindprint::to_json(rf).dump(2) + "\n");
                std::cout << "wrote " << path << "\n";
            }
            return kExitOk;
        }

        if (*run) {
            auto config = mindprint::load_endpoint_config(run_endpoint_path);
            if (parallelism_opt->count() > 0) config.parallelism = flags.parallelism;
            auto battery = mindprint::load_battery(run_battery_path);
            const std::uint64_t seed = flags.seed.value_or(1);
            battery = expanded_battery(battery, run_perturb_k, run_rules, seed);
            mindprint::RemoteAgent agent(config);
            mindprint::RunOptions opts{seed, config.parallelism};
            return run_pipeline(agent, battery, opts, run_perturb_k, run_rules, run_out, true);
        }

        if (*fit) {
            auto log = mindprint::load_runlog(fit_runlog_path);
            auto battery = mindprint::load_battery(fit_battery_path);
            battery = expanded_battery(battery, log.conditions.perturb_k,
                                       log.conditions.perturb_rules, log.conditions.seed);
            mindprint::FitOptions opt;
            opt.bootstrap_resamples = fit_resamples;
            opt.seed = flags.seed.value_or(log.conditions.seed);
            opt.grounding.tau = fit_tau;
            opt.grounding.kappa = fit_kappa;
            opt.grounding_from_runlog_text = fit_text_from_runlog;

            std::optional<mindprint::RankFrequency> ranks;
            if (!fit_ranks_path.empty()) {
                std::ifstream in(fit_ranks_path);
                if (!in) throw mindprint::IoError("cannot open ranks file: " + fit_ranks_path);
                nlohmann::json j;
                in >> j;
                ranks = mindprint::rank_frequency_from_json(j);
            } else if (!fit_text_path.empty()) {
                std::ifstream in(fit_text_path, std::ios::binary);
                if (!in) throw mindprint::IoError("cannot open text file: " + fit_text_path);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                ranks = mindprint::tally_ranks(mindprint::tokenize_text(text));
            }

            auto est = mindprint::fit_all(log, battery, opt, ranks);
            write_file(fit_out, mindprint::to_json(est).dump(2) + "\n");
            std::cout << "wrote " << fit_out << "\n";
            return kExitOk;
        }

        if (*report) {
            auto est = mindprint::load_estimates(rep_estimates_path);
            auto cond = load_conditions(rep_conditions_path);
            mindprint::AssembleConfig acfg;
            acfg.measured_at = cond.measurement_date;
            acfg.domain_scope = cond.domain_scope.empty() ? "general" : cond.domain_scope;
            auto mp = mindprint::assemble_mindprint(est, acfg);

            std::optional<mindprint::Mindprint> prior;
            if (!rep_prior_path.empty()) {
                prior = mindprint::load_passport(rep_prior_path).scores;
            }
            mindprint::DriftPolicy dp{rep_threshold};
            auto passport = mindprint::emit_passport(mp, cond, est, prior, dp);
            write_file(rep_out, mindprint::passport_to_canonical_json(passport));
            std::cout << "wrote " << rep_out << "\n";
            if (!rep_radar_path.empty()) {
                write_file(rep_radar_path, mindprint::radar_csv(passport.scores));
                std::cout << "wrote " << rep_radar_path << "\n";
            }
            return kExitOk;
        }

        if (*diff) {
            auto prior = mindprint::load_passport(diff_prior_path);
            auto current = mindprint::load_passport(diff_current_path);
            mindprint::DriftPolicy dp{diff_threshold};
            auto rep = mindprint::compare_drift(prior.scores, current.scores, dp);
            std::cout << mindprint::canonical_dump(mindprint::to_json(rep)) << "\n";
            return rep.overall_flag ? kExitDrift : kExitOk;
        }

        if (*gate_cmd) {
            auto passport = mindprint::load_passport(gate_passport_path);
            auto policy = mindprint::load_policy(gate_policy_path);
            mindprint::OutputSignals signals;
            if (gate_grounding >= 0.0) signals.grounding_score = gate_grounding;
            if (gate_confidence >= 0.0) signals.declared_confidence = gate_confidence;

            auto decision = mindprint::gate(passport.scores, policy, signals);
            decision.passport_hash = mindprint::passport_hash(passport);
            decision.timestamp =
                gate_timestamp.empty() ? mindprint::utc_timestamp_now() : gate_timestamp;

            std::cout << mindprint::canonical_dump(mindprint::to_json(decision)) << "\n";
            if (!gate_ledger_path.empty()) {
                auto evidence = mindprint::evidence_from(passport.scores, signals);
                mindprint::append_audit(decision, evidence, gate_ledger_path, decision.timestamp);
            }
            switch (decision.outcome) {
                case mindprint::Outcome::approve: return kExitOk;
                case mindprint::Outcome::supervise: return kExitSupervise;
                case mindprint::Outcome::restrict: return kExitRestrict;
                case mindprint::Outcome::decline: return kExitDecline;
            }
            return kExitDecline;
        }

        if (*validate) {
            std::ifstream in(val_battery_path);
            if (!in) throw mindprint::IoError("cannot open battery file: " + val_battery_path);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw mindprint::ParseError(std::string("battery parse error: ") + e.what());
            }
            auto battery = mindprint::battery_from_json(j);
            auto findings = mindprint::validate_battery(battery);
            for (const auto& f : findings) {
                std::cout << (f.severity == mindprint::Severity::error ? "error" : "warning") << " "
                          << (f.item_id.empty() ? "(battery)" : f.item_id) << ": " << f.message
                          << "\n";
            }
            if (findings.empty()) std::cout << "battery ok: " << battery.items.size() << " items\n";
            return mindprint::has_errors(findings) ? kExitBadConfig : kExitOk;
        }
    } catch (const mindprint::IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const mindprint::IncomparableProfilesError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const mindprint::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
