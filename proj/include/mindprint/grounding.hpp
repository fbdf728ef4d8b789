#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mindprint/errors.hpp"
#include "mindprint/neldermead.hpp"
#include "mindprint/stats.hpp"

namespace mindprint {

inline constexpr const char* kRanksFormat = "mindprint-ranks/1";

struct RankFrequency {
    std::map<std::uint32_t, std::size_t> counts;  // rank (1..V) -> count
    std::size_t total = 0;
    std::size_t vocab_size = 0;
};

// Tally integer tokens that already are ranks in 1..vocab_size.
inline RankFrequency tally_ranks(const std::vector<std::uint32_t>& tokens, std::size_t vocab_size) {
    if (tokens.empty()) throw InsufficientDataError("tally_ranks: empty token sequence");
    RankFrequency rf;
    rf.vocab_size = vocab_size;
    for (std::uint32_t t : tokens) {
        if (t < 1 || t > vocab_size) {
            throw ValidationError("tally_ranks: token rank " + std::to_string(t) +
                                  " outside 1.." + std::to_string(vocab_size));
        }
        rf.counts[t] += 1;
        rf.total += 1;
    }
    return rf;
}

// Tally string tokens: ranks assigned by descending empirical frequency with
// a lexicographic tie-break, so re-tallying the same sequence is identical.
inline RankFrequency tally_ranks(const std::vector<std::string>& tokens,
                                 std::size_t vocab_size = 0) {
    if (tokens.empty()) throw InsufficientDataError("tally_ranks: empty token sequence");
    std::map<std::string, std::size_t> freq;
    for (const auto& t : tokens) freq[t] += 1;

    std::vector<std::pair<std::string, std::size_t>> ordered(freq.begin(), freq.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    RankFrequency rf;
    rf.vocab_size = vocab_size > 0 ? vocab_size : ordered.size();
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        rf.counts[static_cast<std::uint32_t>(i + 1)] = ordered[i].second;
        rf.total += ordered[i].second;
    }
    return rf;
}

// Whitespace/punctuation tokenizer with lowercase folding (token-level v1).
inline std::vector<std::string> tokenize_text(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

inline nlohmann::json to_json(const RankFrequency& rf) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [rank, count] : rf.counts) counts[std::to_string(rank)] = count;
    return {{"format", kRanksFormat},
            {"vocab_size", rf.vocab_size},
            {"total", rf.total},
            {"counts", counts}};
}

inline RankFrequency rank_frequency_from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != kRanksFormat) {
        throw ParseError("rank-count file missing format tag " + std::string(kRanksFormat));
    }
    RankFrequency rf;
    rf.vocab_size = j.at("vocab_size").get<std::size_t>();
    for (auto it = j.at("counts").begin(); it != j.at("counts").end(); ++it) {
        const std::uint32_t rank = static_cast<std::uint32_t>(std::stoul(it.key()));
        const std::size_t count = it.value().get<std::size_t>();
        if (rank < 1 || rank > rf.vocab_size) {
            throw ValidationError("rank-count file: rank outside 1..vocab_size");
        }
        rf.counts[rank] = count;
        rf.total += count;
    }
    if (j.contains("total") && j["total"].get<std::size_t>() != rf.total) {
        throw ValidationError("rank-count file: counts do not sum to total");
    }
    return rf;
}

// Mapping constants for the deviation -> grounding-score logistic. The
// defaults center in-model synthetic data above 0.8 and 50%-corrupted data
// below 0.5; they are engineering calibration, overridable per run and
// recorded in every report.
struct GroundingConfig {
    double tau = 1.5;
    double kappa = 3.0;
};

struct ZmFit {
    double s_hat = 0.0;
    double q_hat = 0.0;
    double log_likelihood = 0.0;
    double deviation_stat = 0.0;        // Pearson chi-square, tail-pooled
    double deviation_dof = 1.0;
    double deviation_pvalue = 1.0;
    double grounding_score = 0.0;
    bool converged = false;
    GroundingConfig mapping;
};

namespace detail {

// Search hull fixed by the coarse grid: s in [0.5,3], q in [0,10].
constexpr double kZmSMin = 0.5, kZmSMax = 3.0;
constexpr double kZmQMin = 0.0, kZmQMax = 10.0;

struct ZmLikelihood {
    const RankFrequency& rf;

    // -log L(s,q) up to the multinomial coefficient.
    double operator()(const std::vector<double>& par) const {
        const double s = par[0], q = par[1];
        if (s < kZmSMin || s > kZmSMax || q < kZmQMin || q > kZmQMax) return 1e18;
        double z = 0.0;
        for (std::size_t r = 1; r <= rf.vocab_size; ++r) {
            z += std::pow(static_cast<double>(r) + q, -s);
        }
        double acc = 0.0;
        for (const auto& [rank, count] : rf.counts) {
            acc += static_cast<double>(count) * std::log(static_cast<double>(rank) + q);
        }
        return s * acc + static_cast<double>(rf.total) * std::log(z);
    }
};

} // namespace detail

inline double grounding_signal_from(double deviation_stat, double deviation_dof,
                                    const GroundingConfig& cfg) {
    const double normalized = deviation_stat / std::max(deviation_dof, 1.0);
    return 1.0 / (1.0 + std::exp(cfg.kappa * (normalized - cfg.tau)));
}

// Maximum-likelihood Zipf-Mandelbrot fit: coarse grid (s step 0.1, q step
// 0.5) followed by Nelder-Mead refinement to parameter tolerance 1e-4 inside
// the grid hull. Deviation is the Pearson chi-square of observed vs fitted
// expected counts, with every rank whose expected count falls below 5 pooled
// into one tail cell; dof = cells - 3 (two fitted parameters + the total).
inline ZmFit fit_zm(const RankFrequency& rf, const GroundingConfig& cfg = {}) {
    if (rf.total < 100) throw InsufficientDataError("fit_zm: need total >= 100 tokens");
    if (rf.vocab_size < 2) throw ValidationError("fit_zm: vocab_size must be >= 2");

    detail::ZmLikelihood nll{rf};

    double best_val = 0.0, best_s = 1.0, best_q = 0.0;
    bool first = true;
    for (int si = 0; si <= 25; ++si) {
        const double s = 0.5 + 0.1 * si;
        for (int qi = 0; qi <= 20; ++qi) {
            const double q = 0.5 * qi;
            const double v = nll({s, q});
            if (first || v < best_val) {
                first = false;
                best_val = v;
                best_s = s;
                best_q = q;
            }
        }
    }

    auto nm = nelder_mead([&nll](const std::vector<double>& p) { return nll(p); },
                          {best_s, best_q}, {0.05, 0.25}, 1e-4, 2000);

    ZmFit fit;
    fit.mapping = cfg;
    fit.converged = nm.converged && nm.fmin <= best_val;
    if (nm.fmin <= best_val) {
        fit.s_hat = std::clamp(nm.x[0], detail::kZmSMin, detail::kZmSMax);
        fit.q_hat = std::clamp(nm.x[1], detail::kZmQMin, detail::kZmQMax);
    } else {
        fit.s_hat = best_s;  // non-convergence: report the grid optimum
        fit.q_hat = best_q;
    }
    fit.log_likelihood = -nll({fit.s_hat, fit.q_hat});

    // Fitted cell probabilities.
    std::vector<double> p(rf.vocab_size);
    double z = 0.0;
    for (std::size_t r = 1; r <= rf.vocab_size; ++r) {
        p[r - 1] = std::pow(static_cast<double>(r) + fit.q_hat, -fit.s_hat);
        z += p[r - 1];
    }
    for (double& v : p) v /= z;

    // Tail-pooled Pearson chi-square.
    const double n = static_cast<double>(rf.total);
    double chi2 = 0.0;
    std::size_t cells = 0;
    double tail_expected = 0.0;
    std::size_t tail_observed = 0;
    for (std::size_t r = 1; r <= rf.vocab_size; ++r) {
        const double expected = n * p[r - 1];
        auto it = rf.counts.find(static_cast<std::uint32_t>(r));
        const std::size_t observed = it == rf.counts.end() ? 0 : it->second;
        if (expected >= 5.0 && tail_expected == 0.0) {
            chi2 += (static_cast<double>(observed) - expected) *
                    (static_cast<double>(observed) - expected) / expected;
            ++cells;
        } else {
            tail_expected += expected;
            tail_observed += observed;
        }
    }
    if (tail_expected > 0.0) {
        chi2 += (static_cast<double>(tail_observed) - tail_expected) *
                (static_cast<double>(tail_observed) - tail_expected) / tail_expected;
        ++cells;
    }

    fit.deviation_stat = chi2;
    fit.deviation_dof = static_cast<double>(cells > 3 ? cells - 3 : 1);
    fit.deviation_pvalue = chi_square_sf(chi2, fit.deviation_dof);
    fit.grounding_score = grounding_signal_from(chi2, fit.deviation_dof, cfg);
    return fit;
}

// Logistic mapping from fitted deviation to a [0,1] grounding score; strictly
// decreasing in the deviation statistic.
inline double grounding_signal(const ZmFit& fit) {
    return grounding_signal_from(fit.deviation_stat, fit.deviation_dof, fit.mapping);
}

} // namespace mindprint
