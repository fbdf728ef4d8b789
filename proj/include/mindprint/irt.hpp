#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "mindprint/errors.hpp"

namespace mindprint {

// Two-parameter logistic response probability. Strictly increasing in theta
// for any a > 0.
inline double irt_prob(double theta, double a, double b) {
    if (!(a > 0.0)) throw std::domain_error("irt_prob: discrimination a must be > 0");
    return 1.0 / (1.0 + std::exp(-a * (theta - b)));
}

struct IrtOutcome {
    double a = 1.0;
    double b = 0.0;
    bool correct = false;
};

struct IrtFit {
    double theta_hat = 0.0;
    double std_error = 0.0;
    std::size_t n_items = 0;
    double log_likelihood = 0.0;
    bool converged = false;
};

inline constexpr double kThetaBound = 8.0;

inline double irt_log_likelihood(const std::vector<IrtOutcome>& items, double theta) {
    double ll = 0.0;
    for (const auto& it : items) {
        const double p = irt_prob(theta, it.a, it.b);
        ll += it.correct ? std::log(p) : std::log(1.0 - p);
    }
    return ll;
}

// Score function dLL/dtheta = sum a_j (x_j - P_j). Strictly decreasing in
// theta, which makes the root bracketable.
inline double irt_score(const std::vector<IrtOutcome>& items, double theta) {
    double s = 0.0;
    for (const auto& it : items) {
        s += it.a * ((it.correct ? 1.0 : 0.0) - irt_prob(theta, it.a, it.b));
    }
    return s;
}

inline double irt_information(const std::vector<IrtOutcome>& items, double theta) {
    double info = 0.0;
    for (const auto& it : items) {
        const double p = irt_prob(theta, it.a, it.b);
        info += it.a * it.a * p * (1.0 - p);
    }
    return info;
}

// Maximum-likelihood ability estimate with item parameters treated as known.
// Safeguarded Newton: the iterate must stay inside the current sign-change
// bracket, otherwise the step is replaced by bisection. All-correct or
// all-incorrect response vectors have no interior maximum; those return the
// +/-8 boundary with converged=false rather than a silently clamped value.
inline IrtFit fit_theta(const std::vector<IrtOutcome>& items) {
    if (items.empty()) throw InsufficientDataError("fit_theta: no answerable-item outcomes");
    for (const auto& it : items) {
        if (!(it.a > 0.0)) throw std::domain_error("fit_theta: discrimination a must be > 0");
    }

    IrtFit fit;
    fit.n_items = items.size();

    double lo = -kThetaBound, hi = kThetaBound;
    double score_lo = irt_score(items, lo);
    double score_hi = irt_score(items, hi);

    // Monotone decreasing score: a root exists iff score(lo) > 0 > score(hi).
    if (score_lo <= 0.0 || score_hi >= 0.0) {
        fit.theta_hat = score_hi >= 0.0 ? kThetaBound : -kThetaBound;
        fit.converged = false;
        fit.std_error = 1.0 / std::sqrt(std::max(irt_information(items, fit.theta_hat), 1e-12));
        fit.log_likelihood = irt_log_likelihood(items, fit.theta_hat);
        return fit;
    }

    double theta = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double score = irt_score(items, theta);
        if (score > 0.0) lo = theta; else hi = theta;

        const double info = irt_information(items, theta);
        double next = theta + score / info;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback

        const double delta = std::fabs(next - theta);
        theta = next;
        if (delta < 1e-8) {
            fit.converged = true;
            break;
        }
    }

    fit.theta_hat = theta;
    fit.std_error = 1.0 / std::sqrt(irt_information(items, theta));
    fit.log_likelihood = irt_log_likelihood(items, theta);
    return fit;
}

// ---------------------------------------------------------------------------
// Marginal maximum likelihood item calibration (Bock-Aitkin EM)
// ---------------------------------------------------------------------------

struct ItemCalibration {
    std::optional<double> a_hat;
    std::optional<double> b_hat;
    bool degenerate = false;  // all agents gave the same outcome
};

struct CalibrationRun {
    std::vector<ItemCalibration> items;
    double marginal_log_likelihood = 0.0;
    std::size_t em_iterations = 0;
    bool converged = false;
};

namespace detail {

constexpr std::size_t kQuadPoints = 21;
constexpr double kQuadLo = -4.0, kQuadHi = 4.0;
constexpr double kAMin = 0.05, kAMax = 5.0;
constexpr double kBMin = -6.0, kBMax = 6.0;

inline void quad_nodes(std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(kQuadPoints);
    weights.resize(kQuadPoints);
    double wsum = 0.0;
    for (std::size_t k = 0; k < kQuadPoints; ++k) {
        nodes[k] = kQuadLo + (kQuadHi - kQuadLo) * double(k) / double(kQuadPoints - 1);
        weights[k] = std::exp(-0.5 * nodes[k] * nodes[k]);  // standard-normal prior
        wsum += weights[k];
    }
    for (double& w : weights) w /= wsum;
}

} // namespace detail

// Fits per-item (a, b) from a complete binary response matrix
// (responses[agent][item]) by EM over a fixed 21-point quadrature on
// [-4, 4] with a standard-normal population prior. Deterministic.
// Items on which every agent gave the same outcome are flagged and skipped.
inline CalibrationRun calibrate_items(const std::vector<std::vector<bool>>& responses,
                                      std::size_t max_em_iter = 500, double tol = 1e-4) {
    const std::size_t n_agents = responses.size();
    if (n_agents < 20) throw InsufficientDataError("calibrate_items: need >= 20 agents");
    const std::size_t n_items = responses.front().size();
    if (n_items < 10) throw InsufficientDataError("calibrate_items: need >= 10 items");
    for (const auto& row : responses) {
        if (row.size() != n_items) throw ValidationError("calibrate_items: ragged response matrix");
    }

    CalibrationRun run;
    run.items.resize(n_items);

    std::vector<bool> active(n_items, true);
    for (std::size_t j = 0; j < n_items; ++j) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < n_agents; ++i) ones += responses[i][j] ? 1 : 0;
        if (ones == 0 || ones == n_agents) {
            active[j] = false;
            run.items[j].degenerate = true;
        }
    }

    std::vector<double> nodes, prior;
    detail::quad_nodes(nodes, prior);
    const std::size_t K = nodes.size();

    std::vector<double> a(n_items, 1.0), b(n_items, 0.0);
    std::vector<double> log_post(K);
    std::vector<double> nbar(K), rbar(K * n_items);

    for (run.em_iterations = 0; run.em_iterations < max_em_iter; ++run.em_iterations) {
        // E-step: posterior over quadrature nodes per agent, accumulated into
        // expected node counts nbar and per-item correct counts rbar.
        std::fill(nbar.begin(), nbar.end(), 0.0);
        std::fill(rbar.begin(), rbar.end(), 0.0);
        double marginal_ll = 0.0;

        std::vector<double> logP(K * n_items), log1P(K * n_items);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < n_items; ++j) {
                if (!active[j]) continue;
                double p = 1.0 / (1.0 + std::exp(-a[j] * (nodes[k] - b[j])));
                p = std::min(1.0 - 1e-12, std::max(1e-12, p));
                logP[k * n_items + j] = std::log(p);
                log1P[k * n_items + j] = std::log(1.0 - p);
            }
        }

        for (std::size_t i = 0; i < n_agents; ++i) {
            double mx = -1e300;
            for (std::size_t k = 0; k < K; ++k) {
                double lp = std::log(prior[k]);
                for (std::size_t j = 0; j < n_items; ++j) {
                    if (!active[j]) continue;
                    lp += responses[i][j] ? logP[k * n_items + j] : log1P[k * n_items + j];
                }
                log_post[k] = lp;
                mx = std::max(mx, lp);
            }
            double z = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                log_post[k] = std::exp(log_post[k] - mx);
                z += log_post[k];
            }
            marginal_ll += mx + std::log(z);
            for (std::size_t k = 0; k < K; ++k) {
                const double w = log_post[k] / z;
                nbar[k] += w;
                if (w == 0.0) continue;
                for (std::size_t j = 0; j < n_items; ++j) {
                    if (active[j] && responses[i][j]) rbar[k * n_items + j] += w;
                }
            }
        }
        run.marginal_log_likelihood = marginal_ll;

        // M-step: per item, weighted logistic regression on the nodes in the
        // slope-intercept parameterization eta = a*theta + c (concave), then
        // map back to b = -c/a with box constraints.
        double max_change = 0.0;
        for (std::size_t j = 0; j < n_items; ++j) {
            if (!active[j]) continue;
            double aj = a[j];
            double cj = -a[j] * b[j];
            for (int newton = 0; newton < 50; ++newton) {
                double g1 = 0.0, g0 = 0.0, h11 = 0.0, h01 = 0.0, h00 = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    const double p = 1.0 / (1.0 + std::exp(-(aj * nodes[k] + cj)));
                    const double resid = rbar[k * n_items + j] - nbar[k] * p;
                    const double w = nbar[k] * p * (1.0 - p);
                    g1 += resid * nodes[k];
                    g0 += resid;
                    h11 += w * nodes[k] * nodes[k];
                    h01 += w * nodes[k];
                    h00 += w;
                }
                const double det = h11 * h00 - h01 * h01;
                if (det <= 1e-12) break;
                const double da = (h00 * g1 - h01 * g0) / det;
                const double dc = (-h01 * g1 + h11 * g0) / det;
                aj = std::clamp(aj + da, detail::kAMin, detail::kAMax);
                cj += dc;
                if (std::fabs(da) + std::fabs(dc) < 1e-9) break;
            }
            const double bj = std::clamp(-cj / aj, detail::kBMin, detail::kBMax);
            max_change = std::max(max_change, std::fabs(aj - a[j]));
            max_change = std::max(max_change, std::fabs(bj - b[j]));
            a[j] = aj;
            b[j] = bj;
        }

        if (max_change < tol) {
            run.converged = true;
            break;
        }
    }

    for (std::size_t j = 0; j < n_items; ++j) {
        if (active[j]) {
            run.items[j].a_hat = a[j];
            run.items[j].b_hat = b[j];
        }
    }
    return run;
}

} // namespace mindprint
